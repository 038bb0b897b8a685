use super::{EdgeMap, ImageError, Rect};

/// Column sums `v` (indexed by `x - x1`) and row sums `h` (indexed by `y - y1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub rect: Rect,
    pub v: Vec<u64>,
    pub h: Vec<u64>,
}

pub fn integral_projections(edge: &EdgeMap, rect: Rect) -> Result<Projections, ImageError> {
    if !rect.fits(edge.width(), edge.height()) {
        return Err(ImageError::InvalidRect(rect, edge.width(), edge.height()));
    }
    let mut v = vec![0u64; rect.width()];
    let mut h = vec![0u64; rect.height()];
    for y in rect.y1..=rect.y2 {
        for x in rect.x1..=rect.x2 {
            let e = edge.get(x, y) as u64;
            v[x - rect.x1] += e;
            h[y - rect.y1] += e;
        }
    }
    Ok(Projections { rect, v, h })
}
