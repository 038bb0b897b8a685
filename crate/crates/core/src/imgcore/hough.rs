use super::{Circle, EdgeMap, ImageError, Rect};

#[derive(Debug, Clone, PartialEq)]
pub struct HoughParams {
    pub r_min: usize,
    pub r_max: usize,
    /// Pixels with edge value strictly above this vote.
    pub edge_threshold: u32,
    /// Minimum votes as a fraction of the ideal perimeter count.
    pub vote_fraction: f64,
    /// Restricts candidate centers; the whole image when `None`.
    pub center_window: Option<Rect>,
    /// Restricts voting pixels; the whole image when `None`.
    pub vote_window: Option<Rect>,
}

impl HoughParams {
    pub fn new(r_min: usize, r_max: usize, edge_threshold: u32, vote_fraction: f64) -> Self {
        HoughParams { r_min, r_max, edge_threshold, vote_fraction, center_window: None, vote_window: None }
    }
}

/// Integer offsets whose rounded distance from the origin is exactly `r`.
/// Its length is the ideal vote count for a circle of that radius.
pub fn circle_stencil(r: usize) -> Vec<(isize, isize)> {
    let r = r as isize;
    let lo = (2 * r - 1) * (2 * r - 1);
    let hi = (2 * r + 1) * (2 * r + 1);
    let mut out = Vec::new();
    for dy in -r - 1..=r + 1 {
        for dx in -r - 1..=r + 1 {
            let d4 = 4 * (dx * dx + dy * dy);
            if d4 >= lo && d4 < hi {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Circle Hough transform over a `(cx, cy, r)` accumulator at 1 px resolution.
///
/// Returns circles sorted by normalized score (votes / stencil size), best
/// first, after greedy suppression of candidates whose center lies within
/// half the radius of an already accepted circle.
pub fn hough_circles(edge: &EdgeMap, params: &HoughParams) -> Result<Vec<Circle>, ImageError> {
    let HoughParams { r_min, r_max, edge_threshold, vote_fraction, .. } = *params;
    if r_min == 0 || r_min > r_max {
        return Err(ImageError::InvalidRadiusRange(r_min, r_max));
    }
    let bounds = edge.bounds();
    let cw = match params.center_window {
        Some(w) => w.intersection(&bounds).ok_or(ImageError::InvalidRect(w, edge.width(), edge.height()))?,
        None => bounds,
    };
    let vw = match params.vote_window {
        Some(w) => w.intersection(&bounds).ok_or(ImageError::InvalidRect(w, edge.width(), edge.height()))?,
        None => bounds,
    };
    let voters: Vec<(isize, isize)> = (vw.y1..=vw.y2)
        .flat_map(|y| (vw.x1..=vw.x2).map(move |x| (x, y)))
        .filter(|&(x, y)| edge.get(x, y) > edge_threshold)
        .map(|(x, y)| (x as isize, y as isize))
        .collect();
    if voters.is_empty() {
        return Ok(Vec::new());
    }

    let (aw, ah) = (cw.width(), cw.height());
    let mut candidates: Vec<(f64, Circle)> = Vec::new();
    let mut acc = vec![0u32; aw * ah];
    for r in r_min..=r_max {
        let stencil = circle_stencil(r);
        let ideal = stencil.len() as f64;
        acc.iter_mut().for_each(|a| *a = 0);
        for &(px, py) in &voters {
            for &(dx, dy) in &stencil {
                let cx = px - dx - cw.x1 as isize;
                let cy = py - dy - cw.y1 as isize;
                if cx >= 0 && cy >= 0 && (cx as usize) < aw && (cy as usize) < ah {
                    acc[cy as usize * aw + cx as usize] += 1;
                }
            }
        }
        let min_votes = (vote_fraction * ideal).max(1.0);
        for (i, &a) in acc.iter().enumerate() {
            if a as f64 >= min_votes {
                let circle = Circle {
                    cx: (cw.x1 + i % aw) as f64,
                    cy: (cw.y1 + i / aw) as f64,
                    r: r as f64,
                    score: a as f64,
                };
                candidates.push((a as f64 / ideal, circle));
            }
        }
    }
    candidates.sort_by(|(na, a), (nb, b)| {
        nb.total_cmp(na)
            .then(b.score.total_cmp(&a.score))
            .then(a.r.total_cmp(&b.r))
            .then(a.cy.total_cmp(&b.cy))
            .then(a.cx.total_cmp(&b.cx))
    });
    let mut kept: Vec<Circle> = Vec::new();
    for (_, c) in candidates {
        let suppressed = kept.iter().any(|k| {
            let d = ((k.cx - c.cx).powi(2) + (k.cy - c.cy).powi(2)).sqrt();
            d < k.r / 2.0
        });
        if !suppressed {
            kept.push(c);
        }
    }
    Ok(kept)
}
