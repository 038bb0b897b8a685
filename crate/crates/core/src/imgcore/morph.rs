use super::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
    Open,
    Close,
}

/// Set of integer offsets `(dx, dy)` with `(dx/a)^2 + (dy/b)^2 <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuringElement {
    offsets: Vec<(isize, isize)>,
}

impl StructuringElement {
    pub fn ellipse(a: f64, b: f64) -> Self {
        assert!(a >= 1.0 && b >= 1.0, "ellipse axes must be at least 1");
        let (ra, rb) = (a.floor() as isize, b.floor() as isize);
        let mut offsets = Vec::new();
        for dy in -rb..=rb {
            for dx in -ra..=ra {
                let (u, v) = (dx as f64 / a, dy as f64 / b);
                if u * u + v * v <= 1.0 + 1e-12 {
                    offsets.push((dx, dy));
                }
            }
        }
        StructuringElement { offsets }
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

fn in_bounds(m: &BinaryMask, x: isize, y: isize) -> bool {
    x >= 0 && y >= 0 && (x as usize) < m.width() && (y as usize) < m.height()
}

fn dilate(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        se.offsets.iter().any(|&(dx, dy)| {
            let (sx, sy) = (x as isize - dx, y as isize - dy);
            in_bounds(m, sx, sy) && m.get(sx as usize, sy as usize)
        })
    })
}

fn erode(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        se.offsets.iter().all(|&(dx, dy)| {
            let (sx, sy) = (x as isize + dx, y as isize + dy);
            !in_bounds(m, sx, sy) || m.get(sx as usize, sy as usize)
        })
    })
}

/// Binary morphology. Offsets falling outside the image are ignored, so
/// dilation sees background there and erosion is not constrained by it.
pub fn morph(mask: &BinaryMask, op: MorphOp, se: &StructuringElement) -> BinaryMask {
    match op {
        MorphOp::Dilate => dilate(mask, se),
        MorphOp::Erode => erode(mask, se),
        MorphOp::Open => dilate(&erode(mask, se), se),
        MorphOp::Close => erode(&dilate(mask, se), se),
    }
}

/// Marks every pixel not reachable from the image border through
/// 4-connected background: contours plus whatever they enclose.
pub fn fill_contours(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut reached = BinaryMask::new(w, h, false);
    let mut stack = Vec::new();
    let seed = |x: usize, y: usize, reached: &mut BinaryMask, stack: &mut Vec<(usize, usize)>| {
        if !mask.get(x, y) && !reached.get(x, y) {
            reached.set(x, y, true);
            stack.push((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut reached, &mut stack);
        seed(x, h - 1, &mut reached, &mut stack);
    }
    for y in 0..h {
        seed(0, y, &mut reached, &mut stack);
        seed(w - 1, y, &mut reached, &mut stack);
    }
    while let Some((x, y)) = stack.pop() {
        if x > 0 {
            seed(x - 1, y, &mut reached, &mut stack);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut reached, &mut stack);
        }
        if y > 0 {
            seed(x, y - 1, &mut reached, &mut stack);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut reached, &mut stack);
        }
    }
    reached.complement()
}
