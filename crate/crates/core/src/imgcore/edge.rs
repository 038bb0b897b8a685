use super::filter::gaussian_blur;
use super::{BinaryMask, EdgeMap, GrayImage, ImageError, Plane};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobelOrientation {
    /// Responds to horizontal edges (vertical intensity gradient).
    Horizontal,
    /// Responds to vertical edges (horizontal intensity gradient).
    Vertical,
    /// `round(sqrt(gx^2 + gy^2))`.
    Magnitude,
}

/// 3x3 Sobel response. Border pixels are zero.
pub fn sobel_edges(img: &GrayImage, orientation: SobelOrientation) -> EdgeMap {
    let (w, h) = (img.width(), img.height());
    let mut out = EdgeMap::new(w, h, 0);
    if w < 3 || h < 3 {
        return out;
    }
    let p = |x: usize, y: usize| img.get(x, y) as i32;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (p(x + 1, y - 1) + 2 * p(x + 1, y) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2 * p(x - 1, y) + p(x - 1, y + 1));
            let gy = (p(x - 1, y + 1) + 2 * p(x, y + 1) + p(x + 1, y + 1))
                - (p(x - 1, y - 1) + 2 * p(x, y - 1) + p(x + 1, y - 1));
            let v = match orientation {
                SobelOrientation::Horizontal => gy.unsigned_abs(),
                SobelOrientation::Vertical => gx.unsigned_abs(),
                SobelOrientation::Magnitude => (((gx * gx + gy * gy) as f64).sqrt()).round() as u32,
            };
            out.set(x, y, v);
        }
    }
    out
}

/// Laplacian of Gaussian followed by zero-crossing detection.
///
/// A pixel is marked when its response and one of its 4-neighbours have
/// strictly opposite signs. Responses within `1e-9` of zero count as zero,
/// which keeps flat areas free of round-off crossings.
pub fn log_zero_contours(img: &GrayImage, sigma: f64) -> Result<BinaryMask, ImageError> {
    let smooth = gaussian_blur(img, sigma)?;
    let (w, h) = (img.width(), img.height());
    let lap = Plane::from_fn(w, h, |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        smooth.get_clamped(xi - 1, yi)
            + smooth.get_clamped(xi + 1, yi)
            + smooth.get_clamped(xi, yi - 1)
            + smooth.get_clamped(xi, yi + 1)
            - 4.0 * smooth.get(x, y)
    });
    const EPS: f64 = 1e-9;
    let sign = |v: f64| -> i8 {
        if v > EPS {
            1
        } else if v < -EPS {
            -1
        } else {
            0
        }
    };
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        let s = sign(lap.get(x, y));
        if s == 0 {
            return false;
        }
        let (xi, yi) = (x as isize, y as isize);
        [(xi - 1, yi), (xi + 1, yi), (xi, yi - 1), (xi, yi + 1)]
            .into_iter()
            .filter(|&(nx, ny)| nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h)
            .any(|(nx, ny)| sign(lap.get(nx as usize, ny as usize)) == -s)
    }))
}
