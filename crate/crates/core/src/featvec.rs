//! Seven-parameter geometric feature vector.

use std::fmt;

use thiserror::Error;

use crate::featextract::{FeatureId, FeatureMasks};
use crate::imgcore::{BinaryMask, Rect};

pub const FEATURE_DIM: usize = 7;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = ["He", "We", "Hm", "Wm", "Rul", "Rll", "NL"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatVecError {
    #[error("mask for {0} is empty")]
    MissingFeature(FeatureId),
    #[error("lip boundary has fewer than 3 columns")]
    DegenerateCurvature,
    #[error("face box has zero extent")]
    EmptyFaceBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Eyebrow elevation above the nose reference row.
    pub he: f64,
    /// Distance between inner eyebrow endpoints.
    pub we: f64,
    pub hm: f64,
    pub wm: f64,
    /// Upper-lip curvature, positive when the corners curve up.
    pub rul: f64,
    /// Lower-lip curvature, same sign convention.
    pub rll: f64,
    /// Nose row to upper-lip midpoint.
    pub nl: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [self.he, self.we, self.hm, self.wm, self.rul, self.rll, self.nl]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        FeatureVector { he: a[0], we: a[1], hm: a[2], wm: a[3], rul: a[4], rll: a[5], nl: a[6] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_array().iter().map(|v| format!("{v:.6}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Column-wise extremes of a mask relative to `origin`:
/// `(x, min_y, max_y, mean_y)` per occupied column.
fn columns(mask: &BinaryMask, origin: (usize, usize)) -> Vec<(f64, f64, f64, f64)> {
    let Some(bb) = mask.bbox() else { return Vec::new() };
    let (ox, oy) = (origin.0 as f64, origin.1 as f64);
    (bb.x1..=bb.x2)
        .filter_map(|x| {
            let ys: Vec<f64> = (bb.y1..=bb.y2).filter(|&y| mask.get(x, y)).map(|y| y as f64 - oy).collect();
            let mean = ys.iter().sum::<f64>() / ys.len().max(1) as f64;
            Some((x as f64 - ox, *ys.first()?, *ys.last()?, mean))
        })
        .collect()
}

/// Centroid relative to `origin`; summing offsets rather than absolute
/// indices keeps the result bit-identical under translation.
fn centroid(mask: &BinaryMask, origin: (usize, usize)) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                sx += x as f64 - origin.0 as f64;
                sy += y as f64 - origin.1 as f64;
                n += 1;
            }
        }
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

/// Leading coefficient of the least-squares parabola `y = a u² + b u + c`.
pub fn quadratic_coefficient(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mut s = [0.0f64; 5];
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for &(u, y) in points {
        let mut p = 1.0;
        for v in s.iter_mut() {
            *v += p;
            p *= u;
        }
        t0 += y;
        t1 += u * y;
        t2 += u * u * y;
    }
    debug_assert_eq!(s[0], n);
    // normal equations, unknowns ordered (a, b, c)
    let m = [[s[4], s[3], s[2]], [s[3], s[2], s[1]], [s[2], s[1], s[0]]];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(m);
    if d.abs() < 1e-12 * s[4].max(1.0) * s[2].max(1.0) * n {
        return None;
    }
    let mut ma = m;
    ma[0][0] = t2;
    ma[1][0] = t1;
    ma[2][0] = t0;
    Some(det3(ma) / d)
}

/// Builds `F` from the masks. Lengths are divided by the face box height
/// (vertical quantities) or width (horizontal ones); curvatures are scaled
/// by the width so they are dimensionless.
pub fn compute_feature_vector(masks: &FeatureMasks, face_bbox: Rect) -> Result<FeatureVector, FeatVecError> {
    let (w, h) = (face_bbox.width() as f64, face_bbox.height() as f64);
    if w == 0.0 || h == 0.0 {
        return Err(FeatVecError::EmptyFaceBox);
    }
    let origin = (face_bbox.x1, face_bbox.y1);
    let (ox, oy) = (face_bbox.x1 as f64, face_bbox.y1 as f64);
    let rel = |p: (f64, f64)| (p.0 - ox, p.1 - oy);
    let left = columns(&masks.left_eyebrow, origin);
    let right = columns(&masks.right_eyebrow, origin);
    let lip = columns(&masks.lip, origin);
    let lc = centroid(&masks.left_eyebrow, origin).ok_or(FeatVecError::MissingFeature(FeatureId::LeftEyebrow))?;
    let rc = centroid(&masks.right_eyebrow, origin).ok_or(FeatVecError::MissingFeature(FeatureId::RightEyebrow))?;
    if lip.is_empty() {
        return Err(FeatVecError::MissingFeature(FeatureId::Lip));
    }
    let nose_y = masks.nose_y - oy;

    let brow_y = (lc.1 + rc.1) / 2.0;
    let he = (nose_y - brow_y).abs() / h;

    // inner ends face each other: the left brow's last column, the right brow's first
    let (lx, _, _, ly) = *left.last().expect("non-empty");
    let (rx, _, _, ry) = *right.first().expect("non-empty");
    let we = ((rx - 0.5) - (lx + 0.5)).hypot(ry - ly) / w;

    let dist = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    let (top_mid, bottom_mid) = (rel(masks.lip_top_mid), rel(masks.lip_bottom_mid));
    let hm = dist(top_mid, bottom_mid) / h;
    let wm = dist(rel(masks.lip_corners[0]), rel(masks.lip_corners[1])) / w;

    let mid = (lip.first().expect("non-empty").0 + lip.last().expect("non-empty").0) / 2.0;
    let upper: Vec<(f64, f64)> = lip.iter().map(|&(x, top, _, _)| (x - mid, top)).collect();
    let lower: Vec<(f64, f64)> = lip.iter().map(|&(x, _, bottom, _)| (x - mid, bottom)).collect();
    let au = quadratic_coefficient(&upper).ok_or(FeatVecError::DegenerateCurvature)?;
    let al = quadratic_coefficient(&lower).ok_or(FeatVecError::DegenerateCurvature)?;
    // image rows grow downward, so upturned corners give a < 0
    let rul = -2.0 * au * w;
    let rll = -2.0 * al * w;

    let nl = (top_mid.1 - nose_y).max(0.0) / h;
    Ok(FeatureVector { he, we, hm, wm, rul, rll, nl })
}
