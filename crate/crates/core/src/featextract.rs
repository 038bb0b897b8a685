//! Facial feature localization by edge projection analysis.
//!
//! Every feature follows the same outline: an anthropometric search box,
//! an oriented Sobel edge map, its integral projections, median filtering
//! and Gaussian smoothing of the row profile, and a banded score `E(i)` that
//! picks the horizontal strip most likely to hold the feature. The strip is
//! then segmented into an exact mask (eyebrows, lips) or a reference row
//! (nose).

use std::fmt;

use thiserror::Error;

use crate::imgcore::{
    connected_components, fill_contours, gaussian_smooth_1d, integral_projections,
    log_zero_contours, median_filter_1d, morph, otsu_threshold, sobel_edges, BinaryMask, Circle,
    Connectivity, EdgeMap, GrayImage, ImageError, MorphOp, Rect, SobelOrientation,
    StructuringElement,
};

/// Smallest face box (in pixels per side) the extractor accepts.
pub const MIN_FACE_SIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureId {
    LeftEyebrow,
    RightEyebrow,
    Lip,
    Nose,
}

impl FeatureId {
    pub const ALL: [FeatureId; 4] = [FeatureId::LeftEyebrow, FeatureId::RightEyebrow, FeatureId::Lip, FeatureId::Nose];

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::LeftEyebrow => "left_eyebrow",
            FeatureId::RightEyebrow => "right_eyebrow",
            FeatureId::Lip => "lip",
            FeatureId::Nose => "nose",
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("face box {0}x{1} is smaller than {MIN_FACE_SIDE}x{MIN_FACE_SIDE}")]
    FaceTooSmall(usize, usize),
    #[error("no edge evidence inside the search box")]
    NoFeatureEvidence,
    #[error("feature not found: {0}")]
    FeatureNotFound(FeatureId),
    #[error("invalid extraction settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Search box as fractions of the face box plus the expected feature row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureBox {
    pub x1f: f64,
    pub y1f: f64,
    pub x2f: f64,
    pub y2f: f64,
    pub prior_yf: f64,
}

impl FeatureBox {
    pub const fn new(x1f: f64, y1f: f64, x2f: f64, y2f: f64, prior_yf: f64) -> Self {
        FeatureBox { x1f, y1f, x2f, y2f, prior_yf }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnthropometricModel {
    pub left_eyebrow: FeatureBox,
    pub right_eyebrow: FeatureBox,
    pub lip: FeatureBox,
    pub nose: FeatureBox,
}

impl Default for AnthropometricModel {
    fn default() -> Self {
        AnthropometricModel {
            left_eyebrow: FeatureBox::new(0.1, 0.15, 0.5, 0.45, 0.26),
            right_eyebrow: FeatureBox::new(0.5, 0.15, 0.9, 0.45, 0.26),
            lip: FeatureBox::new(0.2, 0.65, 0.8, 0.95, 0.80),
            nose: FeatureBox::new(0.3, 0.45, 0.7, 0.7, 0.58),
        }
    }
}

impl AnthropometricModel {
    pub fn feature(&self, f: FeatureId) -> &FeatureBox {
        match f {
            FeatureId::LeftEyebrow => &self.left_eyebrow,
            FeatureId::RightEyebrow => &self.right_eyebrow,
            FeatureId::Lip => &self.lip,
            FeatureId::Nose => &self.nose,
        }
    }

    pub fn feature_mut(&mut self, f: FeatureId) -> &mut FeatureBox {
        match f {
            FeatureId::LeftEyebrow => &mut self.left_eyebrow,
            FeatureId::RightEyebrow => &mut self.right_eyebrow,
            FeatureId::Lip => &mut self.lip,
            FeatureId::Nose => &mut self.nose,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        for f in FeatureId::ALL {
            let b = self.feature(f);
            let unit = |v: f64| (0.0..=1.0).contains(&v);
            if !(unit(b.x1f) && unit(b.x2f) && unit(b.y1f) && unit(b.y2f) && b.x1f < b.x2f && b.y1f < b.y2f) {
                return Err(FeatureError::InvalidConfig(format!("{f} box must be a proper sub-rect of the unit square")));
            }
            if !unit(b.prior_yf) {
                return Err(FeatureError::InvalidConfig(format!("{f} prior must lie in [0, 1]")));
            }
        }
        for brow in [&self.left_eyebrow, &self.right_eyebrow] {
            if brow.y2f > 0.5 {
                return Err(FeatureError::InvalidConfig("eyebrow boxes must lie in the upper half".into()));
            }
            if self.nose.y1f < brow.y2f {
                return Err(FeatureError::InvalidConfig("nose box must start below the eyebrow boxes".into()));
            }
        }
        if !(self.nose.y1f < self.lip.y1f && self.nose.y2f < self.lip.y2f) {
            return Err(FeatureError::InvalidConfig("nose box must sit above the lip box".into()));
        }
        Ok(())
    }
}

/// Scales a fractional feature box into pixel coordinates of `face_bbox`.
pub fn anthropometric_box(face_bbox: Rect, feature: FeatureId, model: &AnthropometricModel) -> Result<Rect, FeatureError> {
    let (w, h) = (face_bbox.width(), face_bbox.height());
    if w < MIN_FACE_SIDE || h < MIN_FACE_SIDE {
        return Err(FeatureError::FaceTooSmall(w, h));
    }
    let b = model.feature(feature);
    let lo = |f: f64, n: usize| (f * n as f64).round() as usize;
    let hi = |f: f64, n: usize| ((f * n as f64).round() as usize).saturating_sub(1).min(n - 1);
    let (x1, y1) = (lo(b.x1f, w).min(w - 1), lo(b.y1f, h).min(h - 1));
    let (x2, y2) = (hi(b.x2f, w).max(x1), hi(b.y2f, h).max(y1));
    Ok(Rect::new(face_bbox.x1 + x1, face_bbox.y1 + y1, face_bbox.x1 + x2, face_bbox.y1 + y2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandWeight {
    Uniform,
    /// Gaussian centred on the prior row with sigma equal to the band height.
    Gaussian,
}

/// Tunables for the band search and the segmentation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractParams {
    pub n_regions: usize,
    pub weight: BandWeight,
    pub profile_median: usize,
    pub profile_sigma: f64,
    pub log_sigma: f64,
    /// Side of the square face crop every extraction runs on.
    pub crop_size: usize,
    /// Rows adjoining the winning band join the segmentation window while
    /// their smoothed projection exceeds this fraction of the peak.
    pub support_fraction: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            n_regions: 5,
            weight: BandWeight::Uniform,
            profile_median: 3,
            profile_sigma: 2.0,
            log_sigma: 1.5,
            crop_size: 160,
            support_fraction: 0.1,
        }
    }
}

impl ExtractParams {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.into()));
        if self.n_regions < 2 {
            return bad("n_regions must be at least 2");
        }
        if self.profile_median < 3 || self.profile_median % 2 == 0 {
            return bad("profile_median must be odd and >= 3");
        }
        if !(self.profile_sigma > 0.0) || !(self.log_sigma > 0.0) {
            return bad("sigmas must be positive");
        }
        if self.crop_size < 64 {
            return bad("crop_size must be at least 64");
        }
        if !(0.0..1.0).contains(&self.support_fraction) {
            return bad("support_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Relative probability `E(i)` that band `i` holds the feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScore {
    pub index: usize,
    pub e: f64,
    pub band: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandLocation {
    pub winner: RegionScore,
    pub scores: Vec<RegionScore>,
    /// Median-filtered, smoothed row profile `H(y)` over the search box.
    pub profile: Vec<f64>,
    pub search: Rect,
}

fn smoothed_row_profile(edge: &EdgeMap, search: Rect, median: usize, sigma: f64) -> Result<Vec<f64>, FeatureError> {
    let proj = integral_projections(edge, search)?;
    let h: Vec<f64> = proj.h.iter().map(|&v| v as f64).collect();
    Ok(gaussian_smooth_1d(&median_filter_1d(&h, median)?, sigma)?)
}

/// Splits the search box into `n_regions` equal horizontal bands and scores
/// each by its share of the weighted, smoothed row projection.
pub fn locate_feature_band(
    edge: &EdgeMap,
    search: Rect,
    n_regions: usize,
    weight: BandWeight,
    prior_row: f64,
    params: &ExtractParams,
) -> Result<BandLocation, FeatureError> {
    if n_regions < 2 {
        return Err(FeatureError::InvalidConfig("n_regions must be at least 2".into()));
    }
    let rows = search.height();
    if rows < n_regions {
        return Err(FeatureError::InvalidConfig(format!("{rows} rows cannot hold {n_regions} bands")));
    }
    let profile = smoothed_row_profile(edge, search, params.profile_median, params.profile_sigma)?;
    let band_h = rows as f64 / n_regions as f64;
    let w = |y: f64| match weight {
        BandWeight::Uniform => 1.0,
        BandWeight::Gaussian => (-(y - prior_row).powi(2) / (2.0 * band_h * band_h)).exp(),
    };
    let mut raw = Vec::with_capacity(n_regions);
    for i in 0..n_regions {
        let (a, b) = (i * rows / n_regions, (i + 1) * rows / n_regions);
        let mass: f64 = (a..b).map(|k| profile[k] * w((search.y1 + k) as f64)).sum();
        raw.push((mass, Rect::new(search.x1, search.y1 + a, search.x2, search.y1 + b - 1)));
    }
    let total: f64 = raw.iter().map(|(m, _)| m).sum();
    if !(total > 0.0) {
        return Err(FeatureError::NoFeatureEvidence);
    }
    let scores: Vec<RegionScore> =
        raw.into_iter().enumerate().map(|(index, (m, band))| RegionScore { index, e: m / total, band }).collect();
    let best_e = scores.iter().map(|s| s.e).fold(f64::MIN, f64::max);
    let center = |r: &Rect| (r.y1 + r.y2) as f64 / 2.0;
    let winner = scores
        .iter()
        .filter(|s| best_e - s.e <= 1e-9 * best_e)
        .min_by(|a, b| {
            (center(&a.band) - prior_row)
                .abs()
                .total_cmp(&(center(&b.band) - prior_row).abs())
                .then(a.index.cmp(&b.index))
        })
        .expect("at least one band")
        .clone();
    Ok(BandLocation { winner, scores, profile, search })
}

impl BandLocation {
    /// Rows of the winning band grown through adjoining rows whose profile
    /// stays above `fraction` of the peak, as absolute `(top, bottom)`.
    pub fn support_rows(&self, fraction: f64) -> (usize, usize) {
        let y1 = self.search.y1;
        let peak = self.profile.iter().copied().fold(0.0, f64::max);
        let floor = fraction * peak;
        let mut top = self.winner.band.y1 - y1;
        let mut bottom = self.winner.band.y2 - y1;
        while top > 0 && self.profile[top - 1] > floor {
            top -= 1;
        }
        while bottom + 1 < self.profile.len() && self.profile[bottom + 1] > floor {
            bottom += 1;
        }
        (y1 + top, y1 + bottom)
    }
}

/// Square, scale-normalized face image.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCrop {
    pub image: GrayImage,
    /// Face box in source-image coordinates.
    pub bbox: Rect,
}

impl FaceCrop {
    /// Nearest-neighbour resample of `bbox` to `size x size`. When a face
    /// circle is given, pixels outside it are replaced by the median of the
    /// pixels inside so the head outline does not leak into search boxes.
    pub fn new(gray: &GrayImage, bbox: Rect, circle: Option<&Circle>, size: usize) -> Result<FaceCrop, FeatureError> {
        if !bbox.fits(gray.width(), gray.height()) {
            return Err(ImageError::InvalidRect(bbox, gray.width(), gray.height()).into());
        }
        if bbox.width() < MIN_FACE_SIDE || bbox.height() < MIN_FACE_SIDE {
            return Err(FeatureError::FaceTooSmall(bbox.width(), bbox.height()));
        }
        let (bw, bh) = (bbox.width() as f64, bbox.height() as f64);
        let src = |i: usize, n: f64, len: usize| (((i as f64 + 0.5) * n / size as f64).floor() as usize).min(len - 1);
        let mut image = GrayImage::from_fn(size, size, |x, y| {
            gray.get(bbox.x1 + src(x, bw, bbox.width()), bbox.y1 + src(y, bh, bbox.height()))
        });
        if let Some(c) = circle {
            let keep = (c.r - 1.5).max(1.0);
            let inside = |x: usize, y: usize| {
                let sx = (bbox.x1 + src(x, bw, bbox.width())) as f64;
                let sy = (bbox.y1 + src(y, bh, bbox.height())) as f64;
                (sx - c.cx).powi(2) + (sy - c.cy).powi(2) <= keep * keep
            };
            let mut vals: Vec<u8> =
                (0..size).flat_map(|y| (0..size).map(move |x| (x, y))).filter(|&(x, y)| inside(x, y)).map(|(x, y)| image.get(x, y)).collect();
            if !vals.is_empty() {
                let mid = vals.len() / 2;
                let fill = *vals.select_nth_unstable(mid).1;
                for y in 0..size {
                    for x in 0..size {
                        if !inside(x, y) {
                            image.set(x, y, fill);
                        }
                    }
                }
            }
        }
        Ok(FaceCrop { image, bbox })
    }

    /// Maps crop pixel-index coordinates back into the source image.
    pub fn to_image(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let sx = self.bbox.width() as f64 / self.image.width() as f64;
        let sy = self.bbox.height() as f64 / self.image.height() as f64;
        (self.bbox.x1 as f64 + (x + 0.5) * sx - 0.5, self.bbox.y1 as f64 + (y + 0.5) * sy - 0.5)
    }
}

fn embed(window: Rect, sub: &BinaryMask, width: usize, height: usize) -> BinaryMask {
    BinaryMask::from_fn(width, height, |x, y| window.contains(x as f64, y as f64) && sub.get(x - window.x1, y - window.y1))
}

fn band_or_missing(r: Result<BandLocation, FeatureError>, f: FeatureId) -> Result<BandLocation, FeatureError> {
    r.map_err(|e| match e {
        FeatureError::NoFeatureEvidence => FeatureError::FeatureNotFound(f),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Eyebrow mask in crop coordinates, with the band search that located it.
/// The LoG contours of the band are filled and closed horizontally; of the
/// two largest blobs the upper one is the eyebrow, the other is normally
/// the eye.
pub fn extract_eyebrow(
    face_crop: &GrayImage,
    side: Side,
    model: &AnthropometricModel,
    params: &ExtractParams,
) -> Result<(BinaryMask, BandLocation), FeatureError> {
    let feature = match side {
        Side::Left => FeatureId::LeftEyebrow,
        Side::Right => FeatureId::RightEyebrow,
    };
    let search = anthropometric_box(face_crop.bounds(), feature, model)?;
    let edges = sobel_edges(face_crop, SobelOrientation::Horizontal);
    let prior = face_crop.height() as f64 * model.feature(feature).prior_yf;
    let band = band_or_missing(locate_feature_band(&edges, search, params.n_regions, params.weight, prior, params), feature)?;
    // the eye band often outscores the brow band; keeping every row above
    // the winner lets the higher-blob rule still find the brow
    let (_, bottom) = band.support_rows(params.support_fraction);
    let pad = (3.0 * params.log_sigma).ceil() as usize + 1;
    let window = Rect::new(search.x1, search.y1.saturating_sub(pad), search.x2, (bottom + pad).min(face_crop.height() - 1));
    segment_eyebrow_window(face_crop, window, params.log_sigma)
        .map(|m| (embed(window, &m, face_crop.width(), face_crop.height()), band))
        .ok_or(FeatureError::FeatureNotFound(feature))
}

/// Filled-contour segmentation of one window; `None` when nothing survives.
pub fn segment_eyebrow_window(img: &GrayImage, window: Rect, log_sigma: f64) -> Option<BinaryMask> {
    let sub = img.crop(window).ok()?;
    let contours = log_zero_contours(&sub, log_sigma).ok()?;
    let filled = fill_contours(&contours);
    let closed = morph(&filled, MorphOp::Close, &StructuringElement::ellipse(4.0, 1.0));
    let regions = connected_components(&closed, Connectivity::Eight);
    let chosen = regions.iter().take(2).min_by(|a, b| a.centroid.1.total_cmp(&b.centroid.1))?;
    Some(chosen.to_mask(sub.width(), sub.height()))
}

/// Lip mask and landmarks in crop coordinates. Landmarks sit on pixel
/// boundaries: corners half a pixel outside the extreme columns, midpoints
/// half a pixel outside the extreme rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LipFeatures {
    pub mask: BinaryMask,
    pub corners: [(f64, f64); 2],
    pub top_mid: (f64, f64),
    pub bottom_mid: (f64, f64),
    pub band: Option<BandLocation>,
}

pub fn extract_lip(face_crop: &GrayImage, model: &AnthropometricModel, params: &ExtractParams) -> Result<LipFeatures, FeatureError> {
    let feature = FeatureId::Lip;
    let search = anthropometric_box(face_crop.bounds(), feature, model)?;
    let hz = sobel_edges(face_crop, SobelOrientation::Horizontal);
    let vt = sobel_edges(face_crop, SobelOrientation::Vertical);
    let edges = EdgeMap::from_fn(face_crop.width(), face_crop.height(), |x, y| hz.get(x, y).max(vt.get(x, y)));
    let prior = face_crop.height() as f64 * model.lip.prior_yf;
    let band = band_or_missing(locate_feature_band(&edges, search, params.n_regions, params.weight, prior, params), feature)?;
    let (top, bottom) = band.support_rows(params.support_fraction);
    let window = Rect::new(search.x1, top.saturating_sub(2), search.x2, (bottom + 2).min(face_crop.height() - 1));
    let sub = edges.crop(window)?;
    let strengths: Vec<u32> = sub.data().iter().copied().filter(|&v| v > 0).collect();
    let threshold = otsu_threshold(&strengths).unwrap_or(0);
    let bin = sub.map(|v| v > threshold);
    let closed = morph(&bin, MorphOp::Close, &StructuringElement::ellipse(3.0, 2.0));
    // the Sobel ring straddles the boundary by one pixel; fill it and peel that pixel off
    let solid = morph(&fill_contours(&closed), MorphOp::Erode, &StructuringElement::ellipse(1.5, 1.5));
    let regions = connected_components(&solid, Connectivity::Eight);
    let lip = regions.first().ok_or(FeatureError::FeatureNotFound(feature))?;
    let mask = embed(window, &lip.to_mask(sub.width(), sub.height()), face_crop.width(), face_crop.height());
    let mut lip = lip_landmarks(mask).ok_or(FeatureError::FeatureNotFound(feature))?;
    lip.band = Some(band);
    Ok(lip)
}

/// Corners and vertical midpoints of a lip mask.
pub fn lip_landmarks(mask: BinaryMask) -> Option<LipFeatures> {
    let bb = mask.bbox()?;
    let column = |x: usize| -> Option<(usize, usize)> {
        let ys: Vec<usize> = (bb.y1..=bb.y2).filter(|&y| mask.get(x, y)).collect();
        Some((*ys.first()?, *ys.last()?))
    };
    let (l_top, _) = column(bb.x1)?;
    let (r_top, _) = column(bb.x2)?;
    let corners = [(bb.x1 as f64 - 0.5, l_top as f64), (bb.x2 as f64 + 0.5, r_top as f64)];
    let center = (bb.x1 + bb.x2) as f64 / 2.0;
    let half_band = 0.1 * bb.width() as f64;
    let (mut sx, mut st, mut sb, mut n) = (0.0, 0.0, 0.0, 0.0);
    for x in bb.x1..=bb.x2 {
        if (x as f64 - center).abs() > half_band.max(0.5) {
            continue;
        }
        if let Some((t, b)) = column(x) {
            sx += x as f64;
            st += t as f64;
            sb += b as f64;
            n += 1.0;
        }
    }
    if n == 0.0 {
        return None;
    }
    Some(LipFeatures {
        corners,
        top_mid: (sx / n, st / n - 0.5),
        bottom_mid: (sx / n, sb / n + 0.5),
        mask,
        band: None,
    })
}

/// Vertical reference row from the vertical-edge projection of the nose box,
/// refined to sub-pixel precision by a parabola through the peak.
pub fn extract_nose_ref(face_crop: &GrayImage, model: &AnthropometricModel, params: &ExtractParams) -> Result<f64, FeatureError> {
    let feature = FeatureId::Nose;
    let search = anthropometric_box(face_crop.bounds(), feature, model)?;
    let edges = sobel_edges(face_crop, SobelOrientation::Vertical);
    let profile = smoothed_row_profile(&edges, search, params.profile_median, params.profile_sigma)?;
    let peak = profile.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(FeatureError::FeatureNotFound(feature));
    }
    let prior = face_crop.height() as f64 * model.nose.prior_yf - search.y1 as f64;
    let i = (0..profile.len())
        .filter(|&k| peak - profile[k] <= 1e-9 * peak)
        .min_by(|&a, &b| (a as f64 - prior).abs().total_cmp(&(b as f64 - prior).abs()).then(a.cmp(&b)))
        .expect("peak exists");
    let mut offset = 0.0;
    if i > 0 && i + 1 < profile.len() {
        let (a, b, c) = (profile[i - 1], profile[i], profile[i + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(search.y1 as f64 + i as f64 + offset)
}

/// All masks and landmarks of one face crop, in crop coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMasks {
    pub left_eyebrow: BinaryMask,
    pub right_eyebrow: BinaryMask,
    pub lip: BinaryMask,
    pub nose_y: f64,
    pub lip_corners: [(f64, f64); 2],
    pub lip_top_mid: (f64, f64),
    pub lip_bottom_mid: (f64, f64),
    /// Band searches behind the eyebrow and lip masks.
    pub bands: Vec<(FeatureId, BandLocation)>,
}

pub fn extract_all(face_crop: &GrayImage, model: &AnthropometricModel, params: &ExtractParams) -> Result<FeatureMasks, FeatureError> {
    model.validate()?;
    params.validate()?;
    let (left_eyebrow, left_band) = extract_eyebrow(face_crop, Side::Left, model, params)?;
    let (right_eyebrow, right_band) = extract_eyebrow(face_crop, Side::Right, model, params)?;
    let mut lip = extract_lip(face_crop, model, params)?;
    let nose_y = extract_nose_ref(face_crop, model, params)?;
    let mut bands = vec![(FeatureId::LeftEyebrow, left_band), (FeatureId::RightEyebrow, right_band)];
    bands.extend(lip.band.take().map(|b| (FeatureId::Lip, b)));
    Ok(FeatureMasks {
        bands,
        left_eyebrow,
        right_eyebrow,
        nose_y,
        lip_corners: lip.corners,
        lip_top_mid: lip.top_mid,
        lip_bottom_mid: lip.bottom_mid,
        lip: lip.mask,
    })
}
