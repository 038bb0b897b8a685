//! Face detection: skin filtering, skin region segmentation and a circle
//! Hough search per region, confirmed by skin coverage of the circle.

use thiserror::Error;

use crate::imgcore::{
    circle_stencil, connected_components, hough_circles, median_filter, morph, otsu_threshold,
    sobel_edges, to_grayscale, BinaryMask, Circle, Connectivity, HoughParams, ImageError, MorphOp,
    RasterImage, Rect, Region, SobelOrientation, StructuringElement,
};

/// Smallest image side the detector accepts.
pub const MIN_IMAGE_SIDE: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("image {0}x{1} is smaller than {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}")]
    ImageTooSmall(usize, usize),
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Hue/saturation box that marks skin. The hue range wraps through 0 when
/// `hue_min > hue_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkinThresholds {
    pub hue_min: f64,
    pub hue_max: f64,
    pub sat_min: f64,
    pub sat_max: f64,
}

impl Default for SkinThresholds {
    fn default() -> Self {
        SkinThresholds { hue_min: 0.0, hue_max: 50.0, sat_min: 0.15, sat_max: 0.68 }
    }
}

impl SkinThresholds {
    pub fn validate(&self) -> Result<(), DetectError> {
        let hue_ok = |h: f64| (0.0..360.0).contains(&h);
        if !hue_ok(self.hue_min) || !hue_ok(self.hue_max) {
            return Err(DetectError::InvalidConfig("hue bounds must lie in [0, 360)".into()));
        }
        if !(0.0..=1.0).contains(&self.sat_min) || !(0.0..=1.0).contains(&self.sat_max) || self.sat_min > self.sat_max {
            return Err(DetectError::InvalidConfig("saturation bounds must satisfy 0 <= min <= max <= 1".into()));
        }
        Ok(())
    }

    pub fn is_skin(&self, rgb: [u8; 3]) -> bool {
        let (h, s, _) = rgb_to_hsv(rgb);
        let hue_in = if self.hue_min <= self.hue_max {
            h >= self.hue_min && h <= self.hue_max
        } else {
            h >= self.hue_min || h <= self.hue_max
        };
        hue_in && s >= self.sat_min && s <= self.sat_max
    }
}

/// Hexcone HSV. Hue in degrees `[0, 360)`, achromatic pixels get hue 0.
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return (0.0, 0.0, max);
    }
    let s = delta / max;
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (if h < 0.0 { h + 360.0 } else { h }, s, max)
}

pub fn skin_mask(img: &RasterImage, t: &SkinThresholds) -> Result<BinaryMask, ImageError> {
    img.require_rgb()?;
    Ok(BinaryMask::from_fn(img.width(), img.height(), |x, y| t.is_skin(img.rgb(x, y))))
}

/// Replaces every non-skin pixel with white.
pub fn eliminate_nonskin(img: &RasterImage, t: &SkinThresholds) -> Result<RasterImage, ImageError> {
    img.require_rgb()?;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !t.is_skin(img.rgb(x, y)) {
                out.set_rgb(x, y, [255, 255, 255]);
            }
        }
    }
    Ok(out)
}

/// 8-connected skin regions of at least `min_area` pixels after a small closing.
pub fn segment_skin_regions(mask: &BinaryMask, min_area: usize) -> Vec<Region> {
    let closed = morph(mask, MorphOp::Close, &StructuringElement::ellipse(2.0, 2.0));
    connected_components(&closed, Connectivity::Eight)
        .into_iter()
        .filter(|r| r.area >= min_area)
        .collect()
}

/// Skin coverage of the disk times the accumulator fit of the circle, both in `[0, 1]`.
pub fn face_confidence(mask: &BinaryMask, c: &Circle) -> f64 {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let r2 = c.r * c.r;
    let (mut inside, mut skin) = (0usize, 0usize);
    let (x0, x1) = ((c.cx - c.r).floor() as isize, (c.cx + c.r).ceil() as isize);
    let (y0, y1) = ((c.cy - c.r).floor() as isize, (c.cy + c.r).ceil() as isize);
    for y in y0.max(0)..=y1.min(h - 1) {
        for x in x0.max(0)..=x1.min(w - 1) {
            let (dx, dy) = (x as f64 - c.cx, y as f64 - c.cy);
            if dx * dx + dy * dy <= r2 {
                inside += 1;
                if mask.get(x as usize, y as usize) {
                    skin += 1;
                }
            }
        }
    }
    if inside == 0 {
        return 0.0;
    }
    let fill = skin as f64 / inside as f64;
    let ideal = circle_stencil(c.r.round().max(1.0) as usize).len() as f64;
    let fit = (c.score / ideal).clamp(0.0, 1.0);
    (fill * fit).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub thresholds: SkinThresholds,
    /// Minimum skin region area as a fraction of the image area.
    pub min_region_area: f64,
    /// Face radius search range as fractions of `min(width, height)`.
    pub r_min_frac: f64,
    pub r_max_frac: f64,
    pub confidence_floor: f64,
    pub max_faces: usize,
    pub median_window: usize,
    pub vote_fraction: f64,
    /// Accepted width/height ratio of the clipped face box.
    pub max_aspect: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            thresholds: SkinThresholds::default(),
            min_region_area: 0.01,
            r_min_frac: 0.1,
            r_max_frac: 0.45,
            confidence_floor: 0.35,
            max_faces: 4,
            median_window: 3,
            vote_fraction: 0.3,
            max_aspect: 2.0,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        self.thresholds.validate()?;
        let bad = |m: &str| Err(DetectError::InvalidConfig(m.into()));
        if !(0.0 < self.r_min_frac && self.r_min_frac < self.r_max_frac && self.r_max_frac <= 0.5) {
            return bad("radius fractions must satisfy 0 < r_min_frac < r_max_frac <= 0.5");
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return bad("confidence_floor must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.min_region_area) {
            return bad("min_region_area must lie in [0, 1)");
        }
        if self.median_window < 3 || self.median_window % 2 == 0 {
            return bad("median_window must be odd and >= 3");
        }
        if !(self.vote_fraction > 0.0 && self.vote_fraction <= 1.0) {
            return bad("vote_fraction must lie in (0, 1]");
        }
        if self.max_faces == 0 {
            return bad("max_faces must be at least 1");
        }
        if self.max_aspect < 1.0 {
            return bad("max_aspect must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceDetection {
    pub circle: Circle,
    /// Square around the circle, clipped to the image.
    pub bbox: Rect,
    pub confidence: f64,
    pub skin_region: Region,
}

/// Runs the full detector. An empty list means no face passed the checks.
pub fn detect_faces(img: &RasterImage, cfg: &DetectConfig) -> Result<Vec<FaceDetection>, DetectError> {
    cfg.validate()?;
    img.require_rgb()?;
    let (w, h) = (img.width(), img.height());
    if w < MIN_IMAGE_SIDE || h < MIN_IMAGE_SIDE {
        return Err(DetectError::ImageTooSmall(w, h));
    }
    let t = &cfg.thresholds;
    let cleaned = eliminate_nonskin(img, t)?;
    let gray = median_filter(&to_grayscale(&cleaned)?, cfg.median_window)?;
    let mask = skin_mask(img, t)?;
    let min_area = ((cfg.min_region_area * (w * h) as f64).ceil() as usize).max(1);
    let regions = segment_skin_regions(&mask, min_area);
    if regions.is_empty() {
        return Ok(Vec::new());
    }
    let edges = sobel_edges(&gray, SobelOrientation::Magnitude);
    let short = w.min(h) as f64;
    let r_min = (cfg.r_min_frac * short).ceil().max(1.0) as usize;
    let r_max_global = (cfg.r_max_frac * short).floor() as usize;

    let mut found = Vec::new();
    for region in regions {
        let bb = region.bbox;
        let r_max = r_max_global.min(bb.width().max(bb.height()) / 2 + 2);
        if r_min > r_max {
            continue;
        }
        let vote_window = bb.expand(3, w, h);
        let strengths: Vec<u32> = (vote_window.y1..=vote_window.y2)
            .flat_map(|y| (vote_window.x1..=vote_window.x2).map(move |x| (x, y)))
            .map(|(x, y)| edges.get(x, y))
            .filter(|&e| e > 0)
            .collect();
        // Otsu split of the non-zero magnitudes keeps the significant edges
        let threshold = otsu_threshold(&strengths).unwrap_or(0);
        let params = HoughParams {
            r_min,
            r_max,
            edge_threshold: threshold,
            vote_fraction: cfg.vote_fraction,
            center_window: Some(bb),
            vote_window: Some(vote_window),
        };
        let Some(best) = hough_circles(&edges, &params)?.into_iter().next() else {
            continue;
        };
        let confidence = face_confidence(&mask, &best);
        if confidence < cfg.confidence_floor {
            continue;
        }
        let bbox = Rect::around_circle(best.cx, best.cy, best.r, w, h);
        let aspect = bbox.width() as f64 / bbox.height() as f64;
        if aspect > cfg.max_aspect || aspect < 1.0 / cfg.max_aspect {
            continue;
        }
        found.push(FaceDetection { circle: best, bbox, confidence, skin_region: region });
    }
    found.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then(a.circle.cy.total_cmp(&b.circle.cy))
            .then(a.circle.cx.total_cmp(&b.circle.cx))
    });
    found.truncate(cfg.max_faces);
    Ok(found)
}
