//! Parametric face renderer with exact ground truth.
//!
//! Faces are hard-edged (no anti-aliasing): a skin disk on a non-skin
//! background with dark eyebrow arcs, eye ellipses, a nose mark and a mouth
//! bounded by two parabolas that meet at the corners. Expression presets
//! move those parts so that the geometric features separate the six classes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::facedetect::SkinThresholds;
use crate::imgcore::{save_pnm, BinaryMask, Circle, ImageError, RasterImage, Rect};
use crate::svm::Expression;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid face parameters: {0}")]
    InvalidParams(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<ImageError> for SynthError {
    fn from(e: ImageError) -> Self {
        SynthError::Io(e.to_string())
    }
}

impl From<std::io::Error> for SynthError {
    fn from(e: std::io::Error) -> Self {
        SynthError::Io(e.to_string())
    }
}

pub const BROW_COLOR: [u8; 3] = [55, 48, 48];
pub const EYE_COLOR: [u8; 3] = [35, 35, 45];
pub const NOSE_COLOR: [u8; 3] = [95, 80, 90];
pub const MOUTH_COLOR: [u8; 3] = [150, 50, 70];

pub const SKIN_PALETTE: [[u8; 3]; 5] =
    [[219, 172, 152], [224, 180, 150], [198, 150, 120], [235, 195, 170], [190, 140, 110]];
pub const BACKGROUND_PALETTE: [[u8; 3]; 5] =
    [[60, 110, 170], [90, 150, 100], [200, 200, 205], [40, 60, 90], [150, 170, 200]];

/// Vertical placements as fractions of the head diameter, measured from the top of the head.
const EYE_ROW: f64 = 0.36;
const NOSE_ROW: f64 = 0.58;
const MOUTH_ROW: f64 = 0.80;
/// Horizontal eye offset from the midline, in head radii.
const EYE_OFFSET: f64 = 0.36;
const BROW_LENGTH: f64 = 0.40;
const BROW_HALF_THICKNESS: f64 = 0.035;
const EYE_ASPECT: f64 = 0.3;
const NOSE_HALF_WIDTH: f64 = 0.10;
const NOSE_HALF_THICKNESS: f64 = 0.03;
const UPPER_LIP_SHARE: f64 = 0.4;

/// Expression-controlled parameters with their documented ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeParam {
    /// Brow arc midpoint above the eye line, in head radii.
    BrowElevation,
    /// Brow arc sag at the ends, in head radii; negative lifts the ends.
    BrowArch,
    /// Gap between the inner brow ends, fraction of head diameter.
    BrowGap,
    /// Eye semi-major axis, in head radii.
    EyeSize,
    /// Corner-to-corner mouth width, fraction of head diameter.
    MouthWidth,
    /// Mouth height at the midline, fraction of head diameter.
    MouthOpenness,
    /// Corner elevation relative to the mouth center line, in quarter mouth widths; positive smiles.
    CornerLift,
    /// Nose row shift, fraction of head diameter; negative raises the nose.
    NoseOffset,
}

impl ShapeParam {
    pub const ALL: [ShapeParam; 8] = [
        ShapeParam::BrowElevation,
        ShapeParam::BrowArch,
        ShapeParam::BrowGap,
        ShapeParam::EyeSize,
        ShapeParam::MouthWidth,
        ShapeParam::MouthOpenness,
        ShapeParam::CornerLift,
        ShapeParam::NoseOffset,
    ];

    pub fn range(self) -> (f64, f64) {
        match self {
            ShapeParam::BrowElevation => (0.16, 0.30),
            ShapeParam::BrowArch => (-0.04, 0.04),
            ShapeParam::BrowGap => (0.12, 0.24),
            ShapeParam::EyeSize => (0.10, 0.18),
            ShapeParam::MouthWidth => (0.28, 0.50),
            ShapeParam::MouthOpenness => (0.03, 0.13),
            ShapeParam::CornerLift => (-0.6, 0.6),
            ShapeParam::NoseOffset => (-0.06, 0.04),
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ShapeParam::BrowElevation => "brow_elevation",
            ShapeParam::BrowArch => "brow_arch",
            ShapeParam::BrowGap => "brow_gap",
            ShapeParam::EyeSize => "eye_size",
            ShapeParam::MouthWidth => "mouth_width",
            ShapeParam::MouthOpenness => "mouth_openness",
            ShapeParam::CornerLift => "corner_lift",
            ShapeParam::NoseOffset => "nose_offset",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceParams {
    pub width: usize,
    pub height: usize,
    pub head_cx: f64,
    pub head_cy: f64,
    pub head_r: f64,
    pub skin: [u8; 3],
    pub background: [u8; 3],
    pub brow_elevation: f64,
    pub brow_arch: f64,
    pub brow_gap: f64,
    pub eye_size: f64,
    pub mouth_width: f64,
    pub mouth_openness: f64,
    pub corner_lift: f64,
    pub nose_offset: f64,
}

impl Default for FaceParams {
    /// A neutral face centered in a 256x256 frame.
    fn default() -> Self {
        FaceParams {
            width: 256,
            height: 256,
            head_cx: 128.0,
            head_cy: 128.0,
            head_r: 80.0,
            skin: SKIN_PALETTE[0],
            background: BACKGROUND_PALETTE[0],
            brow_elevation: 0.21,
            brow_arch: 0.015,
            brow_gap: 0.18,
            eye_size: 0.13,
            mouth_width: 0.38,
            mouth_openness: 0.05,
            corner_lift: 0.0,
            nose_offset: 0.0,
        }
    }
}

impl FaceParams {
    pub fn get(&self, p: ShapeParam) -> f64 {
        match p {
            ShapeParam::BrowElevation => self.brow_elevation,
            ShapeParam::BrowArch => self.brow_arch,
            ShapeParam::BrowGap => self.brow_gap,
            ShapeParam::EyeSize => self.eye_size,
            ShapeParam::MouthWidth => self.mouth_width,
            ShapeParam::MouthOpenness => self.mouth_openness,
            ShapeParam::CornerLift => self.corner_lift,
            ShapeParam::NoseOffset => self.nose_offset,
        }
    }

    pub fn set(&mut self, p: ShapeParam, v: f64) {
        let slot = match p {
            ShapeParam::BrowElevation => &mut self.brow_elevation,
            ShapeParam::BrowArch => &mut self.brow_arch,
            ShapeParam::BrowGap => &mut self.brow_gap,
            ShapeParam::EyeSize => &mut self.eye_size,
            ShapeParam::MouthWidth => &mut self.mouth_width,
            ShapeParam::MouthOpenness => &mut self.mouth_openness,
            ShapeParam::CornerLift => &mut self.corner_lift,
            ShapeParam::NoseOffset => &mut self.nose_offset,
        };
        *slot = v;
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        if self.width < 32 || self.height < 32 {
            return bad(format!("image {}x{} too small", self.width, self.height));
        }
        if !(self.head_r >= 16.0) {
            return bad(format!("head radius {} below 16 px", self.head_r));
        }
        let (cx, cy, r) = (self.head_cx, self.head_cy, self.head_r);
        if cx - r < 0.0 || cy - r < 0.0 || cx + r > (self.width - 1) as f64 || cy + r > (self.height - 1) as f64 {
            return bad("head circle leaves the image".into());
        }
        for p in ShapeParam::ALL {
            let (lo, hi) = p.range();
            let v = self.get(p);
            if !(v >= lo - 1e-12 && v <= hi + 1e-12) {
                return bad(format!("{} = {v} outside [{lo}, {hi}]", p.key()));
            }
        }
        let t = SkinThresholds::default();
        if !t.is_skin(self.skin) {
            return bad(format!("skin color {:?} fails the default skin filter", self.skin));
        }
        if t.is_skin(self.background) {
            return bad(format!("background color {:?} passes the skin filter", self.background));
        }
        Ok(())
    }

    pub fn face_bbox(&self) -> Rect {
        Rect::around_circle(self.head_cx, self.head_cy, self.head_r, self.width, self.height)
    }
}

/// Rendered geometry of one feature, in image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTruth {
    pub mask: BinaryMask,
    pub centroid: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFaceTruth {
    pub face_bbox: Rect,
    pub head: Circle,
    pub label: Option<Expression>,
    pub params: FaceParams,
    /// Image-left brow (smaller x).
    pub left_eyebrow: FeatureTruth,
    pub right_eyebrow: FeatureTruth,
    pub left_eye: FeatureTruth,
    pub right_eye: FeatureTruth,
    pub nose: FeatureTruth,
    pub mouth: FeatureTruth,
    /// Center row of the nose mark.
    pub nose_row: f64,
}

struct Canvas {
    img: RasterImage,
}

impl Canvas {
    fn paint(&mut self, color: [u8; 3], inside: impl Fn(f64, f64) -> bool) -> FeatureTruth {
        let (w, h) = (self.img.width(), self.img.height());
        let mut mask = BinaryMask::new(w, h, false);
        for y in 0..h {
            for x in 0..w {
                if inside(x as f64, y as f64) {
                    self.img.set_rgb(x, y, color);
                    mask.set(x, y, true);
                }
            }
        }
        let centroid = mask.centroid().unwrap_or((f64::NAN, f64::NAN));
        FeatureTruth { mask, centroid }
    }
}

pub fn render_face(p: &FaceParams) -> Result<(RasterImage, SynthFaceTruth), SynthError> {
    p.validate()?;
    let (cx, cy, r) = (p.head_cx, p.head_cy, p.head_r);
    let size = 2.0 * r;
    let top = cy - r;
    let mut canvas = Canvas { img: RasterImage::filled_rgb(p.width, p.height, p.background) };
    canvas.paint(p.skin, |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r);

    let eye_y = top + EYE_ROW * size;
    let eye_a = p.eye_size * r;
    let eye_b = EYE_ASPECT * eye_a;
    let eye = |ex: f64| move |x: f64, y: f64| ((x - ex) / eye_a).powi(2) + ((y - eye_y) / eye_b).powi(2) <= 1.0;
    let left_eye = canvas.paint(EYE_COLOR, eye(cx - EYE_OFFSET * r));
    let right_eye = canvas.paint(EYE_COLOR, eye(cx + EYE_OFFSET * r));

    let brow_y = eye_y - p.brow_elevation * r;
    let half_len = BROW_LENGTH * r / 2.0;
    let half_thick = BROW_HALF_THICKNESS * r;
    let inner = p.brow_gap * size / 2.0;
    let arch = p.brow_arch * r;
    let brow = |mid_x: f64| {
        move |x: f64, y: f64| {
            let u = (x - mid_x) / half_len;
            u.abs() <= 1.0 && (y - (brow_y + arch * u * u)).abs() <= half_thick
        }
    };
    let left_eyebrow = canvas.paint(BROW_COLOR, brow(cx - inner - half_len));
    let right_eyebrow = canvas.paint(BROW_COLOR, brow(cx + inner + half_len));

    let nose_row = top + (NOSE_ROW + p.nose_offset) * size;
    let (nose_hw, nose_ht) = (NOSE_HALF_WIDTH * r, NOSE_HALF_THICKNESS * r);
    let nose = canvas.paint(NOSE_COLOR, |x, y| (x - cx).abs() <= nose_hw && (y - nose_row).abs() <= nose_ht);

    let mouth_y = top + MOUTH_ROW * size;
    let half_w = p.mouth_width * size / 2.0;
    let open = p.mouth_openness * size;
    let (t_up, t_low) = (UPPER_LIP_SHARE * open, (1.0 - UPPER_LIP_SHARE) * open);
    let lift = p.corner_lift * half_w / 2.0;
    let mouth = canvas.paint(MOUTH_COLOR, |x, y| {
        let s = (x - cx) / half_w;
        if s.abs() > 1.0 {
            return false;
        }
        let s2 = s * s;
        let upper = mouth_y - t_up * (1.0 - s2) - lift * s2;
        let lower = mouth_y + t_low * (1.0 - s2) - lift * s2;
        y >= upper && y <= lower
    });

    let truth = SynthFaceTruth {
        face_bbox: p.face_bbox(),
        head: Circle { cx, cy, r, score: 0.0 },
        label: None,
        params: p.clone(),
        left_eyebrow,
        right_eyebrow,
        left_eye,
        right_eye,
        nose,
        mouth,
        nose_row,
    };
    Ok((canvas.img, truth))
}

fn base_preset(e: Expression) -> [f64; 8] {
    // brow_elevation, brow_arch, brow_gap, eye_size, mouth_width, mouth_openness, corner_lift, nose_offset
    match e {
        Expression::Joy => [0.21, 0.02, 0.18, 0.13, 0.48, 0.06, 0.45, 0.0],
        Expression::Surprise => [0.30, 0.03, 0.18, 0.17, 0.30, 0.13, 0.0, 0.0],
        Expression::Anger => [0.16, -0.03, 0.13, 0.12, 0.36, 0.03, -0.1, 0.0],
        Expression::Sadness => [0.22, -0.02, 0.21, 0.12, 0.38, 0.05, -0.45, 0.0],
        Expression::Fear => [0.28, 0.0, 0.14, 0.16, 0.32, 0.08, -0.1, 0.0],
        Expression::Disgust => [0.17, -0.01, 0.18, 0.12, 0.42, 0.05, -0.25, -0.05],
    }
}

/// Expression preset on the default frame, perturbed per parameter by a
/// seeded uniform draw in `+-jitter * range`, clamped back into range.
pub fn expression_preset(e: Expression, jitter: f64, seed: u64) -> FaceParams {
    let jitter = jitter.clamp(0.0, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = FaceParams::default();
    for (param, base) in ShapeParam::ALL.into_iter().zip(base_preset(e)) {
        let (lo, hi) = param.range();
        let delta: f64 = rng.gen_range(-1.0..=1.0);
        p.set(param, (base + delta * jitter * (hi - lo)).clamp(lo, hi));
    }
    p
}

/// Per-image seed from the corpus seed and the image index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Places the head and picks colors at random; expression parameters are kept.
pub fn randomize_scene(p: &mut FaceParams, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let short = p.width.min(p.height) as f64;
    let r = rng.gen_range(0.28 * short..=0.38 * short).round();
    p.head_r = r;
    let margin = 4.0;
    let cx_hi = p.width as f64 - 1.0 - r - margin;
    let cy_hi = p.height as f64 - 1.0 - r - margin;
    p.head_cx = rng.gen_range(r + margin..=cx_hi.max(r + margin)).round();
    p.head_cy = rng.gen_range(r + margin..=cy_hi.max(r + margin)).round();
    p.skin = SKIN_PALETTE[rng.gen_range(0..SKIN_PALETTE.len())];
    p.background = BACKGROUND_PALETTE[rng.gen_range(0..BACKGROUND_PALETTE.len())];
}

/// One corpus entry, index-addressable so corpora can be generated lazily.
pub fn corpus_item(index: usize, jitter: f64, seed: u64) -> (Expression, FaceParams) {
    let e = Expression::ALL[index % 6];
    let s = derive_seed(seed, index as u64);
    let mut p = expression_preset(e, jitter, s);
    randomize_scene(&mut p, s.rotate_left(17) ^ 0x5DEE_CE66);
    (e, p)
}

/// Renders `6 * n_per_class` faces, classes interleaved.
pub fn corpus(n_per_class: usize, jitter: f64, seed: u64) -> Result<Vec<(RasterImage, SynthFaceTruth)>, SynthError> {
    (0..6 * n_per_class)
        .map(|i| {
            let (e, p) = corpus_item(i, jitter, seed);
            let (img, mut truth) = render_face(&p)?;
            truth.label = Some(e);
            Ok((img, truth))
        })
        .collect()
}

/// Plain-text key/value sidecar describing one rendered face.
pub fn truth_sidecar(t: &SynthFaceTruth) -> String {
    let mut s = String::new();
    let b = t.face_bbox;
    let label = t.label.map_or("none".to_string(), |e| e.to_string());
    let _ = writeln!(s, "label {label}");
    let _ = writeln!(s, "bbox {} {} {} {}", b.x1, b.y1, b.x2, b.y2);
    let _ = writeln!(s, "head {} {} {}", t.head.cx, t.head.cy, t.head.r);
    for (k, f) in [
        ("left_eyebrow", &t.left_eyebrow),
        ("right_eyebrow", &t.right_eyebrow),
        ("left_eye", &t.left_eye),
        ("right_eye", &t.right_eye),
        ("nose", &t.nose),
        ("mouth", &t.mouth),
    ] {
        let _ = writeln!(s, "centroid.{k} {:.4} {:.4}", f.centroid.0, f.centroid.1);
    }
    let _ = writeln!(s, "nose_row {:.4}", t.nose_row);
    let p = &t.params;
    let _ = writeln!(s, "param.size {} {}", p.width, p.height);
    let _ = writeln!(s, "param.skin {} {} {}", p.skin[0], p.skin[1], p.skin[2]);
    let _ = writeln!(s, "param.background {} {} {}", p.background[0], p.background[1], p.background[2]);
    for sp in ShapeParam::ALL {
        let _ = writeln!(s, "param.{} {:.6}", sp.key(), p.get(sp));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub rows: Vec<(PathBuf, Expression)>,
}

impl CorpusManifest {
    /// `path,label` CSV with paths relative to the manifest directory.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,label\n");
        for (p, e) in &self.rows {
            let _ = writeln!(s, "{},{}", p.display(), e);
        }
        s
    }
}

/// Writes images, truth sidecars and `manifest.csv` into `out_dir`.
pub fn generate_corpus(n_per_class: usize, jitter: f64, seed: u64, out_dir: &Path) -> Result<CorpusManifest, SynthError> {
    if n_per_class == 0 {
        return Err(SynthError::InvalidParams("n_per_class must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::with_capacity(6 * n_per_class);
    for i in 0..6 * n_per_class {
        let (e, p) = corpus_item(i, jitter, seed);
        let (img, mut truth) = render_face(&p)?;
        truth.label = Some(e);
        let name = format!("face_{i:05}.ppm");
        save_pnm(out_dir.join(&name), &img)?;
        std::fs::write(out_dir.join(format!("face_{i:05}.truth")), truth_sidecar(&truth))?;
        rows.push((PathBuf::from(name), e));
    }
    let manifest = CorpusManifest { rows };
    std::fs::write(out_dir.join("manifest.csv"), manifest.to_csv())?;
    Ok(manifest)
}
