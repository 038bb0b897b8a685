//! Browser bindings: render a synthetic face, show its skin mask, and run
//! the detection and feature pipeline on it. Images cross the boundary as
//! RGBA bytes, the layout of a canvas `ImageData`.

use moodpipe::config::PipelineConfig;
use moodpipe::facedetect::skin_mask;
use moodpipe::featvec::FEATURE_NAMES;
use moodpipe::imgcore::{draw_circle, draw_rect, BinaryMask, RasterImage};
use moodpipe::pipeline::analyze;
use moodpipe::synthface::{expression_preset, randomize_scene, render_face};
use moodpipe::Expression;
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Frame {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Frame {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }
}

impl Frame {
    fn from_raster(img: &RasterImage) -> Frame {
        let mut rgba = Vec::with_capacity(img.width() * img.height() * 4);
        for y in 0..img.height() {
            for x in 0..img.width() {
                rgba.extend_from_slice(&img.rgb(x, y));
                rgba.push(255);
            }
        }
        Frame { width: img.width(), height: img.height(), rgba }
    }
}

fn raster_from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<RasterImage, String> {
    if rgba.len() != width * height * 4 {
        return Err(format!("expected {} bytes for {width}x{height} RGBA, got {}", width * height * 4, rgba.len()));
    }
    let rgb = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    RasterImage::new(width, height, 3, rgb).map_err(|e| e.to_string())
}

/// Synthetic face for `expression` (a name such as `Joy`), with random
/// shape jitter and scene placement drawn from `seed`.
pub fn render(expression: &str, jitter: f64, seed: u64) -> Result<Frame, String> {
    let e: Expression = expression.parse().map_err(|e: moodpipe::svm::UnknownExpression| e.to_string())?;
    let mut p = expression_preset(e, jitter, seed);
    randomize_scene(&mut p, seed);
    let (img, _) = render_face(&p).map_err(|e| e.to_string())?;
    Ok(Frame::from_raster(&img))
}

/// Skin pixels white, everything else black.
pub fn skin(rgba: &[u8], width: usize, height: usize) -> Result<Frame, String> {
    let img = raster_from_rgba(rgba, width, height)?;
    let mask = skin_mask(&img, &PipelineConfig::default().detect.thresholds).map_err(|e| e.to_string())?;
    let mut out = RasterImage::filled_rgb(width, height, [0, 0, 0]);
    for y in 0..height {
        for x in 0..width {
            if mask.get(x, y) {
                out.set_rgb(x, y, [255, 255, 255]);
            }
        }
    }
    Ok(Frame::from_raster(&out))
}

pub struct Report {
    pub overlay: Frame,
    pub json: String,
}

const OVERLAY: [([u8; 3], &str); 3] = [([230, 40, 40], "left_eyebrow"), ([40, 120, 230], "right_eyebrow"), ([250, 200, 0], "lip")];

/// Detection, feature masks and the feature vector. The overlay marks the
/// face circle and box in green and tints each feature mask.
pub fn inspect(rgba: &[u8], width: usize, height: usize) -> Result<Report, String> {
    let mut img = raster_from_rgba(rgba, width, height)?;
    let a = analyze(&img, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let f = &a.features;
    let masks: [&BinaryMask; 3] = [&f.masks.left_eyebrow, &f.masks.right_eyebrow, &f.masks.lip];
    for (mask, (color, _)) in masks.iter().zip(OVERLAY) {
        for cy in 0..mask.height() {
            for cx in 0..mask.width() {
                if !mask.get(cx, cy) {
                    continue;
                }
                let (x, y) = f.crop.to_image((cx as f64, cy as f64));
                let (x, y) = (x.round(), y.round());
                if x >= 0.0 && y >= 0.0 && (x as usize) < width && (y as usize) < height {
                    img.set_rgb(x as usize, y as usize, color);
                }
            }
        }
    }
    let d = &a.detection;
    draw_circle(&mut img, &d.circle, [0, 255, 0]);
    draw_rect(&mut img, &d.bbox, [0, 255, 0]);

    let features: Vec<String> =
        FEATURE_NAMES.iter().zip(f.vector.to_array()).map(|(n, v)| format!("\"{n}\":{}", json_number(v))).collect();
    let nose_y = f.crop.to_image((0.0, f.masks.nose_y)).1;
    let json = format!(
        "{{\"circle\":[{},{},{}],\"bbox\":[{},{},{},{}],\"confidence\":{},\"nose_y\":{},\"features\":{{{}}}}}",
        json_number(d.circle.cx),
        json_number(d.circle.cy),
        json_number(d.circle.r),
        d.bbox.x1,
        d.bbox.y1,
        d.bbox.x2,
        d.bbox.y2,
        json_number(d.confidence),
        json_number(nose_y),
        features.join(",")
    );
    Ok(Report { overlay: Frame::from_raster(&img), json })
}

fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "null".into()
    }
}

#[wasm_bindgen(js_name = renderFace)]
pub fn render_face_js(expression: &str, jitter: f64, seed: u32) -> Result<Frame, JsError> {
    render(expression, jitter, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = skinMask)]
pub fn skin_mask_js(rgba: &[u8], width: usize, height: usize) -> Result<Frame, JsError> {
    skin(rgba, width, height).map_err(|e| JsError::new(&e))
}

/// Returns the overlay frame; the measurements are stored for
/// [`last_report`] since a `Frame` cannot carry them.
#[wasm_bindgen(js_name = analyzeFace)]
pub fn analyze_js(rgba: &[u8], width: usize, height: usize) -> Result<Frame, JsError> {
    let r = inspect(rgba, width, height).map_err(|e| JsError::new(&e))?;
    LAST.with(|l| *l.borrow_mut() = r.json);
    Ok(r.overlay)
}

thread_local! {
    static LAST: std::cell::RefCell<String> = const { std::cell::RefCell::new(String::new()) };
}

/// JSON measurements from the latest successful [`analyze_js`] call.
#[wasm_bindgen(js_name = lastReport)]
pub fn last_report() -> String {
    LAST.with(|l| l.borrow().clone())
}

#[wasm_bindgen(js_name = expressions)]
pub fn expressions() -> Vec<String> {
    Expression::ALL.iter().map(|e| e.name().to_string()).collect()
}
