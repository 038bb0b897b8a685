//! Pixel-level primitives shared by every stage of the pipeline.
//!
//! Images are stored row-major. Three plane flavours are used throughout:
//! [`GrayImage`] for 8-bit intensities, [`EdgeMap`] for non-negative edge
//! magnitudes and [`BinaryMask`] for feature and skin masks.

mod color;
mod components;
mod draw;
mod edge;
mod filter;
mod hough;
mod morph;
mod pnm;
mod projection;

pub use color::to_grayscale;
pub use components::{connected_components, Connectivity};
pub use draw::{draw_circle, draw_rect};
pub use edge::{log_zero_contours, sobel_edges, SobelOrientation};
pub use filter::{
    gaussian_blur, gaussian_kernel, gaussian_smooth_1d, median_filter, median_filter_1d,
    otsu_threshold,
};
pub use hough::{circle_stencil, hough_circles, HoughParams};
pub use morph::{fill_contours, morph, MorphOp, StructuringElement};
pub use pnm::{load_pnm, read_pnm, save_pnm, write_pnm, PnmImage};
pub use projection::{integral_projections, Projections};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("expected {expected} channel(s), got {actual}")]
    InvalidChannelCount { expected: usize, actual: usize },
    #[error("window size {0} must be odd and at least 3")]
    InvalidWindow(usize),
    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("rectangle {0:?} does not fit inside a {1}x{2} image")]
    InvalidRect(Rect, usize, usize),
    #[error("invalid radius range {0}..={1}")]
    InvalidRadiusRange(usize, usize),
    #[error("invalid image dimensions {width}x{height} for {len} samples")]
    InvalidDimensions { width: usize, height: usize, len: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("malformed image file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A single-channel row-major grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit intensity image.
pub type GrayImage = Plane<u8>;
/// Non-negative edge strengths. Wider than 8 bits so Sobel responses are not clamped.
pub type EdgeMap = Plane<u32>;
/// One boolean per pixel.
pub type BinaryMask = Plane<bool>;

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        assert!(width >= 1 && height >= 1, "plane dimensions must be at least 1x1");
        Plane { width, height, data: vec![fill; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::InvalidDimensions { width, height, len: data.len() });
        }
        Ok(Plane { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width >= 1 && height >= 1, "plane dimensions must be at least 1x1");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Reads with coordinates clamped into the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.get(cx, cy)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width - 1, self.height - 1)
    }

    pub fn same_size<U>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Plane<U> {
        Plane { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Copies the pixels inside `rect` into a new plane.
    pub fn crop(&self, rect: Rect) -> Result<Self, ImageError> {
        if !rect.fits(self.width, self.height) {
            return Err(ImageError::InvalidRect(rect, self.width, self.height));
        }
        Ok(Plane::from_fn(rect.width(), rect.height(), |x, y| self.get(rect.x1 + x, rect.y1 + y)))
    }

    /// Mirror image about the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        Plane::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        self.map(|b| !b)
    }

    /// Mean `(x, y)` of the set pixels, in pixel-index coordinates.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as u64;
                    sy += y as u64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx as f64 / n as f64, sy as f64 / n as f64))
    }

    /// Tight bounding box of the set pixels.
    pub fn bbox(&self) -> Option<Rect> {
        let mut r: Option<Rect> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    r = Some(match r {
                        None => Rect::new(x, y, x, y),
                        Some(b) => Rect::new(b.x1.min(x), b.y1.min(y), b.x2.max(x), b.y2.max(y)),
                    });
                }
            }
        }
        r
    }
}

/// Inclusive pixel rectangle `[x1, x2] x [y1, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x1: usize,
    pub y1: usize,
    pub x2: usize,
    pub y2: usize,
}

impl Rect {
    pub fn new(x1: usize, y1: usize, x2: usize, y2: usize) -> Self {
        assert!(x1 <= x2 && y1 <= y2, "degenerate rect ({x1},{y1})-({x2},{y2})");
        Rect { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> usize {
        self.x2 - self.x1 + 1
    }

    pub fn height(&self) -> usize {
        self.y2 - self.y1 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x2 < width && self.y2 < height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x1 as f64 && x <= self.x2 as f64 && y >= self.y1 as f64 && y <= self.y2 as f64
    }

    /// Grows the rect by `margin` on every side, clipped to a `width x height` image.
    pub fn expand(&self, margin: usize, width: usize, height: usize) -> Rect {
        Rect::new(
            self.x1.saturating_sub(margin),
            self.y1.saturating_sub(margin),
            (self.x2 + margin).min(width - 1),
            (self.y2 + margin).min(height - 1),
        )
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        (x1 <= x2 && y1 <= y2).then(|| Rect::new(x1, y1, x2, y2))
    }

    /// Intersection over union of the pixel sets.
    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    /// Square circumscribing a circle, clipped to the image.
    pub fn around_circle(cx: f64, cy: f64, r: f64, width: usize, height: usize) -> Rect {
        let clip = |v: f64, hi: usize| v.round().clamp(0.0, (hi - 1) as f64) as usize;
        Rect::new(clip(cx - r, width), clip(cy - r, height), clip(cx + r, width), clip(cy + r, height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    /// Accumulator votes.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: usize,
    pub area: usize,
    pub centroid: (f64, f64),
    pub bbox: Rect,
    /// Pixel coordinates belonging to the region, row-major order.
    pub pixels: Vec<(usize, usize)>,
}

impl Region {
    pub fn to_mask(&self, width: usize, height: usize) -> BinaryMask {
        let mut m = BinaryMask::new(width, height, false);
        for &(x, y) in &self.pixels {
            m.set(x, y, true);
        }
        m
    }
}

/// Interleaved 8-bit image with one or three channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::InvalidChannelCount { expected: 3, actual: channels });
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(ImageError::InvalidDimensions { width, height, len: data.len() });
        }
        Ok(RasterImage { width, height, channels, data })
    }

    pub fn filled_rgb(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width >= 1 && height >= 1);
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        RasterImage { width, height, channels: 3, data }
    }

    pub fn from_gray(gray: &GrayImage) -> Self {
        RasterImage { width: gray.width(), height: gray.height(), channels: 1, data: gray.data().to_vec() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            [self.data[i], self.data[i + 1], self.data[i + 2]]
        } else {
            [self.data[i]; 3]
        }
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * self.channels;
        if self.channels == 3 {
            self.data[i..i + 3].copy_from_slice(&rgb);
        } else {
            self.data[i] = rgb[0];
        }
    }

    pub fn require_rgb(&self) -> Result<(), ImageError> {
        if self.channels == 3 {
            Ok(())
        } else {
            Err(ImageError::InvalidChannelCount { expected: 3, actual: self.channels })
        }
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set_rgb(x, y, self.rgb(self.width - 1 - x, y));
            }
        }
        out
    }

    /// Nearest-neighbour upscale by an integer factor.
    pub fn upscale(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        let (w, h) = (self.width * factor, self.height * factor);
        let mut out = RasterImage { width: w, height: h, channels: self.channels, data: vec![0; w * h * self.channels] };
        for y in 0..h {
            for x in 0..w {
                out.set_rgb(x, y, self.rgb(x / factor, y / factor));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_iou() {
        let a = Rect::new(0, 0, 9, 9);
        assert_eq!(a.iou(&a), 1.0);
        let b = Rect::new(5, 0, 14, 9);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&Rect::new(20, 20, 21, 21)), 0.0);
    }

    #[test]
    fn raster_rejects_bad_lengths() {
        assert!(RasterImage::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 4]).is_ok());
    }

    #[test]
    fn crop_out_of_bounds() {
        let p = GrayImage::new(4, 4, 0);
        assert!(matches!(p.crop(Rect::new(0, 0, 4, 3)), Err(ImageError::InvalidRect(..))));
    }

    #[test]
    fn mask_centroid_and_bbox() {
        let mut m = BinaryMask::new(5, 5, false);
        m.set(1, 1, true);
        m.set(3, 1, true);
        assert_eq!(m.centroid(), Some((2.0, 1.0)));
        assert_eq!(m.bbox(), Some(Rect::new(1, 1, 3, 1)));
        assert_eq!(BinaryMask::new(2, 2, false).centroid(), None);
    }
}
