use super::{GrayImage, ImageError, RasterImage};

/// BT.601 luma: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_grayscale(img: &RasterImage) -> Result<GrayImage, ImageError> {
    img.require_rgb()?;
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| luma(img.rgb(x, y))))
}

#[inline]
pub(crate) fn luma([r, g, b]: [u8; 3]) -> u8 {
    // integer form of the weighted sum, rounded half up
    let v = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((v + 500) / 1000).min(255) as u8
}
