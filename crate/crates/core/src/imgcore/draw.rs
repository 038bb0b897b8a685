use super::{Circle, RasterImage, Rect};

/// 1-px circle outline; off-image points are skipped.
pub fn draw_circle(img: &mut RasterImage, c: &Circle, rgb: [u8; 3]) {
    let steps = ((2.0 * std::f64::consts::PI * c.r * 4.0).ceil() as usize).max(8);
    for i in 0..steps {
        let t = i as f64 / steps as f64 * std::f64::consts::TAU;
        let x = (c.cx + c.r * t.cos()).round();
        let y = (c.cy + c.r * t.sin()).round();
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set_rgb(x as usize, y as usize, rgb);
        }
    }
}

/// 1-px rectangle outline, clipped to the image.
pub fn draw_rect(img: &mut RasterImage, r: &Rect, rgb: [u8; 3]) {
    let x2 = r.x2.min(img.width() - 1);
    let y2 = r.y2.min(img.height() - 1);
    if r.x1 > x2 || r.y1 > y2 {
        return;
    }
    for x in r.x1..=x2 {
        img.set_rgb(x, r.y1, rgb);
        img.set_rgb(x, y2, rgb);
    }
    for y in r.y1..=y2 {
        img.set_rgb(r.x1, y, rgb);
        img.set_rgb(x2, y, rgb);
    }
}
