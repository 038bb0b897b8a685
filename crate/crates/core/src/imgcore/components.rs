use super::{BinaryMask, Rect, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)],
        }
    }
}

/// Labels the connected regions of `mask`, largest first. Regions of equal
/// area keep raster-scan discovery order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Region> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !mask.get(x0, y0) || seen[y0 * w + x0] {
                continue;
            }
            seen[y0 * w + x0] = true;
            queue.push_back((x0, y0));
            let mut pixels = Vec::new();
            while let Some((x, y)) = queue.pop_front() {
                pixels.push((x, y));
                for &(dx, dy) in connectivity.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if mask.get(nx, ny) && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
            pixels.sort_by_key(|&(x, y)| (y, x));
            regions.push(region_from_pixels(regions.len(), pixels));
        }
    }
    regions.sort_by(|a, b| b.area.cmp(&a.area).then(a.label.cmp(&b.label)));
    regions
}

fn region_from_pixels(label: usize, pixels: Vec<(usize, usize)>) -> Region {
    let n = pixels.len();
    let (mut sx, mut sy) = (0u64, 0u64);
    let (mut x1, mut y1, mut x2, mut y2) = (usize::MAX, usize::MAX, 0, 0);
    for &(x, y) in &pixels {
        sx += x as u64;
        sy += y as u64;
        x1 = x1.min(x);
        y1 = y1.min(y);
        x2 = x2.max(x);
        y2 = y2.max(y);
    }
    Region {
        label,
        area: n,
        centroid: (sx as f64 / n as f64, sy as f64 / n as f64),
        bbox: Rect::new(x1, y1, x2, y2),
        pixels,
    }
}
