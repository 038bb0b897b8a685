use super::{GrayImage, ImageError, Plane};

fn check_window(window: usize) -> Result<(), ImageError> {
    if window < 3 || window % 2 == 0 {
        return Err(ImageError::InvalidWindow(window));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<(), ImageError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ImageError::InvalidSigma(sigma));
    }
    Ok(())
}

/// Square-window median with edge replication.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage, ImageError> {
    check_window(window)?;
    let r = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| {
        buf.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                buf.push(img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable(mid).1
    }))
}

/// Running median over a vector, edge replication.
pub fn median_filter_1d(v: &[f64], window: usize) -> Result<Vec<f64>, ImageError> {
    check_window(window)?;
    let r = (window / 2) as isize;
    let n = v.len() as isize;
    let mut buf = Vec::with_capacity(window);
    Ok((0..n)
        .map(|i| {
            buf.clear();
            buf.extend((i - r..=i + r).map(|j| v[j.clamp(0, n - 1) as usize]));
            buf.sort_by(f64::total_cmp);
            buf[buf.len() / 2]
        })
        .collect())
}

/// Gaussian taps for offsets `-k..=k`, `k = ceil(3 sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>, ImageError> {
    check_sigma(sigma)?;
    let k = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-k..=k).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= z);
    Ok(taps)
}

fn convolve_replicate(v: &[f64], taps: &[f64]) -> Vec<f64> {
    let k = (taps.len() / 2) as isize;
    let n = v.len() as isize;
    (0..n)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(t, w)| w * v[(i + t as isize - k).clamp(0, n - 1) as usize])
                .sum()
        })
        .collect()
}

pub fn gaussian_smooth_1d(v: &[f64], sigma: f64) -> Result<Vec<f64>, ImageError> {
    let taps = gaussian_kernel(sigma)?;
    Ok(convolve_replicate(v, &taps))
}

/// Separable 2-D Gaussian blur with edge replication.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<Plane<f64>, ImageError> {
    let taps = gaussian_kernel(sigma)?;
    let (w, h) = (img.width(), img.height());
    let mut rows = Vec::with_capacity(w * h);
    let mut line = vec![0.0; w];
    for y in 0..h {
        for (x, l) in line.iter_mut().enumerate() {
            *l = img.get(x, y) as f64;
        }
        rows.extend(convolve_replicate(&line, &taps));
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    for x in 0..w {
        for (y, c) in col.iter_mut().enumerate() {
            *c = rows[y * w + x];
        }
        for (y, v) in convolve_replicate(&col, &taps).into_iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    Plane::from_vec(w, h, out)
}

/// Otsu's threshold: values `<= t` form the low class. Returns `None` for
/// fewer than two distinct values.
pub fn otsu_threshold(values: &[u32]) -> Option<u32> {
    let max = *values.iter().max()?;
    let mut hist = vec![0u64; max as usize + 1];
    for &v in values {
        hist[v as usize] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best: Option<(f64, u32)> = None;
    for (t, &c) in hist.iter().enumerate().take(max as usize) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if c == 0 || w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.map_or(true, |(b, _)| between > b) {
            best = Some((between, t as u32));
        }
    }
    best.map(|(_, t)| t)
}
