//! Binary portable anymap I/O: P5 (graymap) and P6 (pixmap), maxval 255.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{GrayImage, ImageError, RasterImage};

/// Decoded anymap. P5 files decode to one channel, P6 to three.
pub type PnmImage = RasterImage;

fn next_token(r: &mut impl BufRead) -> Result<String, ImageError> {
    let mut tok = String::new();
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte).map_err(|e| ImageError::Io(e.to_string()))? == 0 {
            if tok.is_empty() {
                return Err(ImageError::Format("unexpected end of header".into()));
            }
            return Ok(tok);
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            r.read_until(b'\n', &mut line).map_err(|e| ImageError::Io(e.to_string()))?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c as char);
    }
}

fn header_number(r: &mut impl BufRead, what: &str) -> Result<usize, ImageError> {
    let t = next_token(r)?;
    t.parse().map_err(|_| ImageError::Format(format!("bad {what}: {t:?}")))
}

pub fn read_pnm(reader: impl Read) -> Result<PnmImage, ImageError> {
    let mut r = BufReader::new(reader);
    let magic = next_token(&mut r)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(ImageError::Format(format!("unsupported magic {other:?}"))),
    };
    let width = header_number(&mut r, "width")?;
    let height = header_number(&mut r, "height")?;
    let maxval = header_number(&mut r, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(ImageError::Format(format!("unsupported maxval {maxval}")));
    }
    let mut data = vec![0u8; width * height * channels];
    r.read_exact(&mut data).map_err(|_| ImageError::Format("truncated pixel data".into()))?;
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as u32 * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8;
        }
    }
    RasterImage::new(width, height, channels, data)
}

pub fn write_pnm(mut w: impl Write, img: &RasterImage) -> Result<(), ImageError> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let io = |e: std::io::Error| ImageError::Io(e.to_string());
    write!(w, "{magic}\n{} {}\n255\n", img.width(), img.height()).map_err(io)?;
    w.write_all(img.data()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_pnm(path: impl AsRef<Path>) -> Result<PnmImage, ImageError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| ImageError::Io(format!("{}: {e}", path.display())))?;
    read_pnm(f)
}

pub fn save_pnm(path: impl AsRef<Path>, img: &RasterImage) -> Result<(), ImageError> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| ImageError::Io(format!("{}: {e}", path.display())))?;
    write_pnm(std::io::BufWriter::new(f), img)
}

impl GrayImage {
    pub fn to_raster(&self) -> RasterImage {
        RasterImage::from_gray(self)
    }
}
