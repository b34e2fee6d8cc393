//! Binary PPM (P6, 8-bit) images.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rasterizer::Image;

/// Encodes an image as a P6 PPM byte buffer; components are rounded to
/// the nearest of 256 levels.
pub fn encode(image: &Image) -> Vec<u8> {
    let (w, h) = (image.width(), image.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for px in image.pixels() {
        for ch in 0..3 {
            out.push((px[ch] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// Decodes a P6 PPM byte buffer.
pub fn decode(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0usize;
    let mut next_token = || -> Result<String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("ppm: truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if next_token()? != "P6" {
        return Err(Error::Format("ppm: not a P6 file".into()));
    }
    let parse = |tok: String| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::Format(format!("ppm: bad header field {tok}")))
    };
    let w = parse(next_token()?)?;
    let h = parse(next_token()?)?;
    let maxval = parse(next_token()?)?;
    if maxval != 255 {
        return Err(Error::Format(format!("ppm: unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = w * h * 3;
    if bytes.len() < pos + need {
        return Err(Error::Format(format!(
            "ppm: raster truncated, need {need} bytes"
        )));
    }
    let raster = &bytes[pos..pos + need];
    let pixels = raster
        .chunks_exact(3)
        .map(|c| {
            [
                c[0] as f64 / 255.0,
                c[1] as f64 / 255.0,
                c[2] as f64 / 255.0,
            ]
        })
        .collect();
    Image::from_pixels(w, h, pixels)
}

pub fn save(image: &Image, path: &Path) -> Result<()> {
    super::write_atomic(path, &encode(image))
}

pub fn load(path: &Path) -> Result<Image> {
    decode(&fs::read(path)?)
}
