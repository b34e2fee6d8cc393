pub mod flow;
pub mod loss;
pub mod rcn_check;
pub mod render;
pub mod sample_stats;
pub mod warp;

use std::path::Path;

use anyhow::{bail, Context, Result};
use faceflow::rasterizer::Image;

/// Saves an image as PPM or PNG depending on the path extension.
pub fn save_image(image: &Image, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => faceflow::io::ppm::save(image, path)
            .with_context(|| format!("writing {}", path.display())),
        Some("png") => {
            let (w, h) = (image.width() as u32, image.height() as u32);
            let mut buf = image::RgbImage::new(w, h);
            for (row, col, px) in buf
                .enumerate_pixels_mut()
                .map(|(x, y, p)| (y as usize, x as usize, p))
            {
                let src = image.pixel(row, col);
                *px = image::Rgb([
                    (src[0] * 255.0).round().clamp(0.0, 255.0) as u8,
                    (src[1] * 255.0).round().clamp(0.0, 255.0) as u8,
                    (src[2] * 255.0).round().clamp(0.0, 255.0) as u8,
                ]);
            }
            let mut bytes = Vec::new();
            buf.write_to(
                &mut std::io::Cursor::new(&mut bytes),
                image::ImageFormat::Png,
            )
            .context("encoding png")?;
            faceflow::io::write_atomic(path, &bytes)
                .with_context(|| format!("writing {}", path.display()))
        }
        other => bail!("unsupported image extension {other:?} (use .ppm or .png)"),
    }
}

/// Loads a PPM or PNG image by extension.
pub fn load_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => faceflow::io::ppm::load(path)
            .with_context(|| format!("reading {}", path.display())),
        Some("png") => {
            let dynamic = image::open(path).with_context(|| format!("reading {}", path.display()))?;
            let rgb = dynamic.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let mut pixels = vec![[0.0; 3]; w * h];
            for (x, y, px) in rgb.enumerate_pixels() {
                pixels[y as usize * w + x as usize] = [
                    px[0] as f64 / 255.0,
                    px[1] as f64 / 255.0,
                    px[2] as f64 / 255.0,
                ];
            }
            Image::from_pixels(w, h, pixels).map_err(|e| anyhow::anyhow!("{e}"))
        }
        other => bail!("unsupported image extension {other:?} (use .ppm or .png)"),
    }
}
