//! 8-bit grayscale PNG/PGM import and export. Color inputs collapse to
//! luma with ITU-R BT.601 weights. Quantization to [0,255] happens here and
//! nowhere else.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::preprocess::ImageMatrix;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Load a PNG or PGM file as a grayscale intensity matrix.
pub fn load_image(path: &Path) -> Result<ImageMatrix> {
    let img = image::open(path)
        .map_err(|e| Error::Input(format!("cannot read image {}: {e}", path.display())))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Input(format!("empty image {}", path.display())));
    }
    let mut px = Array2::<f64>::zeros((h, w));
    match img {
        DynamicImage::ImageLuma8(buf) => {
            for (x, y, p) in buf.enumerate_pixels() {
                px[[y as usize, x as usize]] = p.0[0] as f64;
            }
        }
        other => {
            let rgb = other.to_rgb8();
            for (x, y, p) in rgb.enumerate_pixels() {
                let [r, g, b] = p.0;
                px[[y as usize, x as usize]] =
                    LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64;
            }
        }
    }
    ImageMatrix::new(px)
}

/// Write as 8-bit grayscale; the format follows the file extension
/// (`.png` or `.pgm`). Values are rounded to nearest and clamped.
pub fn save_image(img: &ImageMatrix, path: &Path) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let mut buf = ImageBuffer::<Luma<u8>, Vec<u8>>::new(w as u32, h as u32);
    for i in 0..h {
        for j in 0..w {
            let q = img.pixels()[[i, j]].round().clamp(0.0, 255.0) as u8;
            buf.put_pixel(j as u32, i as u32, Luma([q]));
        }
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => buf.save_with_format(path, image::ImageFormat::Png)?,
        Some("pgm") => buf.save_with_format(path, image::ImageFormat::Pnm)?,
        other => {
            return Err(Error::Parameter(format!(
                "unsupported image extension {other:?} (use .png or .pgm)"
            )))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_on_integral_pixels() {
        let dir = std::env::temp_dir().join("facemkl_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let px = Array2::from_shape_fn((7, 5), |(i, j)| ((i * 40 + j * 11) % 256) as f64);
        let img = ImageMatrix::new(px).unwrap();
        let path = dir.join("roundtrip.png");
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(img.pixels(), back.pixels());

        let pgm = dir.join("roundtrip.pgm");
        save_image(&img, &pgm).unwrap();
        let back = load_image(&pgm).unwrap();
        assert_eq!(img.pixels(), back.pixels());
    }

    #[test]
    fn export_quantizes_and_clamps() {
        let dir = std::env::temp_dir().join("facemkl_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let img = ImageMatrix::new(ndarray::array![[10.4, 10.6, 300.0]]).unwrap();
        let path = dir.join("quantize.png");
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.pixels()[[0, 0]], 10.0);
        assert_eq!(back.pixels()[[0, 1]], 11.0);
        assert_eq!(back.pixels()[[0, 2]], 255.0);
    }
}
