//! Gallery/probe pre-processing: Gaussian degradation of the gallery,
//! power-law contrast enhancement of the probes, and bicubic resizing to a
//! common working resolution.
//!
//! All operations work on floating-point intensities; quantization back to
//! 8-bit happens only when an image is exported (see [`io`]).

pub mod io;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-channel 2-D intensity image, nominal range [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix {
    pixels: Array2<f64>,
}

impl ImageMatrix {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        if pixels.nrows() == 0 || pixels.ncols() == 0 {
            return Err(Error::Input("image must be at least 1x1".into()));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("image has non-finite pixel values".into()));
        }
        Ok(ImageMatrix { pixels })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        ImageMatrix::new(Array2::from_elem((height, width), value))
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.pixels
    }

    /// Row-major flattening, used when an image becomes a raw feature vector.
    pub fn to_vector(&self) -> Vec<f64> {
        self.pixels.iter().copied().collect()
    }

    /// Pixel read with edge replication (indices clamped into range).
    fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height() as isize - 1) as usize;
        let c = col.clamp(0, self.width() as isize - 1) as usize;
        self.pixels[[r, c]]
    }
}

/// Pre-processing knobs carried by the dataset profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessParams {
    /// Gaussian blur std-dev (pixels) applied to gallery images.
    pub sigma: f64,
    /// Contrast exponent applied to probe images.
    pub gamma: f64,
    /// Common working resolution (height, width).
    pub target_size: (usize, usize),
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 {
            return Err(Error::Parameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Parameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.target_size.0 == 0 || self.target_size.1 == 0 {
            return Err(Error::Parameter("target size must be positive".into()));
        }
        Ok(())
    }
}

/// 1-D Gaussian taps truncated at radius ceil(3*sigma) and L1-normalized.
/// The separable product of two of these equals the normalized 2-D kernel
/// on the same square window, so constants stay invariant.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t as f64 * t as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}

/// Blur with a discretized, L1-normalized Gaussian; borders use edge
/// replication. Used to degrade gallery images toward probe quality.
pub fn gaussian_degrade(img: &ImageMatrix, sigma: f64) -> Result<ImageMatrix> {
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("sigma must be > 0, got {sigma}")));
    }
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as isize;
    let (h, w) = (img.height(), img.width());

    // vertical pass
    let mut tmp = Array2::<f64>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * img.get_clamped(i as isize + t as isize - radius, j as isize);
            }
            tmp[[i, j]] = acc;
        }
    }
    // horizontal pass
    let tmp_img = ImageMatrix { pixels: tmp };
    let mut out = Array2::<f64>::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * tmp_img.get_clamped(i as isize, j as isize + t as isize - radius);
            }
            out[[i, j]] = acc;
        }
    }
    ImageMatrix::new(out)
}

/// Power-law contrast mapping `out = 255 * (in/255)^(1/gamma)`.
///
/// gamma > 1 stretches dark probe intensities upward. Exponent 1 is an
/// exact identity (short-circuited so no rounding is introduced).
pub fn gamma_stretch(img: &ImageMatrix, gamma: f64) -> Result<ImageMatrix> {
    if gamma <= 0.0 {
        return Err(Error::Parameter(format!("gamma must be > 0, got {gamma}")));
    }
    if let Some(bad) = img.pixels.iter().find(|v| **v < 0.0 || **v > 255.0) {
        return Err(Error::Input(format!(
            "gamma_stretch expects pixels in [0,255], found {bad}"
        )));
    }
    if gamma == 1.0 {
        return Ok(img.clone());
    }
    let inv = 1.0 / gamma;
    let out = img.pixels.mapv(|v| 255.0 * (v / 255.0).powf(inv));
    ImageMatrix::new(out)
}

/// Keys cubic convolution kernel with a = -0.5.
fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic resampling to exactly `target` (height, width). Center-aligned
/// coordinate mapping, clamped borders, per-pixel weight renormalization so
/// constant images stay constant.
pub fn resize_bicubic(img: &ImageMatrix, target: (usize, usize)) -> Result<ImageMatrix> {
    let (th, tw) = target;
    if th == 0 || tw == 0 {
        return Err(Error::Parameter("target dimensions must be >= 1".into()));
    }
    let (h, w) = (img.height(), img.width());
    let scale_r = h as f64 / th as f64;
    let scale_c = w as f64 / tw as f64;

    let mut out = Array2::<f64>::zeros((th, tw));
    for oi in 0..th {
        let src_r = (oi as f64 + 0.5) * scale_r - 0.5;
        let base_r = src_r.floor() as isize;
        let fr = src_r - base_r as f64;
        let wr: [f64; 4] = [
            cubic_weight(fr + 1.0),
            cubic_weight(fr),
            cubic_weight(1.0 - fr),
            cubic_weight(2.0 - fr),
        ];
        for oj in 0..tw {
            let src_c = (oj as f64 + 0.5) * scale_c - 0.5;
            let base_c = src_c.floor() as isize;
            let fc = src_c - base_c as f64;
            let wc: [f64; 4] = [
                cubic_weight(fc + 1.0),
                cubic_weight(fc),
                cubic_weight(1.0 - fc),
                cubic_weight(2.0 - fc),
            ];
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (di, &wi) in wr.iter().enumerate() {
                for (dj, &wj) in wc.iter().enumerate() {
                    let weight = wi * wj;
                    acc += weight
                        * img.get_clamped(base_r + di as isize - 1, base_c + dj as isize - 1);
                    wsum += weight;
                }
            }
            out[[oi, oj]] = acc / wsum;
        }
    }
    ImageMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_keeps_constants() {
        let img = ImageMatrix::constant(12, 9, 100.0).unwrap();
        let out = gaussian_degrade(&img, 1.75).unwrap();
        for v in out.pixels().iter() {
            assert!((v - 100.0).abs() < 1e-6);
        }
    }

    #[test]
    fn blur_of_impulse_matches_direct_kernel_evaluation() {
        // Oracle: evaluate exp(-(x^2+y^2)/(2 sigma^2)) on the truncated
        // window and L1-normalize, independently of the separable path.
        let sigma = 1.0;
        let mut px = Array2::<f64>::zeros((9, 9));
        px[[4, 4]] = 1.0;
        let img = ImageMatrix::new(px).unwrap();
        let out = gaussian_degrade(&img, sigma).unwrap();

        let radius = (3.0 * sigma).ceil() as isize;
        let mut expected = Array2::<f64>::zeros((9, 9));
        let mut total = 0.0;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                total += (-(dy * dy + dx * dx) as f64 / (2.0 * sigma * sigma)).exp();
            }
        }
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let v = (-(dy * dy + dx * dx) as f64 / (2.0 * sigma * sigma)).exp() / total;
                expected[[(4 + dy) as usize, (4 + dx) as usize]] = v;
            }
        }
        for (a, b) in out.pixels().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "impulse response mismatch: {a} vs {b}");
        }
    }

    #[test]
    fn blur_rejects_bad_sigma() {
        let img = ImageMatrix::constant(4, 4, 1.0).unwrap();
        assert!(matches!(gaussian_degrade(&img, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(gaussian_degrade(&img, -2.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn blur_preserves_mean_with_constant_border() {
        let mut px = Array2::from_elem((15, 15), 60.0);
        for i in 5..10 {
            for j in 5..10 {
                px[[i, j]] = 200.0;
            }
        }
        let img = ImageMatrix::new(px).unwrap();
        let before: f64 = img.pixels().mean().unwrap();
        let out = gaussian_degrade(&img, 1.2).unwrap();
        let after: f64 = out.pixels().mean().unwrap();
        assert!((before - after).abs() / before < 1e-3);
    }

    #[test]
    fn gamma_one_is_bit_identical() {
        let px = Array2::from_shape_fn((5, 7), |(i, j)| (i * 7 + j) as f64 * 3.7 % 255.0);
        let img = ImageMatrix::new(px).unwrap();
        let out = gamma_stretch(&img, 1.0).unwrap();
        assert_eq!(img.pixels(), out.pixels());
    }

    #[test]
    fn gamma_fixes_endpoints_and_matches_scalar_oracle() {
        let img = ImageMatrix::new(ndarray::array![[0.0, 127.5, 255.0]]).unwrap();
        for gamma in [0.5, 1.25, 1.75, 3.0] {
            let out = gamma_stretch(&img, gamma).unwrap();
            assert_eq!(out.pixels()[[0, 0]], 0.0);
            assert_eq!(out.pixels()[[0, 2]], 255.0);
        }
        // 255 * 0.5^(1/1.75), evaluated independently
        let expected = 255.0 * 0.5_f64.powf(1.0 / 1.75);
        let out = gamma_stretch(&img, 1.75).unwrap();
        assert!((out.pixels()[[0, 1]] - expected).abs() < 1e-12);
    }

    #[test]
    fn gamma_rejects_out_of_range_pixels() {
        let img = ImageMatrix::new(ndarray::array![[-1.0, 2.0]]).unwrap();
        assert!(matches!(gamma_stretch(&img, 1.5), Err(Error::Input(_))));
        let img = ImageMatrix::new(ndarray::array![[10.0, 256.0]]).unwrap();
        assert!(matches!(gamma_stretch(&img, 1.5), Err(Error::Input(_))));
    }

    #[test]
    fn gamma_round_trip_recovers_input() {
        let px = Array2::from_shape_fn((4, 4), |(i, j)| 10.0 + (i * 4 + j) as f64 * 15.0);
        let img = ImageMatrix::new(px).unwrap();
        let g = 1.75;
        let there = gamma_stretch(&img, g).unwrap();
        let back = gamma_stretch(&there, 1.0 / g).unwrap();
        for (a, b) in back.pixels().iter().zip(img.pixels().iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resize_constant_and_identity() {
        let img = ImageMatrix::constant(10, 10, 42.5).unwrap();
        let up = resize_bicubic(&img, (40, 40)).unwrap();
        assert_eq!(up.height(), 40);
        assert_eq!(up.width(), 40);
        for v in up.pixels().iter() {
            assert!((v - 42.5).abs() < 1e-6);
        }

        let px = Array2::from_shape_fn((6, 5), |(i, j)| (i * 5 + j) as f64);
        let img = ImageMatrix::new(px).unwrap();
        let same = resize_bicubic(&img, (6, 5)).unwrap();
        for (a, b) in same.pixels().iter().zip(img.pixels().iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resize_checkerboard_matches_per_pixel_oracle() {
        // Oracle: direct kernel-weighted sum per output pixel, written
        // independently of the implementation loop.
        let img = ImageMatrix::new(ndarray::array![[0.0, 255.0], [255.0, 0.0]]).unwrap();
        let out = resize_bicubic(&img, (8, 8)).unwrap();

        let kernel = |t: f64| -> f64 {
            let a = -0.5;
            let t = t.abs();
            if t <= 1.0 {
                (a + 2.0) * t.powi(3) - (a + 3.0) * t.powi(2) + 1.0
            } else if t < 2.0 {
                a * t.powi(3) - 5.0 * a * t.powi(2) + 8.0 * a * t - 4.0 * a
            } else {
                0.0
            }
        };
        let sample = |r: isize, c: isize| -> f64 {
            let r = r.clamp(0, 1) as usize;
            let c = c.clamp(0, 1) as usize;
            img.pixels()[[r, c]]
        };
        for oi in 0..8usize {
            for oj in 0..8usize {
                let sr = (oi as f64 + 0.5) * 0.25 - 0.5;
                let sc = (oj as f64 + 0.5) * 0.25 - 0.5;
                let br = sr.floor();
                let bc = sc.floor();
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for di in -1..=2isize {
                    for dj in -1..=2isize {
                        let w = kernel(sr - (br + di as f64)) * kernel(sc - (bc + dj as f64));
                        acc += w * sample(br as isize + di, bc as isize + dj);
                        wsum += w;
                    }
                }
                let expected = acc / wsum;
                let got = out.pixels()[[oi, oj]];
                assert!((got - expected).abs() < 1e-9, "({oi},{oj}): {got} vs {expected}");
            }
        }
    }

    #[test]
    fn resize_rejects_zero_target() {
        let img = ImageMatrix::constant(4, 4, 1.0).unwrap();
        assert!(matches!(resize_bicubic(&img, (0, 4)), Err(Error::Parameter(_))));
    }

    #[test]
    fn operations_are_deterministic() {
        let px = Array2::from_shape_fn((9, 9), |(i, j)| ((i * 31 + j * 17) % 255) as f64);
        let img = ImageMatrix::new(px).unwrap();
        let a = gaussian_degrade(&img, 1.3).unwrap();
        let b = gaussian_degrade(&img, 1.3).unwrap();
        assert_eq!(a.pixels(), b.pixels());
        let a = gamma_stretch(&img, 1.4).unwrap();
        let b = gamma_stretch(&img, 1.4).unwrap();
        assert_eq!(a.pixels(), b.pixels());
        let a = resize_bicubic(&img, (5, 13)).unwrap();
        let b = resize_bicubic(&img, (5, 13)).unwrap();
        assert_eq!(a.pixels(), b.pixels());
    }
}
