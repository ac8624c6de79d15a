//! Weberface descriptor: per-pixel differential excitation
//! W = arctan(alpha * sum over the 8-neighborhood of (Ic - Ii) / (Ic + eps)),
//! flattened row-major. Borders use edge replication.

use crate::error::{Error, Result};
use crate::preprocess::ImageMatrix;

pub const WEBER_ALPHA: f64 = 4.0;
pub const WEBER_EPS: f64 = 0.01;

const OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

pub fn weberface(img: &ImageMatrix) -> Result<Vec<f64>> {
    if img.pixels().iter().any(|&v| v < 0.0) {
        return Err(Error::Input("weberface expects nonnegative intensities".into()));
    }
    let (h, w) = (img.height(), img.width());
    let px = img.pixels();
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h as isize {
        for j in 0..w as isize {
            let center = px[[i as usize, j as usize]];
            let mut excitation = 0.0;
            for (dr, dc) in OFFSETS {
                let r = (i + dr).clamp(0, h as isize - 1) as usize;
                let c = (j + dc).clamp(0, w as isize - 1) as usize;
                excitation += (center - px[[r, c]]) / (center + WEBER_EPS);
            }
            out.push((WEBER_ALPHA * excitation).atan());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn constant_image_is_all_zero() {
        let img = ImageMatrix::constant(5, 6, 77.0).unwrap();
        let v = weberface(&img).unwrap();
        assert_eq!(v.len(), 30);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn outputs_stay_in_the_arctan_range() {
        let px = Array2::from_shape_fn((9, 9), |(i, j)| ((i * 91 + j * 57) % 256) as f64);
        let img = ImageMatrix::new(px).unwrap();
        for &x in weberface(&img).unwrap().iter() {
            assert!(x > -std::f64::consts::FRAC_PI_2 && x < std::f64::consts::FRAC_PI_2);
        }
    }

    #[test]
    fn bright_pixel_center_matches_scalar_oracle() {
        let mut px = Array2::zeros((5, 5));
        px[[2, 2]] = 200.0;
        let img = ImageMatrix::new(px).unwrap();
        let v = weberface(&img).unwrap();
        // center: 8 dark neighbors, each term (200 - 0)/(200 + 0.01)
        let expected = (4.0 * 8.0 * 200.0 / 200.01_f64).atan();
        assert!((v[2 * 5 + 2] - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_pixels_are_rejected() {
        let img = ImageMatrix::new(ndarray::array![[1.0, -0.5]]).unwrap();
        assert!(weberface(&img).is_err());
    }
}
