//! Uniform LBP(8,1) grid histograms.
//!
//! Each interior pixel is coded against its 8-neighborhood (neighbor >=
//! center sets the bit), codes are bucketed into the 58 uniform patterns
//! plus one catch-all bin, and per-cell histograms are L1-normalized and
//! concatenated row-major.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::preprocess::ImageMatrix;

pub const LBP_BINS: usize = 59;

/// Neighbor offsets, clockwise from the top-left corner. Bit i of the
/// pattern corresponds to offset i.
const OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

fn is_uniform(pattern: u8) -> bool {
    let transitions = (0..8)
        .filter(|&i| {
            let a = (pattern >> i) & 1;
            let b = (pattern >> ((i + 1) % 8)) & 1;
            a != b
        })
        .count();
    transitions <= 2
}

/// Pattern byte -> histogram bin. Uniform patterns map to bins 0..=57 in
/// ascending numeric order; everything else lands in bin 58.
fn bin_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [58u8; 256];
        let mut next = 0u8;
        for p in 0..=255u8 {
            if is_uniform(p) {
                table[p as usize] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, 58);
        table
    })
}

/// LBP code of an interior pixel.
pub fn lbp_code(img: &ImageMatrix, row: usize, col: usize) -> u8 {
    let center = img.pixels()[[row, col]];
    let mut pattern = 0u8;
    for (bit, (dr, dc)) in OFFSETS.iter().enumerate() {
        let v = img.pixels()[[(row as isize + dr) as usize, (col as isize + dc) as usize]];
        if v >= center {
            pattern |= 1 << bit;
        }
    }
    pattern
}

/// Uniform-LBP descriptor over a rows x cols grid of cells; the output
/// length is 59 * rows * cols.
pub fn lbp_histogram(img: &ImageMatrix, grid: (usize, usize)) -> Result<Vec<f64>> {
    let (rows, cols) = grid;
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("lbp grid must be at least 1x1".into()));
    }
    let (h, w) = (img.height(), img.width());
    if h / rows < 3 || w / cols < 3 {
        return Err(Error::Parameter(format!(
            "lbp cells too small: {h}x{w} image with {rows}x{cols} grid needs >= 3x3 per cell"
        )));
    }

    let table = bin_table();
    let mut hist = vec![0.0f64; LBP_BINS * rows * cols];
    let mut counts = vec![0usize; rows * cols];
    for i in 1..h - 1 {
        let cell_r = (i * rows) / h;
        for j in 1..w - 1 {
            let cell_c = (j * cols) / w;
            let cell = cell_r * cols + cell_c;
            let bin = table[lbp_code(img, i, j) as usize] as usize;
            hist[cell * LBP_BINS + bin] += 1.0;
            counts[cell] += 1;
        }
    }
    for (cell, &count) in counts.iter().enumerate() {
        if count > 0 {
            for bin in 0..LBP_BINS {
                hist[cell * LBP_BINS + bin] /= count as f64;
            }
        }
    }
    Ok(hist)
}
