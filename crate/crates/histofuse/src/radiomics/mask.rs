//! Grayscale reduction and Otsu foreground masking.

use super::{ForegroundMask, GrayscaleTile};
use crate::error::{Error, Result};
use image::RgbImage;
use ndarray::Array2;

/// Rec. 601 luminance weights.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Collapses interleaved channel data to a grayscale tile.
/// `pixels` is row-major with `channels` samples per pixel.
pub fn to_grayscale(
    pixels: &[u8],
    width: usize,
    height: usize,
    channels: usize,
) -> Result<GrayscaleTile> {
    if channels != 3 {
        return Err(Error::InvalidInput(format!(
            "expected 3-channel input, got {channels}"
        )));
    }
    if pixels.len() != width * height * 3 {
        return Err(Error::InvalidInput(format!(
            "pixel buffer length {} does not match {width}x{height}x3",
            pixels.len()
        )));
    }
    let mut gray = Array2::zeros((height, width));
    for y in 0..height {
        for x in 0..width {
            let base = (y * width + x) * 3;
            gray[[y, x]] = LUMA[0] * pixels[base] as f64
                + LUMA[1] * pixels[base + 1] as f64
                + LUMA[2] * pixels[base + 2] as f64;
        }
    }
    GrayscaleTile::new(gray)
}

pub fn gray_from_rgb(img: &RgbImage) -> GrayscaleTile {
    to_grayscale(img.as_raw(), img.width() as usize, img.height() as usize, 3)
        .expect("RgbImage is always 3-channel")
}

/// Otsu cut on a 256-bin histogram of `[0, 255]` intensities. Returns the
/// highest intensity bin assigned to the darker class; all candidate cuts
/// are scanned and the first maximizer of the between-class variance wins.
pub fn otsu_cut(gray: &GrayscaleTile) -> u8 {
    let mut hist = [0u64; 256];
    for &v in gray.pixels.iter() {
        let bin = (v.floor() as i64).clamp(0, 255) as usize;
        hist[bin] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_f = total as f64;
    let global_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();

    let mut best_t = 0usize;
    let mut best_var = -1.0f64;
    let mut w0 = 0.0f64;
    let mut sum0 = 0.0f64;
    for t in 0..256 {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total_f - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (global_sum - sum0) / w1;
        let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    best_t as u8
}

/// Foreground fraction below which the Otsu mask is abandoned for the
/// all-true mask.
pub const MIN_FOREGROUND_FRACTION: f64 = 0.01;

/// Tissue is darker than background in H&E tiles, so the mask keeps pixels
/// at or below the Otsu cut. Degenerate masks (< 1% coverage, e.g. constant
/// tiles) fall back to all-true so downstream features stay defined.
pub fn compute_mask(gray: &GrayscaleTile) -> ForegroundMask {
    let cut = otsu_cut(gray) as f64;
    let mask = gray.pixels.mapv(|v| v <= cut);
    let n_fg = mask.iter().filter(|&&b| b).count();
    let frac = n_fg as f64 / mask.len() as f64;
    if frac < MIN_FOREGROUND_FRACTION {
        ForegroundMask {
            mask: Array2::from_elem(gray.pixels.raw_dim(), true),
        }
    } else {
        ForegroundMask { mask }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tile_of(values: Array2<f64>) -> GrayscaleTile {
        GrayscaleTile::new(values).unwrap()
    }

    #[test]
    fn grayscale_channel_equal_case() {
        let px = vec![255u8; 4 * 4 * 3];
        let g = to_grayscale(&px, 4, 4, 3).unwrap();
        for &v in g.pixels.iter() {
            assert!((v - 255.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grayscale_pure_channels() {
        let mut red = Vec::new();
        let mut green = Vec::new();
        for _ in 0..4 {
            red.extend_from_slice(&[255, 0, 0]);
            green.extend_from_slice(&[0, 255, 0]);
        }
        let gr = to_grayscale(&red, 2, 2, 3).unwrap();
        let gg = to_grayscale(&green, 2, 2, 3).unwrap();
        for &v in gr.pixels.iter() {
            assert!((v - 76.245).abs() < 1e-9, "red luminance {v}");
        }
        for &v in gg.pixels.iter() {
            assert!((v - 149.685).abs() < 1e-9, "green luminance {v}");
        }
    }

    #[test]
    fn grayscale_rejects_wrong_channel_count() {
        let px = vec![0u8; 4 * 4 * 4];
        assert!(matches!(
            to_grayscale(&px, 4, 4, 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn constant_image_falls_back_to_full_mask() {
        let g = tile_of(Array2::from_elem((8, 8), 128.0));
        let m = compute_mask(&g);
        assert!(m.mask.iter().all(|&b| b));
    }

    #[test]
    fn bimodal_image_masks_dark_half() {
        let mut v = Array2::zeros((4, 8));
        for y in 0..4 {
            for x in 4..8 {
                v[[y, x]] = 255.0;
            }
        }
        let m = compute_mask(&tile_of(v));
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(m.mask[[y, x]], x < 4, "at ({y},{x})");
            }
        }
    }

    #[test]
    fn mask_is_never_below_coverage_floor() {
        // one dark pixel in a large bright tile: below 1% -> fallback
        let mut v = Array2::from_elem((32, 32), 250.0);
        v[[0, 0]] = 0.0;
        let m = compute_mask(&tile_of(v));
        let n_fg = m.mask.iter().filter(|&&b| b).count();
        assert!(n_fg as f64 / 1024.0 >= MIN_FOREGROUND_FRACTION);
    }
}
