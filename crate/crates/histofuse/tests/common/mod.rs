//! Shared helpers for the integration and acceptance suites.

use histofuse::radiomics::{compute_mask, gray_from_rgb, ForegroundMask, GrayscaleTile};
use image::RgbImage;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Deterministic tile set used by the radiomics oracle fixture: sinusoidal
/// color fields plus per-pixel noise, sized 24..64, masks from the Otsu
/// pipeline. Any change here invalidates tests/data/radiomics_oracle.json.
pub fn oracle_tiles(n: usize) -> Vec<(GrayscaleTile, ForegroundMask)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha12Rng::seed_from_u64(0xfeed_0000 + i as u64);
        let side = 24 + (rng.random_range(0..6) * 8) as u32;
        let base: [f64; 3] = [
            rng.random_range(80.0..200.0),
            rng.random_range(80.0..200.0),
            rng.random_range(80.0..200.0),
        ];
        let amp: f64 = rng.random_range(30.0..90.0);
        let fx: f64 = rng.random_range(0.02..0.2);
        let fy: f64 = rng.random_range(0.02..0.2);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let noise_amp: f64 = rng.random_range(5.0..30.0);
        let mut img = RgbImage::new(side, side);
        for y in 0..side {
            for x in 0..side {
                let field =
                    amp * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64) + phase).sin();
                let mut px = [0u8; 3];
                for c in 0..3 {
                    let noise: f64 = rng.random_range(-noise_amp..noise_amp);
                    px[c] = (base[c] + field + noise).round().clamp(0.0, 255.0) as u8;
                }
                img.put_pixel(x, y, image::Rgb(px));
            }
        }
        let gray = gray_from_rgb(&img);
        let mask = compute_mask(&gray);
        out.push((gray, mask));
    }
    out
}
