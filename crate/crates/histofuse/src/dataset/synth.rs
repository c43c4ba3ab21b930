//! Procedural desk-scale dataset: three visually distinct tissue-like tile
//! classes with per-patient appearance jitter, written in the same layout
//! [`super::ingest`] reads.

use crate::error::{Error, Result};
use crate::imaging;
use image::{Rgb, RgbImage};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_patients: usize,
    pub tiles_per_patient: usize,
    pub seed: u64,
    pub tile_size: u32,
    /// Tile-level class probabilities; the first three tiles of each patient
    /// are forced to classes 0, 1, 2 so every patient holds every class.
    pub class_probs: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_patients: 10,
            tiles_per_patient: 30,
            seed: 0,
            tile_size: 64,
            class_probs: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    pub config: SynthConfig,
    pub n_tiles: usize,
    pub class_counts: [usize; 3],
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn tile_rng(seed: u64, patient: u64, tile: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(
        splitmix(splitmix(seed ^ 0x5137_77f5) ^ patient).wrapping_add(splitmix(tile)),
    )
}

/// Per-patient appearance parameters drawn once from the patient stream.
struct PatientStyle {
    base: [f64; 3],
    blob_scale: f64,
    dot_density: f64,
}

fn patient_style(seed: u64, patient: u64) -> PatientStyle {
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix(seed ^ 0xa5a5_1234) ^ patient);
    let jitter = |rng: &mut ChaCha12Rng| rng.random_range(-18.0..18.0);
    PatientStyle {
        base: [
            225.0 + jitter(&mut rng),
            192.0 + jitter(&mut rng),
            214.0 + jitter(&mut rng),
        ],
        blob_scale: rng.random_range(0.8..1.3),
        dot_density: rng.random_range(0.8..1.3),
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Smooth low-frequency color field (non-tumor look).
fn render_smooth(size: u32, style: &PatientStyle, rng: &mut ChaCha12Rng) -> RgbImage {
    const GRID: usize = 5;
    let mut control = [[[0.0f64; 3]; GRID]; GRID];
    for row in control.iter_mut() {
        for cell in row.iter_mut() {
            for (c, v) in cell.iter_mut().enumerate() {
                *v = style.base[c] + rng.random_range(-28.0..28.0);
            }
        }
    }
    let step = (size as f64 - 1.0) / (GRID as f64 - 1.0);
    RgbImage::from_fn(size, size, |x, y| {
        let gx = (x as f64 / step).min(GRID as f64 - 1.0001);
        let gy = (y as f64 / step).min(GRID as f64 - 1.0001);
        let (ix, iy) = (gx as usize, gy as usize);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        let mut px = [0u8; 3];
        for c in 0..3 {
            let top = control[iy][ix][c] * (1.0 - fx) + control[iy][ix + 1][c] * fx;
            let bot = control[iy + 1][ix][c] * (1.0 - fx) + control[iy + 1][ix + 1][c] * fx;
            px[c] = clamp_u8(top * (1.0 - fy) + bot * fy);
        }
        Rgb(px)
    })
}

/// Dark blob clusters on pale ground (necrosis look).
fn render_blobs(size: u32, style: &PatientStyle, rng: &mut ChaCha12Rng) -> RgbImage {
    let n_blobs = rng.random_range(3..=6);
    let blobs: Vec<(f64, f64, f64)> = (0..n_blobs)
        .map(|_| {
            (
                rng.random_range(0.15..0.85) * size as f64,
                rng.random_range(0.15..0.85) * size as f64,
                rng.random_range(7.0..13.0) * style.blob_scale,
            )
        })
        .collect();
    let dark = [95.0, 55.0, 75.0];
    let mut img = RgbImage::new(size, size);
    for y in 0..size {
        for x in 0..size {
            let mut alpha: f64 = 0.0;
            for &(cx, cy, r) in &blobs {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let a = 1.0 / (1.0 + ((d - r) / 1.2).exp());
                alpha = alpha.max(a);
            }
            let mut px = [0u8; 3];
            for c in 0..3 {
                let ground = style.base[c] + 6.0;
                px[c] = clamp_u8(ground * (1.0 - alpha) + dark[c] * alpha);
            }
            img.put_pixel(x, y, Rgb(px));
        }
    }
    img
}

/// Dense small dark dots (nuclei look).
fn render_dots(size: u32, style: &PatientStyle, rng: &mut ChaCha12Rng) -> RgbImage {
    let area_factor = (size as f64 / 64.0).powi(2);
    let n_dots = (rng.random_range(120.0..160.0) * style.dot_density * area_factor) as usize;
    let dots: Vec<(f64, f64, f64)> = (0..n_dots)
        .map(|_| {
            (
                rng.random_range(0.0..size as f64),
                rng.random_range(0.0..size as f64),
                rng.random_range(1.0..2.2),
            )
        })
        .collect();
    let dark = [75.0, 45.0, 110.0];
    let mut img = RgbImage::new(size, size);
    for y in 0..size {
        for x in 0..size {
            let mut alpha: f64 = 0.0;
            for &(cx, cy, r) in &dots {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                if d < r + 2.0 {
                    let a = 1.0 / (1.0 + ((d - r) / 0.6).exp());
                    alpha = alpha.max(a);
                }
            }
            let mut px = [0u8; 3];
            for c in 0..3 {
                px[c] = clamp_u8(style.base[c] * (1.0 - alpha) + dark[c] * alpha);
            }
            img.put_pixel(x, y, Rgb(px));
        }
    }
    img
}

fn add_noise(img: &mut RgbImage, rng: &mut ChaCha12Rng) {
    for px in img.pixels_mut() {
        for c in 0..3 {
            let n: f64 = rng.random_range(-6.0..6.0);
            px[c] = clamp_u8(px[c] as f64 + n);
        }
    }
}

/// Renders one tile of the given class.
pub fn render_tile(config: &SynthConfig, patient: usize, tile: usize, class: u8) -> RgbImage {
    let style = patient_style(config.seed, patient as u64);
    let mut rng = tile_rng(config.seed, patient as u64, tile as u64);
    let mut img = match class {
        0 => render_smooth(config.tile_size, &style, &mut rng),
        1 => render_blobs(config.tile_size, &style, &mut rng),
        _ => render_dots(config.tile_size, &style, &mut rng),
    };
    add_noise(&mut img, &mut rng);
    img
}

fn class_of_tile(config: &SynthConfig, patient: usize, tile: usize) -> u8 {
    if tile < 3 {
        return tile as u8;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(
        splitmix(config.seed ^ 0xc1a5_5e5e) ^ splitmix((patient as u64) << 20 | tile as u64),
    );
    let draw: f64 = rng.random_range(0.0..1.0);
    let mut acc = 0.0;
    for (c, p) in config.class_probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return c as u8;
        }
    }
    2
}

/// Generates the dataset under `out_dir` using the ingestible layout
/// `<out>/<class-name>/<case>/<case>_t<idx>.png` plus a `metadata.json`.
/// Identical configs produce bit-identical trees.
pub fn synth_generate(out_dir: &Path, config: &SynthConfig) -> Result<SynthSummary> {
    if config.n_patients < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 patients for a feasible patient-level split, got {}",
            config.n_patients
        )));
    }
    let norm: f64 = config.class_probs.iter().sum();
    if norm <= 0.0 || config.class_probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidInput(
            "class probabilities must be nonnegative and sum > 0".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut class_counts = [0usize; 3];
    for p in 0..config.n_patients {
        let case = format!("case-{p:03}");
        for t in 0..config.tiles_per_patient {
            let class = class_of_tile(config, p, t);
            class_counts[class as usize] += 1;
            let dir = out_dir.join(super::CLASS_NAMES[class as usize]).join(&case);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let img = render_tile(config, p, t, class);
            let path = dir.join(format!("{case}_t{t:03}.png"));
            imaging::save_png(&path, &img)?;
        }
    }
    let summary = SynthSummary {
        config: config.clone(),
        n_tiles: config.n_patients * config.tiles_per_patient,
        class_counts,
    };
    let meta_path = out_dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))?;
    Ok(summary)
}
