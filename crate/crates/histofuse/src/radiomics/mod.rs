//! Handcrafted radiomic descriptors: 19 first-order intensity statistics and
//! 10 2D shape features, computed over an Otsu foreground mask and
//! standardized with training-set statistics.

mod first_order;
mod mask;
mod shape2d;

pub use first_order::{first_order_features, percentile_sorted, FIRST_ORDER_NAMES};
pub use mask::{compute_mask, gray_from_rgb, otsu_cut, to_grayscale, MIN_FOREGROUND_FRACTION};
pub use shape2d::{shape2d_features, SHAPE2D_NAMES};

use crate::error::{Error, Result};
use image::RgbImage;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Total number of radiomic features.
pub const N_FEATURES: usize = 29;

/// Physical pixel size; the tile collection carries no spacing metadata.
pub const DEFAULT_SPACING: f64 = 1.0;

/// Std floor applied when standardizing near-constant feature columns.
pub const STD_FLOOR: f64 = 1e-8;

/// Canonical feature order: the 19 first-order names followed by the 10
/// shape names.
pub fn feature_names() -> Vec<&'static str> {
    FIRST_ORDER_NAMES
        .iter()
        .chain(SHAPE2D_NAMES.iter())
        .copied()
        .collect()
}

/// Single-channel intensity tile in `[0, 255]`.
#[derive(Debug, Clone)]
pub struct GrayscaleTile {
    pub pixels: Array2<f64>,
    pub spacing: f64,
}

impl GrayscaleTile {
    pub fn new(pixels: Array2<f64>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::InvalidInput("empty tile".into()));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite intensity".into()));
        }
        Ok(GrayscaleTile {
            pixels,
            spacing: DEFAULT_SPACING,
        })
    }
}

/// Boolean foreground mask with the same shape as its tile.
#[derive(Debug, Clone)]
pub struct ForegroundMask {
    pub mask: Array2<bool>,
}

impl ForegroundMask {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// The 29-dimensional descriptor in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiomicFeatureVector {
    pub values: Vec<f64>,
}

impl RadiomicFeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_FEATURES {
            return Err(Error::Shape(format!(
                "expected {N_FEATURES} features, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(RadiomicFeatureVector { values })
    }
}

/// Extracts the full 29-feature vector from an RGB tile: grayscale
/// reduction, Otsu mask, first-order block, shape block.
pub fn extract(tile: &RgbImage) -> Result<RadiomicFeatureVector> {
    let gray = gray_from_rgb(tile);
    let fg = compute_mask(&gray);
    extract_with_mask(&gray, &fg)
}

/// Feature computation on an explicit tile/mask pair.
pub fn extract_with_mask(
    gray: &GrayscaleTile,
    fg: &ForegroundMask,
) -> Result<RadiomicFeatureVector> {
    let mut values = first_order_features(gray, fg)?;
    values.extend(shape2d_features(fg, gray.spacing)?);
    RadiomicFeatureVector::new(values)
}

/// Per-dimension z-scoring with statistics from the training set only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureStandardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    fitted: bool,
}

impl Default for FeatureStandardizer {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureStandardizer {
    pub fn new() -> Self {
        FeatureStandardizer {
            mean: vec![0.0; N_FEATURES],
            std: vec![1.0; N_FEATURES],
            fitted: false,
        }
    }

    pub fn fit(train: &[RadiomicFeatureVector]) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::InvalidInput(
                "standardizer needs at least 2 training vectors".into(),
            ));
        }
        let n = train.len() as f64;
        let mut mean = vec![0.0; N_FEATURES];
        for v in train {
            for (m, x) in mean.iter_mut().zip(&v.values) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = vec![0.0; N_FEATURES];
        for v in train {
            for ((s, x), m) in std.iter_mut().zip(&v.values).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt().max(STD_FLOOR);
        }
        Ok(FeatureStandardizer {
            mean,
            std,
            fitted: true,
        })
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn apply(&self, v: &RadiomicFeatureVector) -> Result<Vec<f64>> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        Ok(v.values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// One row of the feature cache.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCacheRow {
    pub tile_id: String,
    pub patient_id: String,
    pub label: u8,
    pub features: RadiomicFeatureVector,
}

/// Writes the feature cache CSV: header
/// `tile_id,patient_id,label,<29 feature names>`, rows sorted by tile_id.
pub fn write_feature_cache(path: &Path, rows: &[FeatureCacheRow]) -> Result<()> {
    let mut sorted: Vec<&FeatureCacheRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut header = String::from("tile_id,patient_id,label");
    for name in feature_names() {
        header.push(',');
        header.push_str(name);
    }
    writeln!(out, "{header}").map_err(|e| Error::io(path, e))?;
    for row in sorted {
        let mut line = format!("{},{},{}", row.tile_id, row.patient_id, row.label);
        for v in &row.features.values {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_cache(path: &Path) -> Result<Vec<FeatureCacheRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| Error::Serde(e.to_string()))?;
        let expected = 3 + N_FEATURES;
        if headers.len() != expected {
            return Err(Error::Serde(format!(
                "feature cache has {} columns, expected {expected}",
                headers.len()
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Serde(e.to_string()))?;
        let tile_id = record[0].to_string();
        let patient_id = record[1].to_string();
        let label: u8 = record[2]
            .parse()
            .map_err(|_| Error::Serde(format!("bad label in row for {tile_id}")))?;
        let mut values = Vec::with_capacity(N_FEATURES);
        for i in 0..N_FEATURES {
            let v: f64 = record[3 + i]
                .parse()
                .map_err(|_| Error::Serde(format!("bad feature value in row for {tile_id}")))?;
            values.push(v);
        }
        rows.push(FeatureCacheRow {
            tile_id,
            patient_id,
            label,
            features: RadiomicFeatureVector::new(values)?,
        });
    }
    Ok(rows)
}
