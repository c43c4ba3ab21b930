//! Image trunk variants behind the embedding projection.
//!
//! The published-backbone kinds consume cached trunk activations exported
//! once from the pretrained network (classifier removed); the projection and
//! everything downstream stay trainable here. The tiny CNN is a fully
//! trainable self-contained trunk for desk-scale data, and the MLP trunk is
//! a deliberately small stand-in used by gradient checks.

use crate::error::{Error, Result};
use crate::nn::{self, Conv2d, Linear, Param};
use ndarray::{Array2, Array4};
use rand_chacha::ChaCha12Rng;

/// Two stride-2 conv blocks and global average pooling; native input 32x32.
#[derive(Debug, Clone)]
pub struct TinyCnn {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
}

pub const TINY_CNN_INPUT: usize = 32;
const TINY_CNN_C1: usize = 8;
const TINY_CNN_C2: usize = 16;

pub struct TinyCnnTrace {
    x: Array4<f64>,
    pre1: Array4<f64>,
    act1: Array4<f64>,
    pre2: Array4<f64>,
    act2_dims: (usize, usize),
}

impl TinyCnn {
    pub fn new(rng: &mut ChaCha12Rng) -> Self {
        TinyCnn {
            conv1: Conv2d::new("img.conv1", 3, TINY_CNN_C1, 3, 2, 1, rng),
            conv2: Conv2d::new("img.conv2", TINY_CNN_C1, TINY_CNN_C2, 3, 2, 1, rng),
        }
    }

    pub fn out_dim(&self) -> usize {
        TINY_CNN_C2
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array2<f64>, TinyCnnTrace)> {
        let (_, c, h, w) = x.dim();
        if c != 3 || h != TINY_CNN_INPUT || w != TINY_CNN_INPUT {
            return Err(Error::Shape(format!(
                "tiny cnn expects (n, 3, {TINY_CNN_INPUT}, {TINY_CNN_INPUT}), got (n, {c}, {h}, {w})"
            )));
        }
        let pre1 = self.conv1.forward(x);
        let act1 = pre1.mapv(|v| v.max(0.0));
        let pre2 = self.conv2.forward(&act1);
        let act2 = pre2.mapv(|v| v.max(0.0));
        let (_, _, oh, ow) = act2.dim();
        let pooled = nn::global_avg_pool(&act2);
        Ok((
            pooled,
            TinyCnnTrace {
                x: x.clone(),
                pre1,
                act1,
                pre2,
                act2_dims: (oh, ow),
            },
        ))
    }

    pub fn backward(&mut self, trace: &TinyCnnTrace, grad_out: &Array2<f64>) {
        let (oh, ow) = trace.act2_dims;
        let g_act2 = nn::global_avg_pool_backward(grad_out, oh, ow);
        let mut g_pre2 = g_act2;
        g_pre2.zip_mut_with(&trace.pre2, |g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let g_act1 = self.conv2.backward(&trace.act1, &g_pre2);
        let mut g_pre1 = g_act1;
        g_pre1.zip_mut_with(&trace.pre1, |g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let _ = self.conv1.backward(&trace.x, &g_pre1);
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.conv1.params_mut();
        p.extend(self.conv2.params_mut());
        p
    }

    pub fn n_params(&self) -> usize {
        self.conv1.n_params() + self.conv2.n_params()
    }
}

/// Single linear+ReLU trunk over flattened pixels; used as the tiny fake
/// encoder in gradient checks.
#[derive(Debug, Clone)]
pub struct TinyMlp {
    pub l1: Linear,
    pub in_pixels: usize,
}

pub struct TinyMlpTrace {
    flat: Array2<f64>,
    pre: Array2<f64>,
}

impl TinyMlp {
    pub fn new(in_pixels: usize, out_dim: usize, rng: &mut ChaCha12Rng) -> Self {
        TinyMlp {
            l1: Linear::new("img.mlp", in_pixels, out_dim, rng),
            in_pixels,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.l1.out_dim
    }

    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array2<f64>, TinyMlpTrace)> {
        let (n, c, h, w) = x.dim();
        let flat_dim = c * h * w;
        if flat_dim != self.in_pixels {
            return Err(Error::Shape(format!(
                "mlp trunk expects {} flattened inputs, got {flat_dim}",
                self.in_pixels
            )));
        }
        let flat = x
            .to_shape((n, flat_dim))
            .map_err(|e| Error::Shape(e.to_string()))?
            .to_owned();
        let pre = self.l1.forward(&flat);
        let out = nn::relu(&pre);
        Ok((out, TinyMlpTrace { flat, pre }))
    }

    pub fn backward(&mut self, trace: &TinyMlpTrace, grad_out: &Array2<f64>) {
        let g_pre = nn::relu_backward(&trace.pre, grad_out);
        let _ = self.l1.backward(&trace.flat, &g_pre);
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.l1.params_mut()
    }

    pub fn n_params(&self) -> usize {
        self.l1.n_params()
    }
}

/// Cached activations of a pretrained trunk, keyed by global tile row.
/// Nothing inside is trainable; gradients stop at the projection above.
#[derive(Debug, Clone)]
pub struct TrunkFeatures {
    features: Array2<f64>,
}

impl TrunkFeatures {
    pub fn new(features: Array2<f64>) -> Self {
        TrunkFeatures { features }
    }

    /// Loads a CSV of `tile_id,f0,f1,...` rows, reordered to match `tile_ids`.
    pub fn from_csv(path: &std::path::Path, tile_ids: &[String]) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
        let width = reader
            .headers()
            .map_err(|e| Error::Serde(e.to_string()))?
            .len()
            .saturating_sub(1);
        if width == 0 {
            return Err(Error::Serde(
                "trunk feature cache has no feature columns".into(),
            ));
        }
        let mut by_id = std::collections::HashMap::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Serde(e.to_string()))?;
            let id = record[0].to_string();
            let mut row = Vec::with_capacity(width);
            for i in 0..width {
                row.push(
                    record[1 + i]
                        .parse::<f64>()
                        .map_err(|_| Error::Serde(format!("bad trunk feature value for {id}")))?,
                );
            }
            by_id.insert(id, row);
        }
        let mut features = Array2::zeros((tile_ids.len(), width));
        for (r, id) in tile_ids.iter().enumerate() {
            let row = by_id.get(id).ok_or_else(|| {
                Error::Config(format!("trunk feature cache is missing tile {id}"))
            })?;
            for (c, v) in row.iter().enumerate() {
                features[[r, c]] = *v;
            }
        }
        Ok(TrunkFeatures { features })
    }

    pub fn out_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn forward(&self, rows: &[usize]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((rows.len(), self.features.ncols()));
        for (i, &r) in rows.iter().enumerate() {
            if r >= self.features.nrows() {
                return Err(Error::Shape(format!(
                    "tile row {r} out of range ({} cached)",
                    self.features.nrows()
                )));
            }
            out.row_mut(i).assign(&self.features.row(r));
        }
        Ok(out)
    }
}
