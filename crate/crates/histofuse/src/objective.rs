//! Inverse-count class weights, masked weighted cross-entropies, and the
//! uncertainty-weighted joint objective with learnable log-variances.

use crate::dataset::derive_task_labels;
use crate::error::{Error, Result};
use crate::nn::Param;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Probabilities are clamped here before logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-head class weights, inverse to training counts, normalized to unit
/// mean, fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub beta_a: [f64; 2],
    pub beta_b: [f64; 2],
}

fn unit_mean_inverse(counts: &[usize]) -> Vec<f64> {
    let w: Vec<f64> = counts.iter().map(|&c| 1.0 / c as f64).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.into_iter().map(|v| v / mean).collect()
}

/// Computes both heads' weights from the training labels. Task-A counts
/// come from the coarse split (non-tumor vs. tumor), Task-B counts from the
/// fine split over tumor tiles only.
pub fn compute_class_weights(train_labels: &[u8]) -> Result<ClassWeights> {
    let mut a = [0usize; 2];
    let mut b = [0usize; 2];
    for &label in train_labels {
        let t = derive_task_labels(label);
        a[t.y_a as usize] += 1;
        if let Some(yb) = t.y_b {
            b[yb as usize] += 1;
        }
    }
    if a[0] == 0 || a[1] == 0 {
        return Err(Error::DegenerateClassCounts(format!(
            "task A counts {a:?}: both classes must be present"
        )));
    }
    if b[0] == 0 || b[1] == 0 {
        return Err(Error::DegenerateClassCounts(format!(
            "task B counts {b:?}: both classes must be present"
        )));
    }
    let wa = unit_mean_inverse(&a);
    let wb = unit_mean_inverse(&b);
    Ok(ClassWeights {
        beta_a: [wa[0], wa[1]],
        beta_b: [wb[0], wb[1]],
    })
}

/// Unit-mean inverse-count weights for the flat 3-class baseline.
pub fn compute_flat3_weights(train_labels: &[u8]) -> Result<[f64; 3]> {
    let mut counts = [0usize; 3];
    for &label in train_labels {
        counts[label as usize] += 1;
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::DegenerateClassCounts(format!(
            "3-class counts {counts:?}: all classes must be present"
        )));
    }
    let w = unit_mean_inverse(&counts);
    Ok([w[0], w[1], w[2]])
}

/// Learnable log-variances, one per task.
#[derive(Debug)]
pub struct UncertaintyParams {
    pub lambda_a: Param,
    pub lambda_b: Param,
}

impl UncertaintyParams {
    /// Both start at 0, i.e. unit task variances.
    pub fn new() -> Self {
        UncertaintyParams {
            lambda_a: Param::scalar("lambda_a", 0.0),
            lambda_b: Param::scalar("lambda_b", 0.0),
        }
    }

    pub fn lambda_a(&self) -> f64 {
        self.lambda_a.value[ndarray::IxDyn(&[])]
    }

    pub fn lambda_b(&self) -> f64 {
        self.lambda_b.value[ndarray::IxDyn(&[])]
    }
}

impl Default for UncertaintyParams {
    fn default() -> Self {
        Self::new()
    }
}

/// Coarse-task weighted cross-entropy, averaged over the batch.
pub fn loss_a(p_a: &Array2<f64>, y_a: &[u8], beta_a: &[f64; 2]) -> f64 {
    debug_assert_eq!(p_a.nrows(), y_a.len());
    let n = y_a.len() as f64;
    let mut total = 0.0;
    for (i, &y) in y_a.iter().enumerate() {
        let p = p_a[[i, y as usize]].max(PROB_FLOOR);
        total -= beta_a[y as usize] * p.ln();
    }
    total / n
}

/// Fine-task weighted cross-entropy, averaged over tumor samples only.
/// Batches with no tumor samples contribute exactly zero.
pub fn loss_b(p_b: &Array2<f64>, y_b: &[Option<u8>], beta_b: &[f64; 2]) -> f64 {
    debug_assert_eq!(p_b.nrows(), y_b.len());
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, y) in y_b.iter().enumerate() {
        if let Some(y) = y {
            let p = p_b[[i, *y as usize]].max(PROB_FLOOR);
            total -= beta_b[*y as usize] * p.ln();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// The uncertainty-weighted joint objective
/// `e^{-la} * La + e^{-lb} * Lb + eta * (la + lb)`.
pub fn joint_loss(l_a: f64, l_b: f64, lambda_a: f64, lambda_b: f64, eta: f64) -> f64 {
    (-lambda_a).exp() * l_a + (-lambda_b).exp() * l_b + eta * (lambda_a + lambda_b)
}

/// Closed-form gradient of the joint objective wrt one log-variance:
/// `d/d_lambda = -e^{-lambda} * L + eta`.
pub fn lambda_grad(task_loss: f64, lambda: f64, eta: f64) -> f64 {
    -(-lambda).exp() * task_loss + eta
}

/// Weighted 3-class cross-entropy for the flat baseline.
pub fn flat3_loss(p3: &Array2<f64>, y: &[u8], weights: &[f64; 3]) -> f64 {
    debug_assert_eq!(p3.nrows(), y.len());
    let n = y.len() as f64;
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let p = p3[[i, yi as usize]].max(PROB_FLOOR);
        total -= weights[yi as usize] * p.ln();
    }
    total / n
}

/// Loss configuration shared by training runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Regularizer keeping the log-variances bounded.
    pub eta: f64,
    /// Uncertainty-weighted hierarchical loss on/off.
    pub hierarchical: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            eta: 0.2,
            hierarchical: true,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta <= 0.0 {
            return Err(Error::Config(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}
