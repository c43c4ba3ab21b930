//! The multimodal network: image trunk + projection, radiomic MLP encoder,
//! softmax attention fusion gate, and the classification heads.
//!
//! Hierarchical heads emit two binary distributions which compose into the
//! three-way distribution `(p_A0, p_A1*p_B0, p_A1*p_B1)`; the flat head is
//! the single-softmax baseline used by ablations.

mod encoder;

pub use encoder::{TinyCnn, TinyMlp, TrunkFeatures, TINY_CNN_INPUT};

use crate::error::{Error, Result};
use crate::nn::{self, Linear, Param};
use crate::radiomics::{FeatureStandardizer, N_FEATURES};
use ndarray::{Array2, Array4, Axis};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneKind {
    InceptionV3,
    Vit,
    EfficientNetB0,
    /// Self-contained trainable CNN for desk-scale runs.
    Tiny,
}

impl BackboneKind {
    pub fn native_input_size(&self) -> u32 {
        match self {
            BackboneKind::InceptionV3 => 299,
            BackboneKind::Vit => 224,
            BackboneKind::EfficientNetB0 => 224,
            BackboneKind::Tiny => TINY_CNN_INPUT as u32,
        }
    }

    pub fn is_pretrained(&self) -> bool {
        !matches!(self, BackboneKind::Tiny)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Hierarchical,
    Flat3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Shared embedding dimension d.
    pub embed_dim: usize,
    pub backbone: BackboneKind,
    pub use_radiomics: bool,
    pub head: HeadKind,
    pub rad_hidden: usize,
    pub gate_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 256,
            backbone: BackboneKind::Tiny,
            use_radiomics: true,
            head: HeadKind::Hierarchical,
            rad_hidden: 128,
            gate_hidden: 128,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < 2 {
            return Err(Error::Config(format!(
                "embedding dimension must be >= 2, got {}",
                self.embed_dim
            )));
        }
        Ok(())
    }
}

/// Normalized attention weights of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub img: f64,
    pub rad: f64,
}

/// Per-sample head output pair and the induced three-way distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalPrediction {
    pub p_a: [f64; 2],
    pub p_b: [f64; 2],
    pub dist3: [f64; 3],
}

impl HierarchicalPrediction {
    pub fn from_probs(p_a: [f64; 2], p_b: [f64; 2]) -> Self {
        HierarchicalPrediction {
            p_a,
            p_b,
            dist3: compose_dist3(p_a, p_b),
        }
    }
}

/// The factorized three-way distribution.
pub fn compose_dist3(p_a: [f64; 2], p_b: [f64; 2]) -> [f64; 3] {
    [p_a[0], p_a[1] * p_b[0], p_a[1] * p_b[1]]
}

/// Argmax with ties broken toward the lower class index.
pub fn predict_class(dist3: &[f64; 3]) -> u8 {
    let mut best = 0usize;
    for c in 1..3 {
        if dist3[c] > dist3[best] {
            best = c;
        }
    }
    best as u8
}

/// Convex combination of the two modality embeddings with per-sample
/// weights `alpha` (n, 2).
pub fn convex_combine(
    z_img: &Array2<f64>,
    z_rad: &Array2<f64>,
    alpha: &Array2<f64>,
) -> Array2<f64> {
    let mut z = Array2::zeros(z_img.raw_dim());
    for i in 0..z_img.nrows() {
        let (ai, ar) = (alpha[[i, 0]], alpha[[i, 1]]);
        for j in 0..z_img.ncols() {
            z[[i, j]] = ai * z_img[[i, j]] + ar * z_rad[[i, j]];
        }
    }
    z
}

/// Image trunk variants (see [`encoder`]).
#[derive(Debug, Clone)]
pub enum Trunk {
    TinyCnn(TinyCnn),
    TinyMlp(TinyMlp),
    Features(TrunkFeatures),
}

pub enum TrunkTrace {
    TinyCnn(encoder::TinyCnnTrace),
    TinyMlp(encoder::TinyMlpTrace),
    Features,
}

impl Trunk {
    pub fn out_dim(&self) -> usize {
        match self {
            Trunk::TinyCnn(t) => t.out_dim(),
            Trunk::TinyMlp(t) => t.out_dim(),
            Trunk::Features(t) => t.out_dim(),
        }
    }

    fn forward(&self, batch: &BatchInput) -> Result<(Array2<f64>, TrunkTrace)> {
        match self {
            Trunk::TinyCnn(t) => {
                let images = batch.images.ok_or_else(|| {
                    Error::InvalidInput("trainable trunk needs image tensors".into())
                })?;
                let (out, trace) = t.forward(images)?;
                Ok((out, TrunkTrace::TinyCnn(trace)))
            }
            Trunk::TinyMlp(t) => {
                let images = batch.images.ok_or_else(|| {
                    Error::InvalidInput("trainable trunk needs image tensors".into())
                })?;
                let (out, trace) = t.forward(images)?;
                Ok((out, TrunkTrace::TinyMlp(trace)))
            }
            Trunk::Features(t) => Ok((t.forward(batch.tile_rows)?, TrunkTrace::Features)),
        }
    }

    fn backward(&mut self, trace: &TrunkTrace, grad_out: &Array2<f64>) {
        match (self, trace) {
            (Trunk::TinyCnn(t), TrunkTrace::TinyCnn(tr)) => t.backward(tr, grad_out),
            (Trunk::TinyMlp(t), TrunkTrace::TinyMlp(tr)) => t.backward(tr, grad_out),
            (Trunk::Features(_), TrunkTrace::Features) => {}
            _ => unreachable!("trace does not match trunk variant"),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Trunk::TinyCnn(t) => t.params_mut(),
            Trunk::TinyMlp(t) => t.params_mut(),
            Trunk::Features(_) => Vec::new(),
        }
    }

    fn n_params(&self) -> usize {
        match self {
            Trunk::TinyCnn(t) => t.n_params(),
            Trunk::TinyMlp(t) => t.n_params(),
            Trunk::Features(_) => 0,
        }
    }
}

/// Two-layer radiomic encoder: 29 -> hidden -> d.
#[derive(Debug, Clone)]
pub struct RadEncoder {
    pub l1: Linear,
    pub l2: Linear,
}

/// Two-layer gating network over the concatenated embeddings: 2d -> hidden -> 2.
#[derive(Debug, Clone)]
pub struct GateNet {
    pub l1: Linear,
    pub l2: Linear,
}

#[derive(Debug, Clone)]
pub enum HeadNet {
    Hier { a: Linear, b: Linear },
    Flat(Linear),
}

/// One forward batch: images for trainable trunks, global tile rows for
/// cached trunks, standardized radiomic vectors when fusion is on.
pub struct BatchInput<'a> {
    pub images: Option<&'a Array4<f64>>,
    pub tile_rows: &'a [usize],
    pub radiomics: Option<&'a Array2<f64>>,
}

pub enum HeadProbs {
    Hier { p_a: Array2<f64>, p_b: Array2<f64> },
    Flat { p3: Array2<f64> },
}

impl HeadProbs {
    /// The three-way distribution used for inference and metrics.
    pub fn dist3(&self) -> Array2<f64> {
        match self {
            HeadProbs::Hier { p_a, p_b } => {
                let n = p_a.nrows();
                let mut out = Array2::zeros((n, 3));
                for i in 0..n {
                    let d = compose_dist3([p_a[[i, 0]], p_a[[i, 1]]], [p_b[[i, 0]], p_b[[i, 1]]]);
                    out[[i, 0]] = d[0];
                    out[[i, 1]] = d[1];
                    out[[i, 2]] = d[2];
                }
                out
            }
            HeadProbs::Flat { p3 } => p3.clone(),
        }
    }
}

/// Intermediate activations kept for the backward pass.
pub struct Trace {
    trunk: TrunkTrace,
    trunk_out: Array2<f64>,
    pub z_img: Array2<f64>,
    rad_in: Option<Array2<f64>>,
    rad_pre1: Option<Array2<f64>>,
    rad_act1: Option<Array2<f64>>,
    pub z_rad: Option<Array2<f64>>,
    gate_in: Option<Array2<f64>>,
    gate_pre1: Option<Array2<f64>>,
    gate_act1: Option<Array2<f64>>,
    pub alpha: Option<Array2<f64>>,
    pub z: Array2<f64>,
    pub probs: HeadProbs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Parameter counts per group for the model summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupCounts {
    pub theta_img: usize,
    pub theta_rad: usize,
    pub psi_g: usize,
    pub omega_a: usize,
    pub omega_b: usize,
}

impl GroupCounts {
    pub fn total(&self) -> usize {
        self.theta_img + self.theta_rad + self.psi_g + self.omega_a + self.omega_b
    }
}

pub struct Model {
    pub config: ModelConfig,
    pub trunk: Trunk,
    pub proj: Linear,
    pub rad: Option<RadEncoder>,
    pub gate: Option<GateNet>,
    pub heads: HeadNet,
}

impl Model {
    /// Builds a model with a fresh parameter draw. `trunk` must agree with
    /// `config.backbone` in spirit (Features for pretrained kinds, TinyCnn
    /// for tiny, TinyMlp for toy setups).
    pub fn new(config: ModelConfig, trunk: Trunk, rng: &mut ChaCha12Rng) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let proj = Linear::new("img.proj", trunk.out_dim(), d, rng);
        let rad = if config.use_radiomics {
            Some(RadEncoder {
                l1: Linear::new("rad.l1", N_FEATURES, config.rad_hidden, rng),
                l2: Linear::new("rad.l2", config.rad_hidden, d, rng),
            })
        } else {
            None
        };
        let gate = if config.use_radiomics {
            Some(GateNet {
                l1: Linear::new("gate.l1", 2 * d, config.gate_hidden, rng),
                l2: Linear::new("gate.l2", config.gate_hidden, 2, rng),
            })
        } else {
            None
        };
        let heads = match config.head {
            HeadKind::Hierarchical => HeadNet::Hier {
                a: Linear::new("head.a", d, 2, rng),
                b: Linear::new("head.b", d, 2, rng),
            },
            HeadKind::Flat3 => HeadNet::Flat(Linear::new("head.flat", d, 3, rng)),
        };
        Ok(Model {
            config,
            trunk,
            proj,
            rad,
            gate,
            heads,
        })
    }

    /// Image branch only: trunk features followed by the linear projection.
    pub fn encode_image(&self, batch: &BatchInput) -> Result<Array2<f64>> {
        let (trunk_out, _) = self.trunk.forward(batch)?;
        Ok(self.proj.forward(&trunk_out))
    }

    /// Radiomic branch only; input must be standardized 29-vectors.
    pub fn encode_radiomics(&self, r: &Array2<f64>) -> Result<Array2<f64>> {
        let enc = self
            .rad
            .as_ref()
            .ok_or_else(|| Error::Config("model was built without a radiomic encoder".into()))?;
        if r.ncols() != N_FEATURES {
            return Err(Error::Shape(format!(
                "expected {N_FEATURES} radiomic features, got {}",
                r.ncols()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite radiomic feature".into()));
        }
        Ok(enc.l2.forward(&nn::relu(&enc.l1.forward(r))))
    }

    pub fn forward(&self, batch: &BatchInput) -> Result<Trace> {
        let (trunk_out, trunk_trace) = self.trunk.forward(batch)?;
        let z_img = self.proj.forward(&trunk_out);

        let (z, rad_in, rad_pre1, rad_act1, z_rad, gate_in, gate_pre1, gate_act1, alpha) =
            if let (Some(rad), Some(gate)) = (&self.rad, &self.gate) {
                let r = batch.radiomics.ok_or_else(|| {
                    Error::Config(
                        "radiomics fusion is on but the batch has no feature vectors".into(),
                    )
                })?;
                if r.ncols() != N_FEATURES {
                    return Err(Error::Shape(format!(
                        "expected {N_FEATURES} radiomic features, got {}",
                        r.ncols()
                    )));
                }
                if r.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite radiomic feature".into()));
                }
                let rad_pre1 = rad.l1.forward(r);
                let rad_act1 = nn::relu(&rad_pre1);
                let z_rad = rad.l2.forward(&rad_act1);

                let gate_in = ndarray::concatenate(Axis(1), &[z_img.view(), z_rad.view()])
                    .map_err(|e| Error::Shape(e.to_string()))?;
                let gate_pre1 = gate.l1.forward(&gate_in);
                let gate_act1 = nn::relu(&gate_pre1);
                let gate_logits = gate.l2.forward(&gate_act1);
                let alpha = nn::softmax_rows(&gate_logits);
                let z = convex_combine(&z_img, &z_rad, &alpha);
                (
                    z,
                    Some(r.clone()),
                    Some(rad_pre1),
                    Some(rad_act1),
                    Some(z_rad),
                    Some(gate_in),
                    Some(gate_pre1),
                    Some(gate_act1),
                    Some(alpha),
                )
            } else {
                (
                    z_img.clone(),
                    None,
                    None,
                    None,
                    None,
                    None,
                    None,
                    None,
                    None,
                )
            };

        let probs = match &self.heads {
            HeadNet::Hier { a, b } => HeadProbs::Hier {
                p_a: nn::softmax_rows(&a.forward(&z)),
                p_b: nn::softmax_rows(&b.forward(&z)),
            },
            HeadNet::Flat(f) => HeadProbs::Flat {
                p3: nn::softmax_rows(&f.forward(&z)),
            },
        };

        Ok(Trace {
            trunk: trunk_trace,
            trunk_out,
            z_img,
            rad_in,
            rad_pre1,
            rad_act1,
            z_rad,
            gate_in,
            gate_pre1,
            gate_act1,
            alpha,
            z,
            probs,
        })
    }

    /// Backward for hierarchical heads. `g_logits_*` must already include
    /// every loss scaling (class weights, task weights, batch means).
    pub fn backward_hier(
        &mut self,
        trace: &Trace,
        g_logits_a: &Array2<f64>,
        g_logits_b: &Array2<f64>,
    ) {
        let HeadNet::Hier { a, b } = &mut self.heads else {
            panic!("backward_hier called on a flat-head model");
        };
        let g_from_a = a.backward(&trace.z, g_logits_a);
        let g_from_b = b.backward(&trace.z, g_logits_b);
        let grad_z = g_from_a + g_from_b;
        self.backward_from_z(trace, grad_z);
    }

    /// Backward for the flat baseline head.
    pub fn backward_flat(&mut self, trace: &Trace, g_logits3: &Array2<f64>) {
        let HeadNet::Flat(f) = &mut self.heads else {
            panic!("backward_flat called on a hierarchical model");
        };
        let grad_z = f.backward(&trace.z, g_logits3);
        self.backward_from_z(trace, grad_z);
    }

    fn backward_from_z(&mut self, trace: &Trace, grad_z: Array2<f64>) {
        let grad_z_img = if let (Some(rad), Some(gate)) = (&mut self.rad, &mut self.gate) {
            let alpha = trace.alpha.as_ref().unwrap();
            let z_rad = trace.z_rad.as_ref().unwrap();
            let d = trace.z_img.ncols();
            let n = trace.z_img.nrows();

            // z = a_img*z_img + a_rad*z_rad
            let mut grad_alpha = Array2::zeros((n, 2));
            for i in 0..n {
                let mut gi = 0.0;
                let mut gr = 0.0;
                for j in 0..d {
                    gi += grad_z[[i, j]] * trace.z_img[[i, j]];
                    gr += grad_z[[i, j]] * z_rad[[i, j]];
                }
                grad_alpha[[i, 0]] = gi;
                grad_alpha[[i, 1]] = gr;
            }
            let g_gate_logits = nn::softmax_backward(alpha, &grad_alpha);
            let g_gate_act1 = gate
                .l2
                .backward(trace.gate_act1.as_ref().unwrap(), &g_gate_logits);
            let g_gate_pre1 = nn::relu_backward(trace.gate_pre1.as_ref().unwrap(), &g_gate_act1);
            let g_gate_in = gate
                .l1
                .backward(trace.gate_in.as_ref().unwrap(), &g_gate_pre1);

            // direct path through the convex combination plus the gate path
            let mut g_z_img = Array2::zeros((n, d));
            let mut g_z_rad = Array2::zeros((n, d));
            for i in 0..n {
                for j in 0..d {
                    g_z_img[[i, j]] = alpha[[i, 0]] * grad_z[[i, j]] + g_gate_in[[i, j]];
                    g_z_rad[[i, j]] = alpha[[i, 1]] * grad_z[[i, j]] + g_gate_in[[i, j + d]];
                }
            }

            let g_rad_act1 = rad.l2.backward(trace.rad_act1.as_ref().unwrap(), &g_z_rad);
            let g_rad_pre1 = nn::relu_backward(trace.rad_pre1.as_ref().unwrap(), &g_rad_act1);
            let _ = rad.l1.backward(trace.rad_in.as_ref().unwrap(), &g_rad_pre1);

            g_z_img
        } else {
            grad_z
        };

        let g_trunk_out = self.proj.backward(&trace.trunk_out, &grad_z_img);
        self.trunk.backward(&trace.trunk, &g_trunk_out);
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.trunk.params_mut();
        ps.extend(self.proj.params_mut());
        if let Some(rad) = &mut self.rad {
            ps.extend(rad.l1.params_mut());
            ps.extend(rad.l2.params_mut());
        }
        if let Some(gate) = &mut self.gate {
            ps.extend(gate.l1.params_mut());
            ps.extend(gate.l2.params_mut());
        }
        match &mut self.heads {
            HeadNet::Hier { a, b } => {
                ps.extend(a.params_mut());
                ps.extend(b.params_mut());
            }
            HeadNet::Flat(f) => ps.extend(f.params_mut()),
        }
        ps
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn group_counts(&self) -> GroupCounts {
        let (omega_a, omega_b) = match &self.heads {
            HeadNet::Hier { a, b } => (a.n_params(), b.n_params()),
            HeadNet::Flat(f) => (f.n_params(), 0),
        };
        GroupCounts {
            theta_img: self.trunk.n_params() + self.proj.n_params(),
            theta_rad: self
                .rad
                .as_ref()
                .map(|r| r.l1.n_params() + r.l2.n_params())
                .unwrap_or(0),
            psi_g: self
                .gate
                .as_ref()
                .map(|g| g.l1.n_params() + g.l2.n_params())
                .unwrap_or(0),
            omega_a,
            omega_b,
        }
    }

    /// Human-readable parameter-count dump.
    pub fn summary(&self) -> String {
        let c = self.group_counts();
        let head_desc = match self.config.head {
            HeadKind::Hierarchical => "hierarchical (A: non-tumor/tumor, B: non-viable/viable)",
            HeadKind::Flat3 => "flat 3-class",
        };
        format!(
            "model summary\n\
             backbone: {:?} (input {}px)\n\
             head: {head_desc}\n\
             radiomics fusion: {}\n\
             parameters:\n\
             theta_img : {:>8}\n\
             theta_rad : {:>8}\n\
             psi_g     : {:>8}\n\
             omega_A   : {:>8}\n\
             omega_B   : {:>8}\n\
             total     : {:>8}\n",
            self.config.backbone,
            self.config.backbone.native_input_size(),
            if self.config.use_radiomics {
                "on"
            } else {
                "off"
            },
            c.theta_img,
            c.theta_rad,
            c.psi_g,
            c.omega_a,
            c.omega_b,
            c.total(),
        )
    }

    pub fn export_state(&mut self) -> Vec<NamedTensor> {
        self.params_mut()
            .into_iter()
            .map(|p| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                data: p.value.iter().copied().collect(),
            })
            .collect()
    }

    pub fn load_state(&mut self, state: &[NamedTensor]) -> Result<()> {
        let mut by_name: std::collections::HashMap<&str, &NamedTensor> =
            state.iter().map(|t| (t.name.as_str(), t)).collect();
        for p in self.params_mut() {
            let t = by_name.remove(p.name.as_str()).ok_or_else(|| {
                Error::IncompatibleCheckpoint(format!("missing tensor {}", p.name))
            })?;
            if t.shape != p.value.shape() {
                return Err(Error::IncompatibleCheckpoint(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    t.name,
                    t.shape,
                    p.value.shape()
                )));
            }
            for (dst, src) in p.value.iter_mut().zip(&t.data) {
                *dst = *src;
            }
        }
        if !by_name.is_empty() {
            return Err(Error::IncompatibleCheckpoint(format!(
                "checkpoint has {} extra tensor(s), e.g. {}",
                by_name.len(),
                by_name.keys().next().unwrap()
            )));
        }
        Ok(())
    }
}

/// Everything needed to restore and evaluate a trained model.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    /// Hash of the producing train configuration.
    pub config_hash: String,
    /// Hash of the split the model was trained under.
    pub split_hash: String,
    pub model_config: ModelConfig,
    pub tensors: Vec<NamedTensor>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub standardizer: Option<FeatureStandardizer>,
}

impl Checkpoint {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))
    }
}
