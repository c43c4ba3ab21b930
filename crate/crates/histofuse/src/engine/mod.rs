//! Joint end-to-end training, validation-based model selection,
//! checkpointing, evaluation, and the ablation grid runner.

mod ablation;
mod store;

pub use ablation::{
    render_report, run_ablation, table1_grid, AblationReport, GridRow, RowReport, FULL_MODEL_ROW,
};
pub use store::TileStore;

use crate::dataset::{
    derive_task_labels, ingest, AugmentationPolicy, SplitSpec, Subset, DEFAULT_PATIENT_REGEX,
};
use crate::error::{Error, Result};
use crate::manifest::content_hash;
use crate::metrics::{metric_table, EvalRecord, MetricTable};
use crate::model::{
    BackboneKind, BatchInput, Checkpoint, HeadKind, HeadProbs, Model, ModelConfig, TinyCnn, Trunk,
    TrunkFeatures,
};
use crate::nn::AdamW;
use crate::objective::{
    self, compute_class_weights, compute_flat3_weights, joint_loss, lambda_grad, ClassWeights,
    UncertaintyParams,
};
use crate::radiomics::{read_feature_cache, FeatureStandardizer, RadiomicFeatureVector};
use ndarray::{Array2, Array4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// One training run's hyperparameters and data wiring. Defaults:
/// AdamW at lr 1e-4, weight decay 1e-4, batch 16,
/// eta 0.2, up to 50 epochs with patience 10 on validation macro-F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub data_dir: PathBuf,
    /// Radiomic feature cache; required when `use_radiomics` is on.
    pub features_csv: Option<PathBuf>,
    /// Cached pretrained-trunk activations; required for pretrained backbones.
    pub trunk_features_csv: Option<PathBuf>,
    pub patient_regex: String,

    pub embed_dim: usize,
    pub backbone: BackboneKind,
    pub head: HeadKind,
    pub use_radiomics: bool,
    /// Uncertainty-weighted multi-task loss on/off (hierarchical head only).
    pub hierarchical_loss: bool,
    pub rad_hidden: usize,
    pub gate_hidden: usize,

    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub eta: f64,
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            data_dir: PathBuf::from("data"),
            features_csv: None,
            trunk_features_csv: None,
            patient_regex: DEFAULT_PATIENT_REGEX.to_string(),
            embed_dim: 256,
            backbone: BackboneKind::Tiny,
            head: HeadKind::Hierarchical,
            use_radiomics: true,
            hierarchical_loss: true,
            rad_hidden: 128,
            gate_hidden: 128,
            lr: 1e-4,
            weight_decay: 1e-4,
            batch_size: 16,
            max_epochs: 50,
            early_stop_patience: 10,
            eta: 0.2,
            augment: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if self.eta <= 0.0 {
            return Err(Error::Config(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.use_radiomics && self.features_csv.is_none() {
            return Err(Error::Config(
                "use_radiomics is on but no features_csv is configured; run `extract` first".into(),
            ));
        }
        if self.backbone.is_pretrained() && self.trunk_features_csv.is_none() {
            return Err(Error::Config(format!(
                "backbone {:?} consumes published pretrained weights; point \
                 trunk_features_csv at a cache of its exported activations or \
                 use the self-contained `tiny` backbone",
                self.backbone
            )));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            embed_dim: self.embed_dim,
            backbone: self.backbone,
            use_radiomics: self.use_radiomics,
            head: self.head,
            rad_hidden: self.rad_hidden,
            gate_hidden: self.gate_hidden,
        }
    }
}

fn subseed(seed: u64, tag: &str, extra: u64) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(tag.as_bytes());
    bytes.extend_from_slice(&extra.to_le_bytes());
    crate::manifest::fnv1a(&bytes)
}

/// Per-epoch training trace row.
#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub is_best: bool,
}

/// Per-step loss component row.
#[derive(Debug, Clone, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub l_a: f64,
    pub l_b: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub joint: f64,
}

pub struct TrainOutput {
    pub checkpoint: Checkpoint,
    pub history: Vec<EpochStats>,
    pub loss_log: Vec<StepStats>,
    pub best_epoch: usize,
    pub best_val_macro_f1: f64,
    /// Test-subset image reads observed during training; stays 0.
    pub test_reads_during_training: usize,
    /// Parameter-count dump of the trained architecture.
    pub model_summary: String,
}

/// Everything loaded once per run: tiles, subset partition, radiomics.
struct RunData {
    store: TileStore,
    train_rows: Vec<usize>,
    val_rows: Vec<usize>,
    /// Standardized features aligned with tile rows (empty when fusion off).
    radiomics: Array2<f64>,
    standardizer: Option<FeatureStandardizer>,
}

fn assemble_run_data(config: &TrainConfig, split: &SplitSpec) -> Result<RunData> {
    let (tiles, _summary) = ingest(&config.data_dir, &config.patient_regex)?;
    if tiles.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no tiles found under {}",
            config.data_dir.display()
        )));
    }
    for t in &tiles {
        if split.subset_of(&t.patient_id).is_none() {
            return Err(Error::Config(format!(
                "patient {} is not assigned to any subset in the split file",
                t.patient_id
            )));
        }
    }
    let store = TileStore::new(tiles, split)?;
    let train_rows = store.rows_of(Subset::Train);
    let val_rows = store.rows_of(Subset::Val);
    if train_rows.is_empty() || val_rows.is_empty() {
        return Err(Error::Config("split leaves train or val empty".into()));
    }

    let (radiomics, standardizer) = if config.use_radiomics {
        let cache_path = config.features_csv.as_ref().unwrap();
        let rows = read_feature_cache(cache_path)?;
        let by_id: HashMap<&str, &RadiomicFeatureVector> = rows
            .iter()
            .map(|r| (r.tile_id.as_str(), &r.features))
            .collect();
        let mut per_tile: Vec<&RadiomicFeatureVector> = Vec::with_capacity(store.len());
        for t in store.tiles() {
            let f = by_id.get(t.tile_id.as_str()).ok_or_else(|| {
                Error::Config(format!(
                    "feature cache {} is missing tile {}; re-run `extract`",
                    cache_path.display(),
                    t.tile_id
                ))
            })?;
            per_tile.push(f);
        }
        let train_vecs: Vec<RadiomicFeatureVector> =
            train_rows.iter().map(|&r| per_tile[r].clone()).collect();
        let standardizer = FeatureStandardizer::fit(&train_vecs)?;
        let mut mat = Array2::zeros((store.len(), crate::radiomics::N_FEATURES));
        for (r, f) in per_tile.iter().enumerate() {
            let z = standardizer.apply(f)?;
            for (c, v) in z.into_iter().enumerate() {
                mat[[r, c]] = v;
            }
        }
        (mat, Some(standardizer))
    } else {
        (Array2::zeros((0, 0)), None)
    };

    Ok(RunData {
        store,
        train_rows,
        val_rows,

        radiomics,
        standardizer,
    })
}

fn build_trunk(config: &TrainConfig, store: &TileStore, rng: &mut ChaCha12Rng) -> Result<Trunk> {
    match config.backbone {
        BackboneKind::Tiny => Ok(Trunk::TinyCnn(TinyCnn::new(rng))),
        _ => {
            let path = config.trunk_features_csv.as_ref().ok_or_else(|| {
                Error::Config("pretrained backbone needs trunk_features_csv".into())
            })?;
            let ids: Vec<String> = store.tiles().iter().map(|t| t.tile_id.clone()).collect();
            Ok(Trunk::Features(TrunkFeatures::from_csv(path, &ids)?))
        }
    }
}

/// Loads, optionally augments, and preprocesses a batch of tile images.
fn image_batch(
    store: &TileStore,
    rows: &[usize],
    backbone: BackboneKind,
    augment_policy: Option<(&AugmentationPolicy, &mut ChaCha12Rng)>,
) -> Result<Array4<f64>> {
    let side = backbone.native_input_size() as usize;
    let mut out = Array4::zeros((rows.len(), 3, side, side));
    match augment_policy {
        Some((policy, rng)) => {
            for (i, &row) in rows.iter().enumerate() {
                let img = store.load_image(row)?;
                let img = crate::dataset::augment(&img, policy, rng);
                let t = crate::dataset::preprocess(&img, backbone);
                out.index_axis_mut(ndarray::Axis(0), i).assign(&t);
            }
        }
        None => {
            for (i, &row) in rows.iter().enumerate() {
                let img = store.load_image(row)?;
                let t = crate::dataset::preprocess(&img, backbone);
                out.index_axis_mut(ndarray::Axis(0), i).assign(&t);
            }
        }
    }
    Ok(out)
}

fn radiomics_batch(all: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), all.ncols()));
    for (i, &r) in rows.iter().enumerate() {
        out.row_mut(i).assign(&all.row(r));
    }
    out
}

/// How the batch loss is assembled from the head probabilities.
pub enum LossMode {
    /// Uncertainty-weighted hierarchical multi-task objective.
    HierUncertainty { weights: ClassWeights, eta: f64 },
    /// Two-head objective with fixed equal task weights.
    HierFixed { weights: ClassWeights },
    /// Flat weighted 3-class cross-entropy.
    Flat { weights: [f64; 3] },
}

/// Loss values only, no gradients: used by finite-difference checks and
/// diagnostics. Returns `(L_A, L_B, joint)`; the flat mode reports its loss
/// in the first and last slots.
pub fn forward_loss(
    model: &Model,
    lambdas: (f64, f64),
    mode: &LossMode,
    batch: &BatchInput,
    labels: &[u8],
) -> Result<(f64, f64, f64)> {
    let trace = model.forward(batch)?;
    match (&trace.probs, mode) {
        (HeadProbs::Flat { p3 }, LossMode::Flat { weights }) => {
            let l = objective::flat3_loss(p3, labels, weights);
            Ok((l, 0.0, l))
        }
        (HeadProbs::Hier { p_a, p_b }, LossMode::HierUncertainty { weights, eta }) => {
            let y_a: Vec<u8> = labels.iter().map(|&l| derive_task_labels(l).y_a).collect();
            let y_b: Vec<Option<u8>> = labels.iter().map(|&l| derive_task_labels(l).y_b).collect();
            let l_a = objective::loss_a(p_a, &y_a, &weights.beta_a);
            let l_b = objective::loss_b(p_b, &y_b, &weights.beta_b);
            Ok((l_a, l_b, joint_loss(l_a, l_b, lambdas.0, lambdas.1, *eta)))
        }
        (HeadProbs::Hier { p_a, p_b }, LossMode::HierFixed { weights }) => {
            let y_a: Vec<u8> = labels.iter().map(|&l| derive_task_labels(l).y_a).collect();
            let y_b: Vec<Option<u8>> = labels.iter().map(|&l| derive_task_labels(l).y_b).collect();
            let l_a = objective::loss_a(p_a, &y_a, &weights.beta_a);
            let l_b = objective::loss_b(p_b, &y_b, &weights.beta_b);
            Ok((l_a, l_b, l_a + l_b))
        }
        _ => Err(Error::Config(
            "loss mode does not match the model's head kind".into(),
        )),
    }
}

/// Forward + loss + parameter gradients for one batch (no optimizer step).
/// Returns `(L_A, L_B, joint)`; for the flat mode `L_A` carries the loss
/// and `L_B` is zero.
pub fn backward_step(
    model: &mut Model,
    lambdas: &mut UncertaintyParams,
    mode: &LossMode,
    batch: &BatchInput,
    labels: &[u8],
) -> Result<(f64, f64, f64)> {
    let trace = model.forward(batch)?;
    let n = labels.len();
    match (&trace.probs, mode) {
        (HeadProbs::Flat { p3 }, LossMode::Flat { weights }) => {
            let l = objective::flat3_loss(p3, labels, weights);
            let mut g = Array2::zeros((n, 3));
            for (i, &y) in labels.iter().enumerate() {
                let w = weights[y as usize] / n as f64;
                for j in 0..3 {
                    let onehot = if j == y as usize { 1.0 } else { 0.0 };
                    g[[i, j]] = w * (p3[[i, j]] - onehot);
                }
            }
            model.backward_flat(&trace, &g);
            Ok((l, 0.0, l))
        }
        (HeadProbs::Hier { p_a, p_b }, LossMode::HierUncertainty { weights, eta }) => {
            let (l_a, l_b, g_a, g_b, n_b) = hier_losses_and_grads(p_a, p_b, labels, weights);
            let (la_val, lb_val) = (lambdas.lambda_a(), lambdas.lambda_b());
            let joint = joint_loss(l_a, l_b, la_val, lb_val, *eta);
            let scale_a = (-la_val).exp();
            let scale_b = (-lb_val).exp();
            let g_a = g_a.mapv(|v| v * scale_a);
            let g_b = g_b.mapv(|v| v * scale_b);
            model.backward_hier(&trace, &g_a, &g_b);
            let zero = ndarray::IxDyn(&[]);
            lambdas.lambda_a.grad[zero.clone()] += lambda_grad(l_a, la_val, *eta);
            // an empty fine-task batch must not drag lambda_b via the eta term alone:
            // the gradient formula still applies, with L_B = 0
            lambdas.lambda_b.grad[zero] += if n_b == 0 {
                lambda_grad(0.0, lb_val, *eta)
            } else {
                lambda_grad(l_b, lb_val, *eta)
            };
            Ok((l_a, l_b, joint))
        }
        (HeadProbs::Hier { p_a, p_b }, LossMode::HierFixed { weights }) => {
            let (l_a, l_b, g_a, g_b, _) = hier_losses_and_grads(p_a, p_b, labels, weights);
            let joint = l_a + l_b;
            model.backward_hier(&trace, &g_a, &g_b);
            Ok((l_a, l_b, joint))
        }
        _ => Err(Error::Config(
            "loss mode does not match the model's head kind".into(),
        )),
    }
}

/// Weighted CE values and logit gradients for both heads (no task scaling).
fn hier_losses_and_grads(
    p_a: &Array2<f64>,
    p_b: &Array2<f64>,
    labels: &[u8],
    weights: &ClassWeights,
) -> (f64, f64, Array2<f64>, Array2<f64>, usize) {
    let n = labels.len();
    let y_a: Vec<u8> = labels.iter().map(|&l| derive_task_labels(l).y_a).collect();
    let y_b: Vec<Option<u8>> = labels.iter().map(|&l| derive_task_labels(l).y_b).collect();
    let l_a = objective::loss_a(p_a, &y_a, &weights.beta_a);
    let l_b = objective::loss_b(p_b, &y_b, &weights.beta_b);

    let mut g_a = Array2::zeros((n, 2));
    for (i, &ya) in y_a.iter().enumerate() {
        let w = weights.beta_a[ya as usize] / n as f64;
        for j in 0..2 {
            let onehot = if j == ya as usize { 1.0 } else { 0.0 };
            g_a[[i, j]] = w * (p_a[[i, j]] - onehot);
        }
    }
    let n_b = y_b.iter().filter(|y| y.is_some()).count();
    let mut g_b = Array2::zeros((n, 2));
    if n_b > 0 {
        for (i, yb) in y_b.iter().enumerate() {
            if let Some(yb) = yb {
                let w = weights.beta_b[*yb as usize] / n_b as f64;
                for j in 0..2 {
                    let onehot = if j == *yb as usize { 1.0 } else { 0.0 };
                    g_b[[i, j]] = w * (p_b[[i, j]] - onehot);
                }
            }
        }
    }
    (l_a, l_b, g_a, g_b, n_b)
}

/// Inference over a subset: no augmentation, no parameter mutation.
fn eval_records(
    model: &Model,
    store: &TileStore,
    rows: &[usize],
    radiomics: &Array2<f64>,
    config: &TrainConfig,
) -> Result<Vec<EvalRecord>> {
    let mut records = Vec::with_capacity(rows.len());
    let needs_images = matches!(config.backbone, BackboneKind::Tiny);
    for chunk in rows.chunks(config.batch_size.max(1)) {
        let images = if needs_images {
            Some(image_batch(store, chunk, config.backbone, None)?)
        } else {
            None
        };
        let rad = if config.use_radiomics {
            Some(radiomics_batch(radiomics, chunk))
        } else {
            None
        };
        let trace = model.forward(&BatchInput {
            images: images.as_ref(),
            tile_rows: chunk,
            radiomics: rad.as_ref(),
        })?;
        let d3 = trace.probs.dist3();
        for (i, &row) in chunk.iter().enumerate() {
            let tile = &store.tiles()[row];
            // renormalize away accumulated float error before validation
            let mut dist = [d3[[i, 0]], d3[[i, 1]], d3[[i, 2]]];
            let s: f64 = dist.iter().sum();
            if s > 0.0 {
                for d in &mut dist {
                    *d /= s;
                }
            }
            records.push(EvalRecord::new(tile.tile_id.clone(), tile.label, dist)?);
        }
    }
    Ok(records)
}

/// Trains one configuration on one seed and returns the best-validation
/// checkpoint plus full traces. Deterministic for fixed inputs.
pub fn train_one(config: &TrainConfig, split: &SplitSpec, seed: u64) -> Result<TrainOutput> {
    config.validate()?;
    let data = assemble_run_data(config, split)?;
    let train_labels: Vec<u8> = data
        .train_rows
        .iter()
        .map(|&r| data.store.tiles()[r].label)
        .collect();

    let mode = match (config.head, config.hierarchical_loss) {
        (HeadKind::Flat3, _) => LossMode::Flat {
            weights: compute_flat3_weights(&train_labels)?,
        },
        (HeadKind::Hierarchical, true) => LossMode::HierUncertainty {
            weights: compute_class_weights(&train_labels)?,
            eta: config.eta,
        },
        (HeadKind::Hierarchical, false) => LossMode::HierFixed {
            weights: compute_class_weights(&train_labels)?,
        },
    };

    let mut init_rng = ChaCha12Rng::seed_from_u64(subseed(seed, "init", 0));
    let trunk = build_trunk(config, &data.store, &mut init_rng)?;
    let mut model = Model::new(config.model_config(), trunk, &mut init_rng)?;
    let model_summary = model.summary();
    let mut lambdas = UncertaintyParams::new();
    let learn_lambdas = matches!(mode, LossMode::HierUncertainty { .. });

    let mut optimizer = AdamW::new(config.lr, config.weight_decay);
    let policy = AugmentationPolicy {
        enabled: config.augment,
        ..Default::default()
    };

    let mut history = Vec::new();
    let mut loss_log = Vec::new();
    let mut best_state: Option<(Vec<crate::model::NamedTensor>, f64, f64)> = None;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut epochs_since_best = 0usize;
    let mut step = 0usize;
    let needs_images = matches!(config.backbone, BackboneKind::Tiny);

    for epoch in 0..config.max_epochs {
        let mut order = data.train_rows.clone();
        let mut shuffle_rng = ChaCha12Rng::seed_from_u64(subseed(seed, "shuffle", epoch as u64));
        order.shuffle(&mut shuffle_rng);
        let mut aug_rng = ChaCha12Rng::seed_from_u64(subseed(seed, "augment", epoch as u64));

        let mut epoch_loss = 0.0;
        let mut n_steps = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let images = if needs_images {
                Some(image_batch(
                    &data.store,
                    chunk,
                    config.backbone,
                    Some((&policy, &mut aug_rng)),
                )?)
            } else {
                None
            };
            let rad = if config.use_radiomics {
                Some(radiomics_batch(&data.radiomics, chunk))
            } else {
                None
            };
            let labels: Vec<u8> = chunk.iter().map(|&r| data.store.tiles()[r].label).collect();

            model.zero_grads();
            lambdas.lambda_a.zero_grad();
            lambdas.lambda_b.zero_grad();
            let (l_a, l_b, joint) = backward_step(
                &mut model,
                &mut lambdas,
                &mode,
                &BatchInput {
                    images: images.as_ref(),
                    tile_rows: chunk,
                    radiomics: rad.as_ref(),
                },
                &labels,
            )?;
            if !joint.is_finite() {
                let ids: Vec<&str> = chunk
                    .iter()
                    .map(|&r| data.store.tiles()[r].tile_id.as_str())
                    .collect();
                return Err(Error::NonFiniteLoss(format!(
                    "step {step}: joint loss {joint} (L_A={l_a}, L_B={l_b}); batch tiles: {ids:?}"
                )));
            }

            let mut params = model.params_mut();
            if learn_lambdas {
                params.push(&mut lambdas.lambda_a);
                params.push(&mut lambdas.lambda_b);
            }
            optimizer.step(&mut params);

            loss_log.push(StepStats {
                step,
                l_a,
                l_b,
                lambda_a: lambdas.lambda_a(),
                lambda_b: lambdas.lambda_b(),
                joint,
            });
            epoch_loss += joint;
            n_steps += 1;
            step += 1;
        }

        let val_records =
            eval_records(&model, &data.store, &data.val_rows, &data.radiomics, config)?;
        let val_f1 = crate::metrics::f1_scores(&val_records)?.macro_f1;
        let is_best = val_f1 > best_val;
        if is_best {
            best_val = val_f1;
            best_epoch = epoch;
            epochs_since_best = 0;
            best_state = Some((model.export_state(), lambdas.lambda_a(), lambdas.lambda_b()));
        } else {
            epochs_since_best += 1;
        }
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n_steps.max(1) as f64,
            val_macro_f1: val_f1,
            lambda_a: lambdas.lambda_a(),
            lambda_b: lambdas.lambda_b(),
            is_best,
        });
        if epochs_since_best >= config.early_stop_patience {
            break;
        }
    }

    let (tensors, lambda_a, lambda_b) =
        best_state.expect("at least one epoch ran, so a best state exists");
    let checkpoint = Checkpoint {
        config_hash: content_hash(&(config, seed)),
        split_hash: content_hash(split),
        model_config: config.model_config(),
        tensors,
        lambda_a,
        lambda_b,
        standardizer: data.standardizer.clone(),
    };
    Ok(TrainOutput {
        checkpoint,
        history,
        loss_log,
        best_epoch,
        best_val_macro_f1: best_val,
        model_summary,
        test_reads_during_training: data.store.access_counts()[2],
    })
}

/// Restores a checkpoint and evaluates one subset. Refuses checkpoints from
/// a different split and never refits the standardizer.
pub fn evaluate(
    checkpoint: &Checkpoint,
    config: &TrainConfig,
    split: &SplitSpec,
    subset: Subset,
) -> Result<(MetricTable, Vec<EvalRecord>)> {
    if checkpoint.split_hash != content_hash(split) {
        return Err(Error::IncompatibleCheckpoint(
            "checkpoint was trained under a different split".into(),
        ));
    }
    if checkpoint.model_config != config.model_config() {
        return Err(Error::IncompatibleCheckpoint(
            "checkpoint model configuration differs from the requested one".into(),
        ));
    }
    let (tiles, _) = ingest(&config.data_dir, &config.patient_regex)?;
    let store = TileStore::new(tiles, split)?;
    let rows = store.rows_of(subset);
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "subset {} is empty",
            subset.name()
        )));
    }

    let radiomics = if config.use_radiomics {
        let standardizer = checkpoint.standardizer.as_ref().ok_or_else(|| {
            Error::IncompatibleCheckpoint("checkpoint lacks the radiomics standardizer".into())
        })?;
        let cache_path = config.features_csv.as_ref().ok_or_else(|| {
            Error::Config("use_radiomics is on but no features_csv is configured".into())
        })?;
        let cache = read_feature_cache(cache_path)?;
        let by_id: HashMap<&str, &RadiomicFeatureVector> = cache
            .iter()
            .map(|r| (r.tile_id.as_str(), &r.features))
            .collect();
        let mut mat = Array2::zeros((store.len(), crate::radiomics::N_FEATURES));
        for (r, t) in store.tiles().iter().enumerate() {
            let f = by_id.get(t.tile_id.as_str()).ok_or_else(|| {
                Error::Config(format!("feature cache is missing tile {}", t.tile_id))
            })?;
            let z = standardizer.apply(f)?;
            for (c, v) in z.into_iter().enumerate() {
                mat[[r, c]] = v;
            }
        }
        mat
    } else {
        Array2::zeros((0, 0))
    };

    let mut init_rng = ChaCha12Rng::seed_from_u64(0);
    let trunk = build_trunk(config, &store, &mut init_rng)?;
    let mut model = Model::new(checkpoint.model_config.clone(), trunk, &mut init_rng)?;
    model.load_state(&checkpoint.tensors)?;

    let records = eval_records(&model, &store, &rows, &radiomics, config)?;
    let table = metric_table(&records)?;
    Ok((table, records))
}

/// Writes `history.csv` for a run directory.
pub fn write_history_csv(path: &Path, history: &[EpochStats]) -> Result<()> {
    use std::io::Write;
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(
        out,
        "epoch,train_loss,val_macro_f1,lambda_a,lambda_b,is_best"
    )
    .map_err(|e| Error::io(path, e))?;
    for h in history {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            h.epoch, h.train_loss, h.val_macro_f1, h.lambda_a, h.lambda_b, h.is_best as u8
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes `loss_components.csv` (`step,L_A,L_B,lambda_A,lambda_B,joint`).
pub fn write_loss_csv(path: &Path, log: &[StepStats]) -> Result<()> {
    use std::io::Write;
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(out, "step,L_A,L_B,lambda_A,lambda_B,joint").map_err(|e| Error::io(path, e))?;
    for s in log {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.step, s.l_a, s.l_b, s.lambda_a, s.lambda_b, s.joint
        )
        .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Metrics JSON wire format: overall, per-class, number of runs, and the
/// producing config hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub overall: crate::metrics::OverallMetrics,
    pub per_class: Vec<crate::metrics::PerClassMetrics>,
    pub runs: usize,
    pub config_hash: String,
}

impl MetricsFile {
    pub fn from_table(table: &MetricTable, runs: usize, config_hash: &str) -> Self {
        MetricsFile {
            overall: table.overall,
            per_class: table.per_class.to_vec(),
            runs,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}
