//! Acceptance suite: one test per release criterion, each printing its
//! pass/fail line through the harness. The slow end-to-end criteria build
//! synthetic datasets in temp directories and train real models on the CPU.

mod common;

use histofuse::dataset::{
    derive_task_labels, ingest, patient_split, split_table, synth_generate, LabeledTile, SplitSpec,
    Subset, SynthConfig, DEFAULT_PATIENT_REGEX,
};
use histofuse::engine::{backward_step, evaluate, forward_loss, train_one, LossMode, TrainConfig};
use histofuse::metrics::{accuracy, auc_binary, f1_scores, sen_at_spe, spe_at_sen, EvalRecord};
use histofuse::model::{
    compose_dist3, BackboneKind, BatchInput, HeadKind, Model, ModelConfig, TinyMlp, Trunk,
};
use histofuse::objective::{
    compute_class_weights, joint_loss, lambda_grad, ClassWeights, UncertaintyParams,
};
use histofuse::radiomics::{extract_with_mask, feature_names, N_FEATURES};
use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn assert_within(elapsed: std::time::Duration, budget_s: u64, what: &str) {
    assert!(
        elapsed.as_secs() < budget_s,
        "{what} took {elapsed:?}, budget {budget_s}s"
    );
}

#[test]
fn criterion_01_hierarchical_normalization() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let la: [f64; 2] = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
        let lb: [f64; 2] = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
        let softmax2 = |l: [f64; 2]| {
            let m = l[0].max(l[1]);
            let e = [(l[0] - m).exp(), (l[1] - m).exp()];
            let s = e[0] + e[1];
            [e[0] / s, e[1] / s]
        };
        let dist3 = compose_dist3(softmax2(la), softmax2(lb));
        let total: f64 = dist3.iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-6,
            "dist3 {dist3:?} sums to {total}"
        );
        assert!(dist3.iter().all(|p| *p >= 0.0));
    }
    assert_within(start.elapsed(), 1, "criterion 1");
}

#[test]
fn criterion_02_class_weight_oracle() {
    let start = Instant::now();
    let mut labels = vec![0u8; 536];
    labels.extend(vec![1u8; 263]);
    labels.extend(vec![2u8; 345]);
    let w = compute_class_weights(&labels).unwrap();
    // task A counts (536, 608), task B counts (263, 345)
    assert!(
        (w.beta_a[0] - 1.0629).abs() < 1e-4,
        "beta_a0 {}",
        w.beta_a[0]
    );
    assert!(
        (w.beta_a[1] - 0.9371).abs() < 1e-4,
        "beta_a1 {}",
        w.beta_a[1]
    );
    assert!(
        (w.beta_b[0] - 1.1349).abs() < 1e-4,
        "beta_b0 {}",
        w.beta_b[0]
    );
    assert!(
        (w.beta_b[1] - 0.8651).abs() < 1e-4,
        "beta_b1 {}",
        w.beta_b[1]
    );
    assert_within(start.elapsed(), 1, "criterion 2");
}

#[test]
fn criterion_03_joint_loss_values() {
    let start = Instant::now();
    assert_eq!(joint_loss(1.0, 1.0, 0.0, 0.0, 0.2), 2.0);
    let l = joint_loss(1.0, 0.5, std::f64::consts::LN_2, 0.0, 0.2);
    assert!((l - 1.13863).abs() <= 1e-5, "joint loss {l}");
    assert_within(start.elapsed(), 1, "criterion 3");
}

/// Builds the d=4 toy multimodal model with a 2-pixel fake image encoder.
fn toy_setup(
    seed: u64,
) -> (
    Model,
    UncertaintyParams,
    ClassWeights,
    Array4<f64>,
    Array2<f64>,
    Vec<u8>,
) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let config = ModelConfig {
        embed_dim: 4,
        backbone: BackboneKind::Tiny,
        use_radiomics: true,
        head: HeadKind::Hierarchical,
        rad_hidden: 8,
        gate_hidden: 8,
    };
    let trunk = Trunk::TinyMlp(TinyMlp::new(6, 5, &mut rng));
    let model = Model::new(config, trunk, &mut rng).unwrap();
    let mut lambdas = UncertaintyParams::new();
    let ix = ndarray::IxDyn(&[]);
    lambdas.lambda_a.value[ix.clone()] = rng.random_range(-0.5..0.5);
    lambdas.lambda_b.value[ix] = rng.random_range(-0.5..0.5);
    let weights = ClassWeights {
        beta_a: [1.0629, 0.9371],
        beta_b: [1.1349, 0.8651],
    };
    // 2-pixel RGB images, all three classes in the batch
    let images = Array4::from_shape_fn((5, 3, 1, 2), |_| rng.random_range(-1.0..1.0));
    let rad = Array2::from_shape_fn((5, N_FEATURES), |_| rng.random_range(-1.5..1.5));
    let labels = vec![0u8, 1, 2, 1, 0];
    (model, lambdas, weights, images, rad, labels)
}

#[test]
fn criterion_04_gradient_check_full_objective() {
    let start = Instant::now();
    const FD_EPS: f64 = 1e-5;
    let mut checked = 0usize;
    for point in 0..20 {
        let (mut model, mut lambdas, weights, images, rad, labels) = toy_setup(4000 + point);
        let mode = LossMode::HierUncertainty { weights, eta: 0.2 };
        let rows: Vec<usize> = (0..labels.len()).collect();
        let batch = BatchInput {
            images: Some(&images),
            tile_rows: &rows,
            radiomics: Some(&rad),
        };

        model.zero_grads();
        lambdas.lambda_a.zero_grad();
        lambdas.lambda_b.zero_grad();
        backward_step(&mut model, &mut lambdas, &mode, &batch, &labels).unwrap();
        let lam = (lambdas.lambda_a(), lambdas.lambda_b());

        // collect the analytic gradient of every parameter group + lambdas
        let analytic: Vec<(String, Vec<f64>)> = model
            .params_mut()
            .into_iter()
            .map(|p| (p.name.clone(), p.grad.iter().copied().collect()))
            .chain([
                (
                    "lambda_a".to_string(),
                    vec![lambdas.lambda_a.grad[ndarray::IxDyn(&[])]],
                ),
                (
                    "lambda_b".to_string(),
                    vec![lambdas.lambda_b.grad[ndarray::IxDyn(&[])]],
                ),
            ])
            .collect();

        // finite differences over model parameters
        let n_params = model.params_mut().len();
        for pi in 0..n_params {
            let n_elems = model.params_mut()[pi].len();
            for e in 0..n_elems {
                let orig = model.params_mut()[pi].value.as_slice().unwrap()[e];
                model.params_mut()[pi].value.as_slice_mut().unwrap()[e] = orig + FD_EPS;
                let (_, _, lp) = forward_loss(&model, lam, &mode, &batch, &labels).unwrap();
                model.params_mut()[pi].value.as_slice_mut().unwrap()[e] = orig - FD_EPS;
                let (_, _, lm) = forward_loss(&model, lam, &mode, &batch, &labels).unwrap();
                model.params_mut()[pi].value.as_slice_mut().unwrap()[e] = orig;
                let numeric = (lp - lm) / (2.0 * FD_EPS);
                let a = analytic[pi].1[e];
                let denom = a.abs().max(numeric.abs());
                assert!(
                    (a - numeric).abs() <= 1e-3 * denom + 1e-6,
                    "point {point} param {} [{e}]: analytic {a} vs numeric {numeric}",
                    analytic[pi].0
                );
                checked += 1;
            }
        }
        // finite differences over the log-variances
        for (which, idx) in [("lambda_a", 0usize), ("lambda_b", 1usize)] {
            let (la, lb) = lam;
            let (lp_lam, lm_lam) = if idx == 0 {
                ((la + FD_EPS, lb), (la - FD_EPS, lb))
            } else {
                ((la, lb + FD_EPS), (la, lb - FD_EPS))
            };
            let (_, _, lp) = forward_loss(&model, lp_lam, &mode, &batch, &labels).unwrap();
            let (_, _, lm) = forward_loss(&model, lm_lam, &mode, &batch, &labels).unwrap();
            let numeric = (lp - lm) / (2.0 * FD_EPS);
            let a = analytic[n_params + idx].1[0];
            let denom = a.abs().max(numeric.abs());
            assert!(
                (a - numeric).abs() <= 1e-3 * denom + 1e-6,
                "point {point} {which}: analytic {a} vs numeric {numeric}"
            );
            checked += 1;
        }
    }
    assert!(checked > 5000, "only {checked} gradient entries checked");
    assert_within(start.elapsed(), 30, "criterion 4");
}

#[test]
fn criterion_05_lambda_stationarity() {
    let start = Instant::now();
    let mut lambda = 0.0f64;
    for _ in 0..20_000 {
        lambda -= 0.01 * lambda_grad(1.0, lambda, 0.2);
    }
    let expected = (5.0f64).ln();
    assert!(
        (lambda - expected).abs() <= 1e-3,
        "lambda converged to {lambda}, expected ln 5 = {expected}"
    );
    assert_within(start.elapsed(), 5, "criterion 5");
}

// -------- criterion 6 oracles --------

fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0f64;
    let mut total = 0.0f64;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            total += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / total
}

fn dense_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    let mut t = vec![s[0] - 1.0];
    for w in s.windows(2) {
        t.push(w[0]);
        t.push((w[0] + w[1]) / 2.0);
    }
    t.push(s[s.len() - 1]);
    t.push(s[s.len() - 1] + 1.0);
    t
}

fn sen_spe_at_threshold(scores: &[f64], labels: &[bool], t: f64) -> (f64, f64) {
    let (mut tp, mut fn_, mut tn, mut fp) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (l, s > t) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    (tp as f64 / (tp + fn_) as f64, tn as f64 / (tn + fp) as f64)
}

fn sen_at_spe_brute(scores: &[f64], labels: &[bool], floor: f64) -> f64 {
    dense_thresholds(scores)
        .into_iter()
        .map(|t| sen_spe_at_threshold(scores, labels, t))
        .filter(|&(_, spe)| spe >= floor)
        .map(|(sen, _)| sen)
        .fold(0.0, f64::max)
}

fn spe_at_sen_brute(scores: &[f64], labels: &[bool], floor: f64) -> f64 {
    dense_thresholds(scores)
        .into_iter()
        .map(|t| sen_spe_at_threshold(scores, labels, t))
        .filter(|&(sen, _)| sen >= floor)
        .map(|(_, spe)| spe)
        .fold(0.0, f64::max)
}

fn f1_brute(records: &[EvalRecord]) -> ([f64; 3], f64, f64) {
    let mut per = [0.0; 3];
    let mut support = [0.0; 3];
    for class in 0..3usize {
        let tp = records
            .iter()
            .filter(|r| r.true_label as usize == class && r.predicted as usize == class)
            .count() as f64;
        let fp = records
            .iter()
            .filter(|r| r.true_label as usize != class && r.predicted as usize == class)
            .count() as f64;
        let fn_ = records
            .iter()
            .filter(|r| r.true_label as usize == class && r.predicted as usize != class)
            .count() as f64;
        support[class] = records
            .iter()
            .filter(|r| r.true_label as usize == class)
            .count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        per[class] = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    let macro_f1 = (per[0] + per[1] + per[2]) / 3.0;
    let n: f64 = support.iter().sum();
    let weighted = per[0] * support[0] / n + per[1] * support[1] / n + per[2] * support[2] / n;
    (per, macro_f1, weighted)
}

#[test]
fn criterion_06_metric_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(606);
    let mut binary_instances = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        // quantize to force ties
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0.0..1.0f64) * 8.0).round() / 8.0)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if !labels.contains(&true) || !labels.contains(&false) {
            continue;
        }
        binary_instances += 1;
        let auc = auc_binary(&scores, &labels).unwrap();
        assert_eq!(auc, auc_pairwise(&scores, &labels), "AUC mismatch");
        let s = sen_at_spe(&scores, &labels, 0.9).unwrap();
        assert_eq!(
            s,
            sen_at_spe_brute(&scores, &labels, 0.9),
            "Sen@Spe mismatch"
        );
        let s = spe_at_sen(&scores, &labels, 0.9).unwrap();
        assert_eq!(
            s,
            spe_at_sen_brute(&scores, &labels, 0.9),
            "Spe@Sen mismatch"
        );
    }
    assert!(binary_instances >= 80, "too few usable instances");

    // F1 family on random three-class records
    for _ in 0..100 {
        let n = rng.random_range(3..=50);
        let records: Vec<EvalRecord> = (0..n)
            .map(|i| {
                let a: f64 = rng.random_range(0.01..1.0);
                let b: f64 = rng.random_range(0.0..(1.0 - a));
                let dist = [a, b, 1.0 - a - b];
                EvalRecord::new(format!("t{i}"), rng.random_range(0..3u32) as u8, dist).unwrap()
            })
            .collect();
        let got = f1_scores(&records).unwrap();
        let (per, macro_f1, weighted) = f1_brute(&records);
        assert_eq!(got.per_class, per);
        assert_eq!(got.macro_f1, macro_f1);
        assert_eq!(got.weighted_f1, weighted);
        let acc = accuracy(&records).unwrap();
        let brute_acc = records
            .iter()
            .filter(|r| r.predicted == r.true_label)
            .count() as f64
            / n as f64;
        assert_eq!(acc, brute_acc);
    }
    assert_within(start.elapsed(), 10, "criterion 6");
}

#[derive(serde::Deserialize)]
struct OracleFixture {
    feature_names: Vec<String>,
    tiles: Vec<OracleTile>,
}

#[derive(serde::Deserialize)]
struct OracleTile {
    id: usize,
    expected: Vec<f64>,
}

#[test]
fn criterion_07_radiomics_reference_oracle() {
    let start = Instant::now();
    let fixture_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/radiomics_oracle.json");
    let fixture: OracleFixture =
        serde_json::from_str(&std::fs::read_to_string(&fixture_path).unwrap()).unwrap();
    assert_eq!(fixture.feature_names, feature_names());
    let tiles = common::oracle_tiles(20);
    assert_eq!(fixture.tiles.len(), tiles.len());
    for oracle in &fixture.tiles {
        let (gray, mask) = &tiles[oracle.id];
        let got = extract_with_mask(gray, mask).unwrap();
        for (f, (g, e)) in got.values.iter().zip(&oracle.expected).enumerate() {
            let denom = e.abs().max(1e-9);
            assert!(
                ((g - e).abs() / denom) <= 1e-4,
                "tile {} feature {} ({}): got {g}, reference {e}",
                oracle.id,
                f,
                fixture.feature_names[f]
            );
        }
    }
    assert_within(start.elapsed(), 60, "criterion 7");
}

/// Writes the tile/mask dump consumed by tools/radiomics_reference.py.
/// Run explicitly when regenerating the fixture:
/// `cargo test -p histofuse --test acceptance dump_radiomics -- --ignored`
#[test]
#[ignore]
fn dump_radiomics_oracle_inputs() {
    let tiles = common::oracle_tiles(20);
    let dump: Vec<serde_json::Value> = tiles
        .iter()
        .enumerate()
        .map(|(id, (gray, mask))| {
            serde_json::json!({
                "id": id,
                "height": gray.pixels.nrows(),
                "width": gray.pixels.ncols(),
                "gray": gray.pixels.iter().copied().collect::<Vec<f64>>(),
                "mask": mask.mask.iter().map(|&b| b as u8).collect::<Vec<u8>>(),
            })
        })
        .collect();
    let out = serde_json::json!({ "tiles": dump });
    std::fs::write(
        "/tmp/radiomics_oracle_dump.json",
        serde_json::to_string(&out).unwrap(),
    )
    .unwrap();
    eprintln!("wrote /tmp/radiomics_oracle_dump.json");
}

fn synthetic_cohort_tiles() -> Vec<LabeledTile> {
    // patients with heterogeneous sizes and class mixes, no disk I/O
    let mut tiles = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(808);
    for p in 0..12 {
        let patient = format!("case-{p:03}");
        let n = rng.random_range(10..40);
        for t in 0..n {
            let label = if t < 3 {
                t as u8
            } else {
                rng.random_range(0..3u32) as u8
            };
            tiles.push(LabeledTile {
                tile_id: format!("{patient}_t{t:03}"),
                patient_id: patient.clone(),
                image_path: PathBuf::from("unused.png"),
                label,
            });
        }
    }
    tiles
}

#[test]
fn criterion_08_split_leakage_and_coverage() {
    let start = Instant::now();
    let tiles = synthetic_cohort_tiles();
    for seed in 0..100u64 {
        let split = patient_split(&tiles, (0.7, 0.1, 0.2), seed).unwrap();
        assert!(
            split.train.is_disjoint(&split.val),
            "seed {seed}: train/val overlap"
        );
        assert!(
            split.train.is_disjoint(&split.test),
            "seed {seed}: train/test overlap"
        );
        assert!(
            split.val.is_disjoint(&split.test),
            "seed {seed}: val/test overlap"
        );
        let table = split_table(&tiles, &split);
        for (si, (_, classes)) in table.iter().enumerate() {
            for (c, &count) in classes.iter().enumerate() {
                assert!(count > 0, "seed {seed}: class {c} missing from subset {si}");
            }
        }
    }
    assert_within(start.elapsed(), 10, "criterion 8");
}

/// Shared scaffolding for the end-to-end criteria: synth data, features,
/// split, and a ready-to-run train config.
fn desk_scale_setup(dir: &Path, synth: &SynthConfig, split_seed: u64) -> (TrainConfig, SplitSpec) {
    let data_dir = dir.join("data");
    synth_generate(&data_dir, synth).unwrap();
    let (tiles, _) = ingest(&data_dir, DEFAULT_PATIENT_REGEX).unwrap();

    let features_csv = dir.join("features.csv");
    let mut rows = Vec::new();
    for tile in &tiles {
        let img = histofuse::imaging::load_rgb(&tile.image_path).unwrap();
        rows.push(histofuse::radiomics::FeatureCacheRow {
            tile_id: tile.tile_id.clone(),
            patient_id: tile.patient_id.clone(),
            label: tile.label,
            features: histofuse::radiomics::extract(&img).unwrap(),
        });
    }
    histofuse::radiomics::write_feature_cache(&features_csv, &rows).unwrap();

    let split = patient_split(&tiles, (0.7, 0.1, 0.2), split_seed).unwrap();

    let config = TrainConfig {
        data_dir,
        features_csv: Some(features_csv),
        embed_dim: 32,
        backbone: BackboneKind::Tiny,
        head: HeadKind::Hierarchical,
        use_radiomics: true,
        hierarchical_loss: true,
        rad_hidden: 32,
        gate_hidden: 32,
        lr: 1e-3,
        batch_size: 16,
        max_epochs: 40,
        early_stop_patience: 10,
        ..Default::default()
    };
    (config, split)
}

#[test]
fn criterion_09_synthetic_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        n_patients: 10,
        tiles_per_patient: 30,
        seed: 7,
        ..Default::default()
    };
    let (config, split) = desk_scale_setup(dir.path(), &synth, 1);

    let output = train_one(&config, &split, 1).unwrap();
    assert_eq!(
        output.test_reads_during_training, 0,
        "test tiles were read during training"
    );
    let (table, _) = evaluate(&output.checkpoint, &config, &split, Subset::Test).unwrap();
    println!(
        "criterion 9: test macro-F1 {:.4} (accuracy {:.4}) after {} epochs",
        table.overall.f1_macro,
        table.overall.accuracy,
        output.history.len()
    );
    assert!(
        table.overall.f1_macro >= 0.90,
        "test macro-F1 {} < 0.90",
        table.overall.f1_macro
    );
    // lambda trajectory stays bounded under eta = 0.2
    for h in &output.history {
        assert!(h.lambda_a.abs() < 10.0 && h.lambda_b.abs() < 10.0);
    }
    assert_within(start.elapsed(), 300, "criterion 9");
}

#[test]
fn criterion_10_ablation_trend_on_imbalanced_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        n_patients: 10,
        tiles_per_patient: 30,
        seed: 21,
        class_probs: {
            let total = 536.0 + 263.0 + 345.0;
            [536.0 / total, 263.0 / total, 345.0 / total]
        },
        ..Default::default()
    };
    let (base, split) = desk_scale_setup(dir.path(), &synth, 2);
    let seeds = [1u64, 2, 3, 4, 5];

    let mut full_scores = Vec::new();
    let mut flat_scores = Vec::new();
    for &seed in &seeds {
        // full model: hierarchical loss + radiomics fusion
        let full_cfg = TrainConfig {
            max_epochs: 15,
            early_stop_patience: 15,
            ..base.clone()
        };
        let out = train_one(&full_cfg, &split, seed).unwrap();
        let (table, _) = evaluate(&out.checkpoint, &full_cfg, &split, Subset::Test).unwrap();
        full_scores.push(table.overall.f1_macro);

        // flat 3-class image-only baseline
        let flat_cfg = TrainConfig {
            head: HeadKind::Flat3,
            hierarchical_loss: false,
            use_radiomics: false,
            features_csv: None,
            max_epochs: 15,
            early_stop_patience: 15,
            ..base.clone()
        };
        let out = train_one(&flat_cfg, &split, seed).unwrap();
        let (table, _) = evaluate(&out.checkpoint, &flat_cfg, &split, Subset::Test).unwrap();
        flat_scores.push(table.overall.f1_macro);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (full_mean, flat_mean) = (mean(&full_scores), mean(&flat_scores));
    println!(
        "criterion 10: full model macro-F1 {full_mean:.4} {full_scores:?} vs flat baseline {flat_mean:.4} {flat_scores:?}"
    );
    assert!(
        full_mean >= flat_mean,
        "full model mean macro-F1 {full_mean} below flat baseline {flat_mean}"
    );
}

/// Optional full-reproduction attempt: needs the TCIA tile collection on
/// disk (env `HISTOFUSE_TCIA_ROOT`). Without it the criterion is reported
/// as skipped; the binding suite is criteria 1-10.
#[test]
fn criterion_11_optional_tcia_reproduction() {
    let Ok(root) = std::env::var("HISTOFUSE_TCIA_ROOT") else {
        println!(
            "criterion 11: SKIPPED (optional) - set HISTOFUSE_TCIA_ROOT to the TCIA tile \
             collection to run the ingest check; full training requires the pretrained \
             trunk cache and ~1 h/run (see README)"
        );
        return;
    };
    let (tiles, summary) = ingest(Path::new(&root), DEFAULT_PATIENT_REGEX).unwrap();
    assert_eq!(tiles.len(), 1144, "expected 1,144 tiles");
    assert_eq!(summary.class_counts, [536, 263, 345]);
    // label/task mapping spot check on the real collection
    for t in tiles.iter().take(50) {
        let tl = derive_task_labels(t.label);
        assert_eq!(tl.y_a == 0, t.label == 0);
    }
    println!("criterion 11: TCIA ingest verified (1,144 tiles; 536/263/345)");
}
