//! The `histofuse` command suite: dataset generation, feature extraction,
//! splitting, training, evaluation, the ablation grid, and report rendering.
//!
//! All relative paths are resolved against `--workdir`. Commands are
//! deterministic for fixed flags, seeds, and inputs; set
//! `HISTOFUSE_DETERMINISTIC=1` to also pin manifest timestamps.

use crate::dataset::{ingest, patient_split, split_table, SplitSpec, Subset, SynthConfig};
use crate::engine::{
    evaluate, run_ablation, table1_grid, train_one, write_history_csv, write_loss_csv, MetricsFile,
    TrainConfig,
};
use crate::error::{Error, Result};
use crate::manifest::RunManifest;
use crate::model::{BackboneKind, Checkpoint};
use crate::radiomics::{extract, FeatureCacheRow};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "histofuse",
    version,
    about = "Multimodal hierarchical classification of osteosarcoma histopathology tiles"
)]
pub struct Cli {
    /// Base directory against which relative paths are resolved.
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    Train,
    Val,
    Test,
}

impl From<SubsetArg> for Subset {
    fn from(v: SubsetArg) -> Subset {
        match v {
            SubsetArg::Train => Subset::Train,
            SubsetArg::Val => Subset::Val,
            SubsetArg::Test => Subset::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackboneArg {
    InceptionV3,
    Vit,
    EfficientnetB0,
    Tiny,
}

impl From<BackboneArg> for BackboneKind {
    fn from(v: BackboneArg) -> BackboneKind {
        match v {
            BackboneArg::InceptionV3 => BackboneKind::InceptionV3,
            BackboneArg::Vit => BackboneKind::Vit,
            BackboneArg::EfficientnetB0 => BackboneKind::EfficientNetB0,
            BackboneArg::Tiny => BackboneKind::Tiny,
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic desk-scale dataset.
    Synth {
        #[arg(long)]
        patients: usize,
        #[arg(long)]
        tiles_per_patient: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        tile_size: u32,
        /// Use the cohort-scale class imbalance instead of equal thirds.
        #[arg(long)]
        imbalanced: bool,
        /// Overwrite an existing non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Extract the 29 radiomic features for every tile into a CSV cache.
    Extract {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = crate::dataset::DEFAULT_PATIENT_REGEX)]
        patient_regex: String,
    },
    /// Produce a leakage-free patient-level split.
    Split {
        #[arg(long)]
        data: PathBuf,
        /// Target tile fractions, e.g. 0.7,0.1,0.2
        #[arg(long, default_value = "0.7,0.1,0.2")]
        fractions: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = crate::dataset::DEFAULT_PATIENT_REGEX)]
        patient_regex: String,
    },
    /// Train one configuration on one seed.
    Train {
        /// Train configuration JSON (see README for the schema).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run directory for checkpoint and traces.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on one subset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, value_enum, default_value_t = SubsetArg::Test)]
        subset: SubsetArg,
        /// Output metrics JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the seven-row ablation grid across seeds.
    Ablate {
        /// Base train configuration JSON; grid rows override the model axes.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Comma-separated seeds, e.g. 1,2,3,4,5
        #[arg(long, default_value = "1,2,3,4,5")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Replace every row's backbone (use `tiny` for self-contained runs).
        #[arg(long, value_enum)]
        backbone_override: Option<BackboneArg>,
    },
    /// Re-render the text tables of an existing ablation report.
    Report {
        /// Directory containing report.json.
        #[arg(long)]
        runs: PathBuf,
    },
}

/// Exit code for structurally valid commands that produced no data
/// (e.g. ingesting an empty directory).
pub const EXIT_EMPTY: i32 = 3;

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve(workdir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

fn load_train_config(workdir: &Path, path: &Path) -> Result<TrainConfig> {
    let path = resolve(workdir, path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut config: TrainConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    config.data_dir = resolve(workdir, &config.data_dir);
    config.features_csv = config.features_csv.map(|p| resolve(workdir, &p));
    config.trunk_features_csv = config.trunk_features_csv.map(|p| resolve(workdir, &p));
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let wd = cli.workdir.clone();
    match cli.command {
        Command::Synth {
            patients,
            tiles_per_patient,
            seed,
            out,
            tile_size,
            imbalanced,
            force,
        } => cmd_synth(
            &wd,
            patients,
            tiles_per_patient,
            seed,
            &out,
            tile_size,
            imbalanced,
            force,
        ),
        Command::Extract {
            data,
            out,
            patient_regex,
        } => cmd_extract(&wd, &data, &out, &patient_regex),
        Command::Split {
            data,
            fractions,
            seed,
            out,
            patient_regex,
        } => cmd_split(&wd, &data, &fractions, seed, &out, &patient_regex),
        Command::Train {
            config,
            split,
            seed,
            out,
        } => cmd_train(&wd, &config, &split, seed, &out),
        Command::Eval {
            checkpoint,
            config,
            split,
            subset,
            out,
        } => cmd_eval(&wd, &checkpoint, &config, &split, subset.into(), &out),
        Command::Ablate {
            config,
            split,
            seeds,
            out,
            backbone_override,
        } => cmd_ablate(
            &wd,
            &config,
            &split,
            &seeds,
            &out,
            backbone_override.map(Into::into),
        ),
        Command::Report { runs } => cmd_report(&wd, &runs),
    }
}

/// Class probabilities mirroring the 536/263/345 cohort imbalance.
pub fn imbalanced_probs() -> [f64; 3] {
    let total = 536.0 + 263.0 + 345.0;
    [536.0 / total, 263.0 / total, 345.0 / total]
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    wd: &Path,
    patients: usize,
    tiles_per_patient: usize,
    seed: u64,
    out: &Path,
    tile_size: u32,
    imbalanced: bool,
    force: bool,
) -> Result<i32> {
    let out = resolve(wd, out);
    if out.exists()
        && out
            .read_dir()
            .map(|mut d| d.next().is_some())
            .unwrap_or(false)
        && !force
    {
        return Err(Error::InvalidInput(format!(
            "output directory {} is not empty; pass --force to overwrite",
            out.display()
        )));
    }
    let config = SynthConfig {
        n_patients: patients,
        tiles_per_patient,
        seed,
        tile_size,
        class_probs: if imbalanced {
            imbalanced_probs()
        } else {
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]
        },
    };
    let summary = crate::dataset::synth_generate(&out, &config)?;
    let manifest = RunManifest::new(None, serde_json::to_value(&config).unwrap());
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "generated {} tiles over {} patients into {}",
        summary.n_tiles,
        config.n_patients,
        out.display()
    );
    println!(
        "class counts: non-tumor {}, non-viable {}, viable {}",
        summary.class_counts[0], summary.class_counts[1], summary.class_counts[2]
    );
    println!("tree hash: {}", tree_hash(&out)?);
    println!("manifest: {}", manifest.hash);
    Ok(0)
}

/// FNV hash over every file (sorted relative path + bytes) under a root.
fn tree_hash(root: &Path) -> Result<String> {
    let mut files = Vec::new();
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(&path, root, out)?;
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                out.push(path);
            }
        }
        Ok(())
    }
    walk(root, root, &mut files)?;
    files.sort();
    let mut bytes = Vec::new();
    for f in &files {
        bytes.extend_from_slice(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        bytes.extend_from_slice(&std::fs::read(f).map_err(|e| Error::io(f, e))?);
    }
    Ok(format!("fnv64:{:016x}", crate::manifest::fnv1a(&bytes)))
}

fn cmd_extract(wd: &Path, data: &Path, out: &Path, patient_regex: &str) -> Result<i32> {
    let data = resolve(wd, data);
    let out = resolve(wd, out);
    let (tiles, summary) = ingest(&data, patient_regex)?;
    if tiles.is_empty() {
        eprintln!("no tiles found under {}", data.display());
        return Ok(EXIT_EMPTY);
    }
    let mut rows = Vec::with_capacity(tiles.len());
    let mut failures = 0usize;
    for tile in &tiles {
        match crate::imaging::load_rgb(&tile.image_path).and_then(|img| extract(&img)) {
            Ok(features) => rows.push(FeatureCacheRow {
                tile_id: tile.tile_id.clone(),
                patient_id: tile.patient_id.clone(),
                label: tile.label,
                features,
            }),
            Err(e) => {
                eprintln!("failed to extract {}: {e}", tile.tile_id);
                failures += 1;
            }
        }
    }
    crate::radiomics::write_feature_cache(&out, &rows)?;
    let manifest = RunManifest::new(
        None,
        serde_json::json!({
            "command": "extract",
            "data": data.display().to_string(),
            "patient_regex": patient_regex,
            "n_rows": rows.len(),
        }),
    );
    manifest.write(&out.with_extension("manifest.json"))?;
    println!(
        "extracted {} / {} tiles ({} unreadable skipped at ingest) -> {}",
        rows.len(),
        tiles.len(),
        summary.skipped_unreadable,
        out.display()
    );
    println!("manifest: {}", manifest.hash);
    if failures > 0 || summary.skipped_unreadable > 0 {
        eprintln!(
            "{} tile(s) failed extraction, {} unreadable",
            failures, summary.skipped_unreadable
        );
        return Ok(1);
    }
    Ok(0)
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("cannot parse fractions {s:?}")))?;
    if parts.len() != 3 {
        return Err(Error::Config("fractions must have exactly 3 parts".into()));
    }
    Ok((parts[0], parts[1], parts[2]))
}

fn cmd_split(
    wd: &Path,
    data: &Path,
    fractions: &str,
    seed: u64,
    out: &Path,
    patient_regex: &str,
) -> Result<i32> {
    let data = resolve(wd, data);
    let out = resolve(wd, out);
    let fractions = parse_fractions(fractions)?;
    let (tiles, _) = ingest(&data, patient_regex)?;
    if tiles.is_empty() {
        eprintln!("no tiles found under {}", data.display());
        return Ok(EXIT_EMPTY);
    }
    let split = patient_split(&tiles, fractions, seed)?;
    split.save(&out)?;
    let manifest = RunManifest::new(
        None,
        serde_json::json!({
            "command": "split",
            "data": data.display().to_string(),
            "fractions": [fractions.0, fractions.1, fractions.2],
            "seed": seed,
        }),
    );
    manifest.write(&out.with_extension("manifest.json"))?;

    let table = split_table(&tiles, &split);
    println!("split written to {}", out.display());
    println!(
        "{:<7} {:>9} {:>7} {:>10} {:>11} {:>8}",
        "subset", "patients", "tiles", "non-tumor", "non-viable", "viable"
    );
    for (name, patients, row) in [
        ("train", split.train.len(), table[0]),
        ("val", split.val.len(), table[1]),
        ("test", split.test.len(), table[2]),
    ] {
        println!(
            "{:<7} {:>9} {:>7} {:>10} {:>11} {:>8}",
            name, patients, row.0, row.1[0], row.1[1], row.1[2]
        );
    }
    println!("manifest: {}", manifest.hash);
    Ok(0)
}

fn cmd_train(
    wd: &Path,
    config_path: &Path,
    split_path: &Path,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    let config = load_train_config(wd, config_path)?;
    let split = SplitSpec::load(&resolve(wd, split_path))?;
    let out = resolve(wd, out);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let manifest = RunManifest::new(
        Some(config_path),
        serde_json::json!({
            "command": "train",
            "config": serde_json::to_value(&config).unwrap(),
            "seed": seed,
        }),
    );

    let output = train_one(&config, &split, seed)?;
    output.checkpoint.save(&out.join("checkpoint.json"))?;
    write_history_csv(&out.join("history.csv"), &output.history)?;
    write_loss_csv(&out.join("loss_components.csv"), &output.loss_log)?;
    let summary_path = out.join("model_summary.txt");
    std::fs::write(&summary_path, &output.model_summary)
        .map_err(|e| Error::io(&summary_path, e))?;
    manifest.write(&out.join("manifest.json"))?;

    println!(
        "trained {} epochs; best val macro-F1 {:.4} at epoch {}",
        output.history.len(),
        output.best_val_macro_f1,
        output.best_epoch
    );
    println!("checkpoint: {}", out.join("checkpoint.json").display());
    println!("manifest: {}", manifest.hash);
    Ok(0)
}

fn cmd_eval(
    wd: &Path,
    checkpoint_path: &Path,
    config_path: &Path,
    split_path: &Path,
    subset: Subset,
    out: &Path,
) -> Result<i32> {
    let config = load_train_config(wd, config_path)?;
    let split = SplitSpec::load(&resolve(wd, split_path))?;
    let checkpoint = Checkpoint::load(&resolve(wd, checkpoint_path))?;
    let out = resolve(wd, out);

    let manifest = RunManifest::new(
        Some(config_path),
        serde_json::json!({
            "command": "eval",
            "config": serde_json::to_value(&config).unwrap(),
            "subset": subset.name(),
            "checkpoint_hash": checkpoint.config_hash,
        }),
    );

    let (table, records) = evaluate(&checkpoint, &config, &split, subset)?;
    MetricsFile::from_table(&table, 1, &manifest.hash).save(&out)?;
    write_roc_csv(&out, &records)?;
    manifest.write(&out.with_extension("manifest.json"))?;

    println!("subset: {}", subset.name());
    println!(
        "accuracy {:.4}  macro-F1 {:.4}  weighted-F1 {:.4}  AUC-ovr {:.4}",
        table.overall.accuracy,
        table.overall.f1_macro,
        table.overall.f1_weighted,
        table.overall.auc_ovr
    );
    for (c, name) in ["non-tumor", "non-viable", "viable"].iter().enumerate() {
        let pc = &table.per_class[c];
        println!(
            "{:<11} Sen@Spe90 {:.4}  Spe@Sen90 {:.4}  F1 {:.4}  AUC {:.4}",
            name, pc.sen_at_spe90, pc.spe_at_sen90, pc.f1, pc.auc
        );
    }
    println!("metrics: {}", out.display());
    println!("manifest: {}", manifest.hash);
    Ok(0)
}

/// Raw one-vs-rest ROC curve points for all three classes, written next to
/// the metrics file as `<stem>_roc.csv` (covered by the eval manifest).
fn write_roc_csv(metrics_path: &Path, records: &[crate::metrics::EvalRecord]) -> Result<()> {
    use std::io::Write;
    let stem = metrics_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("metrics");
    let path = metrics_path.with_file_name(format!("{stem}_roc.csv"));
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
    writeln!(out, "class,threshold,fpr,tpr").map_err(|e| Error::io(&path, e))?;
    for class in 0..3usize {
        let scores: Vec<f64> = records.iter().map(|r| r.dist3[class]).collect();
        let labels: Vec<bool> = records
            .iter()
            .map(|r| r.true_label as usize == class)
            .collect();
        for p in crate::metrics::roc_points(&scores, &labels)? {
            writeln!(out, "{class},{},{},{}", p.threshold, p.fpr, p.tpr)
                .map_err(|e| Error::io(&path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("cannot parse seed {p:?}")))
        })
        .collect()
}

fn cmd_ablate(
    wd: &Path,
    config_path: &Path,
    split_path: &Path,
    seeds: &str,
    out: &Path,
    backbone_override: Option<BackboneKind>,
) -> Result<i32> {
    let config = load_train_config(wd, config_path)?;
    let split = SplitSpec::load(&resolve(wd, split_path))?;
    let seeds = parse_seeds(seeds)?;
    let out = resolve(wd, out);
    let grid = table1_grid();

    let manifest = RunManifest::new(
        Some(config_path),
        serde_json::json!({
            "command": "ablate",
            "config": serde_json::to_value(&config).unwrap(),
            "seeds": seeds,
            "backbone_override": backbone_override.map(|b| format!("{b:?}")),
        }),
    );

    let report = run_ablation(&config, &grid, &seeds, &split, &out, backbone_override)?;
    manifest.write(&out.join("manifest.json"))?;
    print!("{}", crate::engine::render_report(&report));
    let incomplete = report.rows.iter().filter(|r| r.error.is_some()).count();
    println!("report: {}", out.join("report.json").display());
    println!("manifest: {}", manifest.hash);
    if incomplete > 0 {
        eprintln!("{incomplete} row(s) incomplete");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_report(wd: &Path, runs: &Path) -> Result<i32> {
    let path = resolve(wd, runs).join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let report: crate::engine::AblationReport =
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
    print!("{}", crate::engine::render_report(&report));
    Ok(0)
}
