//! The seven-row ablation grid and its aggregated report.
//!
//! The seven rows cross the model axes: a flat 3-class baseline per backbone, the
//! two-head model with fixed task weights, the uncertainty-weighted loss,
//! and radiomics fusion, culminating in the full model. All rows and seeds
//! share one patient-level split so comparisons are paired.

use super::{evaluate, train_one, write_history_csv, write_loss_csv, MetricsFile, TrainConfig};
use crate::dataset::{SplitSpec, Subset};
use crate::error::{Error, Result};
use crate::manifest::content_hash;
use crate::metrics::{aggregate_runs, significance, MetricTable, RunAggregate};
use crate::model::{BackboneKind, HeadKind};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRow {
    /// Stable row key, also the run subdirectory name.
    pub name: String,
    pub backbone: BackboneKind,
    pub head: HeadKind,
    pub hierarchical_loss: bool,
    pub use_radiomics: bool,
}

/// Index of the full model inside [`table1_grid`].
pub const FULL_MODEL_ROW: usize = 6;

/// The seven ablation configurations: three flat single-backbone baselines,
/// the two-head model without uncertainty weighting, radiomics without the
/// hierarchical loss, the hierarchical loss without radiomics, and the full
/// model.
pub fn table1_grid() -> Vec<GridRow> {
    let row = |name: &str, backbone, head, hloss, rad| GridRow {
        name: name.to_string(),
        backbone,
        head,
        hierarchical_loss: hloss,
        use_radiomics: rad,
    };
    vec![
        row(
            "incv3-flat3",
            BackboneKind::InceptionV3,
            HeadKind::Flat3,
            false,
            false,
        ),
        row(
            "vit-flat3",
            BackboneKind::Vit,
            HeadKind::Flat3,
            false,
            false,
        ),
        row(
            "effnet-flat3",
            BackboneKind::EfficientNetB0,
            HeadKind::Flat3,
            false,
            false,
        ),
        row(
            "incv3-twohead",
            BackboneKind::InceptionV3,
            HeadKind::Hierarchical,
            false,
            false,
        ),
        row(
            "incv3-rad",
            BackboneKind::InceptionV3,
            HeadKind::Hierarchical,
            false,
            true,
        ),
        row(
            "incv3-hloss",
            BackboneKind::InceptionV3,
            HeadKind::Hierarchical,
            true,
            false,
        ),
        row(
            "incv3-hloss-rad-full",
            BackboneKind::InceptionV3,
            HeadKind::Hierarchical,
            true,
            true,
        ),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowReport {
    pub row: GridRow,
    /// Backbone actually used after any override.
    pub resolved_backbone: BackboneKind,
    pub per_seed: Vec<MetricTable>,
    pub aggregate: Option<RunAggregate>,
    /// Welch p-values of the full model against this row, per metric.
    pub p_accuracy_vs_full: Option<f64>,
    pub p_macro_f1_vs_full: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub split_hash: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<RowReport>,
    pub config_hash: String,
}

/// Runs the whole grid: every row trained on every seed against the shared
/// split, evaluated on the test subset, aggregated, and compared against
/// the full model. Per-row failures are recorded, not fatal.
pub fn run_ablation(
    base: &TrainConfig,
    grid: &[GridRow],
    seeds: &[u64],
    split: &SplitSpec,
    out_dir: &Path,
    backbone_override: Option<BackboneKind>,
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(Error::Config(format!("duplicate seed {s}")));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let split_hash = content_hash(split);
    let config_hash = content_hash(&(base, grid, seeds));

    let mut rows: Vec<RowReport> = Vec::with_capacity(grid.len());
    for row in grid {
        let resolved_backbone = backbone_override.unwrap_or(row.backbone);
        let mut config = base.clone();
        config.backbone = resolved_backbone;
        config.head = row.head;
        config.hierarchical_loss = row.hierarchical_loss;
        config.use_radiomics = row.use_radiomics;
        if !config.use_radiomics {
            // feature cache not needed for image-only rows
            config.features_csv = None;
        }

        let mut per_seed = Vec::new();
        let mut error = None;
        for &seed in seeds {
            match run_row_seed(&config, split, seed, out_dir, &row.name) {
                Ok(table) => per_seed.push(table),
                Err(e) => {
                    error = Some(format!("seed {seed}: {e}"));
                    break;
                }
            }
        }
        let aggregate = if per_seed.len() >= 2 {
            aggregate_runs(&per_seed).ok()
        } else {
            None
        };
        rows.push(RowReport {
            row: row.clone(),
            resolved_backbone,
            per_seed,
            aggregate,
            p_accuracy_vs_full: None,
            p_macro_f1_vs_full: None,
            error,
        });
    }

    // paired significance of the full model against every other row
    if let Some(full) = rows.get(FULL_MODEL_ROW.min(rows.len().saturating_sub(1))) {
        let full_acc: Vec<f64> = full.per_seed.iter().map(|t| t.overall.accuracy).collect();
        let full_f1: Vec<f64> = full.per_seed.iter().map(|t| t.overall.f1_macro).collect();
        if full_acc.len() >= 2 {
            for i in 0..rows.len() {
                if i == FULL_MODEL_ROW {
                    continue;
                }
                let acc: Vec<f64> = rows[i]
                    .per_seed
                    .iter()
                    .map(|t| t.overall.accuracy)
                    .collect();
                let f1: Vec<f64> = rows[i]
                    .per_seed
                    .iter()
                    .map(|t| t.overall.f1_macro)
                    .collect();
                if acc.len() >= 2 {
                    rows[i].p_accuracy_vs_full = significance(&full_acc, &acc).ok();
                    rows[i].p_macro_f1_vs_full = significance(&full_f1, &f1).ok();
                }
            }
        }
    }

    let report = AblationReport {
        split_hash,
        seeds: seeds.to_vec(),
        rows,
        config_hash,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Serde(e.to_string()))?;
    let report_path = out_dir.join("report.json");
    std::fs::write(&report_path, json).map_err(|e| Error::io(&report_path, e))?;
    let text = render_report(&report);
    let text_path = out_dir.join("report.txt");
    std::fs::write(&text_path, text).map_err(|e| Error::io(&text_path, e))?;
    Ok(report)
}

fn run_row_seed(
    config: &TrainConfig,
    split: &SplitSpec,
    seed: u64,
    out_dir: &Path,
    row_name: &str,
) -> Result<MetricTable> {
    let run_dir = out_dir.join("runs").join(row_name).join(seed.to_string());
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;

    let output = train_one(config, split, seed)?;
    let (table, _records) = evaluate(&output.checkpoint, config, split, Subset::Test)?;

    output.checkpoint.save(&run_dir.join("checkpoint.json"))?;
    write_history_csv(&run_dir.join("history.csv"), &output.history)?;
    write_loss_csv(&run_dir.join("loss_components.csv"), &output.loss_log)?;
    let summary_path = run_dir.join("model_summary.txt");
    std::fs::write(&summary_path, &output.model_summary)
        .map_err(|e| Error::io(&summary_path, e))?;
    MetricsFile::from_table(&table, 1, &output.checkpoint.config_hash)
        .save(&run_dir.join("metrics.json"))?;
    Ok(table)
}

fn fmt_ms(ms: &crate::metrics::MeanStd) -> String {
    format!("{ms}")
}

/// Text tables: one overall summary and one per-class block per row.
pub fn render_report(report: &AblationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "ablation report  (seeds: {:?}, split {})\n\n",
        report.seeds, report.split_hash
    ));
    out.push_str("overall summary\n");
    out.push_str(&format!(
        "{:<22} {:>6} {:>4} {:>11} {:>11} {:>11} {:>11} {:>10} {:>10}\n",
        "row", "H-loss", "Rad", "Acc", "F1-macro", "F1-weighted", "AUC-ovr", "p(acc)", "p(F1)"
    ));
    for r in &report.rows {
        let (acc, f1m, f1w, auc) = match &r.aggregate {
            Some(a) => (
                fmt_ms(&a.overall.accuracy),
                fmt_ms(&a.overall.f1_macro),
                fmt_ms(&a.overall.f1_weighted),
                fmt_ms(&a.overall.auc_ovr),
            ),
            None => {
                let na = || "n/a".to_string();
                (na(), na(), na(), na())
            }
        };
        let p_acc = r
            .p_accuracy_vs_full
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".into());
        let p_f1 = r
            .p_macro_f1_vs_full
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<22} {:>6} {:>4} {:>11} {:>11} {:>11} {:>11} {:>10} {:>10}\n",
            r.row.name,
            if r.row.hierarchical_loss { "yes" } else { "no" },
            if r.row.use_radiomics { "yes" } else { "no" },
            acc,
            f1m,
            f1w,
            auc,
            p_acc,
            p_f1
        ));
        if let Some(err) = &r.error {
            out.push_str(&format!("    INCOMPLETE: {err}\n"));
        }
    }

    out.push_str("\nper-class metrics\n");
    out.push_str(&format!(
        "{:<22} {:<4} {:>11} {:>11} {:>11} {:>11}\n",
        "row", "cls", "Sen@Spe90", "Spe@Sen90", "F1", "AUC"
    ));
    const CLS: [&str; 3] = ["NT", "NVT", "VT"];
    for r in &report.rows {
        if let Some(a) = &r.aggregate {
            for (c, name) in CLS.iter().enumerate() {
                out.push_str(&format!(
                    "{:<22} {:<4} {:>11} {:>11} {:>11} {:>11}\n",
                    if c == 0 { r.row.name.as_str() } else { "" },
                    name,
                    fmt_ms(&a.per_class[c].sen_at_spe90),
                    fmt_ms(&a.per_class[c].spe_at_sen90),
                    fmt_ms(&a.per_class[c].f1),
                    fmt_ms(&a.per_class[c].auc),
                ));
            }
        }
    }
    out
}
