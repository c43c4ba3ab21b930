//! Run the seven-row ablation grid (backbones x hierarchical loss x
//! radiomics) on synthetic data with the self-contained tiny backbone
//! standing in for the pretrained trunks, then print the paired report.
//!
//!     cargo run --release --example ablation_grid

use histofuse::dataset::{
    ingest, patient_split, synth_generate, SynthConfig, DEFAULT_PATIENT_REGEX,
};
use histofuse::engine::{render_report, run_ablation, table1_grid, TrainConfig};
use histofuse::model::BackboneKind;
use histofuse::radiomics::{extract, write_feature_cache, FeatureCacheRow};
use std::path::PathBuf;

fn main() {
    let root = PathBuf::from("target/histofuse-examples/ablation");
    let data_dir = root.join("data");
    if !data_dir.join("metadata.json").exists() {
        // cohort-scale class imbalance
        let total = 536.0 + 263.0 + 345.0;
        synth_generate(
            &data_dir,
            &SynthConfig {
                n_patients: 8,
                tiles_per_patient: 18,
                seed: 11,
                class_probs: [536.0 / total, 263.0 / total, 345.0 / total],
                ..Default::default()
            },
        )
        .expect("generation succeeds");
    }
    let (tiles, _) = ingest(&data_dir, DEFAULT_PATIENT_REGEX).expect("ingest succeeds");

    let features_csv = root.join("features.csv");
    if !features_csv.exists() {
        println!("extracting radiomic features...");
        let rows: Vec<FeatureCacheRow> = tiles
            .iter()
            .map(|t| {
                let img = histofuse::imaging::load_rgb(&t.image_path).unwrap();
                FeatureCacheRow {
                    tile_id: t.tile_id.clone(),
                    patient_id: t.patient_id.clone(),
                    label: t.label,
                    features: extract(&img).unwrap(),
                }
            })
            .collect();
        write_feature_cache(&features_csv, &rows).expect("cache written");
    }

    let split = patient_split(&tiles, (0.7, 0.1, 0.2), 2).expect("split feasible");
    let base = TrainConfig {
        data_dir,
        features_csv: Some(features_csv),
        embed_dim: 16,
        rad_hidden: 16,
        gate_hidden: 16,
        lr: 1e-3,
        max_epochs: 8,
        early_stop_patience: 8,
        ..Default::default()
    };

    println!("running 7 rows x 2 seeds (tiny backbone override)...");
    let report = run_ablation(
        &base,
        &table1_grid(),
        &[1, 2],
        &split,
        &root.join("runs-out"),
        Some(BackboneKind::Tiny),
    )
    .expect("grid completes");
    print!("{}", render_report(&report));
    println!(
        "artifacts: {}/report.json + runs/<row>/<seed>/",
        root.join("runs-out").display()
    );
}
