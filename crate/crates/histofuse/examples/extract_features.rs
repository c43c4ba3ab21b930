//! Build the radiomic feature cache for a whole dataset, the same artifact
//! `histofuse extract` produces, then fit a standardizer and show the
//! z-scored first rows.
//!
//!     cargo run --example extract_features [data_dir]

use histofuse::dataset::{ingest, synth_generate, SynthConfig, DEFAULT_PATIENT_REGEX};
use histofuse::radiomics::{extract, write_feature_cache, FeatureCacheRow, FeatureStandardizer};
use std::path::PathBuf;

fn main() {
    let data_dir: PathBuf = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let dir = PathBuf::from("target/histofuse-examples/extract/data");
            if !dir.join("metadata.json").exists() {
                synth_generate(
                    &dir,
                    &SynthConfig {
                        n_patients: 6,
                        tiles_per_patient: 10,
                        seed: 3,
                        ..Default::default()
                    },
                )
                .expect("generation succeeds");
            }
            dir
        }
    };

    let (tiles, summary) = ingest(&data_dir, DEFAULT_PATIENT_REGEX).expect("ingest succeeds");
    println!("extracting 29 features for {} tiles...", summary.n_tiles);
    let rows: Vec<FeatureCacheRow> = tiles
        .iter()
        .map(|t| {
            let img = histofuse::imaging::load_rgb(&t.image_path).expect("readable tile");
            FeatureCacheRow {
                tile_id: t.tile_id.clone(),
                patient_id: t.patient_id.clone(),
                label: t.label,
                features: extract(&img).expect("extraction succeeds"),
            }
        })
        .collect();

    let out = data_dir.parent().unwrap().join("features.csv");
    write_feature_cache(&out, &rows).expect("cache written");
    println!("feature cache: {}", out.display());

    let vectors: Vec<_> = rows.iter().map(|r| r.features.clone()).collect();
    let standardizer = FeatureStandardizer::fit(&vectors).expect("fit succeeds");
    println!("\nfirst three tiles, z-scored (first 6 dimensions):");
    for row in rows.iter().take(3) {
        let z = standardizer.apply(&row.features).unwrap();
        let head: Vec<String> = z.iter().take(6).map(|v| format!("{v:+.2}")).collect();
        println!("  {:<32} [{}]", row.tile_id, head.join(", "));
    }
}
