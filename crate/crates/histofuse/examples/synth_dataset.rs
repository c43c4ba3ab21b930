//! Generate a synthetic tile dataset and show what the ingest pipeline
//! makes of it.
//!
//!     cargo run --example synth_dataset [out_dir]

use histofuse::dataset::{ingest, synth_generate, SynthConfig, DEFAULT_PATIENT_REGEX};
use std::path::PathBuf;

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| PathBuf::from("target/histofuse-examples/synth"));
    let config = SynthConfig {
        n_patients: 8,
        tiles_per_patient: 12,
        seed: 42,
        ..Default::default()
    };
    let summary = synth_generate(&out, &config).expect("generation succeeds");
    println!(
        "wrote {} tiles ({} patients x {} tiles) under {}",
        summary.n_tiles,
        config.n_patients,
        config.tiles_per_patient,
        out.display()
    );
    println!(
        "class counts: non-tumor {}, non-viable {}, viable {}",
        summary.class_counts[0], summary.class_counts[1], summary.class_counts[2]
    );

    let (tiles, ingest_summary) = ingest(&out, DEFAULT_PATIENT_REGEX).expect("ingest succeeds");
    println!(
        "ingest sees {} tiles from {} patients",
        ingest_summary.n_tiles, ingest_summary.n_patients
    );
    for tile in tiles.iter().take(3) {
        println!(
            "  {} (patient {}, label {})",
            tile.tile_id, tile.patient_id, tile.label
        );
    }
}
