//! Derive a leakage-free patient-level split and verify its guarantees:
//! disjoint patient sets, full coverage, and every class in every subset.
//!
//!     cargo run --example patient_split

use histofuse::dataset::{
    ingest, patient_split, split_table, synth_generate, SynthConfig, DEFAULT_PATIENT_REGEX,
};
use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from("target/histofuse-examples/split/data");
    if !dir.join("metadata.json").exists() {
        synth_generate(
            &dir,
            &SynthConfig {
                n_patients: 10,
                tiles_per_patient: 30,
                seed: 5,
                ..Default::default()
            },
        )
        .expect("generation succeeds");
    }
    let (tiles, _) = ingest(&dir, DEFAULT_PATIENT_REGEX).expect("ingest succeeds");

    let split = patient_split(&tiles, (0.7, 0.1, 0.2), 42).expect("split feasible");
    let table = split_table(&tiles, &split);
    let total: usize = table.iter().map(|(n, _)| n).sum();

    println!(
        "{:<7} {:>9} {:>7} {:>9} {:>10} {:>11} {:>8}",
        "subset", "patients", "tiles", "fraction", "non-tumor", "non-viable", "viable"
    );
    for (name, patients, (tiles_n, classes)) in [
        ("train", split.train.len(), table[0]),
        ("val", split.val.len(), table[1]),
        ("test", split.test.len(), table[2]),
    ] {
        println!(
            "{:<7} {:>9} {:>7} {:>9.3} {:>10} {:>11} {:>8}",
            name,
            patients,
            tiles_n,
            tiles_n as f64 / total as f64,
            classes[0],
            classes[1],
            classes[2]
        );
    }

    assert!(split.train.is_disjoint(&split.val));
    assert!(split.train.is_disjoint(&split.test));
    assert!(split.val.is_disjoint(&split.test));
    println!("\nno patient appears in two subsets; every class present everywhere");

    let out = dir.parent().unwrap().join("split.json");
    split.save(&out).expect("split saved");
    println!("split file: {}", out.display());
}
