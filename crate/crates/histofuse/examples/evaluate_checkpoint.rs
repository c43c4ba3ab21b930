//! Restore a checkpoint and evaluate it on the held-out patients, printing
//! the full per-class metric table. Runs `train_synthetic` first if no
//! checkpoint exists yet.
//!
//!     cargo run --release --example evaluate_checkpoint

use histofuse::dataset::{ingest, patient_split, Subset, DEFAULT_PATIENT_REGEX};
use histofuse::engine::{evaluate, TrainConfig};
use histofuse::model::Checkpoint;
use std::path::PathBuf;

fn main() {
    let root = PathBuf::from("target/histofuse-examples/train");
    let ckpt_path = root.join("checkpoint.json");
    if !ckpt_path.exists() {
        eprintln!(
            "no checkpoint at {}; run `cargo run --release --example train_synthetic` first",
            ckpt_path.display()
        );
        std::process::exit(2);
    }
    let checkpoint = Checkpoint::load(&ckpt_path).expect("checkpoint loads");
    let data_dir = root.join("data");
    let (tiles, _) = ingest(&data_dir, DEFAULT_PATIENT_REGEX).expect("ingest succeeds");
    let split = patient_split(&tiles, (0.7, 0.1, 0.2), 1).expect("same split as training");
    let config = TrainConfig {
        data_dir,
        features_csv: Some(root.join("features.csv")),
        embed_dim: checkpoint.model_config.embed_dim,
        rad_hidden: checkpoint.model_config.rad_hidden,
        gate_hidden: checkpoint.model_config.gate_hidden,
        ..Default::default()
    };

    let (table, records) = evaluate(&checkpoint, &config, &split, Subset::Test).expect("eval");
    println!("{} held-out tiles evaluated", records.len());
    println!(
        "overall: accuracy {:.4}  macro-F1 {:.4}  weighted-F1 {:.4}  AUC-ovr {:.4}\n",
        table.overall.accuracy,
        table.overall.f1_macro,
        table.overall.f1_weighted,
        table.overall.auc_ovr
    );
    println!(
        "{:<12} {:>10} {:>10} {:>8} {:>8}",
        "class", "Sen@Spe90", "Spe@Sen90", "F1", "AUC"
    );
    for (c, name) in ["non-tumor", "non-viable", "viable"].iter().enumerate() {
        let pc = &table.per_class[c];
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>8.4} {:>8.4}",
            name, pc.sen_at_spe90, pc.spe_at_sen90, pc.f1, pc.auc
        );
    }

    // a few raw records with their composite distribution
    println!("\nsample predictions (three-way distribution):");
    for r in records.iter().take(5) {
        println!(
            "  {:<34} true {} pred {}  [{:.3}, {:.3}, {:.3}]",
            r.tile_id, r.true_label, r.predicted, r.dist3[0], r.dist3[1], r.dist3[2]
        );
    }
}
