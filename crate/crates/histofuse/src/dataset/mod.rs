//! Tile ingestion, task-label derivation, leakage-free patient splits,
//! augmentation, preprocessing, and the synthetic desk-scale generator.

mod augment;
mod preprocess;
mod synth;

pub use augment::{augment, AugmentationPolicy};
pub use preprocess::{preprocess, IMAGENET_MEAN, IMAGENET_STD};
pub use synth::{render_tile, synth_generate, SynthConfig};

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub const N_CLASSES: usize = 3;

pub const CLASS_NAMES: [&str; N_CLASSES] = ["non-tumor", "non-viable-tumor", "viable-tumor"];

/// Default filename pattern for the patient identifier: a leading case token.
pub const DEFAULT_PATIENT_REGEX: &str = r"(?i)^(case[-_ ]?\d+)";

/// One labeled tile on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTile {
    pub tile_id: String,
    pub patient_id: String,
    pub image_path: PathBuf,
    /// 0 = non-tumor, 1 = non-viable tumor, 2 = viable tumor.
    pub label: u8,
}

/// The two hierarchical task labels induced by a three-way label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskLabels {
    /// 0 = non-tumor, 1 = tumor.
    pub y_a: u8,
    /// 0 = non-viable, 1 = viable; absent for non-tumor tiles.
    pub y_b: Option<u8>,
}

/// Maps a three-way label onto the coarse/fine task pair. The fine task is
/// only defined for tumor tiles.
pub fn derive_task_labels(label: u8) -> TaskLabels {
    match label {
        0 => TaskLabels { y_a: 0, y_b: None },
        l => TaskLabels {
            y_a: 1,
            y_b: Some(l - 1),
        },
    }
}

/// Patient-level split: disjoint patient sets covering the full cohort.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train: BTreeSet<String>,
    pub val: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Train,
    Val,
    Test,
}

impl Subset {
    pub fn name(&self) -> &'static str {
        match self {
            Subset::Train => "train",
            Subset::Val => "val",
            Subset::Test => "test",
        }
    }
}

impl SplitSpec {
    pub fn subset_of(&self, patient_id: &str) -> Option<Subset> {
        if self.train.contains(patient_id) {
            Some(Subset::Train)
        } else if self.val.contains(patient_id) {
            Some(Subset::Val)
        } else if self.test.contains(patient_id) {
            Some(Subset::Test)
        } else {
            None
        }
    }

    pub fn patients(&self, subset: Subset) -> &BTreeSet<String> {
        match subset {
            Subset::Train => &self.train,
            Subset::Val => &self.val,
            Subset::Test => &self.test,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Resolves a class-folder name to a label, tolerating common spellings.
pub fn label_from_folder(name: &str) -> Option<u8> {
    let norm: String = name
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    match norm.as_str() {
        "nontumor" | "nontumour" | "normal" => Some(0),
        "nonviabletumor" | "nonviabletumour" | "nonviable" | "necrotic" | "necrosis" => Some(1),
        "viabletumor" | "viabletumour" | "viable" => Some(2),
        _ => None,
    }
}

/// Summary counters reported by [`ingest`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub n_tiles: usize,
    pub n_patients: usize,
    pub class_counts: [usize; N_CLASSES],
    pub skipped_unreadable: usize,
}

const IMAGE_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

/// Walks `<root>/<class-folder>/<case-folder>/<tile>` and builds one
/// [`LabeledTile`] per image file. The patient identifier is extracted from
/// the file name via `id_regex` (first capture group, lowercased); a file
/// whose name does not match is a hard error since it could leak a patient
/// across subsets. Unreadable image files are skipped and counted.
pub fn ingest(root: &Path, id_regex: &str) -> Result<(Vec<LabeledTile>, IngestSummary)> {
    if !root.is_dir() {
        return Err(Error::InvalidInput(format!(
            "dataset root {} is not a directory",
            root.display()
        )));
    }
    let re = regex::Regex::new(id_regex)
        .map_err(|e| Error::Config(format!("bad patient-id regex: {e}")))?;

    let mut tiles = Vec::new();
    let mut summary = IngestSummary::default();
    let mut patients = BTreeSet::new();

    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();

    for class_dir in class_dirs {
        let folder = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let Some(label) = label_from_folder(&folder) else {
            continue;
        };
        let mut stack = vec![class_dir.clone()];
        let mut files = Vec::new();
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
                let entry = entry.map_err(|e| Error::io(&dir, e))?;
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
                {
                    files.push(path);
                }
            }
        }
        files.sort();
        for path in files {
            let file_name = path
                .file_stem()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            let Some(caps) = re.captures(&file_name) else {
                return Err(Error::InvalidInput(format!(
                    "cannot extract patient id from {:?} with regex {id_regex:?}; \
                     refusing to continue (patient leakage risk)",
                    path.display()
                )));
            };
            let patient_id = caps
                .get(1)
                .map(|m| m.as_str())
                .unwrap_or_else(|| caps.get(0).unwrap().as_str())
                .to_ascii_lowercase()
                .replace([' ', '_'], "-");
            if crate::imaging::load_rgb(&path).is_err() {
                summary.skipped_unreadable += 1;
                eprintln!("warning: skipping unreadable image {}", path.display());
                continue;
            }
            patients.insert(patient_id.clone());
            summary.class_counts[label as usize] += 1;
            tiles.push(LabeledTile {
                tile_id: format!("{folder}/{file_name}"),
                patient_id,
                image_path: path,
                label,
            });
        }
    }
    tiles.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));
    summary.n_tiles = tiles.len();
    summary.n_patients = patients.len();
    Ok((tiles, summary))
}

/// How many resampling attempts before a split is declared infeasible.
const MAX_SPLIT_ATTEMPTS: u64 = 500;

/// Greedy randomized packing of whole patients into train/val/test.
///
/// Patients are visited in a seeded random order and each is assigned to
/// the subset with the largest relative tile deficit against its target
/// (deficit/target, so small subsets are not starved by ties). Splits that
/// leave any class absent from any subset are rejected and resampled with a
/// fresh stream derived from the same seed, so the result is deterministic.
pub fn patient_split(
    tiles: &[LabeledTile],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitSpec> {
    let (ft, fv, fe) = fractions;
    if !(ft > 0.0 && fv > 0.0 && fe > 0.0) || (ft + fv + fe - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "fractions must be positive and sum to 1, got ({ft}, {fv}, {fe})"
        )));
    }
    // group tiles by patient
    let mut by_patient: BTreeMap<String, (usize, [usize; N_CLASSES])> = BTreeMap::new();
    for t in tiles {
        let entry = by_patient.entry(t.patient_id.clone()).or_default();
        entry.0 += 1;
        entry.1[t.label as usize] += 1;
    }
    let n_patients = by_patient.len();
    if n_patients < 3 {
        return Err(Error::InfeasibleSplit(format!(
            "need at least 3 patients, got {n_patients}"
        )));
    }
    for class in 0..N_CLASSES {
        let holders = by_patient.values().filter(|(_, c)| c[class] > 0).count();
        if holders < 2 {
            return Err(Error::InfeasibleSplit(format!(
                "class {class} ({}) is held by {holders} patient(s); \
                 every class must be held by at least 2",
                CLASS_NAMES[class]
            )));
        }
    }
    let total_tiles: usize = by_patient.values().map(|(n, _)| n).sum();
    let targets = [
        ft * total_tiles as f64,
        fv * total_tiles as f64,
        fe * total_tiles as f64,
    ];

    let patient_ids: Vec<&String> = by_patient.keys().collect();
    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let mut rng =
            ChaCha12Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e3779b97f4a7c15)));
        let mut order: Vec<usize> = (0..n_patients).collect();
        order.shuffle(&mut rng);

        let mut assigned: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut tile_counts = [0usize; 3];
        let mut class_counts = [[0usize; N_CLASSES]; 3];
        for &pi in &order {
            let (n, classes) = &by_patient[patient_ids[pi]];
            // largest relative deficit wins
            let mut best = 0usize;
            let mut best_deficit = f64::NEG_INFINITY;
            for s in 0..3 {
                let deficit = (targets[s] - tile_counts[s] as f64) / targets[s];
                if deficit > best_deficit {
                    best_deficit = deficit;
                    best = s;
                }
            }
            assigned[best].push(pi);
            tile_counts[best] += n;
            for c in 0..N_CLASSES {
                class_counts[best][c] += classes[c];
            }
        }
        let covered = (0..3).all(|s| (0..N_CLASSES).all(|c| class_counts[s][c] > 0));
        if covered {
            let to_set = |v: &Vec<usize>| -> BTreeSet<String> {
                v.iter().map(|&i| patient_ids[i].clone()).collect()
            };
            return Ok(SplitSpec {
                seed,
                train: to_set(&assigned[0]),
                val: to_set(&assigned[1]),
                test: to_set(&assigned[2]),
            });
        }
    }
    Err(Error::InfeasibleSplit(format!(
        "no class-covering assignment found in {MAX_SPLIT_ATTEMPTS} attempts \
         ({n_patients} patients, {total_tiles} tiles)"
    )))
}

/// Per-subset tile/class table for split diagnostics.
pub fn split_table(tiles: &[LabeledTile], split: &SplitSpec) -> [(usize, [usize; N_CLASSES]); 3] {
    let mut out = [(0usize, [0usize; N_CLASSES]); 3];
    for t in tiles {
        if let Some(s) = split.subset_of(&t.patient_id) {
            let row = match s {
                Subset::Train => &mut out[0],
                Subset::Val => &mut out[1],
                Subset::Test => &mut out[2],
            };
            row.0 += 1;
            row.1[t.label as usize] += 1;
        }
    }
    out
}
