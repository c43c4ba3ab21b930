//! Multimodal hierarchical classification of osteosarcoma histopathology tiles.
//!
//! The pipeline combines a trainable image encoder with 29 handcrafted radiomic
//! descriptors (19 first-order intensity statistics + 10 2D shape features),
//! fuses the two embeddings through a softmax attention gate, and classifies
//! through two hierarchical binary heads (non-tumor vs. tumor, then non-viable
//! vs. viable tumor). The two task losses are balanced by learnable
//! homoscedastic uncertainty weights and trained jointly with AdamW.
//!
//! Modules:
//! - [`radiomics`]: feature extraction, Otsu foreground masks, standardization
//! - [`dataset`]: tile ingestion, patient-level splits, augmentation, synthetic data
//! - [`model`]: encoders, attention fusion, hierarchical heads
//! - [`objective`]: class weights, masked cross-entropies, uncertainty-weighted loss
//! - [`metrics`]: accuracy, F1, OvR-AUC, Sen@Spe90/Spe@Sen90, run aggregation
//! - [`engine`]: training loop, evaluation, the ablation grid runner
//! - [`cli`]: the `histofuse` command suite

pub mod cli;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod imaging;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod objective;
pub mod radiomics;

pub use error::{Error, Result};
