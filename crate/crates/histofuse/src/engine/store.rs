//! Immutable tile collection with per-subset access accounting and a
//! bounded decoded-image cache.

use crate::dataset::{LabeledTile, SplitSpec, Subset};
use crate::error::Result;
use image::RgbImage;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Decoded-image cache budget in pixels (~48 MB of RGB8).
const CACHE_PIXEL_BUDGET: u64 = 16_000_000;

pub struct TileStore {
    tiles: Vec<LabeledTile>,
    subsets: Vec<Subset>,
    reads: [AtomicUsize; 3],
    cache: Mutex<(HashMap<usize, RgbImage>, u64)>,
}

impl TileStore {
    /// Tiles must all belong to a subset of `split`.
    pub fn new(tiles: Vec<LabeledTile>, split: &SplitSpec) -> Result<Self> {
        let mut subsets = Vec::with_capacity(tiles.len());
        for t in &tiles {
            let s = split.subset_of(&t.patient_id).ok_or_else(|| {
                crate::error::Error::Config(format!(
                    "patient {} missing from the split",
                    t.patient_id
                ))
            })?;
            subsets.push(s);
        }
        Ok(TileStore {
            tiles,
            subsets,
            reads: [
                AtomicUsize::new(0),
                AtomicUsize::new(0),
                AtomicUsize::new(0),
            ],
            cache: Mutex::new((HashMap::new(), 0)),
        })
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tiles(&self) -> &[LabeledTile] {
        &self.tiles
    }

    pub fn subset(&self, row: usize) -> Subset {
        self.subsets[row]
    }

    /// Row indices of one subset, in tile order.
    pub fn rows_of(&self, subset: Subset) -> Vec<usize> {
        self.subsets
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| if s == subset { Some(i) } else { None })
            .collect()
    }

    /// Image reads per subset `(train, val, test)` since construction.
    pub fn access_counts(&self) -> [usize; 3] {
        [
            self.reads[0].load(Ordering::Relaxed),
            self.reads[1].load(Ordering::Relaxed),
            self.reads[2].load(Ordering::Relaxed),
        ]
    }

    /// Loads (or serves from cache) the decoded image of one tile and logs
    /// the access against its subset.
    pub fn load_image(&self, row: usize) -> Result<RgbImage> {
        let slot = match self.subsets[row] {
            Subset::Train => 0,
            Subset::Val => 1,
            Subset::Test => 2,
        };
        self.reads[slot].fetch_add(1, Ordering::Relaxed);

        {
            let cache = self.cache.lock().unwrap();
            if let Some(img) = cache.0.get(&row) {
                return Ok(img.clone());
            }
        }
        let img = crate::imaging::load_rgb(&self.tiles[row].image_path)?;
        let px = img.width() as u64 * img.height() as u64;
        let mut cache = self.cache.lock().unwrap();
        if cache.1 + px <= CACHE_PIXEL_BUDGET {
            cache.1 += px;
            cache.0.insert(row, img.clone());
        }
        Ok(img)
    }
}
