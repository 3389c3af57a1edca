//! Synthetic snow augmentation for object-detection datasets, plus the
//! detection metrics used to score models trained on them.
//!
//! * [`snow`]: multi-scale particle synthesis and compositing.
//! * [`dataset`]: YOLO/JSONL ingestion, writing and real/synthetic mixing.
//! * [`eval`]: IoU matching, average IoU, precision/recall/F1 and mAP.

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod raster;
pub mod seed;
pub mod snow;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use geometry::{clamp_box, BoundingBox, Detection};
pub use raster::{FloatField, ImageBuffer, RgbField};
pub use seed::{derive_item_seed, item_rng, SeedPolicy};

/// A rayon pool with `workers` threads (at least one).
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Pool(e.to_string()))
}
