use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub name: String,
    pub iou: f64,
    pub ground_truth: usize,
    pub predictions: usize,
    pub matched: usize,
}

/// Dataset-level detection metrics plus per-image IoU records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub avg_iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map50: f64,
    pub map50_95: f64,
    pub iou_threshold: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub per_image: Vec<ImageReport>,
}

impl EvalReport {
    /// Headline rows in fixed order.
    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("Average IOU", self.avg_iou),
            ("mAP@50-95", self.map50_95),
            ("mAP@50", self.map50),
            ("Precision", self.precision),
            ("F1 Score", self.f1),
        ]
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8}", "Metric", "Value");
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name:<12} {v:>8.4}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}
