//! On-disk annotation formats.
//!
//! A dataset directory holds `images/` plus either `labels/<stem>.txt` (YOLO)
//! or a single `labels.jsonl` (JSONL).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub const IMAGES_DIR: &str = "images";
pub const LABELS_DIR: &str = "labels";
pub const JSONL_FILE: &str = "labels.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationFormat {
    /// `class cx cy w h`, normalized, one label file per image.
    Yolo,
    /// One JSON object per image with absolute corner boxes.
    Jsonl,
}

impl FromStr for AnnotationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yolo" | "yolo-txt" => Ok(Self::Yolo),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown annotation format {other:?} (expected yolo or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for AnnotationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yolo => "yolo",
            Self::Jsonl => "jsonl",
        })
    }
}

/// A line of `labels.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonlRecord {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<BoundingBox>,
}

/// Parses one YOLO label line into a box in pixel coordinates (unclamped).
pub fn parse_yolo_line(line: &str, width: u32, height: u32) -> std::result::Result<BoundingBox, String> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields (class cx cy w h), found {}", fields.len()));
    }
    let class_id: u32 = fields[0]
        .parse()
        .map_err(|_| format!("bad class id {:?}", fields[0]))?;
    let mut v = [0.0f64; 4];
    for (slot, raw) in v.iter_mut().zip(&fields[1..]) {
        *slot = raw
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| format!("bad number {raw:?}"))?;
    }
    Ok(BoundingBox::from_normalized_center(
        class_id, v[0], v[1], v[2], v[3], width, height,
    ))
}

pub fn format_yolo_line(b: &BoundingBox, width: u32, height: u32) -> String {
    let [cx, cy, w, h] = b.to_normalized_center(width, height);
    format!("{} {:.6} {:.6} {:.6} {:.6}", b.class_id, cx, cy, w, h)
}

/// Reads every non-blank line of a YOLO label file.
pub fn read_yolo_labels(path: &Path, width: u32, height: u32) -> Result<Vec<BoundingBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_yolo_line(l, width, height).map_err(|m| Error::parse(path, i + 1, m)))
        .collect()
}

pub fn write_yolo_labels(path: &Path, boxes: &[BoundingBox], width: u32, height: u32) -> Result<()> {
    let mut text = String::new();
    for b in boxes {
        text.push_str(&format_yolo_line(b, width, height));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<(usize, JsonlRecord)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))
        })
        .collect()
}

pub fn write_jsonl(path: &Path, records: &[JsonlRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
