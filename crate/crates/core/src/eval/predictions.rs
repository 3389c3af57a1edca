//! Detector output files.
//!
//! Text predictions live in one file per image (`<stem>.txt`), either as
//! `class_id confidence x_min y_min x_max y_max` in absolute pixels or, with
//! [`PredictionFormat::YoloNormalized`], as `class_id cx cy w h confidence`.
//! The JSONL alternative is a single file of
//! `{"image": ..., "detections": [{x_min, y_min, x_max, y_max, class_id, confidence}]}`.
//! A missing per-image file means the detector reported nothing.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::dataset::DatasetItem;
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};

pub const PREDICTIONS_JSONL: &str = "predictions.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionFormat {
    Absolute,
    YoloNormalized,
    Jsonl,
}

impl FromStr for PredictionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" | "txt" => Ok(Self::Absolute),
            "yolo" => Ok(Self::YoloNormalized),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown prediction format {other:?} (expected absolute, yolo or jsonl)"
            ))),
        }
    }
}

fn number(raw: &str) -> std::result::Result<f64, String> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("bad number {raw:?}"))
}

fn confidence(raw: &str) -> std::result::Result<f64, String> {
    let c = number(raw)?;
    if (0.0..=1.0).contains(&c) {
        Ok(c)
    } else {
        Err(format!("confidence {c} outside [0, 1]"))
    }
}

pub fn parse_prediction_line(
    line: &str,
    format: PredictionFormat,
    image_size: (u32, u32),
) -> std::result::Result<Detection, String> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() != 6 {
        return Err(format!("expected 6 fields, found {}", f.len()));
    }
    let class_id: u32 = f[0].parse().map_err(|_| format!("bad class id {:?}", f[0]))?;
    match format {
        PredictionFormat::Absolute => {
            let conf = confidence(f[1])?;
            let b = BoundingBox::new(number(f[2])?, number(f[3])?, number(f[4])?, number(f[5])?, class_id);
            Ok(Detection::new(b, conf))
        }
        PredictionFormat::YoloNormalized => {
            let (w, h) = image_size;
            let b = BoundingBox::from_normalized_center(
                class_id,
                number(f[1])?,
                number(f[2])?,
                number(f[3])?,
                number(f[4])?,
                w,
                h,
            );
            Ok(Detection::new(b, confidence(f[5])?))
        }
        PredictionFormat::Jsonl => Err("JSONL predictions are not line-per-box".into()),
    }
}

pub fn read_prediction_file(
    path: &Path,
    format: PredictionFormat,
    image_size: (u32, u32),
) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_prediction_line(l, format, image_size).map_err(|m| Error::parse(path, i + 1, m))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlPredictions {
    image: String,
    detections: Vec<Detection>,
}

fn read_predictions_jsonl(path: &Path) -> Result<HashMap<String, Vec<Detection>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: JsonlPredictions =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if let Some(d) = rec.detections.iter().find(|d| !(0.0..=1.0).contains(&d.confidence)) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("confidence {} outside [0, 1]", d.confidence),
            ));
        }
        // keyed by stem so "a.jpg" predictions pair with "a.png" ground truth
        let stem = Path::new(&rec.image)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(rec.image);
        out.entry(stem).or_insert_with(Vec::new).extend(rec.detections);
    }
    Ok(out)
}

/// Predictions for each ground-truth item, in item order.
///
/// `source` is a directory of per-image files, or for JSONL either the file
/// itself or a directory containing `predictions.jsonl`.
pub fn load_predictions(
    items: &[DatasetItem],
    source: impl AsRef<Path>,
    format: PredictionFormat,
) -> Result<Vec<Vec<Detection>>> {
    let source = source.as_ref();
    match format {
        PredictionFormat::Jsonl => {
            let file = if source.is_dir() {
                source.join(PREDICTIONS_JSONL)
            } else {
                source.to_path_buf()
            };
            let mut by_stem = if file.is_file() {
                read_predictions_jsonl(&file)?
            } else {
                HashMap::new()
            };
            Ok(items
                .iter()
                .map(|it| by_stem.remove(&it.stem()).unwrap_or_default())
                .collect())
        }
        _ => items
            .iter()
            .map(|it| {
                let path = source.join(format!("{}.txt", it.stem()));
                if path.is_file() {
                    read_prediction_file(&path, format, it.image_size)
                } else {
                    Ok(Vec::new())
                }
            })
            .collect(),
    }
}
