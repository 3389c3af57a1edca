//! One-way import of the Bosch Small Traffic Lights YAML index.
//!
//! The index is a list of `{path, boxes: [{label, occluded, x_min, x_max,
//! y_min, y_max}]}` entries with `path` relative to the YAML file. Every
//! traffic-light state becomes class 0.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use flurry::dataset::{write_yolo_labels, IMAGES_DIR, LABELS_DIR};
use flurry::{clamp_box, BoundingBox};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct BoschEntry {
    pub path: String,
    #[serde(default)]
    pub boxes: Vec<BoschBox>,
}

#[derive(Debug, Deserialize)]
pub struct BoschBox {
    #[serde(default)]
    pub label: String,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Default)]
pub struct ImportSummary {
    pub images: usize,
    pub boxes: usize,
    pub skipped_boxes: usize,
    pub failures: Vec<String>,
}

pub fn parse_index(text: &str) -> Result<Vec<BoschEntry>, serde_yaml::Error> {
    // an empty document is an empty index
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    serde_yaml::from_str(text)
}

/// Output file names: the source basename, prefixed by its parent directory
/// when two entries share a basename.
fn output_names(entries: &[BoschEntry]) -> Vec<String> {
    let base = |p: &str| {
        Path::new(p)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mut counts: HashMap<String, usize> = HashMap::new();
    for e in entries {
        *counts.entry(base(&e.path)).or_default() += 1;
    }
    entries
        .iter()
        .map(|e| {
            let name = base(&e.path);
            if counts[&name] > 1 {
                let parent = Path::new(&e.path)
                    .parent()
                    .and_then(|p| p.file_name())
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                format!("{parent}_{name}")
            } else {
                name
            }
        })
        .collect()
}

pub fn import(entries: &[BoschEntry], yaml_dir: &Path, out: &Path) -> std::io::Result<ImportSummary> {
    std::fs::create_dir_all(out.join(IMAGES_DIR))?;
    std::fs::create_dir_all(out.join(LABELS_DIR))?;
    let mut summary = ImportSummary::default();
    for (entry, name) in entries.iter().zip(output_names(entries)) {
        let src: PathBuf = yaml_dir.join(&entry.path);
        let (w, h) = match image::image_dimensions(&src) {
            Ok(dims) => dims,
            Err(e) => {
                summary.failures.push(format!("{}: {e}", src.display()));
                continue;
            }
        };
        let mut boxes = Vec::new();
        for b in &entry.boxes {
            let raw = BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max, 0);
            if !raw.is_valid() {
                log::warn!("{}: skipping degenerate box {raw:?} ({})", entry.path, b.label);
                summary.skipped_boxes += 1;
                continue;
            }
            match clamp_box(&raw, w, h) {
                Ok(c) => boxes.push(c),
                Err(e) => {
                    log::warn!("{}: skipping box: {e}", entry.path);
                    summary.skipped_boxes += 1;
                }
            }
        }
        let dst = out.join(IMAGES_DIR).join(&name);
        if let Err(e) = std::fs::copy(&src, &dst) {
            summary.failures.push(format!("{}: {e}", src.display()));
            continue;
        }
        let stem = Path::new(&name).file_stem().unwrap_or_default();
        let label = out.join(LABELS_DIR).join(stem).with_extension("txt");
        if let Err(e) = write_yolo_labels(&label, &boxes, w, h) {
            summary.failures.push(e.to_string());
            continue;
        }
        summary.images += 1;
        summary.boxes += boxes.len();
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bosch_layout() {
        let text = "\
- boxes:
  - {label: RedLeft, occluded: false, x_max: 700.5, x_min: 690.0, y_max: 350.0, y_min: 330.0}
  path: ./rgb/train/2015-10-05-16-02-30_bag/720654.png
- boxes: []
  path: ./rgb/train/2015-10-05-16-02-30_bag/720656.png
";
        let entries = parse_index(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].boxes[0].label, "RedLeft");
        assert_eq!(entries[0].boxes[0].x_max, 700.5);
        assert!(entries[1].boxes.is_empty());
    }

    #[test]
    fn malformed_yaml_errors() {
        assert!(parse_index("- path: [unclosed").is_err());
        assert!(parse_index("- boxes: 3\n  path: a.png\n").is_err());
    }

    #[test]
    fn duplicate_basenames_get_prefixed() {
        let e = |p: &str| BoschEntry {
            path: p.into(),
            boxes: vec![],
        };
        let names = output_names(&[e("./a/1.png"), e("./b/1.png"), e("./b/2.png")]);
        assert_eq!(names, vec!["a_1.png", "b_1.png", "2.png"]);
    }
}
