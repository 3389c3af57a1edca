use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::format::{write_jsonl, write_yolo_labels, AnnotationFormat, JsonlRecord};
use super::{prepare_output, DatasetItem, IMAGES_DIR, JSONL_FILE, LABELS_DIR};
use crate::error::{Error, Result};
use crate::seed::{derive_item_seed, item_rng};
use crate::snow::{synthesize_snow, SnowConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Per-item choice between the original and a synthesized image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixPolicy {
    pub p_synthetic: f64,
    pub seed: u64,
}

impl Default for MixPolicy {
    fn default() -> Self {
        Self {
            p_synthetic: 0.5,
            seed: 0,
        }
    }
}

impl MixPolicy {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.p_synthetic) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "p_synthetic must lie in [0, 1], got {}",
                self.p_synthetic
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Original,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub source: String,
    /// Path relative to the output root; absent when the item failed.
    pub output: Option<String>,
    pub branch: Branch,
    pub seed: u64,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_digest: String,
    pub snow: SnowConfig,
    pub mix: MixPolicy,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn count(&self, branch: Branch) -> usize {
        self.records
            .iter()
            .filter(|r| r.error.is_none() && r.branch == branch)
            .count()
    }

    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// SHA-256 (hex) of the canonical JSON encoding of the run configuration.
pub fn config_digest(snow: &SnowConfig, policy: &MixPolicy) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        snow: &'a SnowConfig,
        mix: &'a MixPolicy,
    }
    let json = serde_json::to_vec(&Canonical { snow, mix: policy })
        .expect("config serializes to JSON");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Outcome {
    record: ManifestRecord,
    label: Option<JsonlRecord>,
}

fn process_item(
    index: usize,
    item: &DatasetItem,
    snow: &SnowConfig,
    policy: &MixPolicy,
    digest: &str,
    format: AnnotationFormat,
    out: &Path,
) -> Outcome {
    let seed = derive_item_seed(policy.seed, index as u64);
    let mut rng = item_rng(policy.seed, index as u64);
    let branch = if rng.random_bool(policy.p_synthetic) {
        Branch::Synthetic
    } else {
        Branch::Original
    };

    let written = (|| -> Result<(String, JsonlRecord)> {
        let file = match branch {
            Branch::Original => {
                let file = item.file_name();
                let dst = out.join(IMAGES_DIR).join(&file);
                std::fs::copy(&item.image_path, &dst).map_err(|e| Error::io(&item.image_path, e))?;
                file
            }
            Branch::Synthetic => {
                let image = item.load_image()?;
                let snowy = synthesize_snow(&image, snow, &mut rng)?;
                let file = format!("{}.png", item.stem());
                snowy.save_png(out.join(IMAGES_DIR).join(&file))?;
                file
            }
        };
        let (w, h) = item.image_size;
        if format == AnnotationFormat::Yolo {
            let label = out.join(LABELS_DIR).join(format!("{}.txt", item.stem()));
            write_yolo_labels(&label, &item.annotations, w, h)?;
        }
        Ok((
            file.clone(),
            JsonlRecord {
                image: file,
                width: w,
                height: h,
                boxes: item.annotations.clone(),
            },
        ))
    })();

    let source = item.image_path.display().to_string();
    match written {
        Ok((file, label)) => Outcome {
            record: ManifestRecord {
                source,
                output: Some(format!("{IMAGES_DIR}/{file}")),
                branch,
                seed,
                config_digest: digest.to_string(),
                error: None,
            },
            label: Some(label),
        },
        Err(e) => {
            log::error!("{source}: {e}");
            Outcome {
                record: ManifestRecord {
                    source,
                    output: None,
                    branch,
                    seed,
                    config_digest: digest.to_string(),
                    error: Some(e.to_string()),
                },
                label: None,
            }
        }
    }
}

/// Builds the mixed training set in `out` and returns its manifest (also
/// written to `out/manifest.json`).
///
/// Item `i` draws its branch, and when synthetic its snow, from the stream
/// `item_rng(policy.seed, i)`, so the output is a pure function of the inputs
/// regardless of `workers`. Per-item failures are recorded, not fatal.
pub fn mix_datasets(
    items: &[DatasetItem],
    snow: &SnowConfig,
    policy: &MixPolicy,
    format: AnnotationFormat,
    out: impl AsRef<Path>,
    workers: usize,
) -> Result<Manifest> {
    let out = out.as_ref();
    snow.validate()?;
    policy.validate()?;
    prepare_output(out, format)?;
    let digest = config_digest(snow, policy);

    let outcomes: Vec<Outcome> = crate::pool(workers)?.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| process_item(i, item, snow, policy, &digest, format, out))
            .collect()
    });

    if format == AnnotationFormat::Jsonl {
        let labels: Vec<JsonlRecord> = outcomes.iter().filter_map(|o| o.label.clone()).collect();
        write_jsonl(&out.join(JSONL_FILE), &labels)?;
    }
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        config_digest: digest,
        snow: snow.clone(),
        mix: *policy,
        records: outcomes.into_iter().map(|o| o.record).collect(),
    };
    manifest.save(out.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let snow = SnowConfig::default();
        let mix = MixPolicy::default();
        let a = config_digest(&snow, &mix);
        assert_eq!(a, config_digest(&snow.clone(), &mix));
        assert_eq!(a.len(), 64);
        let other = MixPolicy {
            p_synthetic: 0.25,
            ..mix
        };
        assert_ne!(a, config_digest(&snow, &other));
    }

    #[test]
    fn policy_range() {
        assert!(MixPolicy { p_synthetic: 1.2, seed: 0 }.validate().is_err());
        assert!(MixPolicy { p_synthetic: -0.1, seed: 0 }.validate().is_err());
        assert!(MixPolicy { p_synthetic: 0.0, seed: 0 }.validate().is_ok());
    }
}
