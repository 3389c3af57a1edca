//! Run configuration.
//!
//! The on-disk form is a flat TOML document; every key is optional and
//! unknown keys are rejected:
//!
//! ```toml
//! seed = 7                # feeds both snow synthesis and the mixing draw
//! workers = 4
//! format = "yolo"         # or "jsonl"
//! input = "data/bosch"
//! output = "out/mixed"
//!
//! p_synthetic = 0.5
//!
//! working_width = 640
//! working_height = 360
//! scale_array = [0.5, 1.0, 2.0, 3.0, 4.0]
//! noise_mean = 0.5
//! noise_std = 0.3
//! coverage_quantile = 0.04
//! base_sigma = 1.0
//! smoothing_constant = 1.0
//! blur_lengths = [4, 5, 7, 9, 11]
//! angle_min = 0.0
//! angle_max = 180.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataset::{AnnotationFormat, MixPolicy};
use crate::error::{Error, Result};
use crate::snow::SnowConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: AnnotationFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub snow: SnowConfig,
    pub mix: MixPolicy,
    pub io: IoConfig,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            snow: SnowConfig::default(),
            mix: MixPolicy::default(),
            io: IoConfig {
                input: None,
                output: None,
                format: AnnotationFormat::Yolo,
            },
            workers: 1,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatConfig {
    seed: Option<u64>,
    workers: Option<usize>,
    format: Option<String>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    p_synthetic: Option<f64>,
    working_width: Option<usize>,
    working_height: Option<usize>,
    scale_array: Option<Vec<f64>>,
    noise_mean: Option<f64>,
    noise_std: Option<f64>,
    coverage_quantile: Option<f64>,
    base_sigma: Option<f64>,
    smoothing_constant: Option<f64>,
    blur_lengths: Option<Vec<usize>>,
    angle_min: Option<f64>,
    angle_max: Option<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let flat: FlatConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let snow = &mut cfg.snow;
        macro_rules! take {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = flat.$src { $dst = v; })*
            };
        }
        take! {
            working_width => snow.working_width,
            working_height => snow.working_height,
            scale_array => snow.scale_array,
            noise_mean => snow.noise_mean,
            noise_std => snow.noise_std,
            coverage_quantile => snow.coverage_quantile,
            base_sigma => snow.base_sigma,
            smoothing_constant => snow.smoothing_constant,
            angle_min => snow.angle_range[0],
            angle_max => snow.angle_range[1],
            p_synthetic => cfg.mix.p_synthetic,
            workers => cfg.workers,
        }
        cfg.snow.blur_lengths = flat.blur_lengths;
        cfg.io.input = flat.input;
        cfg.io.output = flat.output;
        if let Some(f) = flat.format {
            cfg.io.format = f.parse()?;
        }
        if let Some(seed) = flat.seed {
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The single seed drives both the snow stream and the mixing stream.
    pub fn set_seed(&mut self, seed: u64) {
        self.snow.seed = seed;
        self.mix.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.snow.validate()?;
        self.mix.validate()?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}
