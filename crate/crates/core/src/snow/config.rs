use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCALE_COUNT: usize = 5;

/// Knobs for snow synthesis. Defaults are tuned for 1280x720 driving footage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnowConfig {
    /// Fixed working resolution the image is resized to before compositing.
    pub working_width: usize,
    pub working_height: usize,
    /// Particle size factors, one compositing pass each.
    pub scale_array: Vec<f64>,
    pub noise_mean: f64,
    pub noise_std: f64,
    /// Fraction of pixels that become particles in each pass.
    pub coverage_quantile: f64,
    /// Noise smoothing sigma at scale 1; pass `k` uses `scale_k * base_sigma`.
    pub base_sigma: f64,
    /// Blur-kernel smoothing is `smoothing_constant / scale_k`.
    pub smoothing_constant: f64,
    /// Per-scale motion-blur lengths; `None` means `round(3 + 2 * scale_k)`.
    pub blur_lengths: Option<Vec<usize>>,
    /// Half-open range of blur directions in degrees.
    pub angle_range: [f64; 2],
    pub seed: u64,
}

impl Default for SnowConfig {
    fn default() -> Self {
        Self {
            working_width: 640,
            working_height: 360,
            scale_array: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            noise_mean: 0.5,
            noise_std: 0.3,
            coverage_quantile: 0.04,
            base_sigma: 1.0,
            smoothing_constant: 1.0,
            blur_lengths: None,
            angle_range: [0.0, 180.0],
            seed: 0,
        }
    }
}

/// Resolved parameters of one compositing pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleParams {
    pub scale: f64,
    pub noise_sigma: f64,
    pub blur_length: usize,
    pub smoothing_sigma: f64,
}

impl SnowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.working_width == 0 || self.working_height == 0 {
            return bad("working size must be positive".into());
        }
        if self.scale_array.len() != SCALE_COUNT {
            return bad(format!(
                "scale_array needs exactly {SCALE_COUNT} entries, got {}",
                self.scale_array.len()
            ));
        }
        if !self.scale_array.iter().all(|s| s.is_finite() && *s > 0.0) {
            return bad("scale_array entries must be finite and > 0".into());
        }
        if !self.scale_array.windows(2).all(|w| w[0] < w[1]) {
            return bad("scale_array must be strictly increasing".into());
        }
        if !self.noise_mean.is_finite() {
            return bad("noise_mean must be finite".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return bad(format!("noise_std must be > 0, got {}", self.noise_std));
        }
        if !(self.coverage_quantile > 0.0 && self.coverage_quantile < 1.0) {
            return bad(format!(
                "coverage_quantile must lie in (0, 1), got {}",
                self.coverage_quantile
            ));
        }
        if !(self.base_sigma.is_finite() && self.base_sigma > 0.0) {
            return bad(format!("base_sigma must be > 0, got {}", self.base_sigma));
        }
        if !(self.smoothing_constant.is_finite() && self.smoothing_constant >= 0.0) {
            return bad("smoothing_constant must be >= 0".into());
        }
        if let Some(lengths) = &self.blur_lengths {
            if lengths.len() != SCALE_COUNT || lengths.contains(&0) {
                return bad(format!(
                    "blur_lengths needs {SCALE_COUNT} entries, all >= 1"
                ));
            }
        }
        let [lo, hi] = self.angle_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("angle_range [{lo}, {hi}) is empty"));
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<ScaleParams> {
        self.scale_array
            .iter()
            .enumerate()
            .map(|(k, &scale)| ScaleParams {
                scale,
                noise_sigma: scale * self.base_sigma,
                blur_length: self
                    .blur_lengths
                    .as_ref()
                    .map(|l| l[k])
                    .unwrap_or_else(|| (3.0 + 2.0 * scale).round() as usize),
                smoothing_sigma: self.smoothing_constant / scale,
            })
            .collect()
    }

    pub fn working_size(&self) -> (usize, usize) {
        (self.working_width, self.working_height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SnowConfig::default().validate().unwrap();
    }

    #[test]
    fn default_schedule() {
        let s = SnowConfig::default().scales();
        let lengths: Vec<usize> = s.iter().map(|p| p.blur_length).collect();
        assert_eq!(lengths, vec![4, 5, 7, 9, 11]);
        assert!(s.windows(2).all(|w| w[0].smoothing_sigma > w[1].smoothing_sigma));
        assert_eq!(s[0].smoothing_sigma, 2.0);
        assert_eq!(s[4].noise_sigma, 4.0);
    }

    #[test]
    fn rejects_bad_values() {
        let cases: Vec<Box<dyn Fn(&mut SnowConfig)>> = vec![
            Box::new(|c| c.scale_array = vec![1.0, 2.0, 3.0, 4.0]),
            Box::new(|c| c.scale_array = vec![1.0, 2.0, 2.0, 3.0, 4.0]),
            Box::new(|c| c.scale_array = vec![-1.0, 2.0, 2.5, 3.0, 4.0]),
            Box::new(|c| c.noise_std = 0.0),
            Box::new(|c| c.coverage_quantile = 1.0),
            Box::new(|c| c.coverage_quantile = 0.0),
            Box::new(|c| c.working_width = 0),
            Box::new(|c| c.blur_lengths = Some(vec![1, 2, 0, 4, 5])),
            Box::new(|c| c.angle_range = [90.0, 90.0]),
        ];
        for mutate in cases {
            let mut c = SnowConfig::default();
            mutate(&mut c);
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
