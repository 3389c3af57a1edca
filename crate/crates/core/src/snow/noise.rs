use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::FloatField;

/// I.i.d. normal samples, row-major, drawn in order from `rng`.
pub fn sample_noise_field<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    mean: f64,
    std: f64,
    rng: &mut R,
) -> Result<FloatField> {
    if !(std.is_finite() && std > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise needs finite mean and std > 0, got mean={mean} std={std}"
        )));
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let data = (0..width * height).map(|_| normal.sample(rng)).collect();
    FloatField::new(width, height, data)
}

/// Threshold that keeps the top `coverage` fraction of samples.
///
/// With `k = round(coverage * n)`, this is the `(n - k)`-th smallest value, so
/// exactly `k` samples lie strictly above it when there are no ties. Ties
/// at the threshold go to zero.
pub fn coverage_threshold(field: &FloatField, coverage: f64) -> Result<f64> {
    check_coverage(coverage)?;
    let n = field.len();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let k = ((coverage * n as f64).round() as usize).min(n);
    if k == 0 {
        return Ok(f64::INFINITY);
    }
    if k == n {
        return Ok(f64::NEG_INFINITY);
    }
    let mut values = field.as_slice().to_vec();
    let (_, nth, _) = values.select_nth_unstable_by(n - k - 1, f64::total_cmp);
    Ok(*nth)
}

/// Binarizes `field`: 1 where strictly above the coverage threshold, else 0.
pub fn threshold_field(field: &FloatField, coverage: f64) -> Result<FloatField> {
    let t = coverage_threshold(field, coverage)?;
    let data = field
        .as_slice()
        .iter()
        .map(|&v| if v > t { 1.0 } else { 0.0 })
        .collect();
    FloatField::new(field.width(), field.height(), data)
}

fn check_coverage(coverage: f64) -> Result<()> {
    if coverage > 0.0 && coverage < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "coverage quantile {coverage} outside (0, 1)"
        )))
    }
}
