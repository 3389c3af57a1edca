use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Continuous isotropic 2-D Gaussian density
/// `G(x, y) = exp(-(x^2 + y^2) / (2 sigma^2)) / (2 pi sigma^2)`.
pub fn gaussian_density(x: f64, y: f64, sigma: f64) -> f64 {
    let two_s2 = 2.0 * sigma * sigma;
    (-(x * x + y * y) / two_s2).exp() / (PI * two_s2)
}

/// Discrete Gaussian kernel, stored in separable 1-D form.
///
/// The 2-D weight at offset `(dx, dy)` is `taps[dx] * taps[dy]`, which is the
/// continuous density sampled at integer offsets and renormalized so the full
/// `(2r+1)^2` stencil sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    taps: Vec<f64>,
}

impl GaussianKernel {
    /// Radius is `ceil(3 sigma)`, at least 1.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        let radius = ((3.0 * sigma).ceil() as usize).max(1);
        let r = radius as isize;
        // 1-D marginal of the density; the 2-D normalization constant cancels
        let mut taps: Vec<f64> = (-r..=r)
            .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|w| *w /= sum);
        Ok(Self {
            sigma,
            radius,
            taps,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length of the 2-D stencil.
    pub fn size(&self) -> usize {
        2 * self.radius + 1
    }

    /// 1-D normalized taps, index `radius` is the center.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// 2-D weight at offset `(dx, dy)` from the center; zero outside the stencil.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        self.taps[(dx + r) as usize] * self.taps[(dy + r) as usize]
    }

    /// Full 2-D stencil, row-major.
    pub fn weights_2d(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.size() * self.size());
        for wy in &self.taps {
            for wx in &self.taps {
                out.push(wx * wy);
            }
        }
        out
    }
}

pub fn build_gaussian_kernel(sigma: f64) -> Result<GaussianKernel> {
    GaussianKernel::new(sigma)
}

/// Line-shaped point spread function for directional blur.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionBlurKernel {
    size: usize,
    angle: f64,
    weights: Vec<f64>,
}

impl MotionBlurKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Degrees, counterclockwise as displayed (image y axis points down).
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Row-major `size * size` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius() as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        self.weights[((dy + r) as usize) * self.size + (dx + r) as usize]
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

/// Builds a motion-blur kernel.
///
/// The stencil is `length` rounded up to odd. A full-width horizontal line of
/// ones through the center is rotated by `angle_deg` (bilinear, zero fill),
/// optionally smoothed by a Gaussian of `smoothing_sigma` (zero padding;
/// `0` skips smoothing) and renormalized to unit sum.
pub fn build_motion_blur_kernel(
    length: usize,
    angle_deg: f64,
    smoothing_sigma: f64,
) -> Result<MotionBlurKernel> {
    if length == 0 {
        return Err(Error::InvalidConfig("motion blur length must be >= 1".into()));
    }
    if !angle_deg.is_finite() {
        return Err(Error::InvalidConfig(format!("blur angle {angle_deg} is not finite")));
    }
    if !(smoothing_sigma.is_finite() && smoothing_sigma >= 0.0) {
        return Err(Error::InvalidSigma(smoothing_sigma));
    }
    let size = length | 1;
    let c = (size / 2) as f64;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (sin, cos) = (snap(sin), snap(cos));

    // Source is a line of ones along row `c`: bilinear sampling only depends on
    // the vertical distance to that row and on staying inside the stencil.
    let line = |sx: f64, sy: f64| -> f64 {
        let last = (size - 1) as f64;
        let px = sx + c;
        let across = 1.0 - sy.abs();
        let along = if px < 0.0 {
            1.0 + px
        } else if px > last {
            last + 1.0 - px
        } else {
            1.0
        };
        across.max(0.0) * along.max(0.0)
    };

    let mut weights = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - c, y as f64 - c);
            // inverse rotation into the unrotated line frame
            let sx = dx * cos - dy * sin;
            let sy = dx * sin + dy * cos;
            weights.push(line(sx, sy));
        }
    }

    if smoothing_sigma > 0.0 {
        weights = smooth_zero_padded(&weights, size, &GaussianKernel::new(smoothing_sigma)?);
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Ok(MotionBlurKernel {
        size,
        angle: angle_deg,
        weights,
    })
}

fn smooth_zero_padded(src: &[f64], size: usize, g: &GaussianKernel) -> Vec<f64> {
    let r = g.radius() as isize;
    let n = size as isize;
    let taps = g.taps();
    let mut tmp = vec![0.0; size * size];
    for y in 0..n {
        for x in 0..n {
            let mut acc = 0.0;
            for k in -r..=r {
                let sx = x - k;
                if (0..n).contains(&sx) {
                    acc += taps[(k + r) as usize] * src[(y * n + sx) as usize];
                }
            }
            tmp[(y * n + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; size * size];
    for y in 0..n {
        for x in 0..n {
            let mut acc = 0.0;
            for k in -r..=r {
                let sy = y - k;
                if (0..n).contains(&sy) {
                    acc += taps[(k + r) as usize] * tmp[(sy * n + x) as usize];
                }
            }
            out[(y * n + x) as usize] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_peak() {
        assert!((gaussian_density(0.0, 0.0, 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((gaussian_density(0.0, 0.0, 1.0) - 0.159155).abs() < 1e-6);
    }

    #[test]
    fn sigma_validation() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(GaussianKernel::new(bad), Err(Error::InvalidSigma(_))));
        }
    }

    #[test]
    fn radius_rule() {
        assert_eq!(GaussianKernel::new(1.0).unwrap().radius(), 3);
        assert_eq!(GaussianKernel::new(0.5).unwrap().radius(), 2);
        assert_eq!(GaussianKernel::new(0.1).unwrap().radius(), 1);
        assert_eq!(GaussianKernel::new(2.2).unwrap().radius(), 7);
    }

    #[test]
    fn normalized_and_symmetric() {
        for sigma in [0.3, 0.5, 1.0, 1.7, 4.0, 9.5] {
            let k = GaussianKernel::new(sigma).unwrap();
            let w = k.weights_2d();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let r = k.radius() as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    let v = k.weight(dx, dy);
                    assert_eq!(v, k.weight(-dx, -dy));
                    assert_eq!(v, k.weight(dy, dx));
                }
            }
        }
    }

    #[test]
    fn unit_sigma_neighbor_ratio() {
        let k = GaussianKernel::new(1.0).unwrap();
        let ratio = k.weight(1, 0) / k.weight(0, 0);
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-12);
        assert!((ratio - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn horizontal_line_kernel() {
        let k = build_motion_blur_kernel(5, 0.0, 0.0).unwrap();
        assert_eq!(k.size(), 5);
        for y in 0..5 {
            for x in 0..5 {
                let expected = if y == 2 { 0.2 } else { 0.0 };
                assert!((k.weights()[y * 5 + x] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn vertical_is_transpose_of_horizontal() {
        let h = build_motion_blur_kernel(7, 0.0, 0.0).unwrap();
        let v = build_motion_blur_kernel(7, 90.0, 0.0).unwrap();
        for y in 0..7 {
            for x in 0..7 {
                assert!((v.weights()[y * 7 + x] - h.weights()[x * 7 + y]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn even_length_rounds_up() {
        assert_eq!(build_motion_blur_kernel(4, 0.0, 0.0).unwrap().size(), 5);
        assert_eq!(build_motion_blur_kernel(1, 33.0, 0.0).unwrap().size(), 1);
    }

    #[test]
    fn smoothing_spreads_mass() {
        let sharp = build_motion_blur_kernel(9, 0.0, 0.0).unwrap();
        let soft = build_motion_blur_kernel(9, 0.0, 1.0).unwrap();
        assert!(soft.weight(0, 1) > 0.0);
        assert_eq!(sharp.weight(0, 1), 0.0);
        assert!(soft.weight(0, 0) < sharp.weight(0, 0));
    }

    #[test]
    fn zero_length_rejected() {
        assert!(build_motion_blur_kernel(0, 0.0, 0.0).is_err());
        assert!(build_motion_blur_kernel(3, 0.0, -1.0).is_err());
    }
}
