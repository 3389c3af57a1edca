//! Convolutions over [`FloatField`]s with reflect padding.
//!
//! Reflect padding mirrors about the pixel edge (`d c b a | a b c d | d c b a`)
//! and repeats periodically, so any kernel radius works on any field size.

use crate::raster::FloatField;

use super::kernel::{GaussianKernel, MotionBlurKernel};

/// Maps a possibly out-of-range coordinate onto `0..n` by edge reflection.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Separable Gaussian smoothing: horizontal pass, then vertical pass.
pub fn gaussian_filter(field: &FloatField, kernel: &GaussianKernel) -> FloatField {
    let (w, h) = field.dims();
    if field.is_empty() {
        return field.clone();
    }
    let r = kernel.radius();
    let taps = kernel.taps();
    let src = field.as_slice();

    let mut tmp = vec![0.0; w * h];
    let mut padded = vec![0.0; w + 2 * r];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        padded[r..r + w].copy_from_slice(row);
        for i in (0..r).chain(r + w..w + 2 * r) {
            padded[i] = row[reflect_index(i as isize - r as isize, w)];
        }
        // tap-major accumulation keeps the inner loop vectorizable
        let out = &mut tmp[y * w..(y + 1) * w];
        for (k, t) in taps.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&padded[k..k + w]) {
                *o += t * v;
            }
        }
    }

    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (k, t) in taps.iter().enumerate() {
            let sy = reflect_index(y as isize + k as isize - r as isize, h);
            let srow = &tmp[sy * w..(sy + 1) * w];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += t * s;
            }
        }
    }
    FloatField::new(w, h, out).expect("dimensions preserved")
}

/// Full 2-D convolution with a motion-blur kernel, clamped to `[0, 1]`.
///
/// Implemented as a scatter over nonzero source samples, which is exact and
/// much cheaper on the sparse binary particle fields it is fed.
pub fn apply_motion_blur(field: &FloatField, kernel: &MotionBlurKernel) -> FloatField {
    let (w, h) = field.dims();
    if field.is_empty() {
        return field.clone();
    }
    let r = kernel.radius() as isize;
    let taps: Vec<(isize, isize, f64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter_map(|(dx, dy)| {
            let wgt = kernel.weight(dx, dy);
            (wgt != 0.0).then_some((dx, dy, wgt))
        })
        .collect();

    let (wi, hi) = (w as isize, h as isize);
    let src = field.as_slice();
    let cols: Vec<usize> = (-r..wi + r).map(|px| reflect_index(px, w)).collect();
    let mut out = vec![0.0; w * h];
    // out(x, y) = sum k(dx, dy) * f(reflect(x - dx), reflect(y - dy)); every
    // padded source position (px, py) feeds outputs (px + dx, py + dy).
    for py in -r..hi + r {
        let row = &src[reflect_index(py, h) * w..][..w];
        let inner_y = py >= r && py < hi - r;
        for (px, &sx) in (-r..wi + r).zip(&cols) {
            let v = row[sx];
            if v == 0.0 {
                continue;
            }
            if inner_y && px >= r && px < wi - r {
                let base = py * wi + px;
                for &(dx, dy, wgt) in &taps {
                    out[(base + dy * wi + dx) as usize] += wgt * v;
                }
                continue;
            }
            for &(dx, dy, wgt) in &taps {
                let (x, y) = (px + dx, py + dy);
                if x >= 0 && x < wi && y >= 0 && y < hi {
                    out[(y * wi + x) as usize] += wgt * v;
                }
            }
        }
    }
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    FloatField::new(w, h, out).expect("dimensions preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snow::kernel::build_motion_blur_kernel;

    #[test]
    fn reflect_pattern() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-1, 1), 0);
        assert_eq!(reflect_index(9, 1), 0);
    }

    #[test]
    fn constant_field_is_fixed_point() {
        let f = FloatField::filled(9, 5, 0.37);
        let k = GaussianKernel::new(2.0).unwrap();
        let g = gaussian_filter(&f, &k);
        assert!(g.as_slice().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn impulse_response_center() {
        let mut f = FloatField::zeros(41, 41);
        f.set(20, 20, 1.0);
        let k = GaussianKernel::new(1.0).unwrap();
        let g = gaussian_filter(&f, &k);
        assert!((g.get(20, 20) - k.weight(0, 0)).abs() < 1e-15);
        assert!((g.get(22, 19) - k.weight(2, -1)).abs() < 1e-15);
        assert!((g.mean() - f.mean()).abs() < 1e-12);
    }

    #[test]
    fn tiny_field_with_large_kernel() {
        let f = FloatField::new(2, 1, vec![0.0, 1.0]).unwrap();
        let g = gaussian_filter(&f, &GaussianKernel::new(4.0).unwrap());
        assert_eq!(g.dims(), (2, 1));
        assert!(g.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn blur_of_zero_is_zero() {
        let f = FloatField::zeros(12, 7);
        let k = build_motion_blur_kernel(5, 37.0, 0.5).unwrap();
        assert!(apply_motion_blur(&f, &k).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_becomes_horizontal_streak() {
        let mut f = FloatField::zeros(11, 11);
        f.set(5, 5, 1.0);
        let k = build_motion_blur_kernel(5, 0.0, 0.0).unwrap();
        let out = apply_motion_blur(&f, &k);
        for y in 0..11 {
            for x in 0..11 {
                let expected = if y == 5 && (3..=7).contains(&x) { 0.2 } else { 0.0 };
                assert!((out.get(x, y) - expected).abs() < 1e-15, "({x},{y})");
            }
        }
    }

    #[test]
    fn output_clamped() {
        let f = FloatField::filled(6, 6, 1.0);
        let k = build_motion_blur_kernel(3, 45.0, 0.0).unwrap();
        let out = apply_motion_blur(&f, &k);
        assert!(out.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
