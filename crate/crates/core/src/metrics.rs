//! Image quality metrics.
//!
//! SSIM uses an 11x11 Gaussian window with standard deviation 1.5, the
//! constants `K1 = 0.01`, `K2 = 0.03`, and symmetric (mirror) padding, so
//! every pixel contributes to the mean.

use crate::error::{check_shape, invalid, Result};
use crate::field::ScalarField;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean squared difference.
pub fn mse(u: &ScalarField, reference: &ScalarField) -> Result<f64> {
    check_shape(reference.shape(), u.shape())?;
    let s: f64 = u
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(s / u.len() as f64)
}

/// Mean SSIM with the dynamic range taken from `reference` (1 when the
/// reference is constant).
pub fn ssim(u: &ScalarField, reference: &ScalarField) -> Result<f64> {
    let range = reference.max() - reference.min();
    ssim_with_range(u, reference, if range > 0.0 { range } else { 1.0 })
}

/// Mean SSIM with the range pooled over both images; symmetric in its
/// arguments.
pub fn ssim_pooled(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    let range = a.max().max(b.max()) - a.min().min(b.min());
    ssim_with_range(a, b, if range > 0.0 { range } else { 1.0 })
}

pub fn ssim_with_range(x: &ScalarField, y: &ScalarField, range: f64) -> Result<f64> {
    check_shape(y.shape(), x.shape())?;
    if !(range > 0.0 && range.is_finite()) {
        return Err(invalid("range", "must be positive"));
    }
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let xy = x.zip_map(y, |a, b| a * b)?;
    let mx = window_mean(x);
    let my = window_mean(y);
    let mxx = window_mean(&x.map(|a| a * a));
    let myy = window_mean(&y.map(|a| a * a));
    let mxy = window_mean(&xy);
    let mut total = 0.0;
    for k in 0..x.len() {
        let (ux, uy) = (mx.as_slice()[k], my.as_slice()[k]);
        let vx = mxx.as_slice()[k] - ux * ux;
        let vy = myy.as_slice()[k] - uy * uy;
        let cxy = mxy.as_slice()[k] - ux * uy;
        total +=
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / x.len() as f64)
}

fn window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|t| (-((t * t) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Mirror index for symmetric padding (`-1 -> 0`, `n -> n-1`).
fn mirror(k: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = k.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn window_mean(u: &ScalarField) -> ScalarField {
    let (h, w) = u.shape();
    let k = window();
    let r = (k.len() / 2) as isize;
    let src = u.as_slice();
    let mut tmp = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            tmp[i * w + j] = k
                .iter()
                .enumerate()
                .map(|(t, kv)| kv * src[i * w + mirror(j as isize + t as isize - r, w)])
                .sum();
        }
    }
    ScalarField::from_fn(h, w, |i, j| {
        k.iter()
            .enumerate()
            .map(|(t, kv)| kv * tmp[mirror(i as isize + t as isize - r, h) * w + j])
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(h, w, |_, _| rng.random())
    }

    #[test]
    fn identical_images() {
        let u = random(20, 17, 1);
        assert_eq!(mse(&u, &u).unwrap(), 0.0);
        assert!((ssim(&u, &u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_mse() {
        let u = random(9, 13, 2);
        let v = u.map(|a| a + 0.25);
        assert!((mse(&v, &u).unwrap() - 0.0625).abs() < 1e-14);
    }

    #[test]
    fn pooled_ssim_symmetric() {
        for seed in 0..10 {
            let a = random(24, 24, seed);
            let b = random(24, 24, seed + 100).map(|v| 2.0 * v - 0.3);
            assert_eq!(ssim_pooled(&a, &b).unwrap(), ssim_pooled(&b, &a).unwrap());
        }
    }

    #[test]
    fn ssim_bounded_and_decreasing_with_noise() {
        let u = ScalarField::from_fn(
            32,
            32,
            |i, j| if (i / 8 + j / 8) % 2 == 0 { 1.0 } else { 0.0 },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = ScalarField::from_fn(32, 32, |_, _| rng.random::<f64>() - 0.5);
        let mut last = 1.0;
        for amp in [0.05, 0.2, 0.6] {
            let v = u.zip_map(&noise, |a, n| a + amp * n).unwrap();
            let s = ssim(&v, &u).unwrap();
            assert!(s < last && s > -1.0);
            last = s;
        }
    }

    #[test]
    fn window_matches_direct_sum() {
        let u = random(6, 5, 8);
        let m = window_mean(&u);
        let k = window();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let (i, j) = (2usize, 1usize);
        let mut direct = 0.0;
        for (a, ka) in k.iter().enumerate() {
            for (b, kb) in k.iter().enumerate() {
                let ii = mirror(i as isize + a as isize - 5, 6);
                let jj = mirror(j as isize + b as isize - 5, 5);
                direct += ka * kb * u[(ii, jj)];
            }
        }
        assert!((m[(i, j)] - direct).abs() < 1e-14);
        assert_eq!(mirror(-1, 4), 0);
        assert_eq!(mirror(4, 4), 3);
        assert_eq!(mirror(-6, 4), 2);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse(&random(3, 3, 0), &random(3, 4, 0)).is_err());
        assert!(ssim_with_range(&random(3, 3, 0), &random(3, 3, 1), 0.0).is_err());
    }
}
