//! Data-fidelity terms.
//!
//! * quadratic `(lambda/2) ||u - f||^2` for denoising;
//! * the Poisson log-likelihood `t - f log(t + c0)`, extended linearly (C^1)
//!   or quadratically (C^2) to negative arguments, plus a penalty on
//!   negative arguments weighted by `L = ||1 - f/c0||_inf + 1`;
//! * the positivity penalty `H(u) = M ||u_-||_1` and its prox.

use serde::Serialize;

use crate::error::{check_shape, invalid, Error, Result};
use crate::field::ScalarField;
use crate::radon::Sinogram;

/// C^1 Poisson integrand: linear continuation below zero.
pub fn l_c1(t: f64, f: f64, c0: f64) -> f64 {
    if t >= 0.0 {
        t - xlogy(f, t + c0)
    } else {
        -xlogy(f, c0) + (1.0 - f / c0) * t
    }
}

/// C^2 Poisson integrand: quadratic continuation below zero matching the
/// curvature `f / c0^2` at the origin.
pub fn l_c2(t: f64, f: f64, c0: f64) -> f64 {
    if t >= 0.0 {
        t - xlogy(f, t + c0)
    } else {
        -xlogy(f, c0) + (1.0 - f / c0) * t + f / (2.0 * c0 * c0) * t * t
    }
}

pub fn l_c2_prime(t: f64, f: f64, c0: f64) -> f64 {
    if t >= 0.0 {
        1.0 - f / (t + c0)
    } else {
        (1.0 - f / c0) + f / (c0 * c0) * t
    }
}

/// `f log y` with the convention `0 log y = 0`.
fn xlogy(f: f64, y: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        f * y.ln()
    }
}

/// C^2 smoothing of `max(-x, 0)`: zero for `x >= 0`, a cubic/quartic blend
/// on `[-eps, 0]`, and `|x| + eps/2` below `-eps`.
pub fn g_smooth(x: f64, eps: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else if x >= -eps {
        -x * x * x / (eps * eps) - x * x * x * x / (2.0 * eps * eps * eps)
    } else {
        -x - eps / 2.0
    }
}

pub fn g_smooth_prime(x: f64, eps: f64) -> f64 {
    if x >= 0.0 {
        0.0
    } else if x >= -eps {
        -3.0 * x * x / (eps * eps) - 2.0 * x * x * x / (eps * eps * eps)
    } else {
        -1.0
    }
}

/// Poisson data on the sinogram domain together with the derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonData {
    f: Sinogram,
    c0: Sinogram,
    l: f64,
    epsilon: f64,
    penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonConstants {
    /// `||1 - f/c0||_inf + 1`.
    pub l: f64,
    pub epsilon: f64,
    /// Weight `M` of the positivity penalty.
    pub penalty: f64,
}

impl PoissonData {
    /// Validates `f >= 0`, `c0 > 0` and computes `L`.
    pub fn new(f: Sinogram, c0: Sinogram, epsilon: f64, penalty: f64) -> Result<Self> {
        check_shape(f.shape(), c0.shape())?;
        if let Some(v) = f.as_slice().iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidData(format!(
                "counts must be nonnegative, found {v}"
            )));
        }
        if let Some(v) = c0.as_slice().iter().find(|&&v| v <= 0.0) {
            return Err(Error::InvalidData(format!(
                "scatter/randoms estimate must be positive, found {v}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(invalid("penalty", "must be positive"));
        }
        let l = Self::compute_l(&f, &c0);
        Ok(Self {
            f,
            c0,
            l,
            epsilon,
            penalty,
        })
    }

    /// Uses the default `epsilon` (1% of the count range) and the default
    /// penalty weight (ten times the coercivity slope).
    pub fn with_defaults(f: Sinogram, c0: Sinogram) -> Result<Self> {
        let eps = default_epsilon(&f);
        Self::new(f, c0, eps, DEFAULT_PENALTY)
    }

    fn compute_l(f: &Sinogram, c0: &Sinogram) -> f64 {
        f.as_slice()
            .iter()
            .zip(c0.as_slice())
            .map(|(f, c)| (1.0 - f / c).abs())
            .fold(0.0, f64::max)
            + 1.0
    }

    pub fn counts(&self) -> &Sinogram {
        &self.f
    }

    pub fn background(&self) -> &Sinogram {
        &self.c0
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn constants(&self) -> PoissonConstants {
        PoissonConstants {
            l: self.l,
            epsilon: self.epsilon,
            penalty: self.penalty,
        }
    }

    /// Re-derives `L` from the stored sinograms.
    pub fn l_is_consistent(&self) -> bool {
        Self::compute_l(&self.f, &self.c0) == self.l
    }

    pub fn shape(&self) -> (usize, usize) {
        self.f.shape()
    }
}

/// Slope of the coercivity estimate `||v||_1 <= M D(v) + N`.
pub const COERCIVITY_SLOPE: f64 = 2.0;

/// Default weight of the positivity penalty.
pub const DEFAULT_PENALTY: f64 = 10.0 * COERCIVITY_SLOPE;

pub fn default_epsilon(f: &Sinogram) -> f64 {
    let range = f.max() - f.min();
    if range > 0.0 {
        1e-2 * range
    } else {
        1e-2
    }
}

/// Smoothed discrepancy `sum l_c2(v) + L sum g(v)`.
pub fn dkl_value(v: &Sinogram, data: &PoissonData) -> Result<f64> {
    check_shape(data.shape(), v.shape())?;
    let (l, eps) = (data.l, data.epsilon);
    Ok(v.as_slice()
        .iter()
        .zip(data.f.as_slice())
        .zip(data.c0.as_slice())
        .map(|((&t, &f), &c)| l_c2(t, f, c) + l * g_smooth(t, eps))
        .sum())
}

pub fn dkl_gradient(v: &Sinogram, data: &PoissonData) -> Result<Sinogram> {
    check_shape(data.shape(), v.shape())?;
    let (l, eps) = (data.l, data.epsilon);
    let vals: Vec<f64> = v
        .as_slice()
        .iter()
        .zip(data.f.as_slice())
        .zip(data.c0.as_slice())
        .map(|((&t, &f), &c)| l_c2_prime(t, f, c) + l * g_smooth_prime(t, eps))
        .collect();
    Sinogram::new(v.n_angles(), v.n_bins(), vals)
}

/// Unsmoothed discrepancy `sum l_c1(v) + L ||v_-||_1`.
pub fn dkl_c1_value(v: &Sinogram, data: &PoissonData) -> Result<f64> {
    check_shape(data.shape(), v.shape())?;
    let l = data.l;
    Ok(v.as_slice()
        .iter()
        .zip(data.f.as_slice())
        .zip(data.c0.as_slice())
        .map(|((&t, &f), &c)| l_c1(t, f, c) + l * (-t).max(0.0))
        .sum())
}

/// Upper bound on the Lipschitz constant of the bin-wise derivative of the
/// smoothed discrepancy: `||f/c0^2||_inf + L * 3/(2 eps)`.
pub fn dkl_lipschitz_bound(data: &PoissonData) -> f64 {
    let curv = data
        .f
        .as_slice()
        .iter()
        .zip(data.c0.as_slice())
        .map(|(f, c)| f / (c * c))
        .fold(0.0, f64::max);
    curv + data.l * 1.5 / data.epsilon
}

/// Explicit constants `(M, N)` with `||v||_1 <= M * dkl_c1_value(v) + N`.
///
/// Negative bins: the linear branch plus the `L |v|` term dominates
/// `|v| - f log c0` because `L - ||1 - f/c0||_inf = 1`. Nonnegative bins:
/// `v - f log(v + c0) >= v/2 - C` with `C = sup_{v >= 0} f log(v + c0) - v/2`.
/// Since `C >= f log c0`, the slope 2 and offset `2 sum max(C, 0)` cover
/// both cases bin by bin.
pub fn coercivity_constants(data: &PoissonData) -> (f64, f64) {
    let n: f64 = data
        .f
        .as_slice()
        .iter()
        .zip(data.c0.as_slice())
        .map(|(&f, &c)| {
            let sup = if 2.0 * f > c {
                f * (2.0 * f).ln() - f + c / 2.0
            } else {
                xlogy(f, c)
            };
            sup.max(0.0)
        })
        .sum();
    (COERCIVITY_SLOPE, COERCIVITY_SLOPE * n)
}

/// `H(u) = M ||u_-||_1`.
pub fn penalty_value(u: &ScalarField, m: f64) -> f64 {
    m * u.as_slice().iter().map(|&v| (-v).max(0.0)).sum::<f64>()
}

/// Prox of `sigma H`: `max(u, min(u + sigma M, 0))` pointwise.
pub fn prox_h(u: &ScalarField, sigma: f64, m: f64) -> ScalarField {
    let sm = sigma * m;
    u.map(|v| v.max((v + sm).min(0.0)))
}

/// `(lambda/2) ||u - f||^2`.
pub fn l2_value(u: &ScalarField, f: &ScalarField, lambda: f64) -> Result<f64> {
    check_shape(f.shape(), u.shape())?;
    Ok(0.5
        * lambda
        * u.as_slice()
            .iter()
            .zip(f.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
}

pub fn l2_gradient(u: &ScalarField, f: &ScalarField, lambda: f64) -> Result<ScalarField> {
    u.zip_map(f, |a, b| lambda * (a - b))
}

/// `argmin_y ||u - y||^2 / (2 sigma) + (lambda/2) ||y - f||^2`.
pub fn l2_prox(u: &ScalarField, f: &ScalarField, lambda: f64, sigma: f64) -> Result<ScalarField> {
    let sl = sigma * lambda;
    u.zip_map(f, |a, b| (a + sl * b) / (1.0 + sl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rng: &mut ChaCha8Rng, na: usize, nb: usize) -> PoissonData {
        let f = Sinogram::new(
            na,
            nb,
            (0..na * nb).map(|_| rng.random_range(0.0..20.0)).collect(),
        )
        .unwrap();
        let c0 = Sinogram::new(
            na,
            nb,
            (0..na * nb).map(|_| rng.random_range(0.2..5.0)).collect(),
        )
        .unwrap();
        PoissonData::new(f, c0, 0.3, DEFAULT_PENALTY).unwrap()
    }

    #[test]
    fn l_c1_values() {
        assert!((l_c1(0.0, 3.0, 2.0) + 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((l_c1(-1e-300, 3.0, 2.0) + 3.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(l_c1(4.5, 0.0, 2.0), 4.5);
        assert!((l_c1(1.0, 2.0, 1.0) - (1.0 - 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!((l_c1(1.0, 2.0, 1.0) + 0.386294).abs() < 1e-6);
    }

    #[test]
    fn l_c1_one_sided_derivatives_match() {
        let (f, c0, h) = (3.0, 0.7, 1e-7);
        let right = (l_c1(h, f, c0) - l_c1(0.0, f, c0)) / h;
        let left = (l_c1(0.0, f, c0) - l_c1(-h, f, c0)) / h;
        assert!((right - (1.0 - f / c0)).abs() < 1e-5);
        assert!((left - (1.0 - f / c0)).abs() < 1e-9);
    }

    #[test]
    fn l_c2_agrees_and_is_c2() {
        let (f, c0) = (2.5, 0.8);
        for t in [0.0, 0.1, 3.0, 100.0] {
            assert_eq!(l_c2(t, f, c0), l_c1(t, f, c0));
        }
        assert_eq!(l_c2_prime(0.0, f, c0), 1.0 - f / c0);
        assert!((l_c2_prime(-1e-300, f, c0) - (1.0 - f / c0)).abs() < 1e-15);
        // second derivative from each side: f/(t+c0)^2 -> f/c0^2 and f/c0^2
        let h = 1e-6;
        let right = (l_c2_prime(h, f, c0) - l_c2_prime(0.0, f, c0)) / h;
        let left = (l_c2_prime(0.0, f, c0) - l_c2_prime(-h, f, c0)) / h;
        assert!((right - f / (c0 * c0)).abs() < 1e-4);
        assert!((left - f / (c0 * c0)).abs() < 1e-6);
    }

    #[test]
    fn l_c2_prime_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(-10.0..-1e-3);
            let f = rng.random_range(0.0..10.0);
            let c0 = rng.random_range(0.1..5.0);
            let h = 1e-5 * t.abs().max(1.0);
            let fd = (l_c2(t + h, f, c0) - l_c2(t - h, f, c0)) / (2.0 * h);
            let d = l_c2_prime(t, f, c0);
            assert!((fd - d).abs() <= 1e-7 * d.abs().max(1.0), "{fd} vs {d}");
        }
    }

    #[test]
    fn g_smooth_knots() {
        let eps = 0.25;
        assert_eq!(g_smooth(0.0, eps), 0.0);
        let inner = {
            let x = -eps;
            -x * x * x / (eps * eps) - x * x * x * x / (2.0 * eps * eps * eps)
        };
        assert!((inner - eps / 2.0).abs() < 1e-15);
        assert!((g_smooth(-eps, eps) - eps / 2.0).abs() < 1e-15);
        assert!((g_smooth(-2.0 * eps, eps) - 1.5 * eps).abs() < 1e-15);
        // derivatives continuous at the knots
        assert_eq!(g_smooth_prime(0.0, eps), 0.0);
        assert!((g_smooth_prime(-eps, eps) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_smooth_curvature_bound() {
        let eps: f64 = 0.4;
        let g2 = |x: f64| -6.0 * x / (eps * eps) - 6.0 * x * x / (eps * eps * eps);
        assert!((g2(-eps / 2.0) - 1.5 / eps).abs() < 1e-12);
        let mut max: f64 = 0.0;
        for k in 0..=100_000 {
            let x = -eps * k as f64 / 100_000.0;
            max = max.max(g2(x).abs());
        }
        assert!((max - 1.5 / eps).abs() < 1e-9);
        // second derivative vanishes at both knots
        assert!(g2(0.0).abs() < 1e-15 && g2(-eps).abs() < 1e-12);
    }

    #[test]
    fn dkl_simple_values() {
        let f = Sinogram::new(1, 3, vec![1.0, 2.0, 0.5]).unwrap();
        let c0 = Sinogram::new(1, 3, vec![0.5, 2.0, 3.0]).unwrap();
        let data = PoissonData::new(f.clone(), c0.clone(), 0.1, 1.0).unwrap();
        let expected: f64 = -(1.0 * 0.5f64.ln() + 2.0 * 2f64.ln() + 0.5 * 3f64.ln());
        assert!((dkl_value(&Sinogram::zeros(1, 3), &data).unwrap() - expected).abs() < 1e-14);

        let zero_f = PoissonData::new(Sinogram::zeros(1, 3), c0, 0.1, 1.0).unwrap();
        let v = Sinogram::new(1, 3, vec![0.5, 1.0, 2.0]).unwrap();
        assert!((dkl_value(&v, &zero_f).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn dkl_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let data = random_data(&mut rng, 4, 6);
        let v =
            Sinogram::new(4, 6, (0..24).map(|_| rng.random_range(-2.0..8.0)).collect()).unwrap();
        let g = dkl_gradient(&v, &data).unwrap();
        for k in 0..24 {
            let h = 1e-6;
            let mut vp = v.clone();
            vp.as_mut_slice()[k] += h;
            let mut vm = v.clone();
            vm.as_mut_slice()[k] -= h;
            let fd = (dkl_value(&vp, &data).unwrap() - dkl_value(&vm, &data).unwrap()) / (2.0 * h);
            let gk = g.as_slice()[k];
            assert!(
                (fd - gk).abs() <= 1e-6 * gk.abs().max(1.0),
                "bin {k}: {fd} vs {gk}"
            );
        }
    }

    #[test]
    fn lipschitz_bound_cases() {
        let c0 = Sinogram::constant(2, 2, 1.5);
        let data = PoissonData::new(Sinogram::zeros(2, 2), c0, 0.2, 1.0).unwrap();
        assert_eq!(data.l(), 2.0);
        assert!((dkl_lipschitz_bound(&data) - 3.0 / 0.2).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_bound_holds_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data = random_data(&mut rng, 1, 8);
        let bound = dkl_lipschitz_bound(&data);
        let (l, eps) = (data.l(), data.epsilon());
        for _ in 0..100_000 {
            let k = rng.random_range(0..8);
            let (f, c) = (data.counts().as_slice()[k], data.background().as_slice()[k]);
            let d = |t: f64| l_c2_prime(t, f, c) + l * g_smooth_prime(t, eps);
            let t1 = rng.random_range(-3.0..3.0);
            let t2 = rng.random_range(-3.0..3.0);
            assert!((d(t1) - d(t2)).abs() <= bound * (t1 - t2).abs() + 1e-12);
        }
    }

    #[test]
    fn lipschitz_bound_nonincreasing_in_background_when_counts_dominate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let c: Vec<f64> = (0..10).map(|_| rng.random_range(0.1..2.0)).collect();
            let f: Vec<f64> = c.iter().map(|&c| c * rng.random_range(2.0..20.0)).collect();
            let fs = Sinogram::new(1, 10, f).unwrap();
            let base = dkl_lipschitz_bound(
                &PoissonData::new(
                    fs.clone(),
                    Sinogram::new(1, 10, c.clone()).unwrap(),
                    0.05,
                    1.0,
                )
                .unwrap(),
            );
            let scaled = dkl_lipschitz_bound(
                &PoissonData::new(
                    fs,
                    Sinogram::new(1, 10, c.iter().map(|v| v * 1.5).collect()).unwrap(),
                    0.05,
                    1.0,
                )
                .unwrap(),
            );
            assert!(scaled <= base, "{scaled} > {base}");
        }
    }

    #[test]
    fn lipschitz_bound_can_grow_with_background_for_low_counts() {
        // with f/c0 < 1 the term ||1 - f/c0||_inf grows as c0 grows
        let f = Sinogram::constant(1, 1, 0.5);
        let a = PoissonData::new(f.clone(), Sinogram::constant(1, 1, 1.0), 0.01, 1.0).unwrap();
        let b = PoissonData::new(f, Sinogram::constant(1, 1, 2.0), 0.01, 1.0).unwrap();
        assert!(dkl_lipschitz_bound(&b) > dkl_lipschitz_bound(&a));
    }

    #[test]
    fn convex_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let data = random_data(&mut rng, 3, 5);
        for _ in 0..1000 {
            let v1 = Sinogram::new(
                3,
                5,
                (0..15).map(|_| rng.random_range(-5.0..10.0)).collect(),
            )
            .unwrap();
            let v2 = Sinogram::new(
                3,
                5,
                (0..15).map(|_| rng.random_range(-5.0..10.0)).collect(),
            )
            .unwrap();
            let mid = v1.zip_map(&v2, |a, b| 0.5 * (a + b)).unwrap();
            let lhs = dkl_value(&mid, &data).unwrap();
            let rhs = 0.5 * (dkl_value(&v1, &data).unwrap() + dkl_value(&v2, &data).unwrap());
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn coercivity_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let data = random_data(&mut rng, 4, 4);
        let (m, n) = coercivity_constants(&data);
        assert!(m > 0.0 && n > 0.0);
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-2.0..3.0));
            let v = Sinogram::new(
                4,
                4,
                (0..16)
                    .map(|_| scale * rng.random_range(-1.0..1.0))
                    .collect(),
            )
            .unwrap();
            let l1: f64 = v.as_slice().iter().map(|x| x.abs()).sum();
            assert!(l1 <= m * dkl_c1_value(&v, &data).unwrap() + n + 1e-9);
        }
    }

    #[test]
    fn auxiliary_function_nonnegative() {
        let h =
            |t: f64| (4.0 / 3.0 + 2.0 * t / 3.0) * (t * t.ln() - t + 1.0) - (t - 1.0) * (t - 1.0);
        assert_eq!(h(1.0), 0.0);
        for k in 1..=1_000_000 {
            let t = 100.0 * k as f64 / 1_000_000.0;
            assert!(h(t) >= -1e-12, "h({t}) = {}", h(t));
        }
    }

    #[test]
    fn prox_h_values() {
        let u = ScalarField::new(1, 3, vec![2.0, -3.0, -0.5]).unwrap();
        let p = prox_h(&u, 0.5, 2.0);
        assert_eq!(p.as_slice(), &[2.0, -2.0, 0.0]);
    }

    #[test]
    fn prox_h_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..50 {
            let x = rng.random_range(-4.0..4.0);
            let (sigma, m) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
            let obj = |y: f64| (x - y) * (x - y) / (2.0 * sigma) + m * (-y).max(0.0);
            let mut best = (f64::INFINITY, 0.0);
            for k in 0..=200_000 {
                let y = -10.0 + 20.0 * k as f64 / 200_000.0;
                let o = obj(y);
                if o < best.0 {
                    best = (o, y);
                }
            }
            let p = prox_h(&ScalarField::constant(1, 1, x), sigma, m).as_slice()[0];
            assert!((p - best.1).abs() <= 1e-4, "{p} vs {}", best.1);
        }
    }

    #[test]
    fn l2_terms() {
        let f = ScalarField::new(1, 2, vec![1.0, -2.0]).unwrap();
        assert_eq!(l2_value(&f, &f, 3.0).unwrap(), 0.0);
        assert!(l2_gradient(&f, &f, 3.0)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        let u = ScalarField::new(1, 2, vec![5.0, 5.0]).unwrap();
        let p = l2_prox(&u, &f, 1.0, 1e12).unwrap();
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-10 && (p.as_slice()[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn l2_prox_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let (x, f) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let (lambda, sigma) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
            let obj = |y: f64| (x - y) * (x - y) / (2.0 * sigma) + 0.5 * lambda * (y - f) * (y - f);
            // golden-section refinement after a coarse grid
            let (mut lo, mut hi) = (-4.0, 4.0);
            for _ in 0..200 {
                let a = lo + (hi - lo) * 0.381_966;
                let b = lo + (hi - lo) * 0.618_034;
                if obj(a) < obj(b) {
                    hi = b
                } else {
                    lo = a
                }
            }
            let p = l2_prox(
                &ScalarField::constant(1, 1, x),
                &ScalarField::constant(1, 1, f),
                lambda,
                sigma,
            )
            .unwrap()
            .as_slice()[0];
            assert!((p - 0.5 * (lo + hi)).abs() <= 1e-6);
        }
    }

    #[test]
    fn data_validation() {
        let ok = Sinogram::constant(1, 2, 1.0);
        let neg = Sinogram::new(1, 2, vec![1.0, -1.0]).unwrap();
        let zero = Sinogram::new(1, 2, vec![1.0, 0.0]).unwrap();
        assert!(PoissonData::new(neg, ok.clone(), 0.1, 1.0).is_err());
        assert!(PoissonData::new(ok.clone(), zero, 0.1, 1.0).is_err());
        assert!(PoissonData::new(ok.clone(), ok.clone(), 0.0, 1.0).is_err());
        assert!(PoissonData::new(ok.clone(), Sinogram::constant(1, 3, 1.0), 0.1, 1.0).is_err());
        let d = PoissonData::with_defaults(ok.clone(), ok).unwrap();
        assert!(d.l_is_consistent());
        assert_eq!(d.l(), 1.0);
    }
}
