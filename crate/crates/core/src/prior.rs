//! Structural and weighted TV priors.
//!
//! The structural prior discounts gradients parallel to a guide image: with
//! `w = grad v / sqrt(|grad v|^2 + nu)` the per-pixel matrix is
//! `A = sqrt(I - eta^2 w w^T)` and the integrand is `|A z|`. The weighted prior
//! is `alpha(x) |z|` with a nonnegative weight that may vanish.

use crate::error::{check_shape, invalid, Result};
use crate::field::{gradient_forward, ScalarField, VectorField};

/// Per-pixel symmetric 2x2 matrices stored as `(a11, a12, a22)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyField {
    height: usize,
    width: usize,
    mats: Vec<[f64; 3]>,
    eta: f64,
    nu: f64,
}

impl AnisotropyField {
    /// `A = I` everywhere (plain isotropic TV).
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mats: vec![[1.0, 0.0, 1.0]; height * width],
            eta: 0.0,
            nu: 1.0,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn matrix(&self, i: usize, j: usize) -> [f64; 3] {
        self.mats[i * self.width + j]
    }

    pub fn matrices(&self) -> &[[f64; 3]] {
        &self.mats
    }
}

/// Nonnegative, bounded weight field `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    alpha: ScalarField,
    bound: f64,
}

impl WeightField {
    pub fn new(alpha: ScalarField) -> Result<Self> {
        if alpha.min() < 0.0 {
            return Err(invalid("alpha", "weights must be nonnegative"));
        }
        let bound = alpha.max();
        Ok(Self { alpha, bound })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(invalid(
                "alpha",
                "constant weight must be finite and nonnegative",
            ));
        }
        Self::new(ScalarField::constant(height, width, value))
    }

    pub fn alpha(&self) -> &ScalarField {
        &self.alpha
    }

    /// Upper bound `C` with `0 <= alpha <= C`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn shape(&self) -> (usize, usize) {
        self.alpha.shape()
    }

    /// Returns the common value if the weight is spatially constant.
    pub fn as_scalar(&self) -> Option<f64> {
        let first = self.alpha.as_slice()[0];
        self.alpha
            .as_slice()
            .iter()
            .all(|&a| a == first)
            .then_some(first)
    }
}

/// `w = g / sqrt(|g|^2 + nu)` with `g` the forward gradient of `v`.
pub fn normalized_gradient(v: &ScalarField, nu: f64) -> Result<VectorField> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(invalid("nu", "must be positive"));
    }
    Ok(gradient_forward(v).map(|[gx, gy]| {
        let d = (gx * gx + gy * gy + nu).sqrt();
        [gx / d, gy / d]
    }))
}

/// Closed-form square root of `I - eta^2 w w^T`.
///
/// With `s = |w|^2 < 1` the matrix has eigenvalue `sqrt(1 - eta^2 s)` along
/// `w` and 1 across it, so `A = I - k w w^T` with
/// `k = (1 - sqrt(1 - eta^2 s)) / s = eta^2 / (1 + sqrt(1 - eta^2 s))`.
/// The second form has no cancellation and is exact at `s = 0`.
pub fn anisotropy_matrix(w: [f64; 2], eta: f64) -> [f64; 3] {
    let s = w[0] * w[0] + w[1] * w[1];
    let k = eta * eta / (1.0 + (1.0 - eta * eta * s).sqrt());
    [
        1.0 - k * w[0] * w[0],
        -k * w[0] * w[1],
        1.0 - k * w[1] * w[1],
    ]
}

pub fn build_anisotropy(v: &ScalarField, eta: f64, nu: f64) -> Result<AnisotropyField> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    let w = normalized_gradient(v, nu)?;
    Ok(AnisotropyField {
        height: v.height(),
        width: v.width(),
        mats: w
            .as_slice()
            .iter()
            .map(|&wx| anisotropy_matrix(wx, eta))
            .collect(),
        eta,
        nu,
    })
}

#[inline]
fn mat_vec(m: [f64; 3], z: [f64; 2]) -> [f64; 2] {
    [m[0] * z[0] + m[1] * z[1], m[1] * z[0] + m[2] * z[1]]
}

/// Pixelwise `A(x) z(x)`.
pub fn apply_a(a: &AnisotropyField, z: &VectorField) -> Result<VectorField> {
    check_shape(a.shape(), z.shape())?;
    let mut out = z.clone();
    for (o, m) in out.as_mut_slice().iter_mut().zip(&a.mats) {
        *o = mat_vec(*m, *o);
    }
    Ok(out)
}

/// Pixelwise `A(x)^T z(x)`; the same as [`apply_a`] since `A` is symmetric.
pub fn apply_a_transpose(a: &AnisotropyField, z: &VectorField) -> Result<VectorField> {
    check_shape(a.shape(), z.shape())?;
    let mut out = z.clone();
    for (o, m) in out.as_mut_slice().iter_mut().zip(&a.mats) {
        *o = [m[0] * o[0] + m[1] * o[1], m[1] * o[0] + m[2] * o[1]];
    }
    Ok(out)
}

/// `sum_x |A(x) z(x)|`.
pub fn eval_structural_j(a: &AnisotropyField, z: &VectorField) -> Result<f64> {
    check_shape(a.shape(), z.shape())?;
    Ok(z.as_slice()
        .iter()
        .zip(&a.mats)
        .map(|(&zx, &m)| {
            let v = mat_vec(m, zx);
            v[0].hypot(v[1])
        })
        .sum())
}

/// `sum_x alpha(x) |grad u(x)|`.
pub fn eval_weighted_tv(u: &ScalarField, alpha: &WeightField) -> Result<f64> {
    check_shape(alpha.shape(), u.shape())?;
    let g = gradient_forward(u);
    Ok(g.as_slice()
        .iter()
        .zip(alpha.alpha().as_slice())
        .map(|(v, a)| a * v[0].hypot(v[1]))
        .sum())
}

#[inline]
fn shrink_to_ball(p: [f64; 2], radius: f64) -> [f64; 2] {
    let n = p[0].hypot(p[1]);
    if n <= radius {
        p
    } else if radius <= 0.0 {
        [0.0, 0.0]
    } else {
        let s = radius / n;
        [p[0] * s, p[1] * s]
    }
}

/// Projection onto `{ |p(x)| <= alpha(x) }`.
pub fn project_q_weighted(p: &VectorField, alpha: &WeightField) -> Result<VectorField> {
    check_shape(alpha.shape(), p.shape())?;
    let mut out = p.clone();
    for (o, &a) in out.as_mut_slice().iter_mut().zip(alpha.alpha().as_slice()) {
        *o = shrink_to_ball(*o, a);
    }
    Ok(out)
}

/// Projection onto `{ |p(x)| <= radius }` for a constant radius.
pub fn project_ball(p: &VectorField, radius: f64) -> VectorField {
    p.map(|v| shrink_to_ball(v, radius))
}

/// Projection onto the pointwise unit ball, `q / max(1, |q|)`.
pub fn project_unit_ball(q: &VectorField) -> VectorField {
    q.map(|v| {
        let n = v[0].hypot(v[1]);
        if n > 1.0 {
            [v[0] / n, v[1] / n]
        } else {
            v
        }
    })
}
