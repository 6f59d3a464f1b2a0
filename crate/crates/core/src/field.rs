//! Grid containers and the forward-difference gradient / divergence pair.
//!
//! Grids are row-major with unit spacing. The gradient uses forward
//! differences with pixel replication at the boundary, so the last column
//! (x-component) and last row (y-component) of the gradient are zero. The
//! divergence is the negative transpose of that stencil, accumulated from the
//! very same loop so the two can never drift apart.

use std::ops::{Index, IndexMut};

use crate::error::{check_shape, invalid, Result};

/// Real-valued image on an `height x width` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

/// Field of 2-vectors `(x, y)` on an `height x width` grid. The x-component
/// runs along columns, the y-component along rows.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    height: usize,
    width: usize,
    values: Vec<[f64; 2]>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid("shape", "grid dimensions must be positive"));
        }
        if values.len() != height * width {
            return Err(invalid(
                "values",
                format!("expected {} entries, got {}", height * width, values.len()),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite entry at index {k}")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::constant(height, width, 0.0)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Self {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            values,
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two equally shaped fields.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_shape(self.shape(), other.shape())?;
        Ok(Self {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.height && j < self.width);
        &self.values[i * self.width + j]
    }
}

impl IndexMut<(usize, usize)> for ScalarField {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.height && j < self.width);
        &mut self.values[i * self.width + j]
    }
}

impl VectorField {
    pub fn new(height: usize, width: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid("shape", "grid dimensions must be positive"));
        }
        if values.len() != height * width {
            return Err(invalid(
                "values",
                format!("expected {} entries, got {}", height * width, values.len()),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("values", "non-finite entry"));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Self {
            height,
            width,
            values: vec![[0.0; 2]; height * width],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 2],
    ) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            values,
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

    pub fn as_slice(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &Self,
        f: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
    ) -> Result<Self> {
        check_shape(self.shape(), other.shape())?;
        Ok(Self {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|[a, b]| [s * a, s * b])
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        let mut acc = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a[0] * b[0] + a[1] * b[1];
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Per-pixel Euclidean magnitudes.
    pub fn magnitudes(&self) -> ScalarField {
        ScalarField {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| v[0].hypot(v[1])).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    /// Flattened `[x0, y0, x1, y1, ...]` copy.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| *v).collect()
    }

    pub fn from_flat(height: usize, width: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * height * width {
            return Err(invalid("values", "flat vector field has wrong length"));
        }
        Self::new(
            height,
            width,
            flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        )
    }
}

impl Index<(usize, usize)> for VectorField {
    type Output = [f64; 2];

    fn index(&self, (i, j): (usize, usize)) -> &[f64; 2] {
        assert!(i < self.height && j < self.width);
        &self.values[i * self.width + j]
    }
}

impl IndexMut<(usize, usize)> for VectorField {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut [f64; 2] {
        assert!(i < self.height && j < self.width);
        &mut self.values[i * self.width + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward differences with replicated boundary.
pub fn gradient_forward(u: &ScalarField) -> VectorField {
    let (h, w) = u.shape();
    let v = u.as_slice();
    let mut out = vec![[0.0; 2]; h * w];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if j + 1 < w {
                out[k][0] = v[k + 1] - v[k];
            }
            if i + 1 < h {
                out[k][1] = v[k + w] - v[k];
            }
        }
    }
    VectorField {
        height: h,
        width: w,
        values: out,
    }
}

/// Negative adjoint of [`gradient_forward`].
///
/// Each stencil entry of the gradient is visited once and its transpose
/// contribution scattered, then the sign is flipped.
pub fn divergence(p: &VectorField) -> ScalarField {
    let (h, w) = p.shape();
    let pv = p.as_slice();
    let mut adj = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let k = i * w + j;
            if j + 1 < w {
                adj[k + 1] += pv[k][0];
                adj[k] -= pv[k][0];
            }
            if i + 1 < h {
                adj[k + w] += pv[k][1];
                adj[k] -= pv[k][1];
            }
        }
    }
    for a in &mut adj {
        *a = -*a;
    }
    ScalarField {
        height: h,
        width: w,
        values: adj,
    }
}

/// Isotropic discrete total variation `sum |grad u|`.
pub fn total_variation(u: &ScalarField) -> f64 {
    gradient_forward(u).magnitudes().sum()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ScalarField {
        ScalarField::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_vfield(rng: &mut ChaCha8Rng, h: usize, w: usize) -> VectorField {
        VectorField::from_fn(h, w, |_, _| {
            [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
        })
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = gradient_forward(&ScalarField::constant(5, 7, 3.25));
        assert!(g.as_slice().iter().all(|v| v == &[0.0, 0.0]));
    }

    #[test]
    fn gradient_of_ramp() {
        let u = ScalarField::new(1, 3, vec![0.0, 1.0, 2.0]).unwrap();
        let g = gradient_forward(&u);
        let xs: Vec<f64> = g.as_slice().iter().map(|v| v[0]).collect();
        assert_eq!(xs, vec![1.0, 1.0, 0.0]);
        assert!(g.as_slice().iter().all(|v| v[1] == 0.0));
    }

    #[test]
    fn gradient_matches_hand_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&mut rng, 3, 3);
        let g = gradient_forward(&u);
        for i in 0..3 {
            for j in 0..3 {
                let gx = if j < 2 {
                    u[(i, j + 1)] - u[(i, j)]
                } else {
                    0.0
                };
                let gy = if i < 2 {
                    u[(i + 1, j)] - u[(i, j)]
                } else {
                    0.0
                };
                assert_eq!(g[(i, j)], [gx, gy]);
            }
        }
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let d = divergence(&VectorField::zeros(4, 6));
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = random_field(&mut rng, 16, 16);
            let p = random_vfield(&mut rng, 16, 16);
            let lhs = gradient_forward(&u).dot(&p);
            let rhs = -u.dot(&divergence(&p));
            let rel = (lhs - rhs).abs() / (u.norm() * p.norm() + 1.0);
            assert!(rel <= 1e-12, "relative error {rel}");
        }
    }

    /// Explicit matrix of the gradient, assembled row by row from the
    /// defining formula.
    fn assemble_gradient(h: usize, w: usize) -> Vec<Vec<f64>> {
        let n = h * w;
        let mut rows = vec![vec![0.0; n]; 2 * n];
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                if j + 1 < w {
                    rows[2 * k][k + 1] = 1.0;
                    rows[2 * k][k] = -1.0;
                }
                if i + 1 < h {
                    rows[2 * k + 1][k + w] = 1.0;
                    rows[2 * k + 1][k] = -1.0;
                }
            }
        }
        rows
    }

    #[test]
    fn divergence_is_negative_transpose_of_assembled_gradient() {
        let (h, w) = (4, 4);
        let g = assemble_gradient(h, w);
        for k in 0..h * w {
            for c in 0..2 {
                let mut p = VectorField::zeros(h, w);
                p.as_mut_slice()[k][c] = 1.0;
                let d = divergence(&p);
                for m in 0..h * w {
                    assert_eq!(d.as_slice()[m], -g[2 * k + c][m]);
                }
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        assert!(ScalarField::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ScalarField::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(ScalarField::new(0, 2, vec![]).is_err());
        assert!(VectorField::new(1, 1, vec![[f64::INFINITY, 0.0]]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn gradient_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_field(&mut rng, 6, 5);
            let v = random_field(&mut rng, 6, 5);
            let combo = u.zip_map(&v, |x, y| a * x + b * y).unwrap();
            let lhs = gradient_forward(&combo);
            let gu = gradient_forward(&u);
            let gv = gradient_forward(&v);
            for k in 0..30 {
                for c in 0..2 {
                    let rhs = a * gu.as_slice()[k][c] + b * gv.as_slice()[k][c];
                    proptest::prop_assert!((lhs.as_slice()[k][c] - rhs).abs() <= 1e-12);
                }
            }
        }
    }
}
