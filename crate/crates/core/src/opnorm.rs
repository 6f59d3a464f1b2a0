//! Power-iteration estimate of a squared operator norm.

use crate::error::{Error, Result};
use crate::field::{divergence, dot, gradient_forward, ScalarField};

/// Deterministic, non-degenerate start vector.
fn start_vector(len: usize) -> Vec<f64> {
    // splitmix64 hashing of the index, mapped to [0.5, 1.5)
    (0..len as u64)
        .map(|k| {
            let mut z = k.wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Estimates `||T||^2` by power iteration on `T^* T`.
///
/// `apply` maps vectors of length `domain_len` to the codomain and
/// `apply_adjoint` maps back. The returned value is the Rayleigh quotient
/// `||T x||^2 / ||x||^2` of the final iterate, so it never overshoots the true
/// value (up to round-off).
pub fn operator_norm_sq_estimate<F, G>(
    apply: F,
    apply_adjoint: G,
    domain_len: usize,
    iterations: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if iterations == 0 {
        return Err(crate::error::invalid("iterations", "must be at least 1"));
    }
    if domain_len == 0 {
        return Err(crate::error::invalid("domain_len", "must be positive"));
    }
    let mut x = start_vector(domain_len);
    let nx = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= nx);

    let mut estimate = 0.0;
    for _ in 0..iterations {
        let tx = apply(&x);
        estimate = dot(&tx, &tx);
        let y = apply_adjoint(&tx);
        let ny = dot(&y, &y).sqrt();
        if ny == 0.0 || !ny.is_finite() {
            return Err(Error::DegenerateOperator(
                "operator maps the power-iteration vector to zero".into(),
            ));
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    let tx = apply(&x);
    Ok(estimate.max(dot(&tx, &tx)))
}

/// Squared norm of the forward-difference gradient on an `h x w` grid.
pub fn gradient_norm_sq(height: usize, width: usize, iterations: usize) -> Result<f64> {
    operator_norm_sq_estimate(
        |x| {
            let u = ScalarField::new(height, width, x.to_vec()).expect("shape");
            gradient_forward(&u).to_flat()
        },
        |y| {
            let p = crate::field::VectorField::from_flat(height, width, y).expect("shape");
            divergence(&p).into_vec().into_iter().map(|v| -v).collect()
        },
        height * width,
        iterations,
    )
}
