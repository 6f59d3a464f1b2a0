//! Primal-dual saddle-point solvers.
//!
//! Both instances solve
//!
//! ```text
//! min_{p in Q} max_u  <div p, u> - G(u) - H(u)
//! ```
//!
//! where `Q` encodes the prior pointwise, so the (possibly non-coercive)
//! regularizer never has to be evaluated in closed form during the
//! iteration. For weighted TV denoising `G` is quadratic and `Q` is the set
//! `|p(x)| <= alpha(x)`; for PET `G` is the smoothed Poisson discrepancy, `H`
//! the positivity penalty, and the substitution `p = A^T q` turns `Q` into
//! the unit ball.

use std::cell::RefCell;
use std::time::Instant;

use serde::Serialize;

use crate::discrepancy::{
    default_epsilon, dkl_gradient, dkl_lipschitz_bound, dkl_value, l2_prox, l2_value,
    penalty_value, prox_h, PoissonConstants, PoissonData, DEFAULT_PENALTY,
};
use crate::error::{check_shape, invalid, Error, Result};
use crate::field::{divergence, gradient_forward, ScalarField, VectorField};
use crate::prior::{
    apply_a, apply_a_transpose, eval_structural_j, eval_weighted_tv, project_ball,
    project_q_weighted, project_unit_ball, AnisotropyField, WeightField,
};
use crate::radon::{ProjectionMatrix, RadonGeometry, Sinogram};

/// Upper bound on `||grad||^2` for forward differences in 2D.
pub const GRAD_NORM_SQ_BOUND: f64 = 8.0;

const ADAPT_START: f64 = 0.5;
const ADAPT_DECAY: f64 = 0.95;
const ADAPT_DELTA: f64 = 1.5;

/// Step-size schedule for the denoising solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Constant steps with `tau * sigma * 8 <= 1`.
    #[default]
    Fixed,
    /// Steps adapted to the strong concavity of the quadratic data term:
    /// `theta = 1/sqrt(1 + 2 lambda sigma)`, `sigma <- theta sigma`,
    /// `tau <- tau / theta`, with the primal variable extrapolated.
    Accelerated,
    /// Residual balancing: the ratio `sigma / tau` moves towards whichever
    /// optimality residual is larger, by a factor `1 - a` with `a` shrinking
    /// geometrically, while `tau * sigma` stays fixed.
    Adaptive,
    /// `tau_n = tau0/(n+1)`, `sigma_n = 1/(8 tau_n)`.
    Harmonic,
    /// `tau_n = tau0/(n+1)`, `sigma_n = 8/tau_n`, taken literally; violates
    /// the usual step condition and is kept for comparison only.
    Literal,
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "accelerated" => Ok(Self::Accelerated),
            "adaptive" => Ok(Self::Adaptive),
            "harmonic" => Ok(Self::Harmonic),
            "literal" => Ok(Self::Literal),
            other => Err(Error::Parse(format!(
                "unknown step rule `{other}` (fixed, accelerated, adaptive, harmonic, literal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Dual step (on `p` or `q`).
    pub tau0: f64,
    /// Primal step (on `u`).
    pub sigma0: f64,
    pub step_rule: StepRule,
    pub lambda: f64,
    /// Stop when `||(u+, p+) - (u, p)|| <= stop_tol * max(||u+||, 1)`.
    pub stop_tol: f64,
    /// Stop when the duality gap falls below this value (denoising only).
    pub gap_tol: Option<f64>,
    /// Multiplier on the analytical Lipschitz estimate of the data term
    /// (PET only). Values below 1 enlarge the steps beyond what the theory
    /// guarantees.
    pub lipschitz_factor: f64,
    /// Positivity penalty weight `M` (PET only).
    pub penalty: f64,
    /// Smoothing width of the negative-part penalty (PET only); `None`
    /// selects 1% of the count range.
    pub epsilon: Option<f64>,
    /// Ratio between the dual and primal scales in the PET step split.
    pub step_balance: f64,
}

impl SolverConfig {
    /// Fixed steps `sigma0 = 0.01`, `tau0 = 1/(8 sigma0)`: a small primal
    /// and large dual step, which favours the final linear phase of the
    /// iteration on images with values of order one.
    pub fn denoise(lambda: f64) -> Self {
        let sigma0 = 0.01;
        Self {
            max_iters: 2000,
            tau0: 1.0 / (GRAD_NORM_SQ_BOUND * sigma0),
            sigma0,
            step_rule: StepRule::Fixed,
            lambda,
            stop_tol: 1e-9,
            gap_tol: None,
            lipschitz_factor: 1.0,
            penalty: DEFAULT_PENALTY,
            epsilon: None,
            step_balance: 1.0,
        }
    }

    pub fn pet(lambda: f64) -> Self {
        Self {
            max_iters: 10_000,
            step_rule: StepRule::Fixed,
            ..Self::denoise(lambda)
        }
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be positive"));
        }
        if !(self.tau0 > 0.0 && self.sigma0 > 0.0) {
            return Err(invalid("steps", "tau0 and sigma0 must be positive"));
        }
        if self.stop_tol.is_nan() || self.stop_tol < 0.0 {
            return Err(invalid("stop_tol", "must be nonnegative"));
        }
        if matches!(self.gap_tol, Some(g) if g.is_nan() || g < 0.0) {
            return Err(invalid("gap_tol", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Primal energy of each iterate, starting with the initial guess.
    pub energies: Vec<f64>,
    /// Dual energy of each iterate when the instance has a computable one.
    pub dual_energies: Vec<f64>,
    /// Primal minus dual energy, aligned with `dual_energies`.
    pub gap: Vec<f64>,
    pub relative_change: Vec<f64>,
    pub wall_time_s: f64,
    pub stop_reason: String,
    /// The configuration the run used.
    pub config_echo: Option<SolverConfig>,
}

impl ConvergenceReport {
    pub fn final_gap(&self) -> Option<f64> {
        self.gap.last().copied()
    }
}

/// A saddle-point instance in the form consumed by [`pd_step_general`].
pub trait SaddleProblem {
    /// The coupling operator (the gradient, possibly composed with `A`).
    fn coupling(&self, u: &ScalarField) -> VectorField;
    /// Negative adjoint of the coupling (the divergence, possibly of `A^T p`).
    fn coupling_div(&self, p: &VectorField) -> ScalarField;
    fn project_dual(&self, p: &VectorField) -> VectorField;
    /// Gradient of the smooth data term taken explicitly; `None` when the
    /// data term is handled inside [`SaddleProblem::prox_primal`].
    fn data_gradient(&self, u: &ScalarField) -> Result<Option<ScalarField>>;
    fn prox_primal(&self, v: &ScalarField, sigma: f64) -> ScalarField;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdState {
    pub u: ScalarField,
    pub p: VectorField,
    pub p_bar: VectorField,
}

/// One step of
///
/// ```text
/// u+    = prox_{sigma H}(u + sigma div p_bar - sigma grad G(u))
/// p+    = proj_Q(p + tau grad u+)
/// p_bar = 2 p+ - p
/// ```
pub fn pd_step_general<P: SaddleProblem + ?Sized>(
    problem: &P,
    state: &PdState,
    tau: f64,
    sigma: f64,
) -> Result<PdState> {
    let div = problem.coupling_div(&state.p_bar);
    let mut v = state.u.zip_map(&div, |u, d| u + sigma * d)?;
    if let Some(g) = problem.data_gradient(&state.u)? {
        v = v.zip_map(&g, |a, b| a - sigma * b)?;
    }
    let u = problem.prox_primal(&v, sigma);
    let grad = problem.coupling(&u);
    let p = problem.project_dual(
        &state
            .p
            .zip_map(&grad, |p, g| [p[0] + tau * g[0], p[1] + tau * g[1]])?,
    );
    let p_bar = p.zip_map(&state.p, |n, o| [2.0 * n[0] - o[0], 2.0 * n[1] - o[1]])?;
    Ok(PdState { u, p, p_bar })
}

/// Dual constraint for denoising: pointwise weight or a scalar radius.
#[derive(Debug, Clone)]
enum DenoiseConstraint<'a> {
    Weighted(&'a WeightField),
    Scalar(f64),
}

struct DenoiseProblem<'a> {
    f: &'a ScalarField,
    lambda: f64,
    constraint: DenoiseConstraint<'a>,
}

impl SaddleProblem for DenoiseProblem<'_> {
    fn coupling(&self, u: &ScalarField) -> VectorField {
        gradient_forward(u)
    }

    fn coupling_div(&self, p: &VectorField) -> ScalarField {
        divergence(p)
    }

    fn project_dual(&self, p: &VectorField) -> VectorField {
        match self.constraint {
            DenoiseConstraint::Weighted(a) => project_q_weighted(p, a).expect("shape checked"),
            DenoiseConstraint::Scalar(r) => project_ball(p, r),
        }
    }

    fn data_gradient(&self, _u: &ScalarField) -> Result<Option<ScalarField>> {
        Ok(None)
    }

    fn prox_primal(&self, v: &ScalarField, sigma: f64) -> ScalarField {
        l2_prox(v, self.f, self.lambda, sigma).expect("shape checked")
    }
}

impl DenoiseProblem<'_> {
    fn regularizer(&self, u: &ScalarField) -> f64 {
        match self.constraint {
            DenoiseConstraint::Weighted(a) => eval_weighted_tv(u, a).expect("shape checked"),
            DenoiseConstraint::Scalar(r) => r * crate::field::total_variation(u),
        }
    }
}

/// `sum alpha |grad u| + (lambda/2) ||u - f||^2`.
pub fn primal_energy_denoise(
    u: &ScalarField,
    f: &ScalarField,
    alpha: &WeightField,
    lambda: f64,
) -> Result<f64> {
    Ok(eval_weighted_tv(u, alpha)? + l2_value(u, f, lambda)?)
}

/// `-(<div p, f> + ||div p||^2 / (2 lambda))` for feasible `p`; never
/// exceeds the primal energy.
pub fn dual_energy_denoise(p: &VectorField, f: &ScalarField, lambda: f64) -> Result<f64> {
    check_shape(f.shape(), p.shape())?;
    let d = divergence(p);
    Ok(-(d.dot(f) + d.dot(&d) / (2.0 * lambda)))
}

/// Step length of the joint iterate `(u, p)` relative to `max(||u+||, 1)`.
fn relative_change(
    new: &ScalarField,
    old: &ScalarField,
    new_p: &VectorField,
    old_p: &VectorField,
) -> f64 {
    let du: f64 = new
        .as_slice()
        .iter()
        .zip(old.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let dp: f64 = new_p
        .as_slice()
        .iter()
        .zip(old_p.as_slice())
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    (du + dp).sqrt() / new.norm().max(1.0)
}

fn check_finite(u: &ScalarField, p: &VectorField, iteration: usize) -> Result<()> {
    if u.is_finite() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration })
    }
}

/// Weighted TV denoising `min_u sum alpha |grad u| + (lambda/2) ||u - f||^2`
/// through its saddle-point form, started from `u = f`, `p = 0`.
pub fn solve_weighted_tv_denoise(
    f: &ScalarField,
    alpha: &WeightField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, ConvergenceReport)> {
    check_shape(f.shape(), alpha.shape())?;
    let problem = DenoiseProblem {
        f,
        lambda: cfg.lambda,
        constraint: DenoiseConstraint::Weighted(alpha),
    };
    run_denoise(&problem, cfg).map(|(u, _, r)| (u, r))
}

/// Same as [`solve_weighted_tv_denoise`] with a constant weight, projecting
/// onto a scalar ball.
pub fn solve_scalar_tv_denoise(
    f: &ScalarField,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<(ScalarField, ConvergenceReport)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "must be finite and nonnegative"));
    }
    let problem = DenoiseProblem {
        f,
        lambda: cfg.lambda,
        constraint: DenoiseConstraint::Scalar(alpha),
    };
    run_denoise(&problem, cfg).map(|(u, _, r)| (u, r))
}

/// Variant returning the final dual field as well.
pub fn solve_weighted_tv_denoise_with_dual(
    f: &ScalarField,
    alpha: &WeightField,
    cfg: &SolverConfig,
) -> Result<(ScalarField, VectorField, ConvergenceReport)> {
    check_shape(f.shape(), alpha.shape())?;
    let problem = DenoiseProblem {
        f,
        lambda: cfg.lambda,
        constraint: DenoiseConstraint::Weighted(alpha),
    };
    run_denoise(&problem, cfg)
}

fn run_denoise(
    problem: &DenoiseProblem<'_>,
    cfg: &SolverConfig,
) -> Result<(ScalarField, VectorField, ConvergenceReport)> {
    cfg.validate_common()?;
    let step_ok = cfg.tau0 * cfg.sigma0 * GRAD_NORM_SQ_BOUND <= 1.0 + 1e-12;
    if !step_ok && cfg.step_rule != StepRule::Literal {
        return Err(invalid(
            "steps",
            format!(
                "tau0 * sigma0 * 8 = {} exceeds 1",
                cfg.tau0 * cfg.sigma0 * GRAD_NORM_SQ_BOUND
            ),
        ));
    }
    let start = Instant::now();
    let f = problem.f;
    let (h, w) = f.shape();
    let lambda = cfg.lambda;

    let energies = |u: &ScalarField, p: &VectorField| -> Result<(f64, f64)> {
        let primal = problem.regularizer(u) + l2_value(u, f, lambda)?;
        let dual = dual_energy_denoise(p, f, lambda)?;
        Ok((primal, dual))
    };

    let mut state = PdState {
        u: f.clone(),
        p: VectorField::zeros(h, w),
        p_bar: VectorField::zeros(h, w),
    };
    // extrapolated primal for the accelerated ordering
    let mut u_bar = f.clone();
    let mut report = ConvergenceReport {
        config_echo: Some(cfg.clone()),
        ..Default::default()
    };
    let (e0, d0) = energies(&state.u, &state.p)?;
    report.energies.push(e0);
    report.dual_energies.push(d0);
    report.gap.push(e0 - d0);
    report.stop_reason = "max_iters".into();
    if cfg.gap_tol.is_some_and(|g| e0 - d0 <= g) {
        report.stop_reason = "gap_tol".into();
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok((state.u, state.p, report));
    }

    let (mut tau, mut sigma) = (cfg.tau0, cfg.sigma0);
    let mut adapt = ADAPT_START;
    for n in 0..cfg.max_iters {
        let prev_u = state.u.clone();
        let prev_p = state.p.clone();
        match cfg.step_rule {
            StepRule::Accelerated => {
                let grad = gradient_forward(&u_bar);
                let p = problem.project_dual(
                    &state
                        .p
                        .zip_map(&grad, |p, g| [p[0] + tau * g[0], p[1] + tau * g[1]])?,
                );
                let div = divergence(&p);
                let v = state.u.zip_map(&div, |u, d| u + sigma * d)?;
                let u = problem.prox_primal(&v, sigma);
                let theta = 1.0 / (1.0 + 2.0 * lambda * sigma).sqrt();
                sigma *= theta;
                tau /= theta;
                u_bar = u.zip_map(&prev_u, |a, b| a + theta * (a - b))?;
                state = PdState {
                    u,
                    p_bar: p.clone(),
                    p,
                };
            }
            StepRule::Adaptive => {
                let p_bar = state.p_bar.clone();
                state = pd_step_general(problem, &state, tau, sigma)?;
                // residuals of the two optimality conditions
                let dpb = divergence(&p_bar.zip_map(&state.p, |a, b| [a[0] - b[0], a[1] - b[1]])?);
                let primal = prev_u
                    .as_slice()
                    .iter()
                    .zip(state.u.as_slice())
                    .zip(dpb.as_slice())
                    .map(|((a, b), d)| ((a - b) / sigma + d).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let dual = prev_p
                    .as_slice()
                    .iter()
                    .zip(state.p.as_slice())
                    .map(|(a, b)| ((a[0] - b[0]) / tau).powi(2) + ((a[1] - b[1]) / tau).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if primal > ADAPT_DELTA * dual {
                    sigma /= 1.0 - adapt;
                    tau *= 1.0 - adapt;
                    adapt *= ADAPT_DECAY;
                } else if dual > ADAPT_DELTA * primal {
                    sigma *= 1.0 - adapt;
                    tau /= 1.0 - adapt;
                    adapt *= ADAPT_DECAY;
                }
            }
            rule => {
                if rule != StepRule::Fixed {
                    tau = cfg.tau0 / (n as f64 + 1.0);
                    sigma = match rule {
                        StepRule::Harmonic => 1.0 / (GRAD_NORM_SQ_BOUND * tau),
                        _ => GRAD_NORM_SQ_BOUND / tau,
                    };
                }
                state = pd_step_general(problem, &state, tau, sigma)?;
            }
        }
        check_finite(&state.u, &state.p, n + 1)?;
        let rel = relative_change(&state.u, &prev_u, &state.p, &prev_p);
        let (e, d) = energies(&state.u, &state.p)?;
        report.energies.push(e);
        report.dual_energies.push(d);
        report.gap.push(e - d);
        report.relative_change.push(rel);
        report.iterations = n + 1;
        if cfg.gap_tol.is_some_and(|g| e - d <= g) {
            report.stop_reason = "gap_tol".into();
            break;
        }
        if rel <= cfg.stop_tol {
            report.stop_reason = "stop_tol".into();
            break;
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((state.u, state.p, report))
}

/// Constants resolved for a PET reconstruction, echoed in reports.
#[derive(Debug, Clone, Serialize)]
pub struct PetSetup {
    pub forward_norm_sq: f64,
    pub coupling_norm_sq: f64,
    pub data_lipschitz: f64,
    pub tau: f64,
    pub sigma: f64,
    pub poisson: PoissonConstants,
}

struct PetProblem<'a> {
    prior: Option<&'a AnisotropyField>,
    k: &'a ProjectionMatrix,
    /// Last image whose projection was needed, with that projection.
    cache: RefCell<Option<(ScalarField, Sinogram)>>,
    data: &'a PoissonData,
    lambda: f64,
    penalty: f64,
}

impl SaddleProblem for PetProblem<'_> {
    fn coupling(&self, u: &ScalarField) -> VectorField {
        let g = gradient_forward(u);
        match self.prior {
            Some(a) => apply_a(a, &g).expect("shape checked"),
            None => g,
        }
    }

    fn coupling_div(&self, q: &VectorField) -> ScalarField {
        match self.prior {
            Some(a) => divergence(&apply_a_transpose(a, q).expect("shape checked")),
            None => divergence(q),
        }
    }

    fn project_dual(&self, q: &VectorField) -> VectorField {
        project_unit_ball(q)
    }

    fn data_gradient(&self, u: &ScalarField) -> Result<Option<ScalarField>> {
        let ku = self.project(u)?;
        let g = dkl_gradient(&ku, self.data)?;
        let bp = self.k.adjoint(&g)?;
        Ok(Some(bp.map(|v| self.lambda * v)))
    }

    fn prox_primal(&self, v: &ScalarField, sigma: f64) -> ScalarField {
        prox_h(v, sigma, self.penalty)
    }
}

impl PetProblem<'_> {
    fn project(&self, u: &ScalarField) -> Result<Sinogram> {
        if let Some((cu, cku)) = self.cache.borrow().as_ref() {
            if cu == u {
                return Ok(cku.clone());
            }
        }
        let ku = self.k.forward(u)?;
        *self.cache.borrow_mut() = Some((u.clone(), ku.clone()));
        Ok(ku)
    }

    /// `J(u) + lambda D(Ku) + H(u)`.
    fn energy(&self, u: &ScalarField) -> Result<f64> {
        let g = gradient_forward(u);
        let j = match self.prior {
            Some(a) => eval_structural_j(a, &g)?,
            None => g.magnitudes().sum(),
        };
        let ku = self.project(u)?;
        Ok(j + self.lambda * dkl_value(&ku, self.data)? + penalty_value(u, self.penalty))
    }
}

/// Builds the Poisson data and the step sizes for a PET run.
pub fn pet_setup(
    f: &Sinogram,
    c0: &Sinogram,
    k: &ProjectionMatrix,
    cfg: &SolverConfig,
) -> Result<(PetSetup, PoissonData)> {
    check_shape(k.geometry().sinogram_shape(), f.shape())?;
    let eps = cfg.epsilon.unwrap_or_else(|| default_epsilon(f));
    let data = PoissonData::new(f.clone(), c0.clone(), eps, cfg.penalty)?;
    if !(cfg.lipschitz_factor > 0.0 && cfg.step_balance > 0.0) {
        return Err(invalid(
            "steps",
            "lipschitz_factor and step_balance must be positive",
        ));
    }
    let forward_norm_sq = k.norm_sq_estimate(100)?;
    let data_lipschitz =
        cfg.lipschitz_factor * cfg.lambda * forward_norm_sq * dkl_lipschitz_bound(&data);
    // ||div A^T||^2 <= ||div||^2 ||A||^2 <= 8
    let coupling_norm_sq = GRAD_NORM_SQ_BOUND;
    let root = coupling_norm_sq.sqrt();
    // (1/tau)(1/sigma - L) = (root/beta)(root beta) = ||div A^T||^2
    let sigma = 1.0 / (data_lipschitz + root * cfg.step_balance);
    let tau = cfg.step_balance / root;
    Ok((
        PetSetup {
            forward_norm_sq,
            coupling_norm_sq,
            data_lipschitz,
            tau,
            sigma,
            poisson: data.constants(),
        },
        data,
    ))
}

/// Structural-TV (or plain TV for `prior = None`) regularized PET
/// reconstruction with the smoothed Poisson discrepancy and the positivity
/// penalty.
pub fn solve_pet(
    f: &Sinogram,
    c0: &Sinogram,
    prior: Option<&AnisotropyField>,
    geom: &RadonGeometry,
    cfg: &SolverConfig,
) -> Result<(ScalarField, ConvergenceReport, PetSetup)> {
    solve_pet_with(f, c0, prior, &ProjectionMatrix::new(geom)?, cfg)
}

/// [`solve_pet`] with a prebuilt projector, for repeated runs on one
/// geometry.
pub fn solve_pet_with(
    f: &Sinogram,
    c0: &Sinogram,
    prior: Option<&AnisotropyField>,
    k: &ProjectionMatrix,
    cfg: &SolverConfig,
) -> Result<(ScalarField, ConvergenceReport, PetSetup)> {
    cfg.validate_common()?;
    let (h, w) = k.geometry().image_shape();
    if let Some(a) = prior {
        check_shape((h, w), a.shape())?;
    }
    let (setup, data) = pet_setup(f, c0, k, cfg)?;
    let start = Instant::now();
    let problem = PetProblem {
        prior,
        k,
        cache: RefCell::new(None),
        data: &data,
        lambda: cfg.lambda,
        penalty: cfg.penalty,
    };
    let mut state = PdState {
        u: initial_estimate(f, c0, k)?,
        p: VectorField::zeros(h, w),
        p_bar: VectorField::zeros(h, w),
    };
    let mut report = ConvergenceReport {
        stop_reason: "max_iters".into(),
        config_echo: Some(cfg.clone()),
        ..Default::default()
    };
    report.energies.push(problem.energy(&state.u)?);
    for n in 0..cfg.max_iters {
        let next = pd_step_general(&problem, &state, setup.tau, setup.sigma)?;
        check_finite(&next.u, &next.p, n + 1)?;
        let rel = relative_change(&next.u, &state.u, &next.p, &state.p);
        state = next;
        report.energies.push(problem.energy(&state.u)?);
        report.relative_change.push(rel);
        report.iterations = n + 1;
        if rel <= cfg.stop_tol {
            report.stop_reason = "stop_tol".into();
            break;
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((state.u, report, setup))
}

/// Uniform image whose projection carries the net (background-corrected)
/// counts.
fn initial_estimate(f: &Sinogram, c0: &Sinogram, k: &ProjectionMatrix) -> Result<ScalarField> {
    let (h, w) = k.geometry().image_shape();
    let net: f64 = f
        .as_slice()
        .iter()
        .zip(c0.as_slice())
        .map(|(a, b)| a - b)
        .sum::<f64>()
        .max(0.0);
    let ones = k.forward(&ScalarField::constant(h, w, 1.0))?;
    Ok(ScalarField::constant(h, w, net / ones.sum()))
}
