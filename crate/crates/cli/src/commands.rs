//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use stvrecon::io::{
    read_image, read_sinogram, write_csv, write_pgm, write_pgm_range, write_sinogram,
};
use stvrecon::metrics::{mse, ssim};
use stvrecon::phantom::{
    make_pet_mr_pair, make_piecewise_phantom, regression_instance, simulate_pet_data,
};
use stvrecon::prior::{build_anisotropy, eval_weighted_tv, WeightField};
use stvrecon::radon::{ProjectionMatrix, RadonGeometry};
use stvrecon::solver::{solve_pet_with, solve_weighted_tv_denoise_with_dual};
use stvrecon::weights::{detect_edges, distance_transform, weight_from_distance, CannyParams};
use stvrecon::{ConvergenceReport, ScalarField, SolverConfig, StepRule};

/// Relative slack allowed in the weak-duality check.
const DUALITY_SLACK: f64 = 1e-8;

fn write_image(path: &Path, u: &ScalarField) -> Result<()> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        write_pgm(path, u)
    } else {
        write_csv(path, u)
    }
    .with_context(|| format!("writing {}", path.display()))
}

fn read_input(path: &Path) -> Result<ScalarField> {
    read_image(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Report fields without the per-iteration histories, for the terminal.
fn summarize(report: &ConvergenceReport) -> Value {
    json!({
        "iterations": report.iterations,
        "stop_reason": report.stop_reason,
        "final_energy": report.energies.last(),
        "final_gap": report.final_gap(),
        "final_relative_change": report.relative_change.last(),
        "wall_time_s": report.wall_time_s,
    })
}

#[derive(Args, Serialize)]
pub struct WeightsArgs {
    /// Input image (CSV, or 8-bit PGM scaled to [0, 1]).
    #[arg(long)]
    pub input: PathBuf,
    /// Low hysteresis threshold, relative to the maximum gradient.
    #[arg(long, default_value_t = 0.275)]
    pub low: f64,
    /// High hysteresis threshold, relative to the maximum gradient.
    #[arg(long, default_value_t = 0.55)]
    pub high: f64,
    /// Gaussian pre-smoothing width in pixels.
    #[arg(long, default_value_t = 1.8)]
    pub sigma: f64,
    /// Distance beyond which the weight is constant.
    #[arg(long, default_value_t = 3.0)]
    pub cap: f64,
    /// Weight value far from edges.
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,
    /// Weight map output (CSV).
    #[arg(long)]
    pub output: PathBuf,
    /// Edge mask output (PGM); defaults to the output path with an
    /// `_edges.pgm` suffix.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn weights(a: &WeightsArgs) -> Result<()> {
    let f = read_input(&a.input)?;
    let params = CannyParams {
        low: a.low,
        high: a.high,
        sigma: a.sigma,
    };
    let edges = detect_edges(&f, params)?;
    let edge_pixels = edges.sum() as usize;
    let alpha = weight_from_distance(&distance_transform(&edges), a.cap, a.scale)?;
    write_csv(&a.output, alpha.alpha())
        .with_context(|| format!("writing {}", a.output.display()))?;
    let edges_path = a
        .edges
        .clone()
        .unwrap_or_else(|| sibling(&a.output, "_edges.pgm"));
    write_pgm_range(&edges_path, &edges, 0.0, 1.0)?;
    print_json(&json!({
        "command": "weights",
        "config": a,
        "edge_pixels": edge_pixels,
        "alpha_min": alpha.alpha().min(),
        "alpha_max": alpha.alpha().max(),
        "edges_output": edges_path,
    }))
}

#[derive(Args, Serialize)]
pub struct DenoiseArgs {
    /// Noisy image (CSV or PGM).
    #[arg(long)]
    pub input: PathBuf,
    /// Weight map (CSV), as written by `weights`.
    #[arg(
        long,
        conflicts_with = "scalar_alpha",
        required_unless_present = "scalar_alpha"
    )]
    pub weights: Option<PathBuf>,
    /// Constant weight instead of a weight map.
    #[arg(long)]
    pub scalar_alpha: Option<f64>,
    /// Fidelity weight of `(lambda/2) ||u - f||^2`.
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Step-size schedule: fixed, accelerated, adaptive, harmonic or literal.
    #[arg(long, default_value = "fixed")]
    pub step_rule: String,
    /// Primal step; defaults to the solver default.
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Dual step; defaults to `1/(8 sigma0)`.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub stop_tol: f64,
    /// Duality-gap stopping tolerance.
    #[arg(long)]
    pub gap_tol: Option<f64>,
    /// Clean image for MSE and SSIM.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Denoised image (CSV, or PGM by extension).
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report with the full iteration history.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl DenoiseArgs {
    fn solver_config(&self) -> Result<SolverConfig> {
        let base = SolverConfig::denoise(self.lambda);
        let sigma0 = self.sigma0.unwrap_or(base.sigma0);
        let tau0 = self
            .tau0
            .unwrap_or(1.0 / (stvrecon::solver::GRAD_NORM_SQ_BOUND * sigma0));
        Ok(SolverConfig {
            max_iters: self.iters,
            step_rule: self.step_rule.parse::<StepRule>()?,
            sigma0,
            tau0,
            stop_tol: self.stop_tol,
            gap_tol: self.gap_tol,
            ..base
        })
    }
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    let f = read_input(&a.input)?;
    let (alpha, method) = match (&a.weights, a.scalar_alpha) {
        (_, Some(c)) => (
            WeightField::constant(f.height(), f.width(), c)?,
            "scalar TV",
        ),
        (Some(path), None) => (WeightField::new(read_input(path)?)?, "weighted TV"),
        (None, None) => bail!("either --weights or --scalar-alpha is required"),
    };
    ensure!(
        alpha.shape() == f.shape(),
        "weight map is {:?} but the image is {:?}",
        alpha.shape(),
        f.shape()
    );
    let cfg = a.solver_config()?;
    let (u, p, report) = solve_weighted_tv_denoise_with_dual(&f, &alpha, &cfg)?;
    write_image(&a.output, &u)?;

    let mut failures = Vec::new();
    for (n, (&e, &d)) in report
        .energies
        .iter()
        .zip(&report.dual_energies)
        .enumerate()
    {
        if e - d < -DUALITY_SLACK * (1.0 + e.abs()) {
            failures.push(format!(
                "weak duality violated at iterate {n}: gap {}",
                e - d
            ));
            break;
        }
    }
    let mags = p.magnitudes();
    if let Some(k) = (0..mags.len())
        .find(|&k| mags.as_slice()[k] > alpha.alpha().as_slice()[k] * (1.0 + 1e-12) + 1e-15)
    {
        failures.push(format!("dual field infeasible at pixel {k}"));
    }

    let mut metrics = json!({ "weighted_tv": eval_weighted_tv(&u, &alpha)? });
    if let Some(path) = &a.reference {
        let r = read_input(path)?;
        metrics["mse"] = json!(mse(&u, &r)?);
        metrics["ssim"] = json!(ssim(&u, &r)?);
    }
    let mut out = json!({
        "command": "denoise",
        "method": method,
        "config": a,
        "solver": cfg,
        "metrics": metrics,
        "invariant_failures": failures,
    });
    print_json(&{
        let mut s = out.clone();
        s["summary"] = summarize(&report);
        s
    })?;
    if let Some(path) = &a.report {
        out["report"] = serde_json::to_value(&report)?;
        write_json(path, &out)?;
    }
    ensure!(
        failures.is_empty(),
        "invariant checks failed: {}",
        failures.join("; ")
    );
    Ok(())
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Piecewise-constant Voronoi image with its edge mask.
    Piecewise,
    /// Brain-like PET/MR pair.
    PetMr,
    /// The 16x16 weighted denoising regression instance.
    Regression,
}

#[derive(Args, Serialize)]
pub struct PhantomArgs {
    #[arg(long, value_enum, default_value = "piecewise")]
    pub kind: PhantomKind,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Number of regions of the piecewise phantom.
    #[arg(long, default_value_t = 6)]
    pub regions: usize,
    /// Standard deviation of additive Gaussian noise for a noisy copy of
    /// the piecewise phantom; 0 writes none.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn phantom(a: &PhantomArgs) -> Result<()> {
    create_dir(&a.out_dir)?;
    let d = &a.out_dir;
    let mut files = Vec::new();
    let mut save = |name: &str, u: &ScalarField| -> Result<()> {
        let path = d.join(name);
        write_image(&path, u)?;
        files.push(path);
        Ok(())
    };
    let mut extra = json!({});
    match a.kind {
        PhantomKind::Piecewise => {
            let (u, edges) = make_piecewise_phantom(a.size, a.regions, a.seed)?;
            save("phantom.csv", &u)?;
            save("phantom.pgm", &u)?;
            save("edges.csv", &edges)?;
            if a.noise > 0.0 {
                // decorrelated from the geometry stream
                let noisy =
                    stvrecon::phantom::add_gaussian_noise(&u, a.noise, a.seed ^ 0x9e37_79b9)?;
                save("noisy.csv", &noisy)?;
                save("noisy.pgm", &noisy)?;
            }
        }
        PhantomKind::PetMr => {
            let pair = make_pet_mr_pair(a.size, a.seed)?;
            save("pet.csv", &pair.pet)?;
            save("mr.csv", &pair.mr)?;
            save("labels.csv", &pair.labels)?;
            save("pet.pgm", &pair.pet)?;
            save("mr.pgm", &pair.mr)?;
        }
        PhantomKind::Regression => {
            let (noisy, alpha, lambda, clean) = regression_instance();
            save("noisy.csv", &noisy)?;
            save("weights.csv", alpha.alpha())?;
            save("clean.csv", &clean)?;
            extra = json!({ "lambda": lambda });
        }
    }
    print_json(&json!({
        "command": "phantom",
        "config": a,
        "files": files,
        "parameters": extra,
    }))
}

#[derive(Args, Serialize)]
pub struct PetSimArgs {
    /// PET activity image; without it the built-in PET/MR pair of the given
    /// size is generated and its MR image written as `mr.csv`.
    #[arg(long)]
    pub phantom: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 60)]
    pub angles: usize,
    /// Detector bins; defaults to the smallest odd count covering the
    /// image diagonal.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Detector blur in bins.
    #[arg(long, default_value_t = 1.0)]
    pub psf: f64,
    /// Background level as a fraction of the blurred true counts.
    #[arg(long, default_value_t = 0.3)]
    pub scatter: f64,
    /// Multiplier from activity to expected counts; smaller is noisier.
    #[arg(long, default_value_t = 1.0)]
    pub counts: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn pet_sim(a: &PetSimArgs) -> Result<()> {
    create_dir(&a.out_dir)?;
    let d = &a.out_dir;
    let mut files = Vec::new();
    let pet = match &a.phantom {
        Some(path) => read_input(path)?,
        None => {
            let pair = make_pet_mr_pair(a.size, a.seed)?;
            for (name, u) in [("mr.csv", &pair.mr), ("labels.csv", &pair.labels)] {
                write_image(&d.join(name), u)?;
                files.push(d.join(name));
            }
            pair.pet
        }
    };
    let (h, w) = pet.shape();
    let geom = match a.bins {
        Some(b) => RadonGeometry::new(h, w, a.angles, b, a.psf)?,
        None => RadonGeometry::with_default_bins(h, w, a.angles, a.psf)?,
    };
    let (f, c0) = simulate_pet_data(&pet, &geom, a.scatter, a.counts, a.seed)?;
    // the reconstruction estimates the activity in count units
    let truth = pet.map(|v| a.counts * v);
    write_sinogram(d.join("f.csv"), &f)?;
    write_sinogram(d.join("c0.csv"), &c0)?;
    write_image(&d.join("truth.csv"), &truth)?;
    write_json(&d.join("geometry.json"), &serde_json::to_value(&geom)?)?;
    files.extend(["f.csv", "c0.csv", "truth.csv", "geometry.json"].map(|n| d.join(n)));
    print_json(&json!({
        "command": "pet-sim",
        "config": a,
        "geometry": geom,
        "total_counts": f.sum(),
        "background_counts": c0.sum(),
        "files": files,
    }))
}

#[derive(Args, Serialize)]
pub struct PetReconArgs {
    /// Measured counts (CSV sinogram).
    #[arg(long)]
    pub data: PathBuf,
    /// Expected background counts (CSV sinogram).
    #[arg(long)]
    pub background: PathBuf,
    /// Geometry JSON as written by `pet-sim`; otherwise built from `--size`,
    /// `--psf` and the sinogram shape.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub psf: f64,
    /// Anatomical prior image (e.g. MR).
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Prior strength in [0, 1); 0 gives isotropic TV.
    #[arg(long, default_value_t = 0.9)]
    pub eta: f64,
    /// Edge-parameter of the normalized prior gradient.
    #[arg(long, default_value_t = 1e-4)]
    pub nu: f64,
    /// Data weight.
    #[arg(long, required_unless_present = "lambda_sweep")]
    pub lambda: Option<f64>,
    /// Comma-separated data weights; one reconstruction and report each.
    #[arg(long, conflicts_with = "lambda", value_delimiter = ',')]
    pub lambda_sweep: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Multiplier on the analytical Lipschitz estimate of the data term.
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz_factor: f64,
    /// Positivity penalty weight.
    #[arg(long, default_value_t = stvrecon::discrepancy::DEFAULT_PENALTY)]
    pub penalty: f64,
    /// Smoothing width of the penalty; defaults to 1% of the count range.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Ground truth (in count units) for MSE and SSIM.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Reconstruction (CSV, or PGM by extension); sweeps insert
    /// `_lambda_<value>` before the extension.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report; sweeps also write one report per value.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn with_lambda(path: &Path, lambda: f64) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_lambda_{lambda}.{ext}"),
        None => format!("{stem}_lambda_{lambda}"),
    };
    path.with_file_name(name)
}

pub fn pet_recon(a: &PetReconArgs) -> Result<()> {
    let f = read_sinogram(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let c0 = read_sinogram(&a.background)
        .with_context(|| format!("reading {}", a.background.display()))?;
    let geom: RadonGeometry = match (&a.geometry, a.size) {
        (Some(path), _) => serde_json::from_str(
            &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        )
        .with_context(|| format!("parsing {}", path.display()))?,
        (None, Some(n)) => RadonGeometry::new(n, n, f.n_angles(), f.n_bins(), a.psf)?,
        (None, None) => bail!("either --geometry or --size is required"),
    };
    ensure!(
        geom.sinogram_shape() == f.shape(),
        "sinogram is {:?} but the geometry expects {:?}",
        f.shape(),
        geom.sinogram_shape()
    );
    ensure!((0.0..1.0).contains(&a.eta), "--eta must lie in [0, 1)");
    let prior = if a.eta > 0.0 {
        let Some(path) = &a.prior else {
            bail!("--eta {} needs a --prior image", a.eta);
        };
        let v = read_input(path)?;
        ensure!(
            v.shape() == geom.image_shape(),
            "prior is {:?} but the image is {:?}",
            v.shape(),
            geom.image_shape()
        );
        Some(build_anisotropy(&v, a.eta, a.nu)?)
    } else {
        None
    };
    let method = if prior.is_some() {
        "structural TV"
    } else {
        "TV"
    };
    let truth = a.truth.as_deref().map(read_input).transpose()?;
    let k = ProjectionMatrix::new(&geom)?;

    let lambdas = match (&a.lambda_sweep, a.lambda) {
        (Some(list), _) => list.clone(),
        (None, Some(l)) => vec![l],
        (None, None) => bail!("either --lambda or --lambda-sweep is required"),
    };
    ensure!(!lambdas.is_empty(), "--lambda-sweep is empty");
    let sweep = a.lambda_sweep.is_some();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &lambda in &lambdas {
        let cfg = SolverConfig {
            max_iters: a.iters,
            lipschitz_factor: a.lipschitz_factor,
            penalty: a.penalty,
            epsilon: a.epsilon,
            ..SolverConfig::pet(lambda)
        };
        let (u, report, setup) = solve_pet_with(&f, &c0, prior.as_ref(), &k, &cfg)?;
        info!("lambda {lambda}: {} iterations", report.iterations);
        if u.as_slice().iter().any(|v| !v.is_finite()) {
            failures.push(format!("non-finite reconstruction at lambda {lambda}"));
        }
        let output = if sweep {
            with_lambda(&a.output, lambda)
        } else {
            a.output.clone()
        };
        write_image(&output, &u)?;
        let mut metrics = json!({});
        if let Some(t) = &truth {
            metrics["mse"] = json!(mse(&u, t)?);
            metrics["ssim"] = json!(ssim(&u, t)?);
        }
        runs.push(json!({
            "lambda": lambda,
            "output": output,
            "solver": cfg,
            "setup": setup,
            "metrics": metrics,
            "summary": summarize(&report),
            "report": report,
        }));
    }

    let best = truth.as_ref().and_then(|_| {
        runs.iter()
            .min_by(|x, y| {
                let mx = x["metrics"]["mse"].as_f64().unwrap_or(f64::INFINITY);
                let my = y["metrics"]["mse"].as_f64().unwrap_or(f64::INFINITY);
                mx.total_cmp(&my)
            })
            .map(|r| r["lambda"].clone())
    });
    for r in &runs {
        let marker = if best.as_ref() == Some(&r["lambda"]) && sweep {
            "  <- best MSE"
        } else {
            ""
        };
        eprintln!(
            "{method} lambda {}: mse {}{marker}",
            r["lambda"],
            r["metrics"]
                .get("mse")
                .map_or("n/a".to_string(), |v| v.to_string())
        );
    }

    let header = json!({
        "command": "pet-recon",
        "method": method,
        "config": a,
        "geometry": geom,
        "best_lambda": best,
        "invariant_failures": failures,
    });
    let strip = |r: &Value| {
        let mut r = r.clone();
        r.as_object_mut().map(|o| o.remove("report"));
        r
    };
    let mut terminal = header.clone();
    terminal["runs"] = Value::Array(runs.iter().map(strip).collect());
    print_json(&terminal)?;
    if let Some(path) = &a.report {
        if sweep {
            for r in &runs {
                let mut single = header.clone();
                single["run"] = r.clone();
                write_json(
                    &with_lambda(path, r["lambda"].as_f64().unwrap_or(f64::NAN)),
                    &single,
                )?;
            }
            write_json(path, &terminal)?;
        } else {
            let mut single = header;
            single["run"] = runs[0].clone();
            write_json(path, &single)?;
        }
    }
    ensure!(
        failures.is_empty(),
        "invariant checks failed: {}",
        failures.join("; ")
    );
    Ok(())
}

#[derive(Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let u = read_input(&a.input)?;
    let r = read_input(&a.reference)?;
    print_json(&json!({
        "command": "metrics",
        "config": a,
        "mse": mse(&u, &r)?,
        "ssim": ssim(&u, &r)?,
    }))
}
