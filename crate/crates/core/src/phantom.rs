//! Synthetic ground truth and simulated measurements.
//!
//! Every generator is a pure function of its parameters and a `u64` seed.
//! Random streams come from `ChaCha8Rng`; the PET simulator gives each
//! sinogram bin its own stream (`seed`, stream = bin index), so the result
//! does not depend on how the bins are scheduled across threads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::prior::WeightField;
use crate::radon::{forward_project, RadonGeometry, Sinogram};
use crate::weights::{distance_transform, gaussian_blur, weight_from_distance};

/// Marks pixels whose right or lower neighbour carries a different value.
pub fn value_edges(u: &ScalarField) -> ScalarField {
    let (h, w) = u.shape();
    ScalarField::from_fn(h, w, |i, j| {
        let v = u[(i, j)];
        let right = j + 1 < w && u[(i, j + 1)] != v;
        let down = i + 1 < h && u[(i + 1, j)] != v;
        if right || down {
            1.0
        } else {
            0.0
        }
    })
}

/// Piecewise-constant Voronoi image on a `size x size` grid with
/// `n_regions` cells of pairwise distinct values in `[0.1, 0.9]`.
///
/// Returns the image and its edge mask (see [`value_edges`]).
pub fn make_piecewise_phantom(
    size: usize,
    n_regions: usize,
    seed: u64,
) -> Result<(ScalarField, ScalarField)> {
    if size == 0 {
        return Err(invalid("size", "must be positive"));
    }
    if n_regions == 0 {
        return Err(invalid("n_regions", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<(f64, f64)> = (0..n_regions)
        .map(|_| {
            (
                rng.random::<f64>() * size as f64,
                rng.random::<f64>() * size as f64,
            )
        })
        .collect();
    let mut levels: Vec<f64> = if n_regions == 1 {
        vec![0.5]
    } else {
        (0..n_regions)
            .map(|k| 0.1 + 0.8 * k as f64 / (n_regions - 1) as f64)
            .collect()
    };
    levels.shuffle(&mut rng);
    let u = ScalarField::from_fn(size, size, |i, j| {
        let (y, x) = (i as f64 + 0.5, j as f64 + 0.5);
        let nearest = sites
            .iter()
            .enumerate()
            .map(|(k, &(sy, sx))| (k, (sy - y).powi(2) + (sx - x).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
            .expect("at least one site");
        levels[nearest]
    });
    let edges = value_edges(&u);
    Ok((u, edges))
}

/// Small weighted-TV denoising instance used as a regression baseline:
/// a 16x16 five-region phantom with Gaussian noise of standard deviation
/// 0.1, a weight ramping from 0 on the true edges to 0.1 at distance 3,
/// and `lambda = 10`. Returns `(noisy, weight, lambda, clean)`.
pub fn regression_instance() -> (ScalarField, WeightField, f64, ScalarField) {
    let (clean, edges) = make_piecewise_phantom(16, 5, 1).expect("valid parameters");
    let noisy = add_gaussian_noise(&clean, 0.1, 2).expect("valid parameters");
    let d = distance_transform(&edges);
    let alpha = weight_from_distance(&d, 3.0, 0.1).expect("valid parameters");
    (noisy, alpha, 10.0, clean)
}

/// Adds i.i.d. zero-mean Gaussian noise.
pub fn add_gaussian_noise(u: &ScalarField, std_dev: f64, seed: u64) -> Result<ScalarField> {
    if !(std_dev >= 0.0 && std_dev.is_finite()) {
        return Err(invalid("std_dev", "must be nonnegative"));
    }
    let normal = Normal::new(0.0, std_dev).map_err(|e| invalid("std_dev", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = u
        .as_slice()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    ScalarField::new(u.height(), u.width(), values)
}

/// Synthetic PET/MR pair with its construction layers.
#[derive(Debug, Clone)]
pub struct PetMrPair {
    pub pet: ScalarField,
    pub mr: ScalarField,
    /// Anatomical label per pixel (0 = background).
    pub labels: ScalarField,
    /// Brain (non-background) indicator.
    pub brain: ScalarField,
    /// Footprint of the PET-only lesion.
    pub pet_lesion: ScalarField,
    /// Footprint of the MR-only lesion.
    pub mr_lesion: ScalarField,
    /// Linear trends added inside the brain.
    pub pet_trend: ScalarField,
    pub mr_trend: ScalarField,
}

const BACKGROUND: u8 = 0;
const GREY: u8 = 1;
const WHITE: u8 = 2;
const CSF: u8 = 3;
const NUCLEUS: u8 = 4;

// (PET, MR) intensity per label
fn tissue_values(label: u8) -> (f64, f64) {
    match label {
        GREY => (4.0, 0.55),
        WHITE => (1.0, 0.9),
        CSF => (0.25, 0.15),
        NUCLEUS => (5.0, 0.7),
        _ => (0.0, 0.0),
    }
}

struct Ellipse {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    angle: f64,
}

impl Ellipse {
    fn contains(&self, y: f64, x: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dy, dx) = (y - self.cy, x - self.cx);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.rx).powi(2) + (v / self.ry).powi(2) <= 1.0
    }
}

/// Brain-like PET/MR pair on a `size x size` grid in normalized
/// coordinates `y, x in [-1, 1]` (y pointing down).
///
/// Both images share the anatomical label map. A hot lesion sits in the
/// white matter at the top right of the PET image only and a dark lesion at
/// the mirrored position of the MR image only. Inside the brain the PET
/// image gains a linear trend increasing from top left to bottom right and
/// the MR image one increasing from bottom left to top right. The seed
/// jitters the geometry by a few percent.
pub fn make_pet_mr_pair(size: usize, seed: u64) -> Result<PetMrPair> {
    if size < 8 {
        return Err(invalid("size", "must be at least 8"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: f64| v * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0));
    let brain = Ellipse {
        cy: 0.0,
        cx: 0.0,
        ry: jitter(0.88),
        rx: jitter(0.72),
        angle: 0.0,
    };
    let white = Ellipse {
        cy: 0.02,
        cx: 0.0,
        ry: jitter(0.68),
        rx: jitter(0.53),
        angle: 0.0,
    };
    let ventricles = [
        Ellipse {
            cy: -0.05,
            cx: -0.12,
            ry: jitter(0.28),
            rx: jitter(0.07),
            angle: jitter(0.25),
        },
        Ellipse {
            cy: -0.05,
            cx: 0.12,
            ry: jitter(0.28),
            rx: jitter(0.07),
            angle: -jitter(0.25),
        },
    ];
    let nuclei = [
        Ellipse {
            cy: 0.3,
            cx: -0.25,
            ry: jitter(0.12),
            rx: jitter(0.08),
            angle: 0.3,
        },
        Ellipse {
            cy: 0.3,
            cx: 0.25,
            ry: jitter(0.12),
            rx: jitter(0.08),
            angle: -0.3,
        },
    ];
    let pet_lesion = Ellipse {
        cy: -0.42,
        cx: 0.2,
        ry: jitter(0.08),
        rx: jitter(0.08),
        angle: 0.0,
    };
    let mr_lesion = Ellipse {
        cy: -0.42,
        cx: -0.2,
        ry: jitter(0.08),
        rx: jitter(0.08),
        angle: 0.0,
    };

    let coord = |k: usize| 2.0 * (k as f64 + 0.5) / size as f64 - 1.0;
    let label_at = |i: usize, j: usize| -> u8 {
        let (y, x) = (coord(i), coord(j));
        if !brain.contains(y, x) {
            BACKGROUND
        } else if ventricles.iter().any(|e| e.contains(y, x)) {
            CSF
        } else if nuclei.iter().any(|e| e.contains(y, x)) {
            NUCLEUS
        } else if white.contains(y, x) {
            WHITE
        } else {
            GREY
        }
    };

    let labels = ScalarField::from_fn(size, size, |i, j| label_at(i, j) as f64);
    let inside = labels.map(|l| if l != BACKGROUND as f64 { 1.0 } else { 0.0 });
    let footprint = |e: &Ellipse| {
        ScalarField::from_fn(size, size, |i, j| {
            if e.contains(coord(i), coord(j)) && inside[(i, j)] > 0.0 {
                1.0
            } else {
                0.0
            }
        })
    };
    let pet_mask = footprint(&pet_lesion);
    let mr_mask = footprint(&mr_lesion);

    // t in [-0.5, 0.5] along the diagonal directions
    let span = 2.0 * (size - 1) as f64;
    let pet_trend = ScalarField::from_fn(size, size, |i, j| {
        inside[(i, j)] * 1.0 * ((i + j) as f64 / span - 0.5)
    });
    let mr_trend = ScalarField::from_fn(size, size, |i, j| {
        inside[(i, j)] * 0.2 * ((j as f64 - i as f64) / span)
    });

    let pet = ScalarField::from_fn(size, size, |i, j| {
        let base = tissue_values(labels[(i, j)] as u8).0;
        let lesion = if pet_mask[(i, j)] > 0.0 { 6.0 } else { base };
        lesion + pet_trend[(i, j)]
    });
    let mr = ScalarField::from_fn(size, size, |i, j| {
        let base = tissue_values(labels[(i, j)] as u8).1;
        let lesion = if mr_mask[(i, j)] > 0.0 { 0.3 } else { base };
        lesion + mr_trend[(i, j)]
    });
    Ok(PetMrPair {
        pet,
        mr,
        labels,
        brain: inside,
        pet_lesion: pet_mask,
        mr_lesion: mr_mask,
        pet_trend,
        mr_trend,
    })
}

/// Simulated PET measurement.
///
/// With `s = count_scale * K pet`, the background is
/// `c0 = scatter_fraction * (blur(s) + floor)` where `floor` is 10% of the
/// mean of `s` (or 1 when `s` vanishes), and
/// `f ~ Poisson(s + c0)` independently per bin.
pub fn simulate_pet_data(
    pet: &ScalarField,
    geom: &RadonGeometry,
    scatter_fraction: f64,
    count_scale: f64,
    seed: u64,
) -> Result<(Sinogram, Sinogram)> {
    if pet.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidData("phantom has negative entries".into()));
    }
    if !(scatter_fraction > 0.0 && scatter_fraction < 1.0) {
        return Err(invalid("scatter_fraction", "must lie in (0, 1)"));
    }
    if !(count_scale > 0.0 && count_scale.is_finite()) {
        return Err(invalid("count_scale", "must be positive"));
    }
    let s = forward_project(pet, geom)?.map(|v| count_scale * v.max(0.0));
    let (na, nb) = s.shape();
    let mean = s.sum() / (na * nb) as f64;
    let floor = if mean > 0.0 { 0.1 * mean } else { 1.0 };
    let as_field = ScalarField::new(na, nb, s.as_slice().to_vec())?;
    let smooth = gaussian_blur(&as_field, (nb as f64 / 10.0).max(1.0));
    let c0 = Sinogram::new(
        na,
        nb,
        smooth
            .as_slice()
            .iter()
            .map(|&v| scatter_fraction * (v.max(0.0) + floor))
            .collect(),
    )?;
    let counts: Vec<f64> = s
        .as_slice()
        .par_iter()
        .zip(c0.as_slice().par_iter())
        .enumerate()
        .map(|(bin, (&sv, &cv))| sample_poisson(sv + cv, seed, bin as u64))
        .collect();
    Ok((Sinogram::new(na, nb, counts)?, c0))
}

/// One Poisson draw from the stream `(seed, stream)`.
pub fn sample_poisson(rate: f64, seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Poisson::new(rate)
        .expect("rate is positive and finite")
        .sample(&mut rng)
}
