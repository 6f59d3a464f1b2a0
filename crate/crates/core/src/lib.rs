//! Weighted and structural total-variation regularization for image
//! denoising and PET reconstruction, solved with a primal-dual
//! saddle-point method.

pub mod discrepancy;
pub mod error;
pub mod field;
pub mod io;
pub mod metrics;
pub mod opnorm;
pub mod phantom;
pub mod prior;
pub mod radon;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
pub use field::{divergence, gradient_forward, ScalarField, VectorField};
pub use prior::{AnisotropyField, WeightField};
pub use radon::{RadonGeometry, Sinogram};
pub use solver::{ConvergenceReport, SolverConfig, StepRule};
