//! Experiment drivers. Each turns a validated config into sorted rows and
//! summary statistics; cells run on the current rayon pool and are merged in
//! input order, so the output does not depend on scheduling.

mod newton;
mod orbit;
mod spectral;

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::RngExt;
use rayon::prelude::*;
use tubelab_core::sampling::{seeded, unit_vector};

use crate::config::{AngleSpec, ConfigError, Experiment, ExperimentConfig};
use crate::report::Report;

pub use newton::NewtonRow;
pub use orbit::{OrbitRow, TransferRow};
pub use spectral::{ConstantsRow, GapRow};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Core(#[from] tubelab_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Validates `cfg` for `exp` and runs it.
pub fn run(exp: Experiment, cfg: &ExperimentConfig) -> RunResult<Report> {
    cfg.validate(exp)?;
    match exp {
        Experiment::Count => orbit::count(cfg),
        Experiment::Torus => orbit::torus(cfg),
        Experiment::Transfer => orbit::transfer(cfg),
        Experiment::Gap => spectral::gap(cfg),
        Experiment::Identity => spectral::identity(cfg),
        Experiment::Conditioning => spectral::conditioning(cfg),
        Experiment::Constants => spectral::constants(cfg),
        Experiment::Newton => newton::newton(cfg),
    }
}

/// One tube of a sweep: dimension, translation length and rotation angles.
#[derive(Debug, Clone)]
pub(crate) struct TubeSpec {
    pub n: usize,
    pub ell: f64,
    pub angles: Vec<f64>,
    /// Normal direction for basepoints that need one.
    pub direction: DVector<f64>,
}

/// Expands `(n, ell, angle spec)` into tubes. Random angles and directions
/// are drawn sequentially from one generator before any parallel work.
pub(crate) fn tube_family(dims: &[usize], ells: &[f64], spec: &AngleSpec, seed: Option<u64>) -> Vec<TubeSpec> {
    let mut rng = seeded(seed.unwrap_or(0));
    let mut out = Vec::new();
    for &n in dims {
        let planes = (n - 1) / 2;
        for &ell in ells {
            match spec {
                AngleSpec::Explicit(list) => {
                    for angles in list {
                        let direction = DVector::from_element(n - 1, 1.0 / ((n - 1) as f64).sqrt());
                        out.push(TubeSpec {
                            n,
                            ell,
                            angles: angles.clone(),
                            direction,
                        });
                    }
                }
                AngleSpec::Random(k) => {
                    for _ in 0..*k {
                        let angles = (0..planes).map(|_| rng.random_range(-PI..PI)).collect();
                        let direction = unit_vector(n - 1, &mut rng);
                        out.push(TubeSpec {
                            n,
                            ell,
                            angles,
                            direction,
                        });
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn join_angles(angles: &[f64]) -> String {
    angles.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
}

/// Runs `f` on every cell in parallel and concatenates the rows in cell order.
pub(crate) fn par_cells<T: Sync, R: Send>(
    cells: &[T],
    f: impl Fn(usize, &T) -> RunResult<Vec<R>> + Sync,
) -> RunResult<Vec<R>> {
    let parts: Vec<Vec<R>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| f(i, c))
        .collect::<RunResult<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Cell-local seed derived from the run seed and the cell index.
pub(crate) fn cell_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// C^3 bump supported in [lo, hi].
pub(crate) fn bump(r: f64, lo: f64, hi: f64) -> f64 {
    if r <= lo || r >= hi {
        0.0
    } else {
        (PI * (r - lo) / (hi - lo)).sin().powi(4)
    }
}
