//! Spectral constants, gap checks and weighted norms on model tubes.

pub mod conditioning;
pub mod gap;
pub mod norms;
pub mod transfer;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::lemma_exponent;
use crate::tube::DEFAULT_MU;
use crate::warped::{FdOrder, TubeGrid};

pub use conditioning::{dense_spectrum, discrete_l_conditioning, mode_symbols, ConditioningReport, ModeBlock};
pub use gap::{
    gradient_sq, kato_check, scalar_gradient_sq, scalar_rayleigh, tensor_gap_check, weighted_identity_check, GapCheck,
    IdentityCheck, KatoCheck,
};
pub use norms::{cutoff_eta, hybrid_norm_desk, quotient_distance, weighted_seminorm, Cutoff, HybridNorm};
pub use transfer::{transfer_check, TransferCheck};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConstants {
    pub n: usize,
    pub lambda0: f64,
    pub beta: f64,
    pub margulis: f64,
}

impl GapConstants {
    /// Open window `(floor((n+1)/2) / 2, sqrt(lambda0))` for the weight exponent.
    pub fn beta_window(&self) -> (f64, f64) {
        (lemma_exponent(self.n) as f64 / 2.0, self.lambda0.sqrt())
    }
}

/// `max{n - 2, (n-1)^2/4 - 2}`.
pub fn lambda0(n: usize) -> f64 {
    let n = n as f64;
    (n - 2.0).max((n - 1.0).powi(2) / 4.0 - 2.0)
}

/// Bottom of the scalar spectrum of a tube, `(n-1)^2 / 4`.
pub fn scalar_gap(n: usize) -> f64 {
    (n as f64 - 1.0).powi(2) / 4.0
}

/// Gap of `2L` on compactly supported tensors in a tube, `(n-1)^2/4 - 2`.
pub fn tube_gap(n: usize) -> f64 {
    scalar_gap(n) - 2.0
}

pub fn gap_constants(n: usize) -> Result<GapConstants> {
    if n < 4 {
        return Err(Error::DimensionTooSmall { min: 4, got: n });
    }
    let lambda0 = lambda0(n);
    let lo = lemma_exponent(n) as f64 / 2.0;
    let hi = lambda0.sqrt();
    assert!(2.0 * hi > 2.0 * lo, "weight window is empty for n = {n}");
    Ok(GapConstants {
        n,
        lambda0,
        beta: 0.5 * (lo + hi),
        margulis: DEFAULT_MU,
    })
}

/// Same constants with a caller-chosen weight exponent inside the window.
pub fn gap_constants_with_beta(n: usize, beta: f64) -> Result<GapConstants> {
    let mut c = gap_constants(n)?;
    let (lo, hi) = c.beta_window();
    if !(beta > lo && beta < hi) {
        return Err(Error::WeightOutOfWindow { beta, lo, hi });
    }
    c.beta = beta;
    Ok(c)
}

/// Trapezoid weights for `dvol = sinh^{n-2}(r) cosh(r) dr dt` on a uniform
/// grid, with the volume of the round sphere folded into the constant.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub grid: TubeGrid,
    pub n: usize,
    pub weights: Array2<f64>,
}

pub fn volume_density(n: usize, r: f64) -> f64 {
    r.sinh().powi(n as i32 - 2) * r.cosh()
}

impl QuadratureGrid {
    pub fn new(grid: TubeGrid, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: n });
        }
        if grid.order == FdOrder::Spectral {
            return Err(Error::Grid("quadrature needs a uniform radial grid".into()));
        }
        let (dr, dt) = (grid.dr(), grid.t_len / grid.nt as f64);
        let weights = Array2::from_shape_fn(grid.shape(), |(i, _)| {
            let end = if i == 0 || i == grid.nr - 1 { 0.5 } else { 1.0 };
            end * dr * dt * volume_density(n, grid.r(i))
        });
        Ok(Self { grid, n, weights })
    }

    pub fn integrate(&self, f: &Array2<f64>) -> f64 {
        (&self.weights * f).sum()
    }

    pub fn volume(&self) -> f64 {
        self.weights.sum()
    }

    /// Closed form of the volume the weights approximate.
    pub fn exact_volume(&self) -> f64 {
        let m = self.n as i32 - 1;
        let g = self.grid;
        g.t_len * (g.r1.sinh().powi(m) - g.r0.sinh().powi(m)) / m as f64
    }
}
