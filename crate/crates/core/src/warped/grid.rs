use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FdOrder {
    #[default]
    Second,
    Fourth,
    Sixth,
    Eighth,
    /// Chebyshev-Lobatto collocation in r and Fourier collocation in t.
    Spectral,
}

impl FdOrder {
    /// Formal order of the stencils; `None` for spectral collocation.
    pub fn accuracy(self) -> Option<usize> {
        match self {
            FdOrder::Second => Some(2),
            FdOrder::Fourth => Some(4),
            FdOrder::Sixth => Some(6),
            FdOrder::Eighth => Some(8),
            FdOrder::Spectral => None,
        }
    }
}

/// Grid on [r0, r1] x [0, t_len) with t periodic, indexed `[[i, j]]`. Radial
/// nodes are uniform, except for spectral grids which use Chebyshev-Lobatto
/// nodes; axial nodes are always uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeGrid {
    pub r0: f64,
    pub r1: f64,
    pub nr: usize,
    pub t_len: f64,
    pub nt: usize,
    pub order: FdOrder,
}

pub const MIN_RADIAL_NODES: usize = 8;

impl TubeGrid {
    pub fn with_counts(r0: f64, r1: f64, nr: usize, t_len: f64, nt: usize, order: FdOrder) -> Result<Self> {
        if !(r0 > 0.0) || !(r1 > r0) || !r1.is_finite() {
            return Err(Error::Grid(format!(
                "radial segment [{r0}, {r1}] must satisfy 0 < r0 < r1"
            )));
        }
        if nr < MIN_RADIAL_NODES {
            return Err(Error::Grid(format!(
                "{nr} radial nodes, need at least {MIN_RADIAL_NODES}"
            )));
        }
        if !(t_len > 0.0) || nt == 0 {
            return Err(Error::Grid(format!("axial period {t_len} with {nt} nodes")));
        }
        Ok(Self {
            r0,
            r1,
            nr,
            t_len,
            nt,
            order,
        })
    }

    /// Grid with spacings as close as possible to `dr` and `dt`.
    pub fn new(r0: f64, r1: f64, dr: f64, t_len: f64, dt: f64, order: FdOrder) -> Result<Self> {
        if !(dr > 0.0) || !(dt > 0.0) {
            return Err(Error::Grid(format!("spacings dr = {dr}, dt = {dt}")));
        }
        let nr = ((r1 - r0) / dr).round() as usize + 1;
        let nt = ((t_len / dt).round() as usize).max(1);
        Self::with_counts(r0, r1, nr, t_len, nt, order)
    }

    /// Radial spacing; the mean spacing on spectral grids.
    pub fn dr(&self) -> f64 {
        (self.r1 - self.r0) / (self.nr - 1) as f64
    }

    pub fn is_uniform(&self) -> bool {
        self.order != FdOrder::Spectral
    }

    pub fn dt(&self) -> f64 {
        self.t_len / self.nt as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        if self.is_uniform() {
            return self.r0 + i as f64 * self.dr();
        }
        let (mid, half) = (0.5 * (self.r0 + self.r1), 0.5 * (self.r1 - self.r0));
        let x = std::f64::consts::PI * i as f64 / (self.nr - 1) as f64;
        // exact end nodes
        match i {
            0 => self.r0,
            _ if i == self.nr - 1 => self.r1,
            _ => mid - half * x.cos(),
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nt)
    }

    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros(self.shape())
    }

    pub fn from_fn(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.r(i), self.t(j)))
    }

    /// Radial layers at each end that compactly supported fields must vanish on.
    pub fn boundary_layers(&self) -> usize {
        2
    }

    /// Same segment with the radial spacing halved.
    pub fn refined(&self) -> Self {
        let nt = if self.nt == 1 { 1 } else { 2 * self.nt };
        Self {
            nr: 2 * self.nr - 1,
            nt,
            ..*self
        }
    }

    pub fn with_order(&self, order: FdOrder) -> Self {
        Self { order, ..*self }
    }
}
