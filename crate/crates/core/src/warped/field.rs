use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::grid::TubeGrid;
use crate::error::{Error, Result};

/// Invariant symmetric 2-tensor
/// `h = p dr^2 + q sinh^2 r g_S + w cosh^2 r dt^2 + c (dr dt + dt dr)`
/// on the segment, where `g_S` is the round metric of S^{n-2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedField {
    pub n: usize,
    pub grid: TubeGrid,
    pub p: Array2<f64>,
    pub q: Array2<f64>,
    pub w: Array2<f64>,
    pub c: Array2<f64>,
}

impl WarpedField {
    pub fn zeros(n: usize, grid: TubeGrid) -> Self {
        let z = grid.zeros();
        Self {
            n,
            grid,
            p: z.clone(),
            q: z.clone(),
            w: z.clone(),
            c: z,
        }
    }

    /// Components from a function returning `[p, q, w, c]` at `(r, t)`.
    pub fn from_fn(n: usize, grid: TubeGrid, f: impl Fn(f64, f64) -> [f64; 4]) -> Self {
        let mut h = Self::zeros(n, grid);
        for i in 0..grid.nr {
            for j in 0..grid.nt {
                let v = f(grid.r(i), grid.t(j));
                h.p[[i, j]] = v[0];
                h.q[[i, j]] = v[1];
                h.w[[i, j]] = v[2];
                h.c[[i, j]] = v[3];
            }
        }
        h
    }

    /// Multiple of the hyperbolic metric by the scalar `f`.
    pub fn conformal(n: usize, grid: TubeGrid, f: &Array2<f64>) -> Self {
        Self {
            n,
            grid,
            p: f.clone(),
            q: f.clone(),
            w: f.clone(),
            c: grid.zeros(),
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.n - 2
    }

    pub fn comps(&self) -> [&Array2<f64>; 4] {
        [&self.p, &self.q, &self.w, &self.c]
    }

    pub fn comps_mut(&mut self) -> [&mut Array2<f64>; 4] {
        [&mut self.p, &mut self.q, &mut self.w, &mut self.c]
    }

    /// Cross component in the orthonormal frame, c / cosh r.
    pub fn c_frame(&self) -> Array2<f64> {
        let g = self.grid;
        Array2::from_shape_fn(g.shape(), |(i, j)| self.c[[i, j]] / g.r(i).cosh())
    }

    pub fn from_frame(
        n: usize,
        grid: TubeGrid,
        p: Array2<f64>,
        q: Array2<f64>,
        w: Array2<f64>,
        ct: Array2<f64>,
    ) -> Self {
        let c = Array2::from_shape_fn(grid.shape(), |(i, j)| ct[[i, j]] * grid.r(i).cosh());
        Self { n, grid, p, q, w, c }
    }

    /// Trace with respect to the hyperbolic metric.
    pub fn trace(&self) -> Array2<f64> {
        let d = self.fiber_dim() as f64;
        Zip::from(&self.p)
            .and(&self.q)
            .and(&self.w)
            .map_collect(|p, q, w| p + d * q + w)
    }

    /// Pointwise squared norm with respect to the hyperbolic metric.
    pub fn norm_sq(&self) -> Array2<f64> {
        let d = self.fiber_dim() as f64;
        let ct = self.c_frame();
        Zip::from(&self.p)
            .and(&self.q)
            .and(&self.w)
            .and(&ct)
            .map_collect(|p, q, w, c| p * p + d * q * q + w * w + 2.0 * c * c)
    }

    /// Pointwise inner product with respect to the hyperbolic metric.
    pub fn dot(&self, other: &Self) -> Array2<f64> {
        let d = self.fiber_dim() as f64;
        let (a, b) = (self.c_frame(), other.c_frame());
        Array2::from_shape_fn(self.grid.shape(), |ix| {
            self.p[ix] * other.p[ix] + d * self.q[ix] * other.q[ix] + self.w[ix] * other.w[ix] + 2.0 * a[ix] * b[ix]
        })
    }

    /// Supremum of the pointwise hyperbolic norm.
    pub fn sup_norm(&self) -> f64 {
        self.norm_sq().iter().fold(0.0f64, |m, v| m.max(v.sqrt()))
    }

    /// Largest absolute component in the orthonormal frame.
    pub fn max_abs(&self) -> f64 {
        let ct = self.c_frame();
        [&self.p, &self.q, &self.w, &ct]
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.comps_mut().into_iter().zip(other.comps()) {
            a.scaled_add(s, b);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for a in out.comps_mut() {
            a.mapv_inplace(|v| v * s);
        }
        out
    }

    /// Whether every component vanishes on the outer `layers` radial rows.
    pub fn vanishes_near_boundary(&self, layers: usize) -> bool {
        let nr = self.grid.nr;
        self.comps().iter().all(|a| {
            (0..layers)
                .chain(nr - layers..nr)
                .all(|i| a.row(i).iter().all(|v| *v == 0.0))
        })
    }

    pub fn check_compact_support(&self) -> Result<()> {
        if self.vanishes_near_boundary(self.grid.boundary_layers()) {
            Ok(())
        } else {
            Err(Error::SupportTouchesBoundary)
        }
    }
}

/// Scalar function on the segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: TubeGrid,
    pub u: Array2<f64>,
}

impl ScalarField {
    pub fn from_fn(grid: TubeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid,
            u: grid.from_fn(f),
        }
    }

    pub fn vanishes_near_boundary(&self) -> bool {
        let (nr, l) = (self.grid.nr, self.grid.boundary_layers());
        (0..l)
            .chain(nr - l..nr)
            .all(|i| self.u.row(i).iter().all(|v| *v == 0.0))
    }
}

/// 1-form `a dr + b dt` given by its coordinate components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneForm {
    pub grid: TubeGrid,
    pub r: Array2<f64>,
    pub t: Array2<f64>,
}

impl OneForm {
    /// Component along the unit vector cosh(r)^{-1} d/dt.
    pub fn t_frame(&self) -> Array2<f64> {
        let g = self.grid;
        Array2::from_shape_fn(g.shape(), |(i, j)| self.t[[i, j]] / g.r(i).cosh())
    }

    pub fn max_abs_frame(&self) -> f64 {
        let tf = self.t_frame();
        self.r.iter().chain(tf.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Metric in the invariant class, stored by the same normalized components
/// (the hyperbolic metric is p = q = w = 1, c = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedMetric {
    comps: WarpedField,
}

impl WarpedMetric {
    pub fn new(comps: WarpedField) -> Result<Self> {
        let g = comps.grid;
        for i in 0..g.nr {
            let ch2 = g.r(i).cosh().powi(2);
            for j in 0..g.nt {
                let (p, q, w, c) = (comps.p[[i, j]], comps.q[[i, j]], comps.w[[i, j]], comps.c[[i, j]]);
                let det = p * w * ch2 - c * c;
                if !(p > 0.0 && q > 0.0 && w > 0.0 && det > 0.0) {
                    return Err(Error::DegenerateMetric { r: g.r(i), t: g.t(j) });
                }
            }
        }
        Ok(Self { comps })
    }

    pub fn hyperbolic(n: usize, grid: TubeGrid) -> Self {
        let one = Array2::from_elem(grid.shape(), 1.0);
        Self {
            comps: WarpedField {
                n,
                grid,
                p: one.clone(),
                q: one.clone(),
                w: one,
                c: grid.zeros(),
            },
        }
    }

    /// `dr^2 + a(r)^2 g_S + b(r)^2 dt^2`.
    pub fn doubly_warped(n: usize, grid: TubeGrid, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> Result<Self> {
        let comps = WarpedField::from_fn(n, grid, |r, _| {
            [1.0, (a(r) / r.sinh()).powi(2), (b(r) / r.cosh()).powi(2), 0.0]
        });
        Self::new(comps)
    }

    pub fn comps(&self) -> &WarpedField {
        &self.comps
    }

    pub fn into_comps(self) -> WarpedField {
        self.comps
    }

    pub fn n(&self) -> usize {
        self.comps.n
    }

    pub fn grid(&self) -> TubeGrid {
        self.comps.grid
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.comps.scaled(s))
    }

    pub fn perturbed(&self, s: f64, h: &WarpedField) -> Result<Self> {
        Self::new(self.comps.axpy(s, h))
    }
}
