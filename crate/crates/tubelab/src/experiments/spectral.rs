//! Gap constants, integral inequalities, the weighted identity and discrete
//! conditioning.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::RngExt;
use serde::Serialize;
use serde_json::{json, Value};
use tubelab_core::hyperbolic::{cylinder_to_point, CylinderCoords, TubeIsometry};
use tubelab_core::sampling::seeded;
use tubelab_core::spectral::{
    discrete_l_conditioning, gap_constants, gap_constants_with_beta, kato_check, lambda0, quotient_distance,
    scalar_gap, scalar_rayleigh, tensor_gap_check, tube_gap, weighted_identity_check,
};
use tubelab_core::torus::lemma_exponent;
use tubelab_core::tube::TubeQuotient;
use tubelab_core::warped::{FdOrder, ScalarField, TubeGrid, WarpedField};

use super::{bump, cell_seed, par_cells, RunResult};
use crate::config::{invalid, AngleSpec, Experiment, ExperimentConfig, GridConfig};
use crate::fit::Columns;
use crate::report::{Report, ReportRow};

/// `op, n, grid_dr, value, bound, margin`. `margin` is signed slack: negative
/// means the bound is broken.
#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub op: String,
    pub n: usize,
    pub grid_dr: f64,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

impl GapRow {
    fn lower(op: &str, n: usize, grid_dr: f64, value: f64, bound: f64) -> Self {
        Self {
            op: op.into(),
            n,
            grid_dr,
            value,
            bound,
            margin: value - bound,
        }
    }

    fn upper(op: &str, n: usize, grid_dr: f64, value: f64, bound: f64) -> Self {
        Self {
            op: op.into(),
            n,
            grid_dr,
            value,
            bound,
            margin: bound - value,
        }
    }
}

impl Columns for GapRow {
    fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "n" => self.n as f64,
            "grid_dr" => self.grid_dr,
            "value" => self.value,
            "bound" => self.bound,
            "margin" => self.margin,
            _ => return None,
        })
    }
}

impl ReportRow for GapRow {
    const HEADER: &'static [&'static str] = &["op", "n", "grid_dr", "value", "bound", "margin"];

    fn violates(&self) -> bool {
        !(self.margin >= 0.0)
    }
}

fn sort_gap_rows(rows: &mut [GapRow]) {
    rows.sort_by(|a, b| {
        a.op.cmp(&b.op)
            .then(a.n.cmp(&b.n))
            .then(b.grid_dr.total_cmp(&a.grid_dr))
    });
}

/// Smallest margin and row count per `(op, n)`.
fn margin_stats(rows: &[GapRow]) -> Value {
    let mut m: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    for r in rows {
        let e = m
            .entry(format!("{}/{}", r.op, r.n))
            .or_insert((0, f64::INFINITY, f64::INFINITY));
        e.0 += 1;
        e.1 = e.1.min(r.margin);
        e.2 = e.2.min(r.value);
    }
    m.into_iter()
        .map(|(k, (rows, margin, value))| (k, json!({ "rows": rows, "min_margin": margin, "min_value": value })))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn grid_or(cfg: &ExperimentConfig, default: GridConfig) -> GridConfig {
    cfg.grid.unwrap_or(default)
}

/// Random smooth field: low Fourier modes in t times a radial bump with a
/// random linear modulation.
pub fn random_smooth_field(n: usize, g: TubeGrid, lo: f64, hi: f64, seed: u64) -> WarpedField {
    let mut rng = seeded(seed);
    let mut coef = [[0.0; 7]; 4];
    for row in coef.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let mid = 0.5 * (lo + hi);
    WarpedField::from_fn(n, g, |r, t| {
        let s = TAU * t / g.t_len;
        let b = bump(r, lo, hi);
        let mut out = [0.0; 4];
        for (c, a) in coef.iter().enumerate() {
            let modes = a[0] + a[1] * s.cos() + a[2] * s.sin() + a[3] * (2.0 * s).cos() + a[4] * (2.0 * s).sin();
            out[c] = b * modes * (1.0 + a[5] * (r - mid) / (hi - lo)) + b * b * a[6];
        }
        out
    })
}

/// Scalar Rayleigh quotients, the tensor gap of `2L` and the Kato inequality
/// on seeded random test functions.
pub fn gap(cfg: &ExperimentConfig) -> RunResult<Report> {
    let seed = cfg.seed_or_fail(Experiment::Gap)?;
    let dims = cfg.dims(&[4, 5, 6]);
    let g = grid_or(
        cfg,
        GridConfig {
            r0: 0.5,
            r1: 6.5,
            dr: 1.0 / 16.0,
            lt: 2.0,
            nt: Some(12),
            order: None,
        },
    )
    .build(12, FdOrder::Second)?;
    if g.order == FdOrder::Spectral {
        return Err(invalid("grid.order", "quadrature needs a uniform radial grid").into());
    }
    let fields = cfg.fields.unwrap_or(100);
    let (inner, outer) = (g.r0 + 4.0 * g.dr(), g.r1 - 4.0 * g.dr());
    if outer - inner < 1.0 {
        return Err(invalid("grid", "radial segment too short for test functions").into());
    }
    let dr = g.dr();
    let cells: Vec<(usize, usize)> = dims.iter().flat_map(|&n| (0..fields).map(move |k| (n, k))).collect();
    let mut rows = par_cells(&cells, |i, &(n, _)| {
        let mut rng = seeded(cell_seed(seed, i));
        let lo = rng.random_range(inner..outer - 1.0);
        let hi = rng.random_range(lo + 1.0..outer);
        let (a, b, k) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-2.0..0.0),
            rng.random_range(0..3),
        );
        let u = ScalarField::from_fn(g, |r, t| {
            bump(r, lo, hi) * (b * r).exp() * (1.5 + a * (TAU * k as f64 * t / g.t_len).cos())
        });
        let ray = scalar_rayleigh(&u, n)?;
        let h = random_smooth_field(n, g, lo, hi, rng.random());
        let tg = tensor_gap_check(&h)?;
        let kc = kato_check(&h)?;
        Ok(vec![
            GapRow::lower("scalar_rayleigh", n, dr, ray, scalar_gap(n) * (1.0 - 5.0 * dr)),
            GapRow::lower("tensor_gap", n, dr, tg.quotient, lambda0(n)),
            GapRow::upper("kato", n, dr, kc.lhs / kc.rhs, 1.0),
        ])
    })?;
    sort_gap_rows(&mut rows);
    let mut consts = serde_json::Map::new();
    for &n in &dims {
        consts.insert(
            n.to_string(),
            json!({ "scalar_gap": scalar_gap(n), "tube_gap": tube_gap(n), "lambda0": lambda0(n) }),
        );
    }
    let stats = json!({ "fields_per_n": fields, "per_op": margin_stats(&rows), "constants": consts });
    Ok(Report::from_rows(
        Experiment::Gap,
        Some(seed),
        &rows,
        stats,
        Vec::new(),
    )?)
}

fn default_identity_grid() -> GridConfig {
    GridConfig {
        r0: 0.5,
        r1: 3.5,
        dr: 1.0 / 16.0,
        lt: 2.0,
        nt: None,
        order: None,
    }
}

/// Weighted L^2 identity with `phi = exp(-beta r_x)` for an axis point x,
/// on a sequence of grids with `dt = dr` halving each time.
pub fn identity(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4]);
    let base = grid_or(cfg, default_identity_grid());
    let levels = cfg.refinements.unwrap_or(3);
    let angles = match &cfg.angle_spec {
        Some(AngleSpec::Explicit(list)) => list[0].clone(),
        Some(AngleSpec::Random(_)) => return Err(invalid("angle_spec", "identity takes explicit angles").into()),
        None => Vec::new(),
    };
    let mut rows = Vec::new();
    let mut orders = serde_json::Map::new();
    for &n in &dims {
        let beta = match cfg.beta_override {
            Some(b) => gap_constants_with_beta(n, b)?.beta,
            None => gap_constants(n)?.beta,
        };
        let tube = TubeQuotient::new(TubeIsometry::from_angles(n, base.lt, &angles)?, cfg.mu)?;
        let mut e = DVector::zeros(n - 1);
        e[0] = 1.0;
        let x = cylinder_to_point(&CylinderCoords::new(0.0, e.clone(), 0.5 * base.lt))?;
        let len = base.r1 - base.r0;
        let (rlo, rhi) = (base.r0 + 0.4 * len / 3.0, base.r1 - 0.4 * len / 3.0);
        let (tlo, thi) = (0.15 * base.lt, 0.85 * base.lt);
        let mut residuals = Vec::new();
        for level in 0..levels {
            let dr = base.dr / f64::powi(2.0, level as i32);
            let nr = ((base.r1 - base.r0) / dr).round() as usize + 1;
            let nt = (base.lt / dr).round() as usize;
            let g = TubeGrid::with_counts(base.r0, base.r1, nr, base.lt, nt, FdOrder::Second)?;
            let h = WarpedField::from_fn(n, g, |r, t| {
                let b = bump(r, rlo, rhi) * bump(t, tlo, thi);
                [b, b, b, 0.0]
            });
            let mut phi = ScalarField::from_fn(g, |_, _| 0.0);
            for i in 0..g.nr {
                for j in 0..g.nt {
                    let y = cylinder_to_point(&CylinderCoords::new(g.r(i), e.clone(), g.t(j)))?;
                    phi.u[[i, j]] = (-beta * quotient_distance(&tube, &x, &y)?).exp();
                }
            }
            let c = weighted_identity_check(&h, &phi)?;
            let dr = g.dr();
            rows.push(GapRow::upper("weighted_identity", n, dr, c.residual, 10.0 * dr * dr));
            rows.push(GapRow::upper(
                "divergence_integral",
                n,
                dr,
                c.divergence_integral.abs(),
                10.0 * dr * dr,
            ));
            residuals.push(c.residual);
        }
        let observed: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        orders.insert(
            n.to_string(),
            json!({ "beta": beta, "residuals": residuals, "observed_orders": observed,
                    "order_within_2_pm_0_3": observed.iter().all(|o| (1.7..=2.3).contains(o)) }),
        );
    }
    sort_gap_rows(&mut rows);
    let stats = json!({ "per_n": orders });
    Ok(Report::from_rows(
        Experiment::Identity,
        cfg.seed,
        &rows,
        stats,
        Vec::new(),
    )?)
}

fn default_conditioning_grid() -> GridConfig {
    GridConfig {
        r0: 0.5,
        r1: 6.0,
        dr: 1.0 / 32.0,
        lt: 1.0,
        nt: Some(8),
        order: None,
    }
}

/// Smallest eigenvalue of the discrete `2L` on the invariant class under
/// successive halvings of the radial step.
pub fn conditioning(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4, 5]);
    let base = grid_or(cfg, default_conditioning_grid()).build(8, FdOrder::Second)?;
    let levels = cfg.refinements.unwrap_or(3);
    let cells: Vec<(usize, usize)> = dims.iter().flat_map(|&n| (0..levels).map(move |l| (n, l))).collect();
    let mut rows = par_cells(&cells, |_, &(n, level)| {
        let nr = (base.nr - 1) * (1 << level) + 1;
        let g = TubeGrid::with_counts(base.r0, base.r1, nr, base.t_len, base.nt, base.order)?;
        let rep = discrete_l_conditioning(&g, n)?;
        Ok(vec![GapRow::lower("discrete_2L", n, rep.dr, rep.smallest, rep.bound())])
    })?;
    sort_gap_rows(&mut rows);
    let mut per_n = serde_json::Map::new();
    for &n in &dims {
        let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.value).collect();
        let drift = vals
            .windows(2)
            .map(|w| (w[0] - w[1]).abs() / w[0])
            .fold(0.0f64, f64::max);
        let nonincreasing = vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
        per_n.insert(
            n.to_string(),
            json!({ "lambda0": lambda0(n), "values": vals, "max_relative_drift": drift, "nonincreasing": nonincreasing }),
        );
    }
    let stats = json!({
        "note": "eigenvalues are taken over the rotation-invariant class only and bound the full bottom of the spectrum from above",
        "per_n": per_n,
    });
    Ok(Report::from_rows(
        Experiment::Conditioning,
        cfg.seed,
        &rows,
        stats,
        Vec::new(),
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsRow {
    pub n: usize,
    pub lambda0: f64,
    pub beta: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub scalar_gap: f64,
    pub tube_gap: f64,
}

impl Columns for ConstantsRow {
    fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "n" => self.n as f64,
            "lambda0" => self.lambda0,
            "beta" => self.beta,
            "beta_lo" => self.beta_lo,
            "beta_hi" => self.beta_hi,
            "scalar_gap" => self.scalar_gap,
            "tube_gap" => self.tube_gap,
            _ => return None,
        })
    }
}

impl ReportRow for ConstantsRow {
    const HEADER: &'static [&'static str] = &["n", "lambda0", "beta", "beta_lo", "beta_hi", "scalar_gap", "tube_gap"];

    fn violates(&self) -> bool {
        let ok = self.beta > 0.0
            && self.beta > self.beta_lo
            && self.beta < self.beta_hi
            && 2.0 * self.beta > lemma_exponent(self.n) as f64;
        !ok
    }
}

pub fn constants(cfg: &ExperimentConfig) -> RunResult<Report> {
    let default: Vec<usize> = (4..=16).collect();
    let mut dims = cfg.dims(&default);
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::new();
    for n in dims {
        let c = match cfg.beta_override {
            Some(b) => gap_constants_with_beta(n, b)?,
            None => gap_constants(n)?,
        };
        let (beta_lo, beta_hi) = c.beta_window();
        rows.push(ConstantsRow {
            n,
            lambda0: c.lambda0,
            beta: c.beta,
            beta_lo,
            beta_hi,
            scalar_gap: scalar_gap(n),
            tube_gap: tube_gap(n),
        });
    }
    let stats = json!({ "margulis": cfg.mu });
    Ok(Report::from_rows(
        Experiment::Constants,
        cfg.seed,
        &rows,
        stats,
        Vec::new(),
    )?)
}
