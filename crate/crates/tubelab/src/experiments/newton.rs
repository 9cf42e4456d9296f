//! Damped Newton from perturbed hyperbolic data.

use serde::Serialize;
use serde_json::json;
use tubelab_core::warped::newton::{perturbation_run, NewtonOptions};
use tubelab_core::warped::FdOrder;

use super::{par_cells, RunResult};
use crate::config::{invalid, Experiment, ExperimentConfig, GridConfig};
use crate::fit::Columns;
use crate::report::{Report, ReportRow};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const EINSTEIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct NewtonRow {
    pub eps: f64,
    pub iters: usize,
    pub final_residual: f64,
    pub dist_to_hyperbolic: f64,
    pub ratio_dist_over_eps: f64,
    #[serde(skip)]
    pub ricci_residual: f64,
    #[serde(skip)]
    pub bianchi_residual: f64,
}

impl Columns for NewtonRow {
    fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "eps" => self.eps,
            "iters" => self.iters as f64,
            "final_residual" => self.final_residual,
            "dist_to_hyperbolic" => self.dist_to_hyperbolic,
            "ratio_dist_over_eps" => self.ratio_dist_over_eps,
            _ => return None,
        })
    }
}

impl ReportRow for NewtonRow {
    const HEADER: &'static [&'static str] = &[
        "eps",
        "iters",
        "final_residual",
        "dist_to_hyperbolic",
        "ratio_dist_over_eps",
    ];

    fn violates(&self) -> bool {
        !(self.final_residual < RESIDUAL_TOL
            && self.ricci_residual < EINSTEIN_TOL
            && self.bianchi_residual < EINSTEIN_TOL)
    }
}

fn default_grid() -> GridConfig {
    GridConfig {
        r0: 0.5,
        r1: 3.5,
        dr: 0.075,
        lt: std::f64::consts::TAU,
        nt: Some(1),
        order: Some(FdOrder::Spectral),
    }
}

pub fn newton(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4]);
    if dims.len() != 1 {
        return Err(invalid("n_list", "newton runs one dimension at a time").into());
    }
    let n = dims[0];
    let g = cfg.grid.unwrap_or(default_grid()).build(1, FdOrder::Spectral)?;
    let eps_list = cfg.eps_list.clone().unwrap_or(vec![1e-2, 1e-3, 1e-4]);
    let opts = NewtonOptions::default();
    let mut rows = par_cells(&eps_list, |_, &eps| {
        let (rec, _) = perturbation_run(n, g, eps, &opts)?;
        Ok(vec![NewtonRow {
            eps,
            iters: rec.iters,
            final_residual: rec.final_residual,
            dist_to_hyperbolic: rec.dist_to_hyperbolic,
            ratio_dist_over_eps: rec.ratio_dist_over_eps,
            ricci_residual: rec.ricci_residual,
            bianchi_residual: rec.bianchi_residual,
        }])
    })?;
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio_dist_over_eps).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let stats = json!({
        "n": n,
        "grid": g,
        "ratio_spread": hi / lo,
        "ricci_residual": rows.iter().map(|r| r.ricci_residual).collect::<Vec<_>>(),
        "bianchi_residual": rows.iter().map(|r| r.bianchi_residual).collect::<Vec<_>>(),
        "residual_tol": RESIDUAL_TOL,
        "einstein_tol": EINSTEIN_TOL,
    });
    Ok(Report::from_rows(
        Experiment::Newton,
        cfg.seed,
        &rows,
        stats,
        Vec::new(),
    )?)
}
