//! Orbit counting sweeps and the lifted-ball transfer check.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};
use tubelab_core::hyperbolic::{cylinder_to_point, point_to_cylinder, CylinderCoords, HPoint, TubeIsometry};
use tubelab_core::spectral::transfer_check;
use tubelab_core::torus::{lemma_exponent, torus_count_bound_check};
use tubelab_core::tube::{injectivity_radius, length_depth_bound_check, orbit_count_ambient, TubeQuotient};

use super::{cell_seed, join_angles, par_cells, tube_family, RunResult, TubeSpec};
use crate::config::{require, Experiment, ExperimentConfig, RadiusSpec};
use crate::fit::{fit_constant, Columns};
use crate::report::{Report, ReportRow};

#[derive(Debug, Clone, Serialize)]
pub struct OrbitRow {
    pub n: usize,
    pub ell: f64,
    pub angles: String,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    pub count: usize,
    pub inj: f64,
    pub depth: f64,
    pub bound: f64,
    pub ratio: f64,
    #[serde(skip)]
    pub cap: Option<f64>,
}

impl Columns for OrbitRow {
    fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "n" => self.n as f64,
            "ell" => self.ell,
            "R" => self.big_r,
            "r" => self.r,
            "count" => self.count as f64,
            "inj" => self.inj,
            "depth" => self.depth,
            "bound" => self.bound,
            "ratio" => self.ratio,
            "r_over_inj" => self.r / self.inj,
            "exp_depth" => self.depth.exp(),
            _ => return None,
        })
    }
}

impl ReportRow for OrbitRow {
    const HEADER: &'static [&'static str] = &[
        "n", "ell", "angles", "R", "r", "count", "inj", "depth", "bound", "ratio",
    ];

    fn violates(&self) -> bool {
        !self.ratio.is_finite() || self.cap.is_some_and(|c| self.ratio > c)
    }
}

fn sort_orbit_rows(rows: &mut [OrbitRow]) {
    rows.sort_by(|a, b| {
        (a.n.cmp(&b.n))
            .then(a.ell.total_cmp(&b.ell))
            .then(a.big_r.total_cmp(&b.big_r))
            .then(a.r.total_cmp(&b.r))
            .then(a.angles.cmp(&b.angles))
    });
}

fn build_tube(spec: &TubeSpec, mu: f64) -> RunResult<TubeQuotient> {
    let phi = TubeIsometry::from_angles(spec.n, spec.ell, &spec.angles)?;
    Ok(TubeQuotient::new(phi, mu)?)
}

fn point(r: f64, theta: &DVector<f64>) -> RunResult<HPoint> {
    Ok(cylinder_to_point(&CylinderCoords::new(r, theta.clone(), 0.0))?)
}

/// Per-dimension maximum ratio and power-law fit of `y_col` against `x_col`.
fn per_dimension_stats(rows: &[OrbitRow], x_col: &str, y_col: &str) -> Value {
    let mut by_n: BTreeMap<usize, Vec<&OrbitRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let mut out = serde_json::Map::new();
    for (n, group) in by_n {
        let owned: Vec<OrbitRow> = group.iter().map(|r| (*r).clone()).collect();
        let max_ratio = owned.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
        let fit = match fit_constant(&owned, x_col, y_col) {
            Ok(f) => serde_json::to_value(f).unwrap_or(Value::Null),
            Err(e) => json!({ "error": e.to_string() }),
        };
        out.insert(
            n.to_string(),
            json!({ "rows": owned.len(), "max_ratio": max_ratio, "exponent": lemma_exponent(n), "fit": fit }),
        );
    }
    Value::Object(out)
}

/// Unit-ball orbit counts at basepoints spread over the depth range of the
/// thin part, against `exp(floor((n+1)/2) depth)`.
pub fn count(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4]);
    let ells = require(cfg.ell_list.clone(), "ell_list")?;
    let spec = require(cfg.angle_spec.clone(), "angle_spec")?;
    let steps = cfg.depth_steps.unwrap_or(10);
    let radii = cfg.r.clone().unwrap_or(vec![RadiusSpec::Absolute(1.0)]);
    let tubes = tube_family(&dims, &ells, &spec, cfg.seed);
    struct Cell {
        rows: Vec<OrbitRow>,
        length: Option<(usize, f64)>,
    }
    let cells = par_cells(&tubes, |_, t| {
        let tube = build_tube(t, cfg.mu)?;
        let Some(boundary) = tube.thin_boundary() else {
            return Ok(vec![Cell {
                rows: Vec::new(),
                length: None,
            }]);
        };
        let rmu = boundary.radius;
        let m = lemma_exponent(t.n) as f64;
        let mut rows = Vec::new();
        for j in 0..=steps {
            let x = point(rmu * (1.0 - j as f64 / steps as f64), &boundary.direction)?;
            let inj = injectivity_radius(&tube, &x)?;
            let depth = tube.depth(&x);
            let bound = (m * depth).exp();
            for rs in &radii {
                let r = rs.resolve(inj);
                let count = orbit_count_ambient(&tube, &x, r)?;
                rows.push(OrbitRow {
                    n: t.n,
                    ell: t.ell,
                    angles: join_angles(&tube.normal_form().angles),
                    big_r: point_to_cylinder(&x).r,
                    r,
                    count,
                    inj,
                    depth,
                    bound,
                    ratio: count as f64 / bound,
                    cap: cfg.ratio_cap,
                });
            }
        }
        let length = length_depth_bound_check(&tube).map(|(inv, b)| (t.n, inv / b));
        Ok(vec![Cell { rows, length }])
    })?;
    let skipped = cells.iter().filter(|c| c.length.is_none()).count();
    let mut length_ratio: BTreeMap<String, f64> = BTreeMap::new();
    for (n, v) in cells.iter().filter_map(|c| c.length) {
        let e = length_ratio.entry(n.to_string()).or_insert(0.0);
        *e = e.max(v);
    }
    let mut rows: Vec<OrbitRow> = cells.into_iter().flat_map(|c| c.rows).collect();
    sort_orbit_rows(&mut rows);
    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} tubes have an empty thin part (ell >= 2 mu) and were skipped"
        ));
    }
    let stats = json!({
        "tubes": tubes.len(),
        "skipped_tubes": skipped,
        "depth_steps": steps,
        "mu": cfg.mu,
        "per_n": per_dimension_stats(&rows, "exp_depth", "count"),
        "length_bound_max_ratio": length_ratio,
    });
    Ok(Report::from_rows(Experiment::Count, cfg.seed, &rows, stats, warnings)?)
}

/// Torus-model counts against `(r / inj)^{floor((n+1)/2)}`.
pub fn torus(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4]);
    let ells = require(cfg.ell_list.clone(), "ell_list")?;
    let spec = require(cfg.angle_spec.clone(), "angle_spec")?;
    let radii = cfg.r.clone().unwrap_or(vec![
        RadiusSpec::InjMultiple(1.0),
        RadiusSpec::InjMultiple(2.0),
        RadiusSpec::InjMultiple(10.0),
        RadiusSpec::Absolute(1.0),
    ]);
    let bases = cfg.base_radii.clone().unwrap_or(vec![1.0, 3.0, 10.0]);
    let tubes = tube_family(&dims, &ells, &spec, cfg.seed);
    let rows_and_skips = par_cells(&tubes, |_, t| {
        let tube = build_tube(t, cfg.mu)?;
        let mut rows = Vec::new();
        let mut skipped = 0usize;
        for &big_r in &bases {
            let x = point(big_r, &t.direction)?;
            let inj = injectivity_radius(&tube, &x)?;
            for rs in &radii {
                let r = rs.resolve(inj);
                if r < inj {
                    skipped += 1;
                    continue;
                }
                let rec = torus_count_bound_check(&tube, &x, r)?;
                rows.push(OrbitRow {
                    n: rec.n,
                    ell: rec.ell,
                    angles: join_angles(&rec.angles),
                    big_r: rec.base_radius,
                    r: rec.search_radius,
                    count: rec.count,
                    inj: rec.inj,
                    depth: rec.depth,
                    bound: rec.bound_value,
                    ratio: rec.observed_ratio,
                    cap: cfg.ratio_cap,
                });
            }
        }
        Ok(vec![(rows, skipped)])
    })?;
    let skipped: usize = rows_and_skips.iter().map(|(_, s)| s).sum();
    let mut rows: Vec<OrbitRow> = rows_and_skips.into_iter().flat_map(|(r, _)| r).collect();
    sort_orbit_rows(&mut rows);
    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!(
            "{skipped} (basepoint, radius) pairs had r below the injectivity radius and were skipped"
        ));
    }
    let stats = json!({
        "tubes": tubes.len(),
        "skipped_pairs": skipped,
        "per_n": per_dimension_stats(&rows, "r_over_inj", "count"),
    });
    Ok(Report::from_rows(Experiment::Torus, cfg.seed, &rows, stats, warnings)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferRow {
    pub n: usize,
    pub ell: f64,
    pub angles: String,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub max_preimages: usize,
    pub max_omega: usize,
    pub samples: usize,
}

impl Columns for TransferRow {
    fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "n" => self.n as f64,
            "ell" => self.ell,
            "R" => self.big_r,
            "lhs" => self.lhs,
            "rhs" => self.rhs,
            "ratio" => self.ratio,
            "max_preimages" => self.max_preimages as f64,
            "max_omega" => self.max_omega as f64,
            _ => return None,
        })
    }
}

impl ReportRow for TransferRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "ell",
        "angles",
        "R",
        "lhs",
        "rhs",
        "ratio",
        "max_preimages",
        "max_omega",
        "samples",
    ];

    fn violates(&self) -> bool {
        !(self.lhs <= self.rhs * (1.0 + 1e-12))
    }
}

/// Invariant positive test function: a radial decay with an axial ripple of
/// period `ell`.
pub fn transfer_test_function(ell: f64) -> impl Fn(&HPoint) -> f64 {
    move |z: &HPoint| {
        let c = point_to_cylinder(z);
        (2.0 + (std::f64::consts::TAU * c.t / ell).sin()) * (-c.r).exp()
    }
}

/// Lifted-ball integrals against the preimage-weighted quotient integral at
/// basepoints from the axis out to the thin boundary.
pub fn transfer(cfg: &ExperimentConfig) -> RunResult<Report> {
    let dims = cfg.dims(&[4]);
    let ells = require(cfg.ell_list.clone(), "ell_list")?;
    let spec = require(cfg.angle_spec.clone(), "angle_spec")?;
    let seed = cfg.seed_or_fail(Experiment::Transfer)?;
    let samples = cfg.samples.unwrap_or(2000);
    let steps = cfg.depth_steps.unwrap_or(2);
    let tubes = tube_family(&dims, &ells, &spec, Some(seed));
    let mut rows = par_cells(&tubes, |i, t| {
        let tube = build_tube(t, cfg.mu)?;
        let radii: Vec<f64> = match &cfg.base_radii {
            Some(b) => b.clone(),
            None => {
                let rmu = tube.boundary_radius();
                (0..=steps).map(|j| rmu * j as f64 / steps as f64).collect()
            }
        };
        let mut rows = Vec::new();
        for (j, &big_r) in radii.iter().enumerate() {
            let x = point(big_r, &t.direction)?;
            let c = transfer_check(
                &tube,
                &x,
                transfer_test_function(t.ell),
                samples,
                cell_seed(seed, i * 1000 + j),
            )?;
            rows.push(TransferRow {
                n: t.n,
                ell: t.ell,
                angles: join_angles(&tube.normal_form().angles),
                big_r,
                lhs: c.lhs,
                rhs: c.rhs,
                ratio: c.rhs / c.lhs,
                max_preimages: c.max_preimages,
                max_omega: c.max_omega,
                samples,
            });
        }
        Ok(rows)
    })?;
    rows.sort_by(|a, b| {
        (a.n.cmp(&b.n))
            .then(a.ell.total_cmp(&b.ell))
            .then(a.big_r.total_cmp(&b.big_r))
            .then(a.angles.cmp(&b.angles))
    });
    let single: Vec<&TransferRow> = rows
        .iter()
        .filter(|r| r.max_preimages == 1 && r.max_omega == 1)
        .collect();
    let max_single_gap = single
        .iter()
        .map(|r| (r.lhs - r.rhs).abs() / r.lhs)
        .fold(0.0f64, f64::max);
    let stats = json!({
        "samples": samples,
        "single_sheet_rows": single.len(),
        "single_sheet_max_relative_gap": max_single_gap,
        "min_ratio": rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min),
        "max_ratio": rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max),
    });
    Ok(Report::from_rows(
        Experiment::Transfer,
        Some(seed),
        &rows,
        stats,
        Vec::new(),
    )?)
}
