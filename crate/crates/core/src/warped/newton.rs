//! Damped Newton iteration for the Einstein operator on a tube segment with
//! Dirichlet data on both radial ends.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::einstein::{detect_einstein, einstein_operator_with_gauge, EinsteinReport};
use super::field::{OneForm, WarpedField, WarpedMetric};
use super::grid::TubeGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub cond_limit: f64,
    /// Step of the central-difference Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 30,
            max_backtracks: 20,
            cond_limit: 1e12,
            fd_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonStep {
    pub iter: usize,
    pub residual: f64,
    pub step_norm: f64,
    pub damping: f64,
    pub cond_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub metric: WarpedMetric,
    /// Entry 0 is the starting residual.
    pub history: Vec<NewtonStep>,
    pub report: EinsteinReport,
}

impl NewtonOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |s| s.residual)
    }

    /// `log r_{k+1} / log r_k` over consecutive residuals below one.
    pub fn log_residual_ratios(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .filter(|w| w[0].residual < 1.0 && w[1].residual > 0.0)
            .map(|w| w[1].residual.ln() / w[0].residual.ln())
            .collect()
    }
}

/// Unknowns are [p, q, w, c/cosh r] at interior nodes, [p, c/cosh r] on the
/// inner end row and [p] on the outer end row; the remaining end values are
/// prescribed. Fixing c at the outer end removes the twist t -> t + f(r),
/// which preserves the other boundary conditions.
struct Packing {
    grid: TubeGrid,
}

#[derive(PartialEq)]
enum Row {
    Inner,
    Interior,
    Outer,
}

impl Packing {
    fn len(&self) -> usize {
        (4 * (self.grid.nr - 2) + 3) * self.grid.nt
    }

    fn row(&self, i: usize) -> Row {
        match i {
            0 => Row::Inner,
            _ if i == self.grid.nr - 1 => Row::Outer,
            _ => Row::Interior,
        }
    }

    fn pack(&self, h: &WarpedField) -> DVector<f64> {
        let g = self.grid;
        let mut v = Vec::with_capacity(self.len());
        for i in 0..g.nr {
            let ch = g.r(i).cosh();
            for j in 0..g.nt {
                let ix = [i, j];
                match self.row(i) {
                    Row::Inner => v.extend([h.p[ix], h.c[ix] / ch]),
                    Row::Outer => v.push(h.p[ix]),
                    Row::Interior => v.extend([h.p[ix], h.q[ix], h.w[ix], h.c[ix] / ch]),
                }
            }
        }
        DVector::from_vec(v)
    }

    fn with_boundary(&self, v: &DVector<f64>, template: &WarpedField) -> WarpedField {
        let g = self.grid;
        let mut h = template.clone();
        let mut k = 0;
        for i in 0..g.nr {
            let ch = g.r(i).cosh();
            for j in 0..g.nt {
                let ix = [i, j];
                h.p[ix] = v[k];
                match self.row(i) {
                    Row::Inner => {
                        h.c[ix] = v[k + 1] * ch;
                        k += 2;
                    }
                    Row::Outer => k += 1,
                    Row::Interior => {
                        h.q[ix] = v[k + 1];
                        h.w[ix] = v[k + 2];
                        h.c[ix] = v[k + 3] * ch;
                        k += 4;
                    }
                }
            }
        }
        h
    }

    /// Einstein operator at interior nodes, gauge condition on the end rows.
    fn pack_residual(&self, phi: &WarpedField, beta: &OneForm) -> DVector<f64> {
        let g = self.grid;
        let mut v = Vec::with_capacity(self.len());
        for i in 0..g.nr {
            let ch = g.r(i).cosh();
            for j in 0..g.nt {
                let ix = [i, j];
                match self.row(i) {
                    Row::Inner => v.extend([beta.r[ix], beta.t[ix] / ch]),
                    Row::Outer => v.push(beta.r[ix]),
                    Row::Interior => v.extend([phi.p[ix], phi.q[ix], phi.w[ix], phi.c[ix] / ch]),
                }
            }
        }
        DVector::from_vec(v)
    }
}

fn residual(m_bar: &WarpedMetric, pk: &Packing, v: &DVector<f64>, template: &WarpedField) -> Result<DVector<f64>> {
    let g = WarpedMetric::new(pk.with_boundary(v, template))?;
    let (phi, beta) = einstein_operator_with_gauge(m_bar, &g)?;
    Ok(pk.pack_residual(&phi, &beta))
}

fn sup(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Hager's estimate of the 1-norm condition number from the LU factors.
fn condition_estimate(a: &DMatrix<f64>, lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Option<f64> {
    let n = a.nrows();
    let at_lu = a.transpose().lu();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x)?;
        let new_est = y.lp_norm(1);
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = at_lu.solve(&xi)?;
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
        if new_est <= est || zmax <= z.dot(&x) {
            est = est.max(new_est);
            break;
        }
        est = new_est;
        x = DVector::zeros(n);
        x[jmax] = 1.0;
    }
    let norm_a = (0..n).map(|j| a.column(j).lp_norm(1)).fold(0.0, f64::max);
    Some(norm_a * est)
}

fn jacobian(
    m_bar: &WarpedMetric,
    pk: &Packing,
    v: &DVector<f64>,
    template: &WarpedField,
    s: f64,
) -> Result<DMatrix<f64>> {
    let n = v.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut x = v.clone();
    for k in 0..n {
        let x0 = x[k];
        x[k] = x0 + s;
        let fp = residual(m_bar, pk, &x, template)?;
        x[k] = x0 - s;
        let fm = residual(m_bar, pk, &x, template)?;
        x[k] = x0;
        jac.set_column(k, &((fp - fm) / (2.0 * s)));
    }
    Ok(jac)
}

/// Solves `Phi_{m_bar}(g) = 0` at interior nodes. On the radial end rows the
/// tangential components q, w are taken from `dirichlet` and the normal
/// components are determined by the gauge condition `beta_{m_bar}(g) = 0`,
/// except that c on the outer row is also taken from `dirichlet`.
pub fn newton_solve(
    m_bar: &WarpedMetric,
    g_start: &WarpedMetric,
    dirichlet: &WarpedMetric,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let grid = g_start.grid();
    if m_bar.grid() != grid || dirichlet.grid() != grid || m_bar.n() != g_start.n() || dirichlet.n() != g_start.n() {
        return Err(Error::InvalidParameter(
            "background, start and boundary data must share grid and dimension".into(),
        ));
    }
    let mut template = g_start.comps().clone();
    let dc = dirichlet.comps();
    for i in [0, grid.nr - 1] {
        template.q.row_mut(i).assign(&dc.q.row(i));
        template.w.row_mut(i).assign(&dc.w.row(i));
    }
    template.c.row_mut(grid.nr - 1).assign(&dc.c.row(grid.nr - 1));
    let pk = Packing { grid };
    let mut x = pk.pack(&template);
    let mut f = residual(m_bar, &pk, &x, &template)?;
    let mut res = sup(&f);
    let mut history = vec![NewtonStep {
        iter: 0,
        residual: res,
        step_norm: 0.0,
        damping: 1.0,
        cond_estimate: f64::NAN,
    }];
    let mut iter = 0;
    while res > opts.tol {
        if iter == opts.max_iter {
            return Err(Error::NoConvergence {
                iters: iter,
                residual: res,
            });
        }
        iter += 1;
        let mut jac = jacobian(m_bar, &pk, &x, &template, opts.fd_step)?;
        // row equilibration: gauge rows and Einstein rows differ in scale
        let scale: Vec<f64> = jac
            .row_iter()
            .map(|row| 1.0 / row.amax().max(f64::MIN_POSITIVE))
            .collect();
        for (mut row, s) in jac.row_iter_mut().zip(&scale) {
            row *= *s;
        }
        let rhs = DVector::from_iterator(f.len(), f.iter().zip(&scale).map(|(v, s)| -v * s));
        let lu = jac.clone().lu();
        let cond = condition_estimate(&jac, &lu).unwrap_or(f64::INFINITY);
        if !(cond <= opts.cond_limit) {
            return Err(Error::IllConditioned(cond));
        }
        let delta = lu
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolve("singular Jacobian".into()))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial = &x + &delta * lambda;
            if let Ok(ft) = residual(m_bar, &pk, &trial, &template) {
                if sup(&ft) < res {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            return Err(Error::NoConvergence {
                iters: iter,
                residual: res,
            });
        };
        x = xn;
        f = fnew;
        res = sup(&f);
        history.push(NewtonStep {
            iter,
            residual: res,
            step_norm: sup(&delta) * lambda,
            damping: lambda,
            cond_estimate: cond,
        });
    }
    let metric = WarpedMetric::new(pk.with_boundary(&x, &template))?;
    let report = detect_einstein(&metric, m_bar)?;
    Ok(NewtonOutcome {
        metric,
        history,
        report,
    })
}

/// Analytic bump `sin^4` of the rescaled radius, vanishing to third order at
/// both radial ends, with a mild axial modulation when the grid resolves t.
pub fn standard_bump(n: usize, grid: TubeGrid) -> WarpedField {
    let len = grid.r1 - grid.r0;
    let period = grid.t_len;
    let axial = grid.nt > 1;
    WarpedField::from_fn(n, grid, |r, t| {
        let b = (std::f64::consts::PI * (r - grid.r0) / len).sin().powi(4);
        let m = if axial {
            1.0 + 0.5 * (std::f64::consts::TAU * t / period).sin()
        } else {
            1.0
        };
        [b * m, 0.5 * b, -0.5 * b * m, 0.3 * b * r.cosh()]
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationRecord {
    pub eps: f64,
    pub iters: usize,
    pub final_residual: f64,
    pub dist_to_hyperbolic: f64,
    pub dist_to_background: f64,
    pub ratio_dist_over_eps: f64,
    pub ricci_residual: f64,
    pub bianchi_residual: f64,
}

/// Newton run from the almost-Einstein metric `g_hyp + eps * bump`, used as
/// its own gauge background, with hyperbolic boundary data.
pub fn perturbation_run(
    n: usize,
    grid: TubeGrid,
    eps: f64,
    opts: &NewtonOptions,
) -> Result<(PerturbationRecord, NewtonOutcome)> {
    let hyp = WarpedMetric::hyperbolic(n, grid);
    let bump = standard_bump(n, grid);
    let m_bar = hyp.perturbed(eps, &bump)?;
    let out = newton_solve(&m_bar, &m_bar, &hyp, opts)?;
    let gs = out.metric.comps();
    let d_hyp = gs.axpy(-1.0, hyp.comps()).max_abs();
    let d_bg = gs.axpy(-1.0, m_bar.comps()).max_abs();
    let rec = PerturbationRecord {
        eps,
        iters: out.iterations(),
        final_residual: out.final_residual(),
        dist_to_hyperbolic: d_hyp,
        dist_to_background: d_bg,
        ratio_dist_over_eps: d_bg / eps,
        ricci_residual: out.report.ricci_residual,
        bianchi_residual: out.report.bianchi_residual,
    };
    Ok((rec, out))
}
