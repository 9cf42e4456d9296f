use serde::Serialize;

use super::field::{OneForm, WarpedField, WarpedMetric};
use super::geometry::{bianchi, lie_derivative, sharp, warped_ricci};
use crate::error::Result;

/// `Phi(g) = Ric(g) + (n-1) g + (1/2) L_X g` with `X = beta_{m_bar}(g)` raised by `g`.
pub fn einstein_operator(m_bar: &WarpedMetric, g: &WarpedMetric) -> Result<WarpedField> {
    Ok(einstein_operator_with_gauge(m_bar, g)?.0)
}

/// Einstein operator together with the gauge 1-form `beta_{m_bar}(g)`.
pub fn einstein_operator_with_gauge(m_bar: &WarpedMetric, g: &WarpedMetric) -> Result<(WarpedField, OneForm)> {
    let (ric, beta) = (warped_ricci(g)?, bianchi(m_bar, g.comps())?);
    Ok((assemble(g, &ric, &beta)?, beta))
}

fn assemble(g: &WarpedMetric, ric: &WarpedField, beta: &OneForm) -> Result<WarpedField> {
    let (xr, xt) = sharp(g, beta)?;
    let lie = lie_derivative(g, &xr, &xt);
    Ok(ric.axpy((g.n() - 1) as f64, g.comps()).axpy(0.5, &lie))
}

#[derive(Debug, Clone, Serialize)]
pub struct EinsteinReport {
    pub phi_residual: f64,
    pub ricci_residual: f64,
    pub bianchi_residual: f64,
    /// Largest eigenvalue of Ric relative to g over the grid.
    pub max_ricci_eigenvalue: f64,
    /// Ric <= lambda g < 0 holds on the grid.
    pub negative: bool,
    pub warning: Option<String>,
}

impl EinsteinReport {
    /// Both parts of the system below `factor` times the tolerance.
    pub fn consistent(&self, tol: f64, factor: f64) -> bool {
        self.ricci_residual <= factor * tol && self.bianchi_residual <= factor * tol
    }
}

/// Largest root of det(A - lambda B) = 0 for symmetric 2x2 A and positive B,
/// via the Cholesky factor of B so that a double root is not lost to a square root.
fn generalized_max_eig(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    let l11 = b[0][0].sqrt();
    let l21 = b[0][1] / l11;
    let l22 = (b[1][1] - l21 * l21).sqrt();
    let m0 = [a[0][0] / l11, a[0][1] / l11];
    let m1 = [(a[1][0] - l21 * m0[0]) / l22, (a[1][1] - l21 * m0[1]) / l22];
    let c00 = m0[0] / l11;
    let c10 = m1[0] / l11;
    let c11 = (m1[1] - l21 * c10) / l22;
    0.5 * (c00 + c11) + (0.5 * (c00 - c11)).hypot(c10)
}

/// Splits the Einstein operator residual into its Ricci and gauge parts and
/// tests the negativity hypothesis pointwise.
pub fn detect_einstein(g: &WarpedMetric, m_bar: &WarpedMetric) -> Result<EinsteinReport> {
    let ric = warped_ricci(g)?;
    let beta = bianchi(m_bar, g.comps())?;
    let phi = assemble(g, &ric, &beta)?;
    let ein = ric.axpy((g.n() - 1) as f64, g.comps());
    let grid = g.grid();
    let gc = g.comps();
    let mut lam = f64::NEG_INFINITY;
    for i in 0..grid.nr {
        let ch2 = grid.r(i).cosh().powi(2);
        for j in 0..grid.nt {
            let ix = [i, j];
            let a = [[ric.p[ix], ric.c[ix]], [ric.c[ix], ric.w[ix] * ch2]];
            let b = [[gc.p[ix], gc.c[ix]], [gc.c[ix], gc.w[ix] * ch2]];
            lam = lam.max(generalized_max_eig(a, b));
            if g.n() > 2 {
                lam = lam.max(ric.q[ix] / gc.q[ix]);
            }
        }
    }
    let negative = lam < 0.0;
    Ok(EinsteinReport {
        phi_residual: phi.max_abs(),
        ricci_residual: ein.max_abs(),
        bianchi_residual: beta.max_abs_frame(),
        max_ricci_eigenvalue: lam,
        negative,
        warning: (!negative).then(|| format!("Ric is not negative definite (largest eigenvalue {lam:.3e})")),
    })
}
