//! Linear operators on the hyperbolic background, written in the orthonormal
//! frame (e_r, cosh(r)^{-1} d_t, sinh(r)^{-1} e_S).

use nalgebra::DMatrix;

use super::diff::Jet;
use super::field::{OneForm, WarpedField, WarpedMetric};
use crate::error::{Error, Result};

fn require_hyperbolic(m: &WarpedMetric) -> Result<()> {
    let h = m.comps();
    let off = |a: &ndarray::Array2<f64>, v: f64| a.iter().any(|x| (x - v).abs() > 1e-14);
    if off(&h.p, 1.0) || off(&h.q, 1.0) || off(&h.w, 1.0) || off(&h.c, 0.0) {
        return Err(Error::InvalidParameter(
            "operator needs the hyperbolic background".into(),
        ));
    }
    Ok(())
}

/// Connection Laplacian on the hyperbolic background without the support
/// check. Near the radial ends one-sided stencils are used.
pub fn connection_laplacian(h: &WarpedField) -> WarpedField {
    let g = h.grid;
    let d = h.fiber_dim() as f64;
    let ct = h.c_frame();
    let (jp, jq, jw, jc) = (
        Jet::new(&h.p, &g),
        Jet::new(&h.q, &g),
        Jet::new(&h.w, &g),
        Jet::new(&ct, &g),
    );
    let z = g.zeros();
    let (mut lp, mut lq, mut lw, mut lc) = (z.clone(), z.clone(), z.clone(), z);
    for i in 0..g.nr {
        let r = g.r(i);
        let (tn, k, sech) = (r.tanh(), 1.0 / r.tanh(), 1.0 / r.cosh());
        let drift = d * k + tn;
        for j in 0..g.nt {
            let ix = [i, j];
            let rad = |jf: &Jet| jf.rr[ix] + drift * jf.r[ix];
            let (p, q, w, c) = (jp.f[ix], jq.f[ix], jw.f[ix], jc.f[ix]);
            let at = sech * jp.t[ix] - 2.0 * tn * c;
            let bt = sech * jc.t[ix] + tn * (p - w);
            let ctt = sech * jw.t[ix] + 2.0 * tn * c;
            let dat = sech * jp.tt[ix] - 2.0 * tn * jc.t[ix];
            let dbt = sech * jc.tt[ix] + tn * (jp.t[ix] - jw.t[ix]);
            let dct = sech * jw.tt[ix] + 2.0 * tn * jc.t[ix];
            let k2 = k * k;
            lp[ix] = -rad(&jp) - sech * dat + 2.0 * tn * bt + 2.0 * d * k2 * (p - q);
            lc[ix] = -rad(&jc) - tn * at - sech * dbt + tn * ctt + d * k2 * c;
            lw[ix] = -rad(&jw) - 2.0 * tn * bt - sech * dct;
            lq[ix] = -rad(&jq) - sech * sech * jq.tt[ix] - 2.0 * k2 * (p - q);
        }
    }
    WarpedField::from_frame(h.n, g, lp, lq, lw, lc)
}

/// Connection Laplacian of a compactly supported field on the hyperbolic background.
pub fn covariant_laplacian(h: &WarpedField, m: &WarpedMetric) -> Result<WarpedField> {
    require_hyperbolic(m)?;
    h.check_compact_support()?;
    Ok(connection_laplacian(h))
}

/// `Ric(h)(x,y) = h(Ric x, y) + h(x, Ric y) - 2 tr h(., R(., x) y)` for
/// sectional curvature -1, by explicit index contraction in an orthonormal basis.
pub fn weitzenboeck_pointwise(h: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    assert_eq!(h.nrows(), n);
    // R(e_i, e_x) e_y = -(delta_xy e_i - delta_iy e_x)
    let riem = |m: usize, i: usize, x: usize, y: usize| -> f64 {
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        -(dl(x, y) * dl(i, m) - dl(i, y) * dl(x, m))
    };
    let ric = -((n - 1) as f64);
    DMatrix::from_fn(n, n, |x, y| {
        let mut s = 0.0;
        for i in 0..n {
            for m in 0..n {
                s += h[(i, m)] * riem(m, i, x, y);
            }
        }
        2.0 * ric * h[(x, y)] - 2.0 * s
    })
}

/// Constant-curvature form `-2 (n h - tr(h) g)`.
pub fn weitzenboeck_constant_curvature(h: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let tr = h.trace();
    h * (-2.0 * n as f64) + DMatrix::identity(n, n) * (2.0 * tr)
}

/// Field as an n x n matrix in the orthonormal frame at node (i, j).
pub fn frame_matrix(h: &WarpedField, i: usize, j: usize) -> DMatrix<f64> {
    let n = h.n;
    let mut m = DMatrix::zeros(n, n);
    let ct = h.c[[i, j]] / h.grid.r(i).cosh();
    m[(0, 0)] = h.p[[i, j]];
    m[(1, 1)] = h.w[[i, j]];
    m[(0, 1)] = ct;
    m[(1, 0)] = ct;
    for k in 2..n {
        m[(k, k)] = h.q[[i, j]];
    }
    m
}

/// Weitzenboeck operator applied nodewise by index contraction.
pub fn weitzenboeck(h: &WarpedField) -> WarpedField {
    let g = h.grid;
    let mut out = WarpedField::zeros(h.n, g);
    for i in 0..g.nr {
        let ch = g.r(i).cosh();
        for j in 0..g.nt {
            let m = weitzenboeck_pointwise(&frame_matrix(h, i, j), h.n);
            out.p[[i, j]] = m[(0, 0)];
            out.w[[i, j]] = m[(1, 1)];
            out.c[[i, j]] = m[(0, 1)] * ch;
            out.q[[i, j]] = if h.n > 2 { m[(2, 2)] } else { 0.0 };
        }
    }
    out
}

/// Lichnerowicz Laplacian `nabla^* nabla h + Ric(h)` on the hyperbolic background.
pub fn lichnerowicz(h: &WarpedField, m: &WarpedMetric) -> Result<WarpedField> {
    require_hyperbolic(m)?;
    Ok(lichnerowicz_unchecked(h))
}

fn lichnerowicz_unchecked(h: &WarpedField) -> WarpedField {
    connection_laplacian(h).axpy(1.0, &weitzenboeck(h))
}

/// `(1/2) Delta_L h + (n - 1) h`, the linearization of the Einstein operator
/// at the hyperbolic metric.
pub fn linearized_einstein(h: &WarpedField, m: &WarpedMetric) -> Result<WarpedField> {
    require_hyperbolic(m)?;
    Ok(lichnerowicz_unchecked(h).scaled(0.5).axpy((h.n - 1) as f64, h))
}

/// `nabla^* nabla h - 2 h + 2 tr(h) g`, which equals twice the linearized
/// Einstein operator in constant curvature.
pub fn reduced_twice_linearized(h: &WarpedField) -> WarpedField {
    let tr = h.trace();
    let g_tr = WarpedField::conformal(h.n, h.grid, &(tr * 2.0));
    connection_laplacian(h).axpy(-2.0, h).axpy(1.0, &g_tr)
}

/// Bianchi operator of the hyperbolic metric in frame form; returns
/// coordinate components.
pub fn bianchi_hyperbolic(h: &WarpedField) -> OneForm {
    let g = h.grid;
    let d = h.fiber_dim() as f64;
    let ct = h.c_frame();
    let tr = h.trace();
    let (jp, jq, jw, jc, jt) = (
        Jet::first(&h.p, &g),
        Jet::first(&h.q, &g),
        Jet::first(&h.w, &g),
        Jet::first(&ct, &g),
        Jet::first(&tr, &g),
    );
    let (mut br, mut bt) = (g.zeros(), g.zeros());
    for i in 0..g.nr {
        let r = g.r(i);
        let (tn, k, ch) = (r.tanh(), 1.0 / r.tanh(), r.cosh());
        for j in 0..g.nt {
            let ix = [i, j];
            let (p, q, w, c) = (jp.f[ix], jq.f[ix], jw.f[ix], jc.f[ix]);
            let b_t = jc.t[ix] / ch + tn * (p - w);
            let c_t = jw.t[ix] / ch + 2.0 * tn * c;
            br[ix] = -jp.r[ix] - b_t - d * k * (p - q) + 0.5 * jt.r[ix];
            bt[ix] = ch * (-jc.r[ix] - c_t - d * k * c + 0.5 * jt.t[ix] / ch);
        }
    }
    OneForm { grid: g, r: br, t: bt }
}
