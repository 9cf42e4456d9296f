//! Coordinate-level geometry of metrics in the invariant class: the
//! 2-dimensional base (r, t) with metric `gamma` and the fiber factor
//! `F = f^2` multiplying the round metric. Hyperbolic factors cosh^2 r and
//! sinh^2 r are differentiated exactly; finite differences only see the
//! normalized components, so the hyperbolic metric is reproduced exactly.

use ndarray::Array2;

use super::diff::Jet;
use super::field::{OneForm, WarpedField, WarpedMetric};
use super::grid::TubeGrid;
use crate::error::{Error, Result};

type M2 = [[f64; 2]; 2];

/// Coordinate components of a symmetric tensor at one node together with
/// their first partials: `base[i][j]`, `dbase[k][i][j]`, fiber factor `fib`, `dfib[k]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TensorJet {
    pub base: M2,
    pub dbase: [M2; 2],
    pub fib: f64,
    pub dfib: [f64; 2],
}

/// Base metric, inverse, Christoffel symbols, Gaussian curvature and fiber
/// warp data at one node.
#[derive(Debug, Clone, Copy, Default)]
pub struct NodeGeometry {
    pub t: TensorJet,
    pub inv: M2,
    /// `gam[k][i][j]` = Gamma^k_ij of the base.
    pub gam: [M2; 2],
    pub gauss: f64,
    pub warp: f64,
    pub dwarp: [f64; 2],
    pub ddwarp: M2,
}

pub(crate) struct HypFactors {
    pub ch2: f64,
    pub dch2: f64,
    pub ddch2: f64,
    pub sh: f64,
    pub ch: f64,
}

pub(crate) fn hyp_factors(r: f64) -> HypFactors {
    let (sh, ch) = (r.sinh(), r.cosh());
    HypFactors {
        ch2: ch * ch,
        dch2: 2.0 * sh * ch,
        ddch2: 2.0 * (ch * ch + sh * sh),
        sh,
        ch,
    }
}

/// Coordinate jets of a field in the invariant class at every node.
pub fn tensor_jets(h: &WarpedField) -> Vec<TensorJet> {
    let g = h.grid;
    let (jp, jc, jw, jq) = (
        Jet::first(&h.p, &g),
        Jet::first(&h.c, &g),
        Jet::first(&h.w, &g),
        Jet::first(&h.q, &g),
    );
    let mut out = Vec::with_capacity(g.nr * g.nt);
    for i in 0..g.nr {
        let hf = hyp_factors(g.r(i));
        let sh2 = hf.sh * hf.sh;
        for j in 0..g.nt {
            let ix = [i, j];
            let (p, c, w, q) = (jp.f[ix], jc.f[ix], jw.f[ix], jq.f[ix]);
            let base = [[p, c], [c, w * hf.ch2]];
            let dr = [[jp.r[ix], jc.r[ix]], [jc.r[ix], jw.r[ix] * hf.ch2 + w * hf.dch2]];
            let dt = [[jp.t[ix], jc.t[ix]], [jc.t[ix], jw.t[ix] * hf.ch2]];
            out.push(TensorJet {
                base,
                dbase: [dr, dt],
                fib: q * sh2,
                dfib: [jq.r[ix] * sh2 + q * 2.0 * hf.sh * hf.ch, jq.t[ix] * sh2],
            });
        }
    }
    out
}

fn inverse(m: &M2) -> Option<M2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0) {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn metric_geometry(m: &WarpedMetric) -> Result<Vec<NodeGeometry>> {
    let h = m.comps();
    let g = h.grid;
    let tj = tensor_jets(h);
    let (jp, jc, jw) = (Jet::new(&h.p, &g), Jet::new(&h.c, &g), Jet::new(&h.w, &g));
    let s = h.q.mapv(f64::sqrt);
    let js = Jet::new(&s, &g);
    let mut out = Vec::with_capacity(tj.len());
    for i in 0..g.nr {
        let hf = hyp_factors(g.r(i));
        for j in 0..g.nt {
            let ix = [i, j];
            let t = tj[i * g.nt + j];
            let inv = inverse(&t.base).ok_or(Error::DegenerateMetric { r: g.r(i), t: g.t(j) })?;
            let (e, f, gg) = (t.base[0][0], t.base[0][1], t.base[1][1]);
            let (e_u, e_v) = (t.dbase[0][0][0], t.dbase[1][0][0]);
            let (f_u, f_v) = (t.dbase[0][0][1], t.dbase[1][0][1]);
            let (g_u, g_v) = (t.dbase[0][1][1], t.dbase[1][1][1]);
            let e_vv = jp.tt[ix];
            let f_uv = jc.rt[ix];
            let w = jw.f[ix];
            let g_uu = jw.rr[ix] * hf.ch2 + 2.0 * jw.r[ix] * hf.dch2 + w * hf.ddch2;
            // first-kind symbols: first[l][i][j] = Gamma_{l,ij}
            let first = [
                [[0.5 * e_u, 0.5 * e_v], [0.5 * e_v, f_v - 0.5 * g_u]],
                [[f_u - 0.5 * e_v, 0.5 * g_u], [0.5 * g_u, 0.5 * g_v]],
            ];
            let mut gam = [[[0.0; 2]; 2]; 2];
            for k in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        gam[k][a][b] = inv[k][0] * first[0][a][b] + inv[k][1] * first[1][a][b];
                    }
                }
            }
            let d = e * gg - f * f;
            let m1 = [
                [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
                [f_v - 0.5 * g_u, e, f],
                [0.5 * g_v, f, gg],
            ];
            let m2 = [[0.0, 0.5 * e_v, 0.5 * g_u], [0.5 * e_v, e, f], [0.5 * g_u, f, gg]];
            let gauss = (det3(m1) - det3(m2)) / (d * d);
            let sv = js.f[ix];
            let warp = sv * hf.sh;
            let dwarp = [js.r[ix] * hf.sh + sv * hf.ch, js.t[ix] * hf.sh];
            let ddwarp = [
                [
                    js.rr[ix] * hf.sh + 2.0 * js.r[ix] * hf.ch + sv * hf.sh,
                    js.rt[ix] * hf.sh + js.t[ix] * hf.ch,
                ],
                [js.rt[ix] * hf.sh + js.t[ix] * hf.ch, js.tt[ix] * hf.sh],
            ];
            out.push(NodeGeometry {
                t,
                inv,
                gam,
                gauss,
                warp,
                dwarp,
                ddwarp,
            });
        }
    }
    Ok(out)
}

/// Normalized components of a tensor given by base coordinates and fiber factor.
fn to_class(g: &TubeGrid, i: usize, base: &M2, fib: f64) -> [f64; 4] {
    let hf = hyp_factors(g.r(i));
    [base[0][0], fib / (hf.sh * hf.sh), base[1][1] / hf.ch2, base[0][1]]
}

fn store(out: &mut WarpedField, i: usize, j: usize, v: [f64; 4]) {
    out.p[[i, j]] = v[0];
    out.q[[i, j]] = v[1];
    out.w[[i, j]] = v[2];
    out.c[[i, j]] = v[3];
}

/// Ricci tensor of a warped product of the base with a round S^d factor
/// scaled by f^2: horizontal part K gamma - (d/f) Hess f, fiber part
/// ((d-1) - f Lap f - (d-1)|grad f|^2) g_S.
pub fn warped_ricci(m: &WarpedMetric) -> Result<WarpedField> {
    let g = m.grid();
    let d = (m.n() - 2) as f64;
    let geo = metric_geometry(m)?;
    let mut out = WarpedField::zeros(m.n(), g);
    for i in 0..g.nr {
        for j in 0..g.nt {
            let ng = &geo[i * g.nt + j];
            let hess = hessian(ng);
            let mut lap = 0.0;
            let mut grad2 = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    lap += ng.inv[a][b] * hess[a][b];
                    grad2 += ng.inv[a][b] * ng.dwarp[a] * ng.dwarp[b];
                }
            }
            let mut base = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    base[a][b] = ng.gauss * ng.t.base[a][b] - d / ng.warp * hess[a][b];
                }
            }
            let fib = (d - 1.0) - ng.warp * lap - (d - 1.0) * grad2;
            store(&mut out, i, j, to_class(&g, i, &base, fib));
        }
    }
    Ok(out)
}

fn hessian(ng: &NodeGeometry) -> M2 {
    let mut h = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            h[a][b] = ng.ddwarp[a][b] - ng.gam[0][a][b] * ng.dwarp[0] - ng.gam[1][a][b] * ng.dwarp[1];
        }
    }
    h
}

/// Bianchi operator of the background `m_bar` applied to `h`:
/// beta(h) = delta h + (1/2) d tr h, with delta h_k = -g^{ij} nabla_i h_jk.
pub fn bianchi(m_bar: &WarpedMetric, h: &WarpedField) -> Result<OneForm> {
    let geo = metric_geometry(m_bar)?;
    Ok(bianchi_with(&geo, m_bar.n(), h))
}

pub(crate) fn bianchi_with(geo: &[NodeGeometry], n: usize, h: &WarpedField) -> OneForm {
    let g = h.grid;
    let d = (n - 2) as f64;
    let hj = tensor_jets(h);
    let mut tr = g.zeros();
    let mut div = [g.zeros(), g.zeros()];
    for i in 0..g.nr {
        for j in 0..g.nt {
            let k0 = i * g.nt + j;
            let (ng, hh) = (&geo[k0], &hj[k0]);
            let bg_fib = ng.t.fib;
            let mut trace = d * hh.fib / bg_fib;
            for a in 0..2 {
                for b in 0..2 {
                    trace += ng.inv[a][b] * hh.base[a][b];
                }
            }
            tr[[i, j]] = trace;
            for k in 0..2 {
                let mut base_div = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        let mut cov = hh.dbase[a][b][k];
                        for l in 0..2 {
                            cov -= ng.gam[l][a][b] * hh.base[l][k] + ng.gam[l][a][k] * hh.base[b][l];
                        }
                        base_div += ng.inv[a][b] * cov;
                    }
                }
                let mut fib_term = -ng.t.dfib[k] * hh.fib / bg_fib;
                for l in 0..2 {
                    for mm in 0..2 {
                        fib_term += ng.inv[l][mm] * ng.t.dfib[mm] * hh.base[l][k];
                    }
                }
                fib_term *= d / (2.0 * bg_fib);
                div[k][[i, j]] = -base_div - fib_term;
            }
        }
    }
    let jt = Jet::first(&tr, &g);
    let [dr, dt] = div;
    OneForm {
        grid: g,
        r: dr + &(jt.r * 0.5),
        t: dt + &(jt.t * 0.5),
    }
}

/// Lie derivative of `m` along the base vector field with coordinate
/// components `x = (x^r, x^t)`.
pub fn lie_derivative(m: &WarpedMetric, xr: &Array2<f64>, xt: &Array2<f64>) -> WarpedField {
    let g = m.grid();
    let tj = tensor_jets(m.comps());
    let (jr, jt) = (Jet::first(xr, &g), Jet::first(xt, &g));
    let mut out = WarpedField::zeros(m.n(), g);
    for i in 0..g.nr {
        for j in 0..g.nt {
            let ix = [i, j];
            let tjn = &tj[i * g.nt + j];
            let x = [xr[ix], xt[ix]];
            // dx[a][k] = d_a X^k
            let dx = [[jr.r[ix], jt.r[ix]], [jr.t[ix], jt.t[ix]]];
            let mut base = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let mut v = x[0] * tjn.dbase[0][a][b] + x[1] * tjn.dbase[1][a][b];
                    for k in 0..2 {
                        v += tjn.base[k][b] * dx[a][k] + tjn.base[a][k] * dx[b][k];
                    }
                    base[a][b] = v;
                }
            }
            let fib = x[0] * tjn.dfib[0] + x[1] * tjn.dfib[1];
            store(&mut out, i, j, to_class(&g, i, &base, fib));
        }
    }
    out
}

/// Raises a 1-form with the base metric of `m`.
pub fn sharp(m: &WarpedMetric, beta: &OneForm) -> Result<(Array2<f64>, Array2<f64>)> {
    let g = m.grid();
    let tj = tensor_jets(m.comps());
    let (mut xr, mut xt) = (g.zeros(), g.zeros());
    for i in 0..g.nr {
        for j in 0..g.nt {
            let ix = [i, j];
            let inv = inverse(&tj[i * g.nt + j].base).ok_or(Error::DegenerateMetric { r: g.r(i), t: g.t(j) })?;
            xr[ix] = inv[0][0] * beta.r[ix] + inv[0][1] * beta.t[ix];
            xt[ix] = inv[1][0] * beta.r[ix] + inv[1][1] * beta.t[ix];
        }
    }
    Ok((xr, xt))
}
