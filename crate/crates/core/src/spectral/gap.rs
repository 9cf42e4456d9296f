//! Integral inequalities and identities on the hyperbolic tube, evaluated by
//! quadrature with pointwise finite-difference derivatives.

use ndarray::{Array2, Zip};
use serde::Serialize;

use super::{tube_gap, QuadratureGrid};
use crate::error::{Error, Result};
use crate::warped::diff::{d_r, Jet};
use crate::warped::operators::reduced_twice_linearized;
use crate::warped::{ScalarField, WarpedField};

/// `|grad u|^2 = u_r^2 + cosh(r)^{-2} u_t^2`.
pub fn scalar_gradient_sq(u: &ScalarField) -> Array2<f64> {
    let g = u.grid;
    let j = Jet::first(&u.u, &g);
    Array2::from_shape_fn(g.shape(), |(i, k)| {
        let s = 1.0 / g.r(i).cosh();
        j.r[[i, k]].powi(2) + (s * j.t[[i, k]]).powi(2)
    })
}

/// Frame components of the covariant derivative of an invariant field at a node.
struct FrameGradient {
    // radial derivatives of p, q, w, c~
    r: [f64; 4],
    // along e_t: (rr, rt, tt) entries and the fiber diagonal
    a: f64,
    b: f64,
    c: f64,
    qt: f64,
    // along the sphere: coth r (p - q) and coth r c~
    kpq: f64,
    kc: f64,
}

fn frame_gradients(h: &WarpedField) -> Vec<FrameGradient> {
    let g = h.grid;
    let ct = h.c_frame();
    let (jp, jq, jw, jc) = (
        Jet::first(&h.p, &g),
        Jet::first(&h.q, &g),
        Jet::first(&h.w, &g),
        Jet::first(&ct, &g),
    );
    let mut out = Vec::with_capacity(g.nr * g.nt);
    for i in 0..g.nr {
        let r = g.r(i);
        let (tn, k, s) = (r.tanh(), 1.0 / r.tanh(), 1.0 / r.cosh());
        for j in 0..g.nt {
            let ix = [i, j];
            let (p, q, w, c) = (h.p[ix], h.q[ix], h.w[ix], ct[ix]);
            out.push(FrameGradient {
                r: [jp.r[ix], jq.r[ix], jw.r[ix], jc.r[ix]],
                a: s * jp.t[ix] - 2.0 * tn * c,
                b: s * jc.t[ix] + tn * (p - w),
                c: s * jw.t[ix] + 2.0 * tn * c,
                qt: s * jq.t[ix],
                kpq: k * (p - q),
                kc: k * c,
            });
        }
    }
    out
}

/// Pointwise `|nabla h|^2` on the hyperbolic background.
pub fn gradient_sq(h: &WarpedField) -> Array2<f64> {
    let g = h.grid;
    let d = h.fiber_dim() as f64;
    let fg = frame_gradients(h);
    Array2::from_shape_fn(g.shape(), |(i, j)| {
        let e = &fg[i * g.nt + j];
        let radial = e.r[0].powi(2) + d * e.r[1].powi(2) + e.r[2].powi(2) + 2.0 * e.r[3].powi(2);
        let axial = e.a * e.a + 2.0 * e.b * e.b + e.c * e.c + d * e.qt * e.qt;
        radial + axial + 2.0 * d * (e.kpq * e.kpq + e.kc * e.kc)
    })
}

/// `<nabla_{e_r} h, h>` and `<nabla_{e_t} h, h>` with `e_t = cosh(r)^{-1} d_t`.
fn directional_pairings(h: &WarpedField) -> (Array2<f64>, Array2<f64>) {
    let g = h.grid;
    let d = h.fiber_dim() as f64;
    let ct = h.c_frame();
    let fg = frame_gradients(h);
    let (mut pr, mut pt) = (g.zeros(), g.zeros());
    for i in 0..g.nr {
        for j in 0..g.nt {
            let e = &fg[i * g.nt + j];
            let ix = [i, j];
            let (p, q, w, c) = (h.p[ix], h.q[ix], h.w[ix], ct[ix]);
            pr[ix] = p * e.r[0] + d * q * e.r[1] + w * e.r[2] + 2.0 * c * e.r[3];
            pt[ix] = p * e.a + d * q * e.qt + w * e.c + 2.0 * c * e.b;
        }
    }
    (pr, pt)
}

fn scalar_is_zero(u: &Array2<f64>) -> bool {
    u.iter().all(|v| *v == 0.0)
}

/// `int |grad u|^2 / int u^2` for a compactly supported function on the tube.
pub fn scalar_rayleigh(u: &ScalarField, n: usize) -> Result<f64> {
    if !u.vanishes_near_boundary() {
        return Err(Error::SupportTouchesBoundary);
    }
    if scalar_is_zero(&u.u) {
        return Err(Error::InvalidParameter("test function vanishes identically".into()));
    }
    let quad = QuadratureGrid::new(u.grid, n)?;
    Ok(quad.integrate(&scalar_gradient_sq(u)) / quad.integrate(&u.u.mapv(|v| v * v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    /// `((n-1)^2/4 - 2) int |h|^2`
    pub lhs: f64,
    /// `int |nabla h|^2 - 2 int |h|^2 + 2 int (tr h)^2`
    pub rhs: f64,
    /// `rhs / int |h|^2`, the Rayleigh quotient of `2L`.
    pub quotient: f64,
}

impl GapCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + tol)
    }
}

fn require_nonzero_compact(h: &WarpedField) -> Result<()> {
    h.check_compact_support()?;
    if h.comps().iter().all(|a| scalar_is_zero(a)) {
        return Err(Error::InvalidParameter("field vanishes identically".into()));
    }
    Ok(())
}

pub fn tensor_gap_check(h: &WarpedField) -> Result<GapCheck> {
    require_nonzero_compact(h)?;
    let quad = QuadratureGrid::new(h.grid, h.n)?;
    let mass = quad.integrate(&h.norm_sq());
    let tr = h.trace();
    let rhs = quad.integrate(&gradient_sq(h)) - 2.0 * mass + 2.0 * quad.integrate(&(&tr * &tr));
    Ok(GapCheck {
        lhs: tube_gap(h.n) * mass,
        rhs,
        quotient: rhs / mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatoCheck {
    /// `int |grad |h||^2` over the nodes kept.
    pub lhs: f64,
    /// `int |nabla h|^2` over the same nodes.
    pub rhs: f64,
    /// Nodes with nonzero gradient skipped because `|h|` nearly vanishes in
    /// their stencil.
    pub skipped: usize,
    pub nodes: usize,
}

impl KatoCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + tol)
    }
}

/// Kato inequality `|grad |h|| <= |nabla h|` in integrated form. `|h|` is not
/// differentiable where it vanishes, so nodes whose stencil sees
/// `|h| < 1e-8 max |h|` are left out of both integrals.
pub fn kato_check(h: &WarpedField) -> Result<KatoCheck> {
    require_nonzero_compact(h)?;
    let g = h.grid;
    let quad = QuadratureGrid::new(g, h.n)?;
    let abs = h.norm_sq().mapv(f64::sqrt);
    let floor = 1e-8 * abs.iter().fold(0.0f64, |m, v| m.max(*v));
    let grad_abs = scalar_gradient_sq(&ScalarField {
        grid: g,
        u: abs.clone(),
    });
    let grad_h = gradient_sq(h);
    let reach = g.order.accuracy().unwrap_or(2) as isize / 2 + 1;
    let (nr, nt) = (g.nr as isize, g.nt as isize);
    let mut keep = Array2::<f64>::zeros(g.shape());
    let mut skipped = 0;
    for i in 0..nr {
        for j in 0..nt {
            let near_zero = (-reach..=reach).any(|di| {
                (-reach..=reach).any(|dj| {
                    let ii = (i + di).clamp(0, nr - 1) as usize;
                    let jj = (j + dj).rem_euclid(nt) as usize;
                    abs[[ii, jj]] < floor
                })
            });
            let ix = [i as usize, j as usize];
            if !near_zero {
                keep[ix] = 1.0;
            } else if grad_h[ix] > 0.0 {
                skipped += 1;
            }
        }
    }
    Ok(KatoCheck {
        lhs: quad.integrate(&(&keep * &grad_abs)),
        rhs: quad.integrate(&(&keep * &grad_h)),
        skipped,
        nodes: g.nr * g.nt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// `2 int <L(phi h), phi h>`
    pub lhs: f64,
    /// `2 int phi^2 <L h, h> + int |grad phi|^2 |h|^2`
    pub rhs: f64,
    /// `|lhs - rhs| / |lhs|`
    pub residual: f64,
    /// Largest pointwise gap between the divergence of `V = phi |h|^2 grad phi`
    /// and its expansion, relative to the largest term of the expansion.
    pub divergence_residual: f64,
    /// `int div V` relative to `int |grad phi|^2 |h|^2`.
    pub divergence_integral: f64,
}

pub fn weighted_identity_check(h: &WarpedField, phi: &ScalarField) -> Result<IdentityCheck> {
    h.check_compact_support()?;
    let g = h.grid;
    if phi.grid != g {
        return Err(Error::InvalidParameter(
            "weight and field live on different grids".into(),
        ));
    }
    let quad = QuadratureGrid::new(g, h.n)?;
    let mut ph = h.clone();
    for a in ph.comps_mut() {
        *a *= &phi.u;
    }
    let lhs = quad.integrate(&reduced_twice_linearized(&ph).dot(&ph));
    let h2 = h.norm_sq();
    let grad_phi = scalar_gradient_sq(phi);
    let phi2 = phi.u.mapv(|v| v * v);
    let correction = quad.integrate(&(&grad_phi * &h2));
    let rhs = quad.integrate(&(&phi2 * &reduced_twice_linearized(h).dot(h))) + correction;
    let residual = if lhs != 0.0 {
        (lhs - rhs).abs() / lhs.abs()
    } else {
        (lhs - rhs).abs()
    };

    // div V = w^{-1} d_r(w V^r) + d_t V^t against its expansion
    let d = h.fiber_dim() as f64;
    let jphi = Jet::new(&phi.u, &g);
    let (pair_r, pair_t) = directional_pairings(h);
    let dens = Array2::from_shape_fn(g.shape(), |(i, _)| super::volume_density(h.n, g.r(i)));
    let flux_r = Zip::from(&phi.u)
        .and(&h2)
        .and(&jphi.r)
        .and(&dens)
        .map_collect(|f, m, fr, w| w * f * m * fr);
    let flux_t = Array2::from_shape_fn(g.shape(), |(i, j)| {
        phi.u[[i, j]] * h2[[i, j]] * jphi.t[[i, j]] / g.r(i).cosh().powi(2)
    });
    let div_fd = &d_r(&flux_r, &g, 1) / &dens + &crate::warped::diff::d_t(&flux_t, &g, 1);
    let mut div_formula = g.zeros();
    let mut scale = 0.0f64;
    for i in 0..g.nr {
        let r = g.r(i);
        let (tn, k, s) = (r.tanh(), 1.0 / r.tanh(), 1.0 / r.cosh());
        for j in 0..g.nt {
            let ix = [i, j];
            let f = phi.u[ix];
            let rough = -(jphi.rr[ix] + (d * k + tn) * jphi.r[ix] + s * s * jphi.tt[ix]);
            let terms = [
                grad_phi[ix] * h2[ix],
                2.0 * f * (jphi.r[ix] * pair_r[ix] + s * jphi.t[ix] * pair_t[ix]),
                -f * rough * h2[ix],
            ];
            scale = terms.iter().fold(scale, |m, v| m.max(v.abs()));
            div_formula[ix] = terms.iter().sum();
        }
    }
    let divergence_residual =
        (&div_fd - &div_formula).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale.max(f64::MIN_POSITIVE);
    let divergence_integral = quad.integrate(&div_fd).abs() / correction.abs().max(f64::MIN_POSITIVE);
    Ok(IdentityCheck {
        lhs,
        rhs,
        residual,
        divergence_residual,
        divergence_integral,
    })
}
