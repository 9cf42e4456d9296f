//! Cut-off functions, distance-weighted seminorms and the hybrid norm on a
//! tube, restricted to invariant fields.

use nalgebra::DVector;
use ndarray::Array2;
use serde::Serialize;

use super::gap::gradient_sq;
use super::QuadratureGrid;
use crate::error::{Error, Result};
use crate::hyperbolic::{cylinder_to_point, point_to_cylinder, CylinderCoords, HPoint};
use crate::sampling::{seeded, unit_vector};
use crate::torus::lemma_exponent;
use crate::tube::{thin_radius, TubeQuotient};
use crate::warped::operators::connection_laplacian;
use crate::warped::{ScalarField, TubeGrid, WarpedField};

/// Radial cut-off equal to 1 where the injectivity radius is at most mu/4 and
/// 0 beyond the radius where it reaches mu/2, with a quintic smoothstep between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub r_inner: f64,
    pub r_outer: f64,
    pub boundary_radius: f64,
}

fn smoothstep(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0; 3];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    [
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x),
        30.0 * x * x * (1.0 - x).powi(2),
        60.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
    ]
}

impl Cutoff {
    pub fn width(&self) -> f64 {
        self.r_outer - self.r_inner
    }

    /// `eta`, `eta'` and `eta''` at distance `r` from the axis.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let w = self.width();
        let [s, s1, s2] = smoothstep((r - self.r_inner) / w);
        [1.0 - s, -s1 / w, -s2 / (w * w)]
    }

    /// Exact suprema of `|eta|`, `|eta'|`, `|eta''|`.
    pub fn c2_bounds(&self) -> [f64; 3] {
        let w = self.width();
        [1.0, 15.0 / (8.0 * w), 10.0 / (3f64.sqrt() * w * w)]
    }

    /// Suprema of the cut-off and its finite-difference derivatives on a grid.
    pub fn sampled_bounds(&self, grid: &TubeGrid) -> [f64; 3] {
        let f = self.field(grid);
        let j = crate::warped::diff::Jet::new(&f.u, grid);
        let sup = |a: &Array2<f64>| a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        [sup(&j.f), sup(&j.r), sup(&j.rr)]
    }

    pub fn field(&self, grid: &TubeGrid) -> ScalarField {
        ScalarField::from_fn(*grid, |r, _| self.eval(r)[0])
    }
}

/// Cut-off for the thin part of `tube`, resolved on radial spacing `dr`.
pub fn cutoff_eta(tube: &TubeQuotient, dr: f64) -> Result<Cutoff> {
    let mu = tube.mu();
    let r_inner = thin_radius(tube, mu / 4.0)?;
    let r_outer = thin_radius(tube, mu / 2.0)?;
    let boundary_radius = thin_radius(tube, mu)?;
    if r_outer - r_inner < 4.0 * dr {
        return Err(Error::Grid(format!(
            "cut-off window [{r_inner:.4}, {r_outer:.4}] is narrower than four radial steps of {dr}"
        )));
    }
    Ok(Cutoff {
        r_inner,
        r_outer,
        boundary_radius,
    })
}

/// Walks the lifts `phi^k y` outward from the one axially closest to `x`,
/// reporting `(k, floor, d(phi^k y, x))` until `visit` returns false in both
/// directions. `floor` is the distance with the normal directions aligned,
/// `cosh floor = cosh(r_x - r_y) + cosh r_x cosh r_y (cosh dt - 1)`, a lower
/// bound for this lift that grows with the axial offset dt.
pub(crate) fn walk_lifts(
    tube: &TubeQuotient,
    x: &HPoint,
    y: &HPoint,
    mut visit: impl FnMut(i64, f64, f64) -> bool,
) -> Result<()> {
    let phi = tube.phi();
    let n = phi.dim();
    if x.dim() != n || y.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.dim().max(y.dim()),
        });
    }
    let ell = phi.ell();
    let (xc, yc) = (x.coords(), y.coords());
    let (cx, cy) = (point_to_cylinder(x), point_to_cylinder(y));
    let (tx, ty) = (cx.t, cy.t);
    let (chx, chy, ch_gap) = (cx.r.cosh(), cy.r.cosh(), (cx.r - cy.r).cosh());
    let floor = |k: i64| {
        let dt = ty + k as f64 * ell - tx;
        (ch_gap + chx * chy * 2.0 * (0.5 * dt).sinh().powi(2)).acosh()
    };
    let xperp = xc.rows(2, n - 1);
    let k0 = ((tx - ty) / ell).round() as i64;
    let start = phi.rot_power(k0) * yc.rows(2, n - 1);
    let cosh_d = |k: i64, perp: &DVector<f64>| {
        let s = k as f64 * ell;
        let (ch, sh) = (s.cosh(), s.sinh());
        let (y0, y1) = (ch * yc[0] + sh * yc[1], sh * yc[0] + ch * yc[1]);
        (xc[0] * y0 - xc[1] * y1 - xperp.dot(perp)).max(1.0).acosh()
    };
    if !visit(k0, floor(k0), cosh_d(k0, &start)) {
        return Ok(());
    }
    let rot = phi.rot();
    let rot_t = rot.transpose();
    for (step, m) in [(1i64, rot), (-1, &rot_t)] {
        let mut perp = start.clone();
        let mut next = start.clone();
        let mut k = k0;
        loop {
            k += step;
            m.mul_to(&perp, &mut next);
            std::mem::swap(&mut perp, &mut next);
            if !visit(k, floor(k), cosh_d(k, &perp)) {
                break;
            }
        }
    }
    Ok(())
}

/// Distance in the quotient, `min_k d(phi^k y, x)`.
pub fn quotient_distance(tube: &TubeQuotient, x: &HPoint, y: &HPoint) -> Result<f64> {
    let mut best = f64::INFINITY;
    walk_lifts(tube, x, y, |_, floor, d| {
        best = best.min(d);
        floor < best
    })?;
    Ok(best)
}

const SPHERE_SAMPLES: usize = 64;

/// Sphere average of `exp(-2 beta r_x)` at every grid node.
fn distance_weight(tube: &TubeQuotient, grid: &TubeGrid, x: &HPoint, beta: f64) -> Result<Array2<f64>> {
    let n = tube.phi().dim();
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.dim(),
        });
    }
    if (grid.t_len - tube.phi().ell()).abs() > 1e-12 * grid.t_len {
        return Err(Error::InvalidParameter(
            "grid period must equal the translation length".into(),
        ));
    }
    let on_axis = point_to_cylinder(x).on_axis;
    let dirs: Vec<DVector<f64>> = if on_axis {
        let mut e = DVector::zeros(n - 1);
        e[0] = 1.0;
        vec![e]
    } else {
        let mut rng = seeded(0);
        (0..SPHERE_SAMPLES).map(|_| unit_vector(n - 1, &mut rng)).collect()
    };
    let mut w = grid.zeros();
    for i in 0..grid.nr {
        for j in 0..grid.nt {
            let mut acc = 0.0;
            for th in &dirs {
                let y = cylinder_to_point(&CylinderCoords::new(grid.r(i), th.clone(), grid.t(j)))?;
                acc += (-2.0 * beta * quotient_distance(tube, x, &y)?).exp();
            }
            w[[i, j]] = acc / dirs.len() as f64;
        }
    }
    Ok(w)
}

fn check_kind(kind: u8) -> Result<()> {
    match kind {
        0 | 2 => Ok(()),
        _ => Err(Error::InvalidParameter(format!("norm order {kind}, expected 0 or 2"))),
    }
}

/// Pointwise `|h|^2`, plus `|nabla h|^2 + |nabla^* nabla h|^2` for order 2.
fn order_density(h: &WarpedField, kind: u8) -> Array2<f64> {
    let mut dens = h.norm_sq();
    if kind == 2 {
        dens += &gradient_sq(h);
        dens += &connection_laplacian(h).norm_sq();
    }
    dens
}

/// `(int exp(-2 beta r_x) (|h|^2 [+ |nabla h|^2 + |Delta h|^2]))^{1/2}` over the tube.
pub fn weighted_seminorm(h: &WarpedField, tube: &TubeQuotient, x: &HPoint, beta: f64, kind: u8) -> Result<f64> {
    check_kind(kind)?;
    if h.n != tube.phi().dim() {
        return Err(Error::DimensionMismatch {
            expected: tube.phi().dim(),
            got: h.n,
        });
    }
    let quad = QuadratureGrid::new(h.grid, h.n)?;
    let w = distance_weight(tube, &h.grid, x, beta)?;
    Ok(quad.integrate(&(&w * &order_density(h, kind))).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridNorm {
    pub sup: f64,
    pub global: f64,
    pub weighted: f64,
    pub value: f64,
}

/// Maximum of the sup piece, the global L^2 (or H^2) piece and
/// `sup_x exp(floor((n+1)/2) depth(x) / 2) ||eta h||_{x, beta}` over the
/// sampled thin-part basepoints.
pub fn hybrid_norm_desk(
    h: &WarpedField,
    kind: u8,
    tube: &TubeQuotient,
    basepoints: &[HPoint],
    beta: f64,
) -> Result<HybridNorm> {
    check_kind(kind)?;
    let quad = QuadratureGrid::new(h.grid, h.n)?;
    let sup_of = |a: &Array2<f64>| a.iter().fold(0.0f64, |m, v| m.max(v.sqrt()));
    let mut sup = sup_of(&h.norm_sq());
    if kind == 2 {
        sup = sup
            .max(sup_of(&gradient_sq(h)))
            .max(sup_of(&connection_laplacian(h).norm_sq()));
    }
    let global = quad.integrate(&order_density(h, kind)).sqrt();
    let mut weighted = 0.0f64;
    if tube.thin_boundary().is_some() {
        if basepoints.is_empty() {
            return Err(Error::InvalidParameter(
                "thin part is nonempty but no basepoints were given".into(),
            ));
        }
        let eta = cutoff_eta(tube, h.grid.dr())?.field(&h.grid);
        let mut cut = h.clone();
        for a in cut.comps_mut() {
            *a *= &eta.u;
        }
        let m = lemma_exponent(h.n) as f64;
        for x in basepoints {
            let pre = (0.5 * m * tube.depth(x)).exp();
            weighted = weighted.max(pre * weighted_seminorm(&cut, tube, x, beta, kind)?);
        }
    }
    Ok(HybridNorm {
        sup,
        global,
        weighted,
        value: sup.max(global).max(weighted),
    })
}
