//! Tube quotients H^n / <phi>: injectivity radius, the boundary of the thin
//! part, depth inside the tube, and orbit counting in balls.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{
    cylinder_to_point, displacement_closed_form, dist, point_to_cylinder, CylinderCoords, HPoint, TubeIsometry,
};
use crate::torus::{lemma_exponent, so_normal_form, RotationNormalForm};

pub const DEFAULT_MU: f64 = 0.1;

/// Radius and normal direction where the thin part ends first.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinBoundary {
    pub radius: f64,
    pub direction: DVector<f64>,
}

/// A tube H^n / <phi> with thin-part threshold `mu`.
///
/// With several distinct rotation angles the injectivity radius at fixed
/// distance from the axis depends on the normal direction, so the set
/// {inj <= mu} is not a round cylinder. `boundary_radius` is its inner radius:
/// the largest R such that every point closer than R to the axis is thin.
#[derive(Debug, Clone)]
pub struct TubeQuotient {
    phi: TubeIsometry,
    mu: f64,
    nf: RotationNormalForm,
    thin: Option<ThinBoundary>,
}

impl TubeQuotient {
    pub fn new(phi: TubeIsometry, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {mu}")));
        }
        let nf = so_normal_form(phi.rot())?;
        let mut tube = Self {
            phi,
            mu,
            nf,
            thin: None,
        };
        if tube.phi.ell() / 2.0 < mu {
            tube.thin = Some(tube.solve_boundary());
        }
        Ok(tube)
    }

    pub fn phi(&self) -> &TubeIsometry {
        &self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn normal_form(&self) -> &RotationNormalForm {
        &self.nf
    }

    pub fn thin_boundary(&self) -> Option<&ThinBoundary> {
        self.thin.as_ref()
    }

    /// Boundary radius, zero when the thin part is empty.
    pub fn boundary_radius(&self) -> f64 {
        self.thin.as_ref().map_or(0.0, |b| b.radius)
    }

    /// Distance from `x` out to the thick part along its radial ray, bounded
    /// by the true distance to the thick part from below.
    pub fn depth(&self, x: &HPoint) -> f64 {
        (self.boundary_radius() - point_to_cylinder(x).r).max(0.0)
    }

    fn solve_boundary(&self) -> ThinBoundary {
        let game = DirectionGame::new(&self.nf, self.phi.ell());
        let radius = game.level_radius(self.mu, self.phi.ell());
        let (_, w) = game.value(radius);
        ThinBoundary {
            radius,
            direction: game.direction(&self.nf, &w),
        }
    }
}

/// Inner radius of {inj <= level}: the smallest distance from the axis at
/// which some normal direction reaches injectivity radius `level`.
pub fn thin_radius(tube: &TubeQuotient, level: f64) -> Result<f64> {
    let ell = tube.phi.ell();
    if !(level > ell / 2.0) {
        return Err(Error::EmptyThinPart {
            half_ell: ell / 2.0,
            mu: level,
        });
    }
    Ok(DirectionGame::new(&tube.nf, ell).level_radius(level, ell))
}

/// max over unit normal directions of sinh^2 of the injectivity radius at a
/// given distance from the axis. Writing w_j for the squared weight of the
/// direction in rotation block j, the squared half-displacement of step k is
/// linear in w, so the maximum is the value of a matrix game solved by LP.
struct DirectionGame {
    angles: Vec<f64>,
    cols: Vec<usize>,
    ell: f64,
}

impl DirectionGame {
    fn level_radius(&self, level: f64, ell: f64) -> f64 {
        let target = level.sinh().powi(2);
        let mut lo = 0.0;
        let mut hi = (level.sinh() / (ell / 2.0).sinh()).acosh();
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid).0 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn new(nf: &RotationNormalForm, ell: f64) -> Self {
        let mut angles: Vec<f64> = Vec::new();
        let mut cols = Vec::new();
        for (range, a) in nf.blocks() {
            if !angles.iter().any(|&b| (b - a).abs() < 1e-12) {
                angles.push(a);
                cols.push(range.start);
            }
        }
        Self { angles, cols, ell }
    }

    fn entry(&self, ch2: f64, sh2: f64, j: usize, k: usize) -> f64 {
        let kf = k as f64;
        ch2 * (kf * self.ell / 2.0).sinh().powi(2) + sh2 * (kf * self.angles[j] / 2.0).sin().powi(2)
    }

    /// Game value and an optimal weight vector.
    fn value(&self, r: f64) -> (f64, Vec<f64>) {
        let (ch2, sh2) = (r.cosh().powi(2), r.sinh().powi(2));
        let nb = self.angles.len();
        // Steps whose axial part alone reaches the best pure upper bound
        // cannot lower the value.
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut ub = f64::INFINITY;
        let mut k = 1;
        loop {
            let axial = ch2 * (k as f64 * self.ell / 2.0).sinh().powi(2);
            if axial >= ub {
                break;
            }
            let row: Vec<f64> = (0..nb).map(|j| self.entry(ch2, sh2, j, k)).collect();
            ub = ub.min(row.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            rows.push(row);
            k += 1;
        }
        if nb == 1 {
            let v = rows.iter().map(|r| r[0]).fold(f64::INFINITY, f64::min);
            return (v, vec![1.0]);
        }
        let eval = |w: &[f64]| -> (f64, usize) {
            let mut best = (f64::INFINITY, 0);
            for (i, row) in rows.iter().enumerate() {
                let v: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
                if v < best.0 {
                    best = (v, i);
                }
            }
            best
        };
        let uniform = vec![1.0 / nb as f64; nb];
        let mut active = vec![0, eval(&uniform).1];
        active.dedup();
        let mut best_w = uniform;
        let mut best_v = eval(&best_w).0;
        for _ in 0..(rows.len() + 2) {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let ws: Vec<_> = (0..nb).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
            let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
            let sum: Vec<_> = ws.iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint(&sum, ComparisonOp::Eq, 1.0);
            for &i in &active {
                let mut c: Vec<_> = ws.iter().zip(&rows[i]).map(|(&v, &a)| (v, -a)).collect();
                c.push((t, 1.0));
                lp.add_constraint(&c, ComparisonOp::Le, 0.0);
            }
            let sol = match lp.solve() {
                Ok(s) => s,
                Err(_) => break,
            };
            let w: Vec<f64> = ws.iter().map(|&v| sol[v].max(0.0)).collect();
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            let (v, arg) = eval(&w);
            if v > best_v {
                best_v = v;
                best_w = w;
            }
            if v >= sol.objective() - 1e-13 * sol.objective().abs().max(1e-300) || active.contains(&arg) {
                break;
            }
            active.push(arg);
        }
        (best_v, best_w)
    }

    fn direction(&self, nf: &RotationNormalForm, w: &[f64]) -> DVector<f64> {
        let mut v = DVector::zeros(nf.dim());
        for (j, &c) in self.cols.iter().enumerate() {
            v += nf.q.column(c) * w[j].max(0.0).sqrt();
        }
        let n = v.norm();
        v / n
    }
}

pub fn margulis_radius(tube: &TubeQuotient) -> Result<f64> {
    match &tube.thin {
        Some(b) => Ok(b.radius),
        None => Err(Error::EmptyThinPart {
            half_ell: tube.phi.ell() / 2.0,
            mu: tube.mu,
        }),
    }
}

/// Radius along the normal direction `theta` where the injectivity radius
/// reaches mu. Never smaller than the boundary radius.
pub fn margulis_radius_along(tube: &TubeQuotient, theta: &DVector<f64>) -> Result<f64> {
    let b = margulis_radius(tube)?;
    let phi = &tube.phi;
    let inj_at = |r: f64| -> Result<f64> {
        let x = cylinder_to_point(&CylinderCoords::new(r, theta.clone(), 0.0))?;
        injectivity_radius(tube, &x)
    };
    let mut lo = b * (1.0 - 1e-9);
    let mut hi = (tube.mu.sinh() / (phi.ell() / 2.0).sinh()).acosh();
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if inj_at(mid)? < tube.mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// d(phi^k x, x), computed in the hyperboloid.
pub fn displacement(phi: &TubeIsometry, k: i64, x: &HPoint) -> Result<f64> {
    Ok(dist(&phi.apply(x, k)?, x))
}

/// Walks k = 1, 2, ... computing d(phi^k x, x) in closed form from the
/// cylinder coordinates, and feeds each value to `visit`, which returns
/// whether to continue. d(phi^{-k} x, x) = d(phi^k x, x) covers negative k.
fn scan_displacements(phi: &TubeIsometry, x: &HPoint, mut visit: impl FnMut(i64, f64, f64) -> bool) {
    let c = point_to_cylinder(x);
    let rot = phi.rot();
    let mut theta = c.theta.clone();
    let mut k = 1i64;
    loop {
        theta = rot * theta;
        let kl = k as f64 * phi.ell();
        let d = displacement_closed_form(c.r, (&c.theta - &theta).norm(), kl);
        // Lower bound on d(phi^j x, x) for every j >= k, from the axial part.
        let floor = 2.0 * (c.r.cosh() * (kl / 2.0).sinh()).asinh();
        if !visit(k, d, floor) {
            break;
        }
        k += 1;
    }
}

/// Half the minimal displacement over k != 0. Since
/// d(phi^k x, x) >= 2 asinh(cosh R sinh(|k| ell / 2)) >= |k| ell, the scan
/// stops once that lower bound reaches the best value found.
pub fn injectivity_radius(tube: &TubeQuotient, x: &HPoint) -> Result<f64> {
    injectivity_radius_of(&tube.phi, x)
}

pub fn injectivity_radius_of(phi: &TubeIsometry, x: &HPoint) -> Result<f64> {
    if x.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: x.dim(),
        });
    }
    let mut best = f64::INFINITY;
    scan_displacements(phi, x, |_, d, floor| {
        best = best.min(d);
        floor < best
    });
    Ok(best / 2.0)
}

/// Number of k in Z (k = 0 included) with d(phi^k x, x) <= r.
pub fn orbit_count_ambient(tube: &TubeQuotient, x: &HPoint, r: f64) -> Result<usize> {
    orbit_count_of(&tube.phi, x, r)
}

pub fn orbit_count_of(phi: &TubeIsometry, x: &HPoint, r: f64) -> Result<usize> {
    if x.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: x.dim(),
        });
    }
    let ratio = r / phi.ell();
    if ratio > 1e8 {
        return Err(Error::EnumerationTooLarge(ratio));
    }
    if r < 0.0 {
        return Ok(0);
    }
    let kmax = ratio.ceil() as i64;
    let mut count = 1;
    scan_displacements(phi, x, |k, d, floor| {
        if d <= r {
            count += 2;
        }
        k < kmax && floor <= r
    });
    Ok(count)
}

/// Orbit count of `x` with respect to the intrinsic metric of its cylinder.
pub fn orbit_count_cylinder(phi: &TubeIsometry, x: &HPoint, r: f64) -> Result<usize> {
    let c = point_to_cylinder(x);
    let tau = phi.ell() * c.r.cosh();
    let ratio = r / tau;
    if ratio > 1e8 {
        return Err(Error::EnumerationTooLarge(ratio));
    }
    let kmax = ratio.floor() as i64;
    let rot = phi.rot();
    let mut theta = c.theta.clone();
    let mut count = 1;
    for k in 1..=kmax {
        theta = rot * theta;
        let ck = CylinderCoords::new(c.r, theta.clone(), c.t + k as f64 * phi.ell());
        if crate::hyperbolic::cylinder_intrinsic_dist(c.r, &c, &ck)? <= r {
            count += 2;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCountRecord {
    pub n: usize,
    pub ell: f64,
    pub angles: Vec<f64>,
    pub base_radius: f64,
    pub search_radius: f64,
    pub count: usize,
    pub inj: f64,
    pub depth: f64,
    pub bound_value: f64,
    pub observed_ratio: f64,
}

/// Unit-ball orbit count at `x` against exp(floor((n+1)/2) depth(x)).
pub fn preimage_bound_check(tube: &TubeQuotient, x: &HPoint) -> Result<OrbitCountRecord> {
    let count = orbit_count_ambient(tube, x, 1.0)?;
    let depth = tube.depth(x);
    let n = tube.phi.dim();
    let bound = (lemma_exponent(n) as f64 * depth).exp();
    Ok(OrbitCountRecord {
        n,
        ell: tube.phi.ell(),
        angles: tube.nf.angles.clone(),
        base_radius: point_to_cylinder(x).r,
        search_radius: 1.0,
        count,
        inj: injectivity_radius(tube, x)?,
        depth,
        bound_value: bound,
        observed_ratio: count as f64 / bound,
    })
}

/// `(1/ell, exp(floor((n+1)/2) R_mu))`, or `None` when the thin part is empty.
pub fn length_depth_bound_check(tube: &TubeQuotient) -> Option<(f64, f64)> {
    let r = margulis_radius(tube).ok()?;
    let m = lemma_exponent(tube.phi.dim()) as f64;
    Some((1.0 / tube.phi.ell(), (m * r).exp()))
}
