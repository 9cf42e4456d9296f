//! Comparison of integrals over a lifted ball in H^n with integrals over the
//! ball in the quotient, weighted by a preimage bound.

use rand::RngExt;
use serde::Serialize;

use super::norms::walk_lifts;
use crate::error::{Error, Result};
use crate::hyperbolic::{exp_frame, HPoint};
use crate::sampling::{seeded, unit_vector};
use crate::tube::{orbit_count_ambient, TubeQuotient};

pub const BALL_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferCheck {
    /// Integral of the lift over `B(x~, 1/2)`.
    pub lhs: f64,
    /// Integral of `omega u` over `B(x, 1/2)` in the quotient.
    pub rhs: f64,
    pub ball_volume: f64,
    /// Largest number of preimages of a sample inside the lifted ball.
    pub max_preimages: usize,
    /// Largest value of `omega` met.
    pub max_omega: usize,
    pub samples: usize,
}

impl TransferCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + tol)
    }

    pub fn single_sheet(&self) -> bool {
        self.max_preimages == 1 && self.max_omega == 1
    }
}

/// `int_0^s sinh^{m}` by 16-point Gauss-Legendre, accurate to round-off for s <= 1/2.
fn shell_integral(m: i32, s: f64) -> f64 {
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.755_404_408_355_003,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let h = s / 2.0;
    X.iter()
        .zip(W)
        .map(|(x, w)| w * h * (((1.0 - x) * h).sinh().powi(m) + ((1.0 + x) * h).sinh().powi(m)))
        .sum()
}

fn sphere_area(dim: usize) -> f64 {
    // area of the unit sphere S^{dim - 1} in R^dim
    let k = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(k) / gamma_half_integer(dim)
}

/// Gamma(dim / 2) for a positive integer `dim`.
fn gamma_half_integer(dim: usize) -> f64 {
    let mut g = if dim.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut a = if dim.is_multiple_of(2) { 1.0 } else { 0.5 };
    while a < dim as f64 / 2.0 - 0.25 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Radius with `P(radius <= s) = u` for the hyperbolic volume distribution on the ball.
fn radius_quantile(m: i32, total: f64, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, BALL_RADIUS);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shell_integral(m, mid) < u * total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Number of k with `d(phi^k z, x) < 1/2`.
fn preimages_in_ball(tube: &TubeQuotient, x: &HPoint, z: &HPoint) -> Result<usize> {
    let mut count = 0;
    walk_lifts(tube, x, z, |_, floor, d| {
        if d < BALL_RADIUS {
            count += 1;
        }
        floor < BALL_RADIUS
    })?;
    Ok(count)
}

/// Stratified Monte Carlo over the lifted ball. Both sides are evaluated on
/// the same samples: a sample z contributes `u(z)` to the left side and
/// `omega(z) u(z) / N(z)` to the right, where N(z) counts the preimages of
/// its projection inside the ball and `omega(z)` is the orbit count within
/// distance 1. `u` must be invariant under the deck group.
pub fn transfer_check(
    tube: &TubeQuotient,
    x: &HPoint,
    u: impl Fn(&HPoint) -> f64,
    samples: usize,
    seed: u64,
) -> Result<TransferCheck> {
    let n = tube.phi().dim();
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.dim(),
        });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let m = n as i32 - 1;
    let total = shell_integral(m, BALL_RADIUS);
    let ball_volume = sphere_area(n) * total;
    let mut rng = seeded(seed);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let (mut max_pre, mut max_omega) = (0, 0);
    for i in 0..samples {
        let s = radius_quantile(m, total, (i as f64 + rng.random::<f64>()) / samples as f64);
        let z = exp_frame(x, &unit_vector(n, &mut rng), s)?;
        let val = u(&z);
        if val < 0.0 {
            return Err(Error::InvalidParameter(format!("u is negative ({val})")));
        }
        let pre = preimages_in_ball(tube, x, &z)?.max(1);
        let omega = orbit_count_ambient(tube, &z, 1.0)?;
        max_pre = max_pre.max(pre);
        max_omega = max_omega.max(omega);
        lhs += val;
        rhs += val * omega as f64 / pre as f64;
    }
    let scale = ball_volume / samples as f64;
    Ok(TransferCheck {
        lhs: lhs * scale,
        rhs: rhs * scale,
        ball_volume,
        max_preimages: max_pre,
        max_omega,
        samples,
    })
}
