//! Normal form of the rotation part and the flat torus-times-line model that
//! carries the orbit of a point on a cylinder.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperbolic::{point_to_cylinder, HPoint, TubeIsometry};
use crate::tube::{injectivity_radius, OrbitCountRecord, TubeQuotient};

/// Orthogonal change of basis `q` with `rot = q D q^T`, where `D` is
/// block diagonal: plane rotations by `angles` (in that order, occupying
/// columns `2j, 2j+1`), then `fixed_dims` ones, then `flip_dims` minus ones.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationNormalForm {
    pub q: DMatrix<f64>,
    pub angles: Vec<f64>,
    pub fixed_dims: usize,
    pub flip_dims: usize,
}

impl RotationNormalForm {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn block_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut d = DMatrix::zeros(m, m);
        for (j, &a) in self.angles.iter().enumerate() {
            let (s, c) = a.sin_cos();
            let i = 2 * j;
            d[(i, i)] = c;
            d[(i, i + 1)] = -s;
            d[(i + 1, i)] = s;
            d[(i + 1, i + 1)] = c;
        }
        let base = 2 * self.angles.len();
        for i in 0..self.fixed_dims {
            d[(base + i, base + i)] = 1.0;
        }
        for i in 0..self.flip_dims {
            let k = base + self.fixed_dims + i;
            d[(k, k)] = -1.0;
        }
        d
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.q * self.block_matrix() * self.q.transpose()
    }

    /// Column range of each rotation block: planes, then the fixed
    /// subspace, then the flip subspace, with the angle each block rotates by.
    pub fn blocks(&self) -> Vec<(std::ops::Range<usize>, f64)> {
        let mut out: Vec<_> = self
            .angles
            .iter()
            .enumerate()
            .map(|(j, &a)| (2 * j..2 * j + 2, a))
            .collect();
        let base = 2 * self.angles.len();
        if self.fixed_dims > 0 {
            out.push((base..base + self.fixed_dims, 0.0));
        }
        if self.flip_dims > 0 {
            let s = base + self.fixed_dims;
            out.push((s..s + self.flip_dims, PI));
        }
        out
    }
}

enum Block {
    Plane { cols: [DVector<f64>; 2], angle: f64 },
    Line { col: DVector<f64>, sign: f64 },
}

pub fn so_normal_form(rot: &DMatrix<f64>) -> Result<RotationNormalForm> {
    let m = rot.nrows();
    if rot.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: rot.ncols(),
        });
    }
    let defect = (rot.transpose() * rot - DMatrix::identity(m, m)).amax();
    if defect > 1e-6 {
        return Err(Error::NotOrthogonal(defect));
    }
    if rot.determinant() < 0.0 {
        return Err(Error::NotOrientationPreserving);
    }
    let (z, t) = rot.clone().schur().unpack();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < m {
        if i + 1 < m && t[(i + 1, i)].abs() > 1e-12 {
            let b = Matrix2::new(t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let (u, v) = (z.column(i).into_owned(), z.column(i + 1).into_owned());
            let disc = (b[(0, 0)] - b[(1, 1)]).powi(2) + 4.0 * b[(0, 1)] * b[(1, 0)];
            if disc < 0.0 {
                let angle = ((b[(1, 0)] - b[(0, 1)]) / 2.0).atan2((b[(0, 0)] + b[(1, 1)]) / 2.0);
                if angle >= 0.0 {
                    blocks.push(Block::Plane { cols: [u, v], angle });
                } else {
                    blocks.push(Block::Plane {
                        cols: [u, -v],
                        angle: -angle,
                    });
                }
            } else {
                let eig = ((b + b.transpose()) * 0.5).symmetric_eigen();
                for k in 0..2 {
                    let e = eig.eigenvectors.column(k);
                    let col = &u * e[0] + &v * e[1];
                    blocks.push(Block::Line {
                        col,
                        sign: eig.eigenvalues[k].signum(),
                    });
                }
            }
            i += 2;
        } else {
            blocks.push(Block::Line {
                col: z.column(i).into_owned(),
                sign: t[(i, i)].signum(),
            });
            i += 1;
        }
    }
    let mut planes: Vec<([DVector<f64>; 2], f64)> = Vec::new();
    let mut fixed = Vec::new();
    let mut flips = Vec::new();
    for b in blocks {
        match b {
            Block::Plane { cols, angle } => planes.push((cols, angle)),
            Block::Line { col, sign } if sign > 0.0 => fixed.push(col),
            Block::Line { col, .. } => flips.push(col),
        }
    }
    planes.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    let mut cols = Vec::with_capacity(m);
    let mut angles = Vec::with_capacity(planes.len());
    for (pair, a) in planes {
        let [u, v] = pair;
        cols.push(u);
        cols.push(v);
        angles.push(a);
    }
    let (fixed_dims, flip_dims) = (fixed.len(), flips.len());
    cols.extend(fixed);
    cols.extend(flips);
    let q = DMatrix::from_columns(&cols);
    Ok(RotationNormalForm {
        q,
        angles,
        fixed_dims,
        flip_dims,
    })
}

/// Flat torus times a line carrying the orbit: circle radii, the angle each
/// circle advances per step, and the axial step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusModel {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub axial_step: f64,
    /// Length of the component of the base direction left fixed by the rotation.
    pub fixed_extent: f64,
}

/// Principal |x| modulo 2 pi, in [0, pi].
pub fn angdist(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        2.0 * PI - y
    } else {
        y
    }
}

/// The torus model at radius `r` for a point with normal direction `v0`.
/// The flip subspace forms one circle of angle pi.
pub fn build_torus_model(nf: &RotationNormalForm, v0: &DVector<f64>, ell: f64, r: f64) -> Result<TorusModel> {
    let m = nf.dim();
    if v0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: v0.len(),
        });
    }
    if !(ell > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("ell = {ell}, R = {r}")));
    }
    let coeff = nf.q.transpose() * v0;
    let sh = r.sinh();
    let mut radii = Vec::new();
    let mut angles = Vec::new();
    let mut fixed_extent = 0.0;
    for (range, angle) in nf.blocks() {
        let norm = coeff.rows(range.start, range.len()).norm();
        if angle == 0.0 {
            fixed_extent = sh * norm;
        } else {
            radii.push(sh * norm);
            angles.push(angle);
        }
    }
    Ok(TorusModel {
        radii,
        angles,
        axial_step: ell * r.cosh(),
        fixed_extent,
    })
}

impl TorusModel {
    pub fn distance(&self, k: i64) -> f64 {
        let kf = k as f64;
        let mut s = (kf * self.axial_step).powi(2);
        for (rho, a) in self.radii.iter().zip(&self.angles) {
            s += (rho * angdist(kf * a)).powi(2);
        }
        s.sqrt()
    }
}

/// Number of k with torus-line distance from the start at most `r`. The axial
/// term alone exceeds `r` once |k| > r / tau, so the scan is exhaustive.
pub fn torus_orbit_count(tm: &TorusModel, r: f64) -> Result<usize> {
    if !(tm.axial_step > 0.0) {
        return Err(Error::DegenerateTranslation(tm.axial_step));
    }
    let ratio = r / tm.axial_step;
    if ratio > 1e8 {
        return Err(Error::EnumerationTooLarge(ratio));
    }
    if r < 0.0 {
        return Ok(0);
    }
    let kmax = ratio.floor() as i64;
    let mut count = 1;
    for k in 1..=kmax {
        if tm.distance(k) <= r {
            count += 2;
        }
    }
    Ok(count)
}

pub fn lemma_exponent(n: usize) -> u32 {
    n.div_ceil(2) as u32
}

/// Torus count against `(r / inj)^{floor((n+1)/2)}` at `x`.
pub fn torus_count_bound_check(tube: &TubeQuotient, x: &HPoint, r: f64) -> Result<OrbitCountRecord> {
    let phi = tube.phi();
    let inj = injectivity_radius(tube, x)?;
    if r < inj {
        return Err(Error::InvalidParameter(format!(
            "search radius {r} below injectivity radius {inj}"
        )));
    }
    let tm = torus_model_at(phi, x)?;
    let count = torus_orbit_count(&tm, r)?;
    let n = phi.dim();
    let bound = (r / inj).powi(lemma_exponent(n) as i32);
    let c = point_to_cylinder(x);
    Ok(OrbitCountRecord {
        n,
        ell: phi.ell(),
        angles: tube.normal_form().angles.clone(),
        base_radius: c.r,
        search_radius: r,
        count,
        inj,
        depth: tube.depth(x),
        bound_value: bound,
        observed_ratio: count as f64 / bound,
    })
}

pub fn torus_model_at(phi: &TubeIsometry, x: &HPoint) -> Result<TorusModel> {
    let nf = so_normal_form(phi.rot())?;
    let c = point_to_cylinder(x);
    build_torus_model(&nf, &c.theta, phi.ell(), c.r)
}

/// Largest ratio of intrinsic torus distance to the chordal distance of the
/// embedding in C^m, over random pairs of torus points.
pub fn torus_vs_chordal_check<R: Rng + ?Sized>(tm: &TorusModel, samples: usize, rng: &mut R) -> Result<f64> {
    if !tm.radii.iter().any(|&r| r > 0.0) {
        return Err(Error::InvalidParameter(
            "torus model has no circle of positive radius".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut intrinsic = 0.0;
        let mut chordal = 0.0;
        for &rho in &tm.radii {
            let a = rng.random_range(-PI..PI);
            let b = rng.random_range(-PI..PI);
            let arc = rho * angdist(a - b);
            let chord = 2.0 * rho * (angdist(a - b) / 2.0).sin();
            intrinsic += arc * arc;
            chordal += chord * chord;
        }
        if chordal > 0.0 {
            worst = worst.max((intrinsic / chordal).sqrt());
        }
    }
    Ok(worst)
}

/// Intrinsic torus/chordal ratio for two explicit angle tuples.
pub fn torus_chordal_ratio(tm: &TorusModel, a: &[f64], b: &[f64]) -> f64 {
    let mut intrinsic = 0.0;
    let mut chordal = 0.0;
    for ((&rho, &x), &y) in tm.radii.iter().zip(a).zip(b) {
        let d = angdist(x - y);
        intrinsic += (rho * d).powi(2);
        chordal += (2.0 * rho * (d / 2.0).sin()).powi(2);
    }
    (intrinsic / chordal).sqrt()
}
