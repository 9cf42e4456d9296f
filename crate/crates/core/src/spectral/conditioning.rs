//! Discrete quadratic form of `2L` on invariant fields over a tube segment
//! with Dirichlet ends, split into Fourier modes in t.
//!
//! Radial derivatives are one-sided differences at cell midpoints, so every
//! block is a sum of squares minus the zero-order part and stays symmetric.
//! In a mode with symbol k the substitution `c~ -> i c~` makes the block real.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::{lambda0, volume_density};
use crate::error::{Error, Result};
use crate::warped::{FdOrder, TubeGrid};

pub const MAX_INVERSE_ITERATIONS: usize = 10_000;

/// `(mode, symbol, multiplicity)` for the trigonometric interpolant in t.
/// With an even node count the highest mode has derivative symbol 0.
pub fn mode_symbols(grid: &TubeGrid) -> Vec<(usize, f64, usize)> {
    let nt = grid.nt;
    (0..=nt / 2)
        .map(|m| {
            let nyquist = nt.is_multiple_of(2) && m == nt / 2;
            let k = if nyquist {
                0.0
            } else {
                std::f64::consts::TAU * m as f64 / grid.t_len
            };
            let mult = if m == 0 || nyquist { 1 } else { 2 };
            (m, k, mult)
        })
        .collect()
}

fn check_grid(grid: &TubeGrid, n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { min: 3, got: n });
    }
    if grid.order == FdOrder::Spectral {
        return Err(Error::Grid("conditioning needs a uniform radial grid".into()));
    }
    Ok(())
}

/// Linear functionals of `(p, q, w, c~)` at radius r for symbol k, with their
/// multiplicities in the pointwise form.
fn node_terms(n: usize, r: f64, k: f64) -> [(f64, [f64; 4]); 7] {
    let d = (n - 2) as f64;
    let (tn, s, kk) = (r.tanh(), 1.0 / r.cosh(), 1.0 / r.tanh());
    [
        (1.0, [s * k, 0.0, 0.0, -2.0 * tn]),
        (2.0, [tn, 0.0, -tn, -s * k]),
        (1.0, [0.0, 0.0, s * k, 2.0 * tn]),
        (d, [0.0, s * k, 0.0, 0.0]),
        (2.0 * d, [kk, -kk, 0.0, 0.0]),
        (2.0 * d, [0.0, 0.0, 0.0, kk]),
        (2.0, [1.0, d, 1.0, 0.0]),
    ]
}

fn multiplicities(n: usize) -> [f64; 4] {
    [1.0, (n - 2) as f64, 1.0, 2.0]
}

/// Energy and mass of one Fourier mode, unknowns ordered node by node.
#[derive(Debug, Clone)]
pub struct ModeBlock {
    pub symbol: f64,
    pub energy: DMatrix<f64>,
    pub mass: DVector<f64>,
}

impl ModeBlock {
    pub fn assemble(grid: &TubeGrid, n: usize, symbol: f64) -> Result<Self> {
        check_grid(grid, n)?;
        let m = grid.nr - 2;
        let dr = grid.dr();
        let mult = multiplicities(n);
        let mut e = DMatrix::zeros(4 * m, 4 * m);
        let mut mass = DVector::zeros(4 * m);
        // radial cells [r_i, r_{i+1}], i = 0..nr-1
        for i in 0..grid.nr - 1 {
            let wm = volume_density(n, 0.5 * (grid.r(i) + grid.r(i + 1))) / dr;
            for c in 0..4 {
                let s = mult[c] * wm;
                let left = (i >= 1).then(|| 4 * (i - 1) + c);
                let right = (i < m).then(|| 4 * i + c);
                for (a, sa) in [(left, -1.0), (right, 1.0)] {
                    for (b, sb) in [(left, -1.0), (right, 1.0)] {
                        if let (Some(a), Some(b)) = (a, b) {
                            e[(a, b)] += s * sa * sb;
                        }
                    }
                }
            }
        }
        for node in 0..m {
            let r = grid.r(node + 1);
            let w = volume_density(n, r) * dr;
            let base = 4 * node;
            for (mu, a) in node_terms(n, r, symbol) {
                for x in 0..4 {
                    for y in 0..4 {
                        e[(base + x, base + y)] += mu * w * a[x] * a[y];
                    }
                }
            }
            for c in 0..4 {
                e[(base + c, base + c)] -= 2.0 * mult[c] * w;
                mass[base + c] = mult[c] * w;
            }
        }
        Ok(Self {
            symbol,
            energy: e,
            mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// Rayleigh quotient of the discrete form.
    pub fn quotient(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.energy * x)) / x.component_mul(&self.mass).dot(x)
    }

    /// `M^{-1/2} E M^{-1/2}`.
    fn normalized(&self) -> DMatrix<f64> {
        let s = self.mass.map(|v| 1.0 / v.sqrt());
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.energy[(i, j)] * s[i] * s[j])
    }

    /// All eigenvalues of the generalized problem, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.normalized())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Smallest eigenvalue by inverse iteration on a banded Cholesky factor.
    /// Returns the eigenvalue and the iteration count.
    pub fn smallest(&self) -> Result<(f64, usize)> {
        let a = self.normalized();
        let chol = BandCholesky::new(&a, 7)?;
        let nd = self.dim();
        let mut x = DVector::from_fn(nd, |i, _| 1.0 + 0.1 * ((i % 4) as f64));
        x /= x.norm();
        let mut lam = f64::NAN;
        for it in 1..=MAX_INVERSE_ITERATIONS {
            let mut y = chol.solve(&x);
            y /= y.norm();
            let ay = &a * &y;
            let next = y.dot(&ay);
            let res = (&ay - &y * next).norm();
            x = y;
            lam = next;
            // eigenvalue error is of order res^2 / gap
            if res <= 1e-7 * lam.abs() {
                return Ok((lam, it));
            }
        }
        Err(Error::NoConvergence {
            iters: MAX_INVERSE_ITERATIONS,
            residual: lam,
        })
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
struct BandCholesky {
    n: usize,
    b: usize,
    // row i holds L[i][i-b..=i]
    rows: Vec<Vec<f64>>,
}

impl BandCholesky {
    fn new(a: &DMatrix<f64>, b: usize) -> Result<Self> {
        let n = a.nrows();
        let mut rows = vec![vec![0.0; b + 1]; n];
        let at = |rows: &Vec<Vec<f64>>, i: usize, k: usize| rows[i][k + b - i];
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let mut s = a[(i, j)];
                for k in lo.max(j.saturating_sub(b))..j {
                    s -= at(&rows, i, k) * at(&rows, j, k);
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolve("discrete form is not positive definite".into()));
                    }
                    rows[i][b] = s.sqrt();
                } else {
                    rows[i][j + b - i] = s / at(&rows, j, j);
                }
            }
        }
        Ok(Self { n, b, rows })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let (n, b) = (self.n, self.b);
        let l = |i: usize, k: usize| self.rows[i][k + b - i];
        let mut y = rhs.clone();
        for i in 0..n {
            for k in i.saturating_sub(b)..i {
                y[i] -= l(i, k) * y[k];
            }
            y[i] /= l(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..(i + b + 1).min(n) {
                y[i] -= l(k, i) * y[k];
            }
            y[i] /= l(i, i);
        }
        y
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeEigen {
    pub mode: usize,
    pub symbol: f64,
    pub eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditioningReport {
    pub n: usize,
    pub dr: f64,
    pub lambda0: f64,
    pub smallest: f64,
    pub modes: Vec<ModeEigen>,
}

impl ConditioningReport {
    /// `smallest >= lambda0 (1 - 10 dr)`.
    pub fn meets_gap(&self) -> bool {
        self.smallest >= self.bound()
    }

    pub fn bound(&self) -> f64 {
        self.lambda0 * (1.0 - 10.0 * self.dr)
    }
}

/// Smallest eigenvalue of the discrete `2L` over all Fourier modes of the grid.
pub fn discrete_l_conditioning(grid: &TubeGrid, n: usize) -> Result<ConditioningReport> {
    check_grid(grid, n)?;
    let mut modes = Vec::new();
    for (mode, symbol, _) in mode_symbols(grid) {
        let (eigenvalue, iterations) = ModeBlock::assemble(grid, n, symbol)?.smallest()?;
        modes.push(ModeEigen {
            mode,
            symbol,
            eigenvalue,
            iterations,
        });
    }
    let smallest = modes.iter().map(|m| m.eigenvalue).fold(f64::INFINITY, f64::min);
    Ok(ConditioningReport {
        n,
        dr: grid.dr(),
        lambda0: lambda0(n),
        smallest,
        modes,
    })
}

/// Trigonometric interpolation derivative on `nt` periodic nodes.
fn periodic_derivative(nt: usize, t_len: f64) -> DMatrix<f64> {
    let h = std::f64::consts::PI / nt as f64;
    let scale = std::f64::consts::TAU / t_len;
    DMatrix::from_fn(nt, nt, |j, l| {
        if j == l {
            return 0.0;
        }
        let k = j as f64 - l as f64;
        let sign = if j.abs_diff(l) % 2 == 0 { 1.0 } else { -1.0 };
        let x = k * h;
        let v = if nt.is_multiple_of(2) {
            0.5 / x.tan()
        } else {
            0.5 / x.sin()
        };
        scale * sign * v
    })
}

/// Full spectrum of the same form assembled on the whole `(r, t)` grid
/// without the Fourier split; a cross-check for small grids.
pub fn dense_spectrum(grid: &TubeGrid, n: usize) -> Result<Vec<f64>> {
    check_grid(grid, n)?;
    let (m, nt) = (grid.nr - 2, grid.nt);
    let size = 4 * m * nt;
    if size > 2500 {
        return Err(Error::InvalidParameter(format!(
            "{size} unknowns is too many for the dense check"
        )));
    }
    let dt_mat = if nt > 1 {
        periodic_derivative(nt, grid.t_len)
    } else {
        DMatrix::zeros(1, 1)
    };
    let d = (n - 2) as f64;
    let dr = grid.dr();
    let mult = multiplicities(n);
    let idx = |node: usize, j: usize, c: usize| (node * nt + j) * 4 + c;
    let mut e = DMatrix::<f64>::zeros(size, size);
    let mut mass = DVector::<f64>::zeros(size);
    let add = |e: &mut DMatrix<f64>, weight: f64, a: &[(usize, f64)]| {
        for &(x, ax) in a {
            for &(y, ay) in a {
                e[(x, y)] += weight * ax * ay;
            }
        }
    };
    for i in 0..grid.nr - 1 {
        let wm = volume_density(n, 0.5 * (grid.r(i) + grid.r(i + 1))) / dr;
        for j in 0..nt {
            for c in 0..4 {
                let mut a = Vec::new();
                if i >= 1 {
                    a.push((idx(i - 1, j, c), -1.0));
                }
                if i < m {
                    a.push((idx(i, j, c), 1.0));
                }
                add(&mut e, mult[c] * wm, &a);
            }
        }
    }
    for node in 0..m {
        let r = grid.r(node + 1);
        let w = volume_density(n, r) * dr;
        let (tn, s, kk) = (r.tanh(), 1.0 / r.cosh(), 1.0 / r.tanh());
        for j in 0..nt {
            let dt = |c: usize, f: f64| -> Vec<(usize, f64)> {
                (0..nt).map(|l| (idx(node, l, c), f * dt_mat[(j, l)])).collect()
            };
            let at = |c: usize, f: f64| (idx(node, j, c), f);
            let mut terms: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
            let mut a = dt(0, s);
            a.push(at(3, -2.0 * tn));
            terms.push((1.0, a));
            let mut b = dt(3, s);
            b.extend([at(0, tn), at(2, -tn)]);
            terms.push((2.0, b));
            let mut cc = dt(2, s);
            cc.push(at(3, 2.0 * tn));
            terms.push((1.0, cc));
            terms.push((d, dt(1, s)));
            terms.push((2.0 * d, vec![at(0, kk), at(1, -kk)]));
            terms.push((2.0 * d, vec![at(3, kk)]));
            terms.push((2.0, vec![at(0, 1.0), at(1, d), at(2, 1.0)]));
            for (mu, a) in &terms {
                add(&mut e, mu * w, a);
            }
            for c in 0..4 {
                let k = idx(node, j, c);
                e[(k, k)] -= 2.0 * mult[c] * w;
                mass[k] = mult[c] * w;
            }
        }
    }
    let s = mass.map(|v| 1.0 / v.sqrt());
    let a = DMatrix::from_fn(size, size, |x, y| e[(x, y)] * s[x] * s[y]);
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
