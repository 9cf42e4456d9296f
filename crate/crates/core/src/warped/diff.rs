//! Derivatives on [`TubeGrid`]: central stencils inside, one-sided stencils of
//! the same order at the radial ends, periodic in t. Spectral grids use
//! Chebyshev collocation in r and trigonometric interpolation in t.

use ndarray::Array2;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::grid::{FdOrder, TubeGrid};

/// Fornberg's weights for derivatives 0..=m at `x0` from nodes `xs`.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

type Key = (u64, u64, usize, FdOrder, usize, bool);

/// Per-node weights: first node index and weights (radial), or offsets and
/// weights shared by every node (periodic axial direction).
enum Table {
    Radial(Vec<(usize, Vec<f64>)>),
    Periodic(Vec<(isize, f64)>),
}

fn cache() -> &'static Mutex<HashMap<Key, Arc<Table>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Table>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached(key: Key, build: impl FnOnce() -> Table) -> Arc<Table> {
    if let Some(t) = cache().lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(build());
    cache().lock().unwrap().insert(key, t.clone());
    t
}

/// Chebyshev-Lobatto differentiation matrix on the given nodes, diagonal by
/// the negative-sum rule.
fn chebyshev_matrix(xs: &[f64]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let c = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[i][j] = c(i) / c(j) * sign / (xs[i] - xs[j]);
                row_sum += d[i][j];
            }
        }
        d[i][i] = -row_sum;
    }
    d
}

fn radial_table(g: &TubeGrid, deriv: usize) -> Table {
    let nr = g.nr;
    let xs: Vec<f64> = (0..nr).map(|i| g.r(i)).collect();
    let Some(acc) = g.order.accuracy() else {
        let d1 = chebyshev_matrix(&xs);
        let rows = match deriv {
            1 => d1,
            _ => (0..nr)
                .map(|i| (0..nr).map(|j| (0..nr).map(|k| d1[i][k] * d1[k][j]).sum()).collect())
                .collect(),
        };
        return Table::Radial(rows.into_iter().map(|w| (0, w)).collect());
    };
    let hw = acc / 2;
    // one-sided second derivatives need one extra node
    let width = 2 * hw + 1 + usize::from(deriv == 2);
    Table::Radial(
        (0..nr)
            .map(|i| {
                let start = if i >= hw && i + hw < nr {
                    i - hw
                } else if i < hw {
                    0
                } else {
                    nr - width
                };
                let end = if i >= hw && i + hw < nr {
                    i + hw + 1
                } else {
                    start + width
                };
                let w = fornberg_weights(xs[i], &xs[start..end], deriv);
                (start, w[deriv].clone())
            })
            .collect(),
    )
}

fn periodic_table(g: &TubeGrid, deriv: usize) -> Table {
    let nt = g.nt as isize;
    let Some(acc) = g.order.accuracy() else {
        // derivative of the trigonometric interpolant; the Nyquist mode of an
        // even grid drops out of odd derivatives through the real part
        let omega = std::f64::consts::TAU / g.t_len;
        let h = g.dt();
        let lo = -(nt / 2);
        let weights = (0..nt)
            .map(|k| {
                let mut acc = 0.0;
                for m in lo..lo + nt {
                    let wm = omega * m as f64;
                    let phase = -wm * k as f64 * h;
                    acc += match deriv {
                        1 => -wm * phase.sin(),
                        _ => -wm * wm * phase.cos(),
                    };
                }
                (k, acc / nt as f64)
            })
            .collect();
        return Table::Periodic(weights);
    };
    let hw = (acc / 2) as isize;
    let xs: Vec<f64> = (-hw..=hw).map(|o| o as f64 * g.dt()).collect();
    let w = fornberg_weights(0.0, &xs, deriv);
    Table::Periodic((-hw..=hw).zip(w[deriv].iter().copied()).collect())
}

pub fn d_r(f: &Array2<f64>, g: &TubeGrid, deriv: usize) -> Array2<f64> {
    let key = (g.r0.to_bits(), g.r1.to_bits(), g.nr, g.order, deriv, true);
    let table = cached(key, || radial_table(g, deriv));
    let Table::Radial(rows) = &*table else { unreachable!() };
    let (nr, nt) = f.dim();
    let mut out = Array2::zeros((nr, nt));
    for (i, (start, w)) in rows.iter().enumerate() {
        for (k, wk) in w.iter().enumerate() {
            out.row_mut(i).scaled_add(*wk, &f.row(start + k));
        }
    }
    out
}

pub fn d_t(f: &Array2<f64>, g: &TubeGrid, deriv: usize) -> Array2<f64> {
    let (nr, nt) = f.dim();
    let mut out = Array2::zeros((nr, nt));
    if nt == 1 {
        return out;
    }
    let key = (g.t_len.to_bits(), 0, g.nt, g.order, deriv, false);
    let table = cached(key, || periodic_table(g, deriv));
    let Table::Periodic(weights) = &*table else {
        unreachable!()
    };
    for i in 0..nr {
        for j in 0..nt {
            let mut acc = 0.0;
            for (o, w) in weights {
                let jj = (j as isize + o).rem_euclid(nt as isize) as usize;
                acc += w * f[[i, jj]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// All first and second partials of a grid function.
#[derive(Debug, Clone)]
pub struct Jet {
    pub f: Array2<f64>,
    pub r: Array2<f64>,
    pub t: Array2<f64>,
    pub rr: Array2<f64>,
    pub rt: Array2<f64>,
    pub tt: Array2<f64>,
}

impl Jet {
    pub fn new(f: &Array2<f64>, g: &TubeGrid) -> Self {
        let r = d_r(f, g, 1);
        let t = d_t(f, g, 1);
        let rt = d_t(&r, g, 1);
        Self {
            f: f.clone(),
            rr: d_r(f, g, 2),
            tt: d_t(f, g, 2),
            r,
            t,
            rt,
        }
    }

    pub fn first(f: &Array2<f64>, g: &TubeGrid) -> Self {
        let z = Array2::zeros(f.dim());
        Self {
            f: f.clone(),
            r: d_r(f, g, 1),
            t: d_t(f, g, 1),
            rr: z.clone(),
            rt: z.clone(),
            tt: z,
        }
    }
}
