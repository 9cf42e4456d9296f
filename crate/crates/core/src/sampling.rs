//! Seeded random objects used across sweeps and Monte Carlo checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand::SeedableRng;

pub type SweepRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Haar-distributed element of SO(m).
pub fn random_rotation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}
