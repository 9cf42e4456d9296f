use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use tubelab_core::hyperbolic::{cylinder_to_point, dist, point_to_cylinder, CylinderCoords, HPoint, TubeIsometry};
use tubelab_core::sampling::{seeded, unit_vector};
use tubelab_core::spectral::conditioning::MAX_INVERSE_ITERATIONS;
use tubelab_core::spectral::*;
use tubelab_core::torus::lemma_exponent;
use tubelab_core::tube::{injectivity_radius, orbit_count_ambient, TubeQuotient};
use tubelab_core::warped::{FdOrder, ScalarField, TubeGrid, WarpedField};
use tubelab_core::Error;

const TAU: f64 = std::f64::consts::TAU;

// 1-D weighted Sturm-Liouville values in extended precision
const RAYLEIGH_BUMP_36: f64 = 4.444_591_654_543_901;
const RAYLEIGH_TAIL: f64 = 2.290_810_336_452_839;
// generalized eigenproblem of the staggered form on [0.5, 6], nr = 177, t_len = 1, nt = 8
const COND_N4: f64 = 2.546676260936776;
const COND_N5: f64 = 4.328348411122869;

fn smoothstep3(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// C^3 bump supported in [lo, hi].
fn bump(r: f64, lo: f64, hi: f64) -> f64 {
    if r <= lo || r >= hi {
        0.0
    } else {
        (std::f64::consts::PI * (r - lo) / (hi - lo)).sin().powi(4)
    }
}

fn axis_point(n: usize, t: f64) -> HPoint {
    let mut e = DVector::zeros(n - 1);
    e[0] = 1.0;
    cylinder_to_point(&CylinderCoords::new(0.0, e, t)).unwrap()
}

fn point_at(r: f64, theta: DVector<f64>, t: f64) -> HPoint {
    cylinder_to_point(&CylinderCoords::new(r, theta, t)).unwrap()
}

fn tube(n: usize, ell: f64, angles: &[f64], mu: f64) -> TubeQuotient {
    TubeQuotient::new(TubeIsometry::from_angles(n, ell, angles).unwrap(), mu).unwrap()
}

/// Random smooth field: a few Fourier modes in t times a radial bump with a
/// random linear modulation.
fn smooth_random(n: usize, g: TubeGrid, lo: f64, hi: f64, seed: u64) -> WarpedField {
    let mut rng = seeded(seed);
    let mut coef = [[0.0; 7]; 4];
    for row in coef.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let mid = 0.5 * (lo + hi);
    WarpedField::from_fn(n, g, |r, t| {
        let s = TAU * t / g.t_len;
        let b = bump(r, lo, hi);
        let mut out = [0.0; 4];
        for (c, a) in coef.iter().enumerate() {
            let modes = a[0] + a[1] * s.cos() + a[2] * s.sin() + a[3] * (2.0 * s).cos() + a[4] * (2.0 * s).sin();
            out[c] = b * modes * (1.0 + a[5] * (r - mid) / (hi - lo)) + b * b * a[6];
        }
        out
    })
}

#[test]
fn gap_constants_table() {
    assert_eq!(gap_constants(4).unwrap().lambda0, 2.0);
    assert_eq!(gap_constants(13).unwrap().lambda0, 34.0);
    assert_eq!(gap_constants(5).unwrap().lambda0, 3.0);
    assert_eq!(gap_constants(4).unwrap().beta, 1.2071067811865475);
    assert_eq!(gap_constants(5).unwrap().beta, 1.6160254037844386);
    assert!((gap_constants(13).unwrap().beta - 4.66547594742265).abs() < 1e-14);
    for n in 4..=64 {
        let c = gap_constants(n).unwrap();
        let nf = n as f64;
        assert_eq!(c.lambda0, (nf - 2.0).max((nf - 1.0).powi(2) / 4.0 - 2.0));
        assert!(c.beta > 0.0 && c.beta < c.lambda0.sqrt(), "n = {n}");
        assert!(2.0 * c.beta > lemma_exponent(n) as f64, "n = {n}");
        assert!(2.0 * c.lambda0.sqrt() > lemma_exponent(n) as f64);
        assert_eq!(c.margulis, 0.1);
    }
}

#[test]
fn gap_constants_rejects_small_dimension() {
    assert!(matches!(gap_constants(3), Err(Error::DimensionTooSmall { .. })));
    assert!(matches!(
        gap_constants_with_beta(4, 5.0),
        Err(Error::WeightOutOfWindow { .. })
    ));
    assert_eq!(gap_constants_with_beta(4, 1.3).unwrap().beta, 1.3);
}

#[test]
fn quadrature_volume_is_second_order() {
    let mut errs = Vec::new();
    for dr in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let g = TubeGrid::new(0.5, 3.0, dr, 2.0, 0.5, FdOrder::Second).unwrap();
        let q = QuadratureGrid::new(g, 5).unwrap();
        assert!(q.weights.iter().all(|w| *w > 0.0));
        errs.push((q.volume() - q.exact_volume()).abs() / q.exact_volume());
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..4.4).contains(&ratio), "{errs:?}");
    }
}

fn scalar_grid(r0: f64, r1: f64, dr: f64) -> TubeGrid {
    TubeGrid::new(r0, r1, dr, 1.0, 0.25, FdOrder::Second).unwrap()
}

#[test]
fn rayleigh_of_smoothstep_bump_matches_reference() {
    let u_of = |r: f64| smoothstep3((r - 3.0) / 1.5) * smoothstep3((6.0 - r) / 1.5);
    let mut errs = Vec::new();
    for dr in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let u = ScalarField::from_fn(scalar_grid(2.5, 6.5, dr), |r, _| u_of(r));
        let q = scalar_rayleigh(&u, 4).unwrap();
        assert!(q >= 2.25 * (1.0 - 5.0 * dr));
        errs.push((q - RAYLEIGH_BUMP_36).abs());
    }
    assert!(errs[2] < 1e-3 * RAYLEIGH_BUMP_36, "{errs:?}");
    assert!(errs[0] / errs[2] > 10.0, "{errs:?}");
    let u = ScalarField::from_fn(scalar_grid(2.5, 6.5, 1.0 / 64.0), |r, _| 7.0 * u_of(r));
    let v = ScalarField::from_fn(scalar_grid(2.5, 6.5, 1.0 / 64.0), |r, _| u_of(r));
    assert!((scalar_rayleigh(&u, 4).unwrap() - scalar_rayleigh(&v, 4).unwrap()).abs() < 1e-12);
}

#[test]
fn rayleigh_tail_family_is_nearly_sharp() {
    let f = |r: f64| {
        let (lo, hi, ramp) = (1.0, 25.0, 3.0);
        let ramp_fn = |s: f64| (std::f64::consts::PI * s / (2.0 * ramp)).sin().powi(2);
        let env = if r <= lo || r >= hi {
            0.0
        } else if r < lo + ramp {
            ramp_fn(r - lo)
        } else if r > hi - ramp {
            ramp_fn(hi - r)
        } else {
            1.0
        };
        (-1.5 * r).exp() * env
    };
    let dr = 1.0 / 64.0;
    let u = ScalarField::from_fn(scalar_grid(0.5, 25.5, dr), |r, _| f(r));
    let q = scalar_rayleigh(&u, 4).unwrap();
    assert!((q - RAYLEIGH_TAIL).abs() < 1e-3 * RAYLEIGH_TAIL, "{q}");
    assert!(q >= 2.25 * (1.0 - 5.0 * dr));
    assert!(q < 1.1 * 2.25);
}

#[test]
fn rayleigh_sweep_respects_scalar_gap() {
    let mut rng = seeded(11);
    for dr in [1.0 / 16.0, 1.0 / 32.0] {
        for _ in 0..40 {
            let lo = rng.random_range(0.6..6.0);
            let hi = lo + rng.random_range(0.8..6.0);
            let (a, b, k) = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-2.0..0.0),
                rng.random_range(0..3),
            );
            let g = TubeGrid::new(0.5, hi + 0.5, dr, 2.0, 0.125, FdOrder::Second).unwrap();
            let u = ScalarField::from_fn(g, |r, t| {
                bump(r, lo, hi) * (b * r).exp() * (1.5 + a * (std::f64::consts::PI * k as f64 * t).cos())
            });
            let q = scalar_rayleigh(&u, 4).unwrap();
            assert!(q >= 2.25 * (1.0 - 5.0 * dr), "lo {lo} hi {hi}: {q}");
        }
    }
}

#[test]
fn rayleigh_rejects_bad_input() {
    let g = scalar_grid(0.5, 3.0, 1.0 / 16.0);
    let zero = ScalarField::from_fn(g, |_, _| 0.0);
    assert!(matches!(scalar_rayleigh(&zero, 4), Err(Error::InvalidParameter(_))));
    let wide = ScalarField::from_fn(g, |r, _| r);
    assert!(matches!(scalar_rayleigh(&wide, 4), Err(Error::SupportTouchesBoundary)));
}

fn gap_grid() -> TubeGrid {
    TubeGrid::with_counts(0.5, 6.5, 97, 2.0, 12, FdOrder::Second).unwrap()
}

#[test]
fn tensor_gap_sweep() {
    let g = gap_grid();
    let mut rng = seeded(5);
    for n in [4, 5, 6] {
        let mut worst = f64::INFINITY;
        for k in 0..100 {
            let lo = rng.random_range(0.8..3.5);
            let hi = lo + rng.random_range(1.5..2.8);
            let h = smooth_random(n, g, lo, hi, 1000 * n as u64 + k);
            let c = tensor_gap_check(&h).unwrap();
            assert!(c.holds(1e-3), "n = {n}, field {k}: {c:?}");
            worst = worst.min(c.quotient);
        }
        assert!(worst >= lambda0(n), "n = {n}: {worst}");
    }
}

#[test]
fn tensor_gap_traceless_field_reduces_to_scalar_rayleigh() {
    // frame diagonal (1, -1, -1, 1) times a radial bump: traceless, and the
    // only connection term left is the 2d K^2 (p - q)^2 coupling
    let g = gap_grid();
    let n = 4;
    let u = ScalarField::from_fn(g, |r, _| bump(r, 1.5, 5.0));
    let h = WarpedField::from_fn(n, g, |r, _| {
        let b = bump(r, 1.5, 5.0);
        [b, -b, b, 0.0]
    });
    let c = tensor_gap_check(&h).unwrap();
    let quad = QuadratureGrid::new(g, n).unwrap();
    let mass = quad.integrate(&h.norm_sq());
    assert_eq!(quad.integrate(&h.trace().mapv(|v| v * v)), 0.0);
    let coupling = quad.integrate(&ndarray::Array2::from_shape_fn(g.shape(), |(i, j)| {
        16.0 * (u.u[[i, j]] / g.r(i).tanh()).powi(2)
    }));
    let expect = scalar_rayleigh(&u, n).unwrap() * mass + coupling - 2.0 * mass;
    assert!((c.rhs - expect).abs() < 1e-9 * c.rhs.abs(), "{} vs {}", c.rhs, expect);
    assert!(c.quotient >= scalar_gap(n) - 2.0);
}

#[test]
fn tensor_gap_pure_trace_has_large_slack() {
    let g = gap_grid();
    for n in [4, 5, 6] {
        let u = ScalarField::from_fn(g, |r, _| bump(r, 1.5, 5.0));
        let h = WarpedField::conformal(n, g, &u.u);
        let c = tensor_gap_check(&h).unwrap();
        let ray = scalar_rayleigh(&u, n).unwrap();
        // |h|^2 = n u^2, (tr h)^2 = n^2 u^2
        assert!((c.quotient - (ray - 2.0 + 2.0 * n as f64)).abs() < 1e-9 * c.quotient);
        assert!(c.rhs > 2.0 * c.lhs);
    }
}

#[test]
fn kato_single_component_is_equality() {
    let g = gap_grid();
    let u = ScalarField::from_fn(g, |r, t| bump(r, 1.0, 5.0) * (2.0 + (TAU * t / 2.0).sin()));
    let h = WarpedField::conformal(5, g, &u.u);
    let k = kato_check(&h).unwrap();
    assert!((k.lhs - k.rhs).abs() < 1e-10 * k.rhs, "{k:?}");
    assert!(k.skipped > 0);
    assert!(k.skipped < k.nodes / 2);
}

#[test]
fn kato_holds_on_random_smooth_fields() {
    let mut margins = Vec::new();
    for nr in [49, 97, 193] {
        let g = TubeGrid::with_counts(0.5, 6.5, nr, 2.0, 12, FdOrder::Second).unwrap();
        let mut worst = f64::NEG_INFINITY;
        for seed in 0..20 {
            let h = smooth_random(4, g, 1.0, 4.0, seed);
            let k = kato_check(&h).unwrap();
            assert!(k.holds(1e-2), "nr {nr}, seed {seed}: {k:?}");
            worst = worst.max(k.lhs / k.rhs - 1.0);
        }
        margins.push(worst);
    }
    assert!(margins.iter().all(|m| *m < 0.0), "{margins:?}");
}

struct IdentitySetup {
    tube: TubeQuotient,
    x: HPoint,
    beta: f64,
}

fn identity_setup() -> IdentitySetup {
    let tube = tube(4, 2.0, &[0.7], 0.1);
    IdentitySetup {
        tube,
        x: axis_point(4, 1.0),
        beta: gap_constants(4).unwrap().beta,
    }
}

fn identity_grid(dr: f64) -> TubeGrid {
    TubeGrid::new(0.5, 3.5, dr, 2.0, dr, FdOrder::Second).unwrap()
}

fn distance_weight(s: &IdentitySetup, g: TubeGrid) -> ScalarField {
    let mut e = DVector::zeros(3);
    e[1] = 1.0;
    ScalarField::from_fn(g, |r, t| {
        let y = point_at(r, e.clone(), t);
        (-s.beta * quotient_distance(&s.tube, &s.x, &y).unwrap()).exp()
    })
}

fn identity_field(g: TubeGrid) -> WarpedField {
    WarpedField::from_fn(4, g, |r, t| {
        let b = bump(r, 0.9, 3.1) * bump(t, 0.3, 1.7);
        [b, b, b, 0.0]
    })
}

#[test]
fn weighted_identity_converges_at_second_order() {
    let s = identity_setup();
    let mut res = Vec::new();
    for dr in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let g = identity_grid(dr);
        let c = weighted_identity_check(&identity_field(g), &distance_weight(&s, g)).unwrap();
        assert!(c.divergence_integral.abs() < 10.0 * dr * dr, "{c:?}");
        res.push(c.residual);
    }
    assert!(res[2] < 1e-4, "{res:?}");
    for w in res.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{res:?}");
    }
}

#[test]
fn weighted_identity_constant_weight_is_exact() {
    let g = identity_grid(1.0 / 16.0);
    let phi = ScalarField::from_fn(g, |_, _| 0.37);
    let c = weighted_identity_check(&identity_field(g), &phi).unwrap();
    assert!(c.residual < 1e-13, "{c:?}");
    assert_eq!(c.divergence_integral, 0.0);
}

#[test]
fn divergence_field_integrates_to_zero_on_random_data() {
    let mut rng = seeded(3);
    for k in 0..6 {
        let dr = 1.0 / 32.0;
        let g = identity_grid(dr);
        let (a, b, c0) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.5..1.5),
        );
        let phi = ScalarField::from_fn(g, |r, t| {
            c0 + a * (-(r - 2.0f64).powi(2)).exp() + 0.3 * b * (TAU * t / 2.0).sin()
        });
        let h = smooth_random(4, g, 1.0, 3.0, 40 + k);
        let c = weighted_identity_check(&h, &phi).unwrap();
        assert!(c.divergence_integral.abs() < 10.0 * dr * dr, "{c:?}");
        assert!(c.residual < 1e-2, "{c:?}");
    }
}

#[test]
fn divergence_expansion_converges_pointwise() {
    let res: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&dr| {
            let g = identity_grid(dr);
            let phi = ScalarField::from_fn(g, |r, t| {
                1.0 + 0.5 * (-(r - 2.0f64).powi(2)).exp() * (TAU * t / 2.0).cos()
            });
            weighted_identity_check(&smooth_random(4, g, 1.0, 3.0, 41), &phi)
                .unwrap()
                .divergence_residual
        })
        .collect();
    for w in res.windows(2) {
        assert!(w[0] / w[1] > 3.5, "{res:?}");
    }
}

#[test]
fn weighted_identity_rejects_support_at_boundary() {
    let g = identity_grid(1.0 / 16.0);
    let h = WarpedField::from_fn(4, g, |_, _| [1.0, 0.0, 0.0, 0.0]);
    let phi = ScalarField::from_fn(g, |_, _| 1.0);
    assert!(weighted_identity_check(&h, &phi).is_err());
}

fn thin_tube() -> TubeQuotient {
    tube(4, 0.02, &[0.9], 0.3)
}

#[test]
fn cutoff_profile_and_bounds() {
    let t = tube(4, 0.02, &[], 0.3);
    let cut = cutoff_eta(&t, 1.0 / 32.0).unwrap();
    assert!(cut.r_inner < cut.r_outer && cut.r_outer < cut.boundary_radius);
    assert_eq!(cut.eval(0.0)[0], 1.0);
    assert_eq!(cut.eval(cut.boundary_radius)[0], 0.0);
    assert_eq!(cut.eval(cut.r_inner)[1], 0.0);
    assert_eq!(cut.eval(cut.r_outer)[1], 0.0);
    // injectivity radius at the window ends
    for (r, level) in [(cut.r_inner, 0.075), (cut.r_outer, 0.15), (cut.boundary_radius, 0.3)] {
        let mut e = DVector::zeros(3);
        e[0] = 1.0;
        let inj = injectivity_radius(&t, &point_at(r, e, 0.0)).unwrap();
        assert!((inj - level).abs() < 1e-8, "{inj} vs {level}");
    }
    let exact = cut.c2_bounds();
    let mut prev: Option<[f64; 3]> = None;
    for dr in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let g = TubeGrid::new(0.5, 6.0, dr, 0.02, 0.01, FdOrder::Second).unwrap();
        let s = cut.sampled_bounds(&g);
        for k in 0..3 {
            assert!(s[k] <= exact[k] * (1.0 + 0.05), "{s:?} vs {exact:?}");
            assert!(s[k] >= exact[k] * 0.9, "{s:?} vs {exact:?}");
        }
        if let Some(p) = prev {
            assert!((s[2] - p[2]).abs() < 0.05 * exact[2]);
        }
        prev = Some(s);
        // gradient supported in the window
        let f = cut.field(&g);
        for i in 0..g.nr {
            let r = g.r(i);
            if r <= cut.r_inner {
                assert_eq!(f.u[[i, 0]], 1.0);
            }
            if r >= cut.r_outer {
                assert_eq!(f.u[[i, 0]], 0.0);
            }
        }
    }
}

#[test]
fn cutoff_rejects_unresolved_window_and_empty_thin_part() {
    let t = tube(4, 0.02, &[], 0.3);
    assert!(matches!(cutoff_eta(&t, 1.0), Err(Error::Grid(_))));
    let thick = tube(4, 1.0, &[], 0.3);
    assert!(matches!(cutoff_eta(&thick, 0.01), Err(Error::EmptyThinPart { .. })));
}

#[test]
fn quotient_distance_matches_brute_force() {
    let mut rng = seeded(21);
    for _ in 0..200 {
        let n = rng.random_range(4..7);
        let ell = 10f64.powf(rng.random_range(-2.0..0.5));
        let angles: Vec<f64> = (0..(n - 1) / 2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = tube(n, ell, &angles, 0.1);
        let x = point_at(
            rng.random_range(0.0..2.0),
            unit_vector(n - 1, &mut rng),
            rng.random_range(-3.0..3.0),
        );
        let y = point_at(
            rng.random_range(0.0..3.0),
            unit_vector(n - 1, &mut rng),
            rng.random_range(-3.0..3.0),
        );
        let d = quotient_distance(&t, &x, &y).unwrap();
        let span = (dist(&x, &y) / ell).ceil() as i64 + 2;
        let brute = (-span..=span)
            .map(|k| dist(&x, &t.phi().apply(&y, k).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert!((d - brute).abs() < 1e-9 * (1.0 + brute), "{d} vs {brute}");
        assert!(d <= dist(&x, &y) + 1e-12);
    }
}

fn seminorm_grid(dr: f64) -> TubeGrid {
    TubeGrid::new(0.5, 6.0, dr, 0.02, 0.005, FdOrder::Second).unwrap()
}

#[test]
fn weighted_seminorm_basic_properties() {
    let t = thin_tube();
    let g = seminorm_grid(1.0 / 16.0);
    let beta = gap_constants(4).unwrap().beta;
    let x = axis_point(4, 0.0);
    let zero = WarpedField::zeros(4, g);
    assert_eq!(weighted_seminorm(&zero, &t, &x, beta, 0).unwrap(), 0.0);
    assert_eq!(weighted_seminorm(&zero, &t, &x, beta, 2).unwrap(), 0.0);
    let h = smooth_random(4, g, 1.0, 3.0, 8);
    for kind in [0, 2] {
        let a = weighted_seminorm(&h, &t, &x, beta, kind).unwrap();
        let b = weighted_seminorm(&h.scaled(-2.5), &t, &x, beta, kind).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
    }
    assert!(weighted_seminorm(&h, &t, &x, beta, 1).is_err());
    let wrong = TubeGrid::new(0.5, 6.0, 1.0 / 16.0, 0.03, 0.005, FdOrder::Second).unwrap();
    assert!(weighted_seminorm(&WarpedField::zeros(4, wrong), &t, &x, beta, 0).is_err());
}

#[test]
fn weighted_seminorm_weight_sandwich() {
    let t = thin_tube();
    let g = seminorm_grid(1.0 / 32.0);
    let beta = gap_constants(4).unwrap().beta;
    let quad = QuadratureGrid::new(g, 4).unwrap();
    let (a, b) = (3.0, 4.0);
    let h = WarpedField::conformal(4, g, &g.from_fn(|r, _| bump(r, a, b)));
    let plain = quad.integrate(&h.norm_sq()).sqrt();
    // on-axis basepoint: every node sits at distance in [a, acosh(cosh b cosh(ell/2))]
    let x = axis_point(4, 0.0);
    let v = weighted_seminorm(&h, &t, &x, beta, 0).unwrap();
    let d_far = (b.cosh() * (0.01f64).cosh()).acosh();
    assert!(v <= (-beta * a).exp() * plain * (1.0 + 1e-12));
    assert!(v >= (-beta * d_far).exp() * plain * (1.0 - 1e-12));
    // off-axis basepoint at radius s: distances within [a - s, b + s + ell]
    let s = 1.0;
    let mut rng = seeded(2);
    let xo = point_at(s, unit_vector(3, &mut rng), 0.0);
    let v = weighted_seminorm(&h, &t, &xo, beta, 0).unwrap();
    assert!(v <= (-beta * (a - s)).exp() * plain);
    assert!(v >= (-beta * (b + s + 0.02)).exp() * plain);
}

fn thin_basepoints(t: &TubeQuotient, count: usize) -> Vec<HPoint> {
    let mut rng = seeded(17);
    let rb = t.boundary_radius();
    (0..count)
        .map(|k| point_at(rb * k as f64 / count as f64, unit_vector(3, &mut rng), 0.0))
        .collect()
}

#[test]
fn hybrid_norm_zero_and_monotone() {
    let t = thin_tube();
    let g = seminorm_grid(1.0 / 16.0);
    let beta = gap_constants(4).unwrap().beta;
    let pts = thin_basepoints(&t, 4);
    let zero = hybrid_norm_desk(&WarpedField::zeros(4, g), 0, &t, &pts, beta).unwrap();
    assert_eq!(zero.value, 0.0);
    let h = smooth_random(4, g, 0.8, 4.0, 31);
    for kind in [0, 2] {
        let small = hybrid_norm_desk(&h, kind, &t, &pts[..2], beta).unwrap();
        let large = hybrid_norm_desk(&h, kind, &t, &pts, beta).unwrap();
        assert!(large.weighted >= small.weighted);
        assert!(large.value >= small.value);
        assert!(large.weighted > 0.0);
    }
    assert!(matches!(
        hybrid_norm_desk(&h, 0, &t, &[], beta),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn hybrid_norm_of_thick_supported_field() {
    let t = thin_tube();
    let g = seminorm_grid(1.0 / 16.0);
    let beta = gap_constants(4).unwrap().beta;
    let rb = t.boundary_radius();
    assert!(rb < 5.0);
    let h = WarpedField::conformal(4, g, &g.from_fn(|r, _| bump(r, 5.0, 5.8)));
    let hn = hybrid_norm_desk(&h, 0, &t, &thin_basepoints(&t, 4), beta).unwrap();
    assert_eq!(hn.weighted, 0.0);
    assert_eq!(hn.value, hn.sup.max(hn.global));
}

#[test]
fn hybrid_norm_is_a_norm() {
    let t = thin_tube();
    let g = seminorm_grid(1.0 / 16.0);
    let beta = gap_constants(4).unwrap().beta;
    let pts = thin_basepoints(&t, 3);
    for seed in 0..2 {
        let a = smooth_random(4, g, 0.8, 4.5, 100 + seed);
        let b = smooth_random(4, g, 1.2, 5.0, 200 + seed);
        for kind in [0, 2] {
            let na = hybrid_norm_desk(&a, kind, &t, &pts, beta).unwrap().value;
            let nb = hybrid_norm_desk(&b, kind, &t, &pts, beta).unwrap().value;
            let nab = hybrid_norm_desk(&a.axpy(1.0, &b), kind, &t, &pts, beta).unwrap().value;
            assert!(nab <= (na + nb) * (1.0 + 1e-12));
            let ns = hybrid_norm_desk(&a.scaled(-3.0), kind, &t, &pts, beta).unwrap().value;
            assert!((ns - 3.0 * na).abs() <= 1e-12 * ns);
        }
    }
}

/// Invariant positive test function: depends on the distance to the axis and
/// on t through the period.
fn invariant_u(ell: f64) -> impl Fn(&HPoint) -> f64 {
    move |z: &HPoint| {
        let c = point_to_cylinder(z);
        (2.0 + (TAU * c.t / ell).sin()) * (-c.r).exp()
    }
}

#[test]
fn transfer_thick_point_is_equality() {
    let t = tube(4, 1.5, &[0.4], 0.1);
    let mut rng = seeded(4);
    for r in [0.0, 1.0, 3.0] {
        let x = point_at(r, unit_vector(3, &mut rng), 0.3);
        let c = transfer_check(&t, &x, invariant_u(1.5), 4000, 9).unwrap();
        assert!(c.single_sheet(), "{c:?}");
        assert!((c.lhs - c.rhs).abs() <= 1e-6 * c.lhs);
    }
}

#[test]
fn transfer_ball_volume() {
    let t = tube(5, 1.5, &[], 0.1);
    let c = transfer_check(&t, &axis_point(5, 0.0), |_| 1.0, 100, 1).unwrap();
    // vol B(1/2) in H^5 = 8 pi^2 / 3 int_0^{1/2} sinh^4
    let s: f64 = 0.5;
    let int = (3.0 * s - 2.0 * (2.0 * s).sinh() + (4.0 * s).sinh() / 4.0) / 8.0;
    assert!((c.ball_volume - 8.0 * std::f64::consts::PI.powi(2) / 3.0 * int).abs() < 1e-13);
    assert!((c.lhs - c.ball_volume).abs() < 1e-12);
}

#[test]
fn transfer_deep_thin_sweep() {
    let mut rng = seeded(77);
    let mut slack = Vec::new();
    for cfg in 0..50 {
        let n = [4, 5, 6][cfg % 3];
        let ell = 10f64.powf(rng.random_range(-3.0..-1.0));
        let angles: Vec<f64> = (0..(n - 1) / 2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = tube(n, ell, &angles, 0.1);
        let depth = rng.random_range(0.0..1.0) * t.boundary_radius().min(2.0);
        let x = point_at(depth, unit_vector(n - 1, &mut rng), 0.0);
        let c = transfer_check(&t, &x, invariant_u(ell), 400, cfg as u64).unwrap();
        assert!(c.holds(0.0), "config {cfg}: {c:?}");
        assert!(c.max_omega > 1);
        slack.push(c.rhs / c.lhs);
    }
    assert!(slack.iter().all(|s| *s >= 1.0));
}

#[test]
fn transfer_localized_at_a_point_recovers_count_ratio() {
    let t = tube(4, 0.05, &[1.1], 0.1);
    let mut rng = seeded(8);
    let x = point_at(0.3, unit_vector(3, &mut rng), 0.0);
    let omega = orbit_count_ambient(&t, &x, 1.0).unwrap();
    let preimages = (-200..=200)
        .filter(|&k| dist(&t.phi().apply(&x, k).unwrap(), &x) < 0.5)
        .count();
    let expect = omega as f64 / preimages as f64;
    assert!(expect > 1.0);
    let mut errs = Vec::new();
    for rho in [0.2, 0.1, 0.05] {
        let tb = &t;
        let xr = &x;
        let u = move |z: &HPoint| {
            let s = quotient_distance(tb, xr, z).unwrap() / rho;
            if s < 1.0 {
                (1.0 - s * s).powi(2)
            } else {
                0.0
            }
        };
        let c = transfer_check(&t, &x, u, 20000, 3).unwrap();
        assert!(c.lhs > 0.0 && c.holds(0.0));
        errs.push((c.rhs / c.lhs - expect).abs() / expect);
    }
    assert!(errs[2] < 1e-12, "{errs:?}");
    assert!(errs[0] >= errs[2]);
}

fn cond_grid(r0: f64, r1: f64, nr: usize) -> TubeGrid {
    TubeGrid::with_counts(r0, r1, nr, 1.0, 8, FdOrder::Second).unwrap()
}

#[test]
fn conditioning_matches_reference_and_meets_gap() {
    for (n, reference) in [(4, COND_N4), (5, COND_N5)] {
        let rep = discrete_l_conditioning(&cond_grid(0.5, 6.0, 177), n).unwrap();
        assert!((rep.smallest - reference).abs() < 1e-9 * reference, "{}", rep.smallest);
        assert!(rep.meets_gap(), "{rep:?}");
        assert!(rep.smallest >= lambda0(n) * (1.0 - 10.0 * rep.dr));
        assert_eq!(rep.modes.len(), 5);
        assert!(rep.modes.iter().all(|m| m.iterations < MAX_INVERSE_ITERATIONS));
    }
}

#[test]
fn conditioning_is_stable_under_refinement() {
    for n in [4, 5] {
        let vals: Vec<f64> = [177, 353, 705]
            .iter()
            .map(|&nr| discrete_l_conditioning(&cond_grid(0.5, 6.0, nr), n).unwrap().smallest)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{vals:?}");
            assert!((w[0] - w[1]).abs() < 0.05 * w[0], "{vals:?}");
        }
        assert!(vals[2] >= lambda0(n));
    }
}

#[test]
fn conditioning_grows_as_the_segment_shrinks() {
    for n in [4, 5] {
        let vals: Vec<f64> = [(0.5, 6.0, 177), (1.0, 5.5, 145), (1.5, 5.0, 113), (2.0, 4.5, 81)]
            .iter()
            .map(|&(a, b, nr)| discrete_l_conditioning(&cond_grid(a, b, nr), n).unwrap().smallest)
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0], "{vals:?}");
        }
    }
}

#[test]
fn conditioning_blocks_reassemble_the_dense_spectrum() {
    for nt in [5, 6] {
        let g = TubeGrid::with_counts(0.7, 3.0, 20, 1.3, nt, FdOrder::Second).unwrap();
        let n = 5;
        let mut blocks = Vec::new();
        for (_, symbol, mult) in mode_symbols(&g) {
            let spec = ModeBlock::assemble(&g, n, symbol).unwrap().spectrum();
            for _ in 0..mult {
                blocks.extend_from_slice(&spec);
            }
        }
        blocks.sort_by(f64::total_cmp);
        let mut dense = dense_spectrum(&g, n).unwrap();
        dense.sort_by(f64::total_cmp);
        assert_eq!(blocks.len(), dense.len());
        for (a, b) in blocks.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "nt {nt}: {a} vs {b}");
        }
        let (low, _) = ModeBlock::assemble(&g, n, 0.0).unwrap().smallest().unwrap();
        let best = discrete_l_conditioning(&g, n).unwrap().smallest;
        assert!((best - dense[0]).abs() < 1e-7 * dense[0]);
        assert!(best <= low);
    }
}

#[test]
fn conditioning_trace_direction_quotient() {
    let g = cond_grid(0.5, 6.0, 177);
    for n in [4, 5, 6] {
        let block = ModeBlock::assemble(&g, n, 0.0).unwrap();
        let m = g.nr - 2;
        let mut x = DVector::zeros(block.dim());
        for i in 1..=m {
            let b = bump(g.r(i), 1.0, 5.0);
            for c in 0..3 {
                x[4 * (i - 1) + c] = b;
            }
        }
        let q = block.quotient(&x);
        assert!(q >= 2.0 * (n as f64 - 1.0) * (1.0 - 1e-6), "n {n}: {q}");
    }
}

#[test]
fn conditioning_inverse_iteration_agrees_with_full_spectrum() {
    let g = cond_grid(0.5, 4.0, 60);
    for (_, symbol, _) in mode_symbols(&g) {
        let block = ModeBlock::assemble(&g, 4, symbol).unwrap();
        let (low, _) = block.smallest().unwrap();
        let spec = block.spectrum();
        let min = spec.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((low - min).abs() < 1e-6 * min, "{low} vs {min}");
        // symmetric positive energy and mass
        assert!(block.energy.is_square());
        let diff: DMatrix<f64> = &block.energy - block.energy.transpose();
        assert_eq!(diff.amax(), 0.0);
    }
}
