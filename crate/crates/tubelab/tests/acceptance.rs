//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::RngExt;
use serde_json::Value;
use tubelab::{run, Experiment, ExperimentConfig, Report};
use tubelab_core::hyperbolic::{
    cylinder_to_point, dist, point_to_cylinder, radial_comparison, CylinderCoords, HPoint, TubeIsometry,
    RADIAL_COMPARISON_C0,
};
use tubelab_core::sampling::{random_rotation, seeded, unit_vector};
use tubelab_core::spectral::{lambda0, scalar_rayleigh, transfer_check};
use tubelab_core::tube::TubeQuotient;
use tubelab_core::warped::operators::{weitzenboeck_constant_curvature, weitzenboeck_pointwise};
use tubelab_core::warped::{FdOrder, ScalarField, TubeGrid};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::parse(json).expect("acceptance config")
}

fn run_json(exp: Experiment, json: &str) -> Result<Report, String> {
    run(exp, &config(json)).map_err(|e| format!("{exp} failed: {e}"))
}

fn per_n_max_ratio(r: &Report) -> Vec<(String, f64)> {
    r.stats["per_n"]
        .as_object()
        .map(|m| {
            m.iter()
                .map(|(k, v)| (k.clone(), v["max_ratio"].as_f64().unwrap_or(f64::NAN)))
                .collect()
        })
        .unwrap_or_default()
}

fn c1() -> Outcome {
    let rep = run_json(
        Experiment::Constants,
        r#"{"schema": 1, "n_list": [4,5,6,7,8,9,10,11,12,13,14,15,16]}"#,
    )?;
    let text = String::from_utf8_lossy(&rep.csv).into_owned();
    let row = |n: usize| {
        text.lines()
            .find(|l| l.starts_with(&format!("{n},")))
            .unwrap_or("")
            .to_string()
    };
    let exact = row(4).starts_with("4,2.0,") && row(13).starts_with("13,34.0,");
    check(
        rep.passed() && rep.rows == 13 && exact,
        format!(
            "13 rows, {} violations, lambda0(4)=2 and lambda0(13)=34: {exact}",
            rep.violations.len()
        ),
    )
}

fn random_point(n: usize, rng: &mut impl rand::Rng) -> HPoint {
    let c = CylinderCoords::new(
        rng.random_range(0.0..5.0),
        unit_vector(n - 1, rng),
        rng.random_range(-3.0..3.0),
    );
    cylinder_to_point(&c).unwrap()
}

fn c2() -> Outcome {
    let mut rng = seeded(2);
    let (mut worst_iso, mut worst_trip) = (0.0f64, 0.0f64);
    for i in 0..10_000 {
        let n = 4 + i % 6;
        let (x, y) = (random_point(n, &mut rng), random_point(n, &mut rng));
        // one random loxodromic isometry or its inverse; longer translations
        // push coordinates past where f64 can hold 1e-9 in the distance
        let phi = TubeIsometry::new(rng.random_range(0.01..3.0), random_rotation(n - 1, &mut rng)).unwrap();
        let k = if rng.random_bool(0.5) { 1 } else { -1 };
        let d = dist(&x, &y);
        let e = (dist(&phi.apply(&x, k).unwrap(), &phi.apply(&y, k).unwrap()) - d).abs() / d.max(1.0);
        worst_iso = worst_iso.max(e);
        let c = point_to_cylinder(&x);
        let back = cylinder_to_point(&c).unwrap();
        worst_trip = worst_trip.max((back.coords() - x.coords()).amax() / x.coords()[0]);
    }
    check(
        worst_iso < 1e-9 && worst_trip < 1e-10,
        format!("max invariance error {worst_iso:.2e}, max round-trip error {worst_trip:.2e}"),
    )
}

fn c3() -> Outcome {
    let mut rng = seeded(3);
    let (mut monotone, mut worst) = (true, 0.0f64);
    for i in 0..10_000 {
        let n = 4 + i % 6;
        let rp = rng.random_range(2.0..12.0);
        let r = rng.random_range(rp..=12.0);
        let a = CylinderCoords::new(0.0, unit_vector(n - 1, &mut rng), rng.random_range(-2.0..2.0));
        let b = CylinderCoords::new(0.0, unit_vector(n - 1, &mut rng), rng.random_range(-2.0..2.0));
        let (inner, outer) = radial_comparison(rp, r, &a, &b).unwrap();
        monotone &= inner <= outer * (1.0 + 1e-12);
        if inner > 0.0 {
            worst = worst.max(outer / (inner * (r - rp).exp()));
        }
    }
    check(
        monotone && worst <= RADIAL_COMPARISON_C0,
        format!("nondecreasing outward: {monotone}, max Lipschitz factor / e^(R-R') = {worst:.5} (C0 = {RADIAL_COMPARISON_C0})"),
    )
}

const LOG_ELLS: &str = "[1e-4, 1e-3, 1e-2, 1e-1]";
const DOUBLED_ELLS: &str =
    "[1e-4, 3.1622776601683795e-4, 1e-3, 3.1622776601683795e-3, 1e-2, 3.1622776601683795e-2, 1e-1]";

/// Runs a sweep at base and doubled density and compares per-dimension constants.
fn doubling(exp: Experiment, extra: &str) -> Outcome {
    let json = |ells: &str, k: usize| {
        format!(
            r#"{{"schema": 1, "n_list": [4,5,6,7,8,9], "ell_list": {ells}, "angle_spec": "random:{k}", "seed": 20240601{extra}}}"#
        )
    };
    let base = run_json(exp, &json(LOG_ELLS, 20))?;
    let dense = run_json(exp, &json(DOUBLED_ELLS, 40))?;
    let (b, d) = (per_n_max_ratio(&base), per_n_max_ratio(&dense));
    let mut ok = base.passed() && dense.passed() && b.len() == 6 && d.len() == 6;
    let mut parts = Vec::new();
    for ((n, cb), (_, cd)) in b.iter().zip(&d) {
        let drift = cd.max(*cb) / cd.min(*cb);
        ok &= cb.is_finite() && cd.is_finite() && drift < 2.0;
        parts.push(format!("C_{n}={cb:.2}->{cd:.2}"));
    }
    check(ok, format!("{} + {} rows; {}", base.rows, dense.rows, parts.join(" ")))
}

fn c4() -> Outcome {
    doubling(Experiment::Torus, r#", "r": ["inj", "2inj", "10inj", 1.0]"#)
}

fn c5() -> Outcome {
    doubling(Experiment::Count, r#", "depth_steps": 10"#)
}

fn c6() -> Outcome {
    let mut rng = seeded(6);
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let n = 4 + i % 6;
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = &a + a.transpose();
        let dev = (weitzenboeck_pointwise(&h, n) - weitzenboeck_constant_curvature(&h, n)).amax();
        worst = worst.max(dev);
    }
    check(worst < 1e-12, format!("max deviation {worst:.2e} over 1e5 matrices"))
}

fn c7() -> Outcome {
    let rep = run_json(
        Experiment::Identity,
        r#"{"schema": 1, "n": 4, "angle_spec": [[0.7]], "refinements": 3}"#,
    )?;
    let s = &rep.stats["per_n"]["4"];
    let res: Vec<f64> = s["residuals"]
        .as_array()
        .map(|v| v.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let orders: Vec<f64> = s["observed_orders"]
        .as_array()
        .map(|v| v.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let fine = res.last().copied().unwrap_or(f64::NAN);
    let ok = rep.passed() && fine < 1e-4 && orders.len() == 2 && orders.iter().all(|o| (1.7..=2.3).contains(o));
    check(
        ok,
        format!("residual {fine:.3e} at dr = 1/64, observed orders {orders:.3?}"),
    )
}

fn tail_rayleigh() -> f64 {
    let (lo, hi, ramp) = (1.0, 25.0, 3.0);
    let ramp_fn = |s: f64| (std::f64::consts::PI * s / (2.0 * ramp)).sin().powi(2);
    let f = |r: f64| {
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
    let g = TubeGrid::new(0.5, 25.5, 1.0 / 64.0, 1.0, 0.25, FdOrder::Second).unwrap();
    scalar_rayleigh(&ScalarField::from_fn(g, |r, _| f(r)), 4).unwrap()
}

fn c8() -> Outcome {
    let rep = run_json(
        Experiment::Gap,
        r#"{"schema": 1, "n_list": [4, 5, 6], "fields": 100, "seed": 7}"#,
    )?;
    let tail = tail_rayleigh();
    let per_op = &rep.stats["per_op"];
    let min = |k: &str| per_op[k]["min_value"].as_f64().unwrap_or(f64::NAN);
    let tensor_ok = (4..=6).all(|n| min(&format!("tensor_gap/{n}")) >= lambda0(n));
    let ok = rep.passed() && rep.rows == 900 && tensor_ok && (2.25 * (1.0 - 5.0 / 64.0)..1.1 * 2.25).contains(&tail);
    check(
        ok,
        format!(
            "{} rows, {} violations; scalar min {:.4}; tail family {tail:.4}; tensor min {:.3}/{:.3}/{:.3}",
            rep.rows,
            rep.violations.len(),
            min("scalar_rayleigh/4"),
            min("tensor_gap/4"),
            min("tensor_gap/5"),
            min("tensor_gap/6")
        ),
    )
}

fn c9() -> Outcome {
    let tube = TubeQuotient::new(TubeIsometry::from_angles(4, 1.5, &[0.4]).unwrap(), 0.1).unwrap();
    let u = |z: &HPoint| {
        let c = point_to_cylinder(z);
        (2.0 + (std::f64::consts::TAU * c.t / 1.5).sin()) * (-c.r).exp()
    };
    let mut rng = seeded(9);
    let mut worst_thick = 0.0f64;
    for r in [0.0, 1.0, 3.0] {
        let x = cylinder_to_point(&CylinderCoords::new(r, unit_vector(3, &mut rng), 0.3)).unwrap();
        let c = transfer_check(&tube, &x, u, 4000, 9).map_err(|e| e.to_string())?;
        if !c.single_sheet() {
            return Err(format!("thick basepoint at r = {r} sees {} preimages", c.max_preimages));
        }
        worst_thick = worst_thick.max((c.lhs - c.rhs).abs() / c.lhs);
    }
    let rep = run_json(
        Experiment::Transfer,
        r#"{"schema": 1, "n_list": [4, 5, 6], "ell_list": [0.005, 0.02, 0.08], "angle_spec": "random:2", "samples": 1000, "seed": 9}"#,
    )?;
    let min_ratio = rep.stats["min_ratio"].as_f64().unwrap_or(f64::NAN);
    check(
        worst_thick <= 1e-6 && rep.passed() && rep.rows >= 50 && min_ratio >= 1.0,
        format!(
            "thick relative gap {worst_thick:.2e}; {} thin configurations, min rhs/lhs {min_ratio:.3}",
            rep.rows
        ),
    )
}

fn c10() -> Outcome {
    let rep = run_json(
        Experiment::Conditioning,
        r#"{"schema": 1, "n_list": [4, 5], "refinements": 3}"#,
    )?;
    let mut ok = rep.passed() && rep.rows == 6;
    let mut parts = Vec::new();
    for n in ["4", "5"] {
        let s = &rep.stats["per_n"][n];
        let drift = s["max_relative_drift"].as_f64().unwrap_or(f64::NAN);
        ok &= s["nonincreasing"].as_bool() == Some(true) && drift < 0.05;
        let last = s["values"]
            .as_array()
            .and_then(|v| v.last())
            .and_then(Value::as_f64)
            .unwrap_or(f64::NAN);
        parts.push(format!("n={n}: {last:.6} drift {drift:.2e}"));
    }
    check(ok, parts.join("; "))
}

fn c11() -> Outcome {
    let rep = run_json(
        Experiment::Newton,
        r#"{"schema": 1, "n": 4, "eps_list": [1e-2, 1e-3, 1e-4]}"#,
    )?;
    let spread = rep.stats["ratio_spread"].as_f64().unwrap_or(f64::NAN);
    let worst = |k: &str| {
        rep.stats[k]
            .as_array()
            .map(|v| v.iter().filter_map(Value::as_f64).fold(0.0, f64::max))
            .unwrap_or(f64::NAN)
    };
    let (ric, bia) = (worst("ricci_residual"), worst("bianchi_residual"));
    check(
        rep.passed() && rep.rows == 3 && spread < 3.0 && ric < 1e-7 && bia < 1e-7,
        format!("ratio spread {spread:.4}, Ricci residual {ric:.2e}, Bianchi residual {bia:.2e}"),
    )
}

fn c12() -> Outcome {
    let cases: [(Experiment, &str); 8] = [
        (Experiment::Constants, r#"{"schema": 1}"#),
        (
            Experiment::Count,
            r#"{"schema": 1, "n_list": [4, 7], "ell_list": [1e-3, 0.05], "angle_spec": "random:3", "seed": 12}"#,
        ),
        (
            Experiment::Torus,
            r#"{"schema": 1, "n_list": [5, 8], "ell_list": [1e-3, 0.05], "angle_spec": "random:3", "seed": 12}"#,
        ),
        (
            Experiment::Transfer,
            r#"{"schema": 1, "n_list": [4], "ell_list": [0.03], "angle_spec": "random:2", "samples": 300, "seed": 12}"#,
        ),
        (
            Experiment::Gap,
            r#"{"schema": 1, "n_list": [4, 5], "fields": 10, "seed": 12}"#,
        ),
        (Experiment::Identity, r#"{"schema": 1, "refinements": 2}"#),
        (
            Experiment::Conditioning,
            r#"{"schema": 1, "n_list": [4], "refinements": 2}"#,
        ),
        (Experiment::Newton, r#"{"schema": 1, "eps_list": [1e-3]}"#),
    ];
    let mut differing = Vec::new();
    for (exp, json) in cases {
        let mut outputs = Vec::new();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            outputs.push(pool.install(|| run_json(exp, json))?.csv);
        }
        outputs.push(run_json(exp, json)?.csv);
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(exp.name());
        }
    }
    check(
        differing.is_empty(),
        format!("8 experiments x 3 runs (1, 3, default threads); differing: {differing:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("constants table", Duration::from_secs(1), c1),
        ("hyperbolic core exactness", Duration::from_secs(5), c2),
        ("radial comparison", Duration::from_secs(5), c3),
        ("torus count sweep", Duration::from_secs(300), c4),
        ("depth count sweep", Duration::from_secs(300), c5),
        ("Weitzenboeck dual formulas", Duration::from_secs(5), c6),
        ("weighted identity", Duration::from_secs(60), c7),
        ("scalar and tensor gaps", Duration::from_secs(120), c8),
        ("transfer inequality", Duration::from_secs(120), c9),
        ("discrete conditioning", Duration::from_secs(120), c10),
        ("Newton from perturbed data", Duration::from_secs(180), c11),
        ("determinism", Duration::from_secs(600), c12),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (took <= budget, d),
            Err(d) => (false, d),
        };
        let budget_note = if took > budget { " OVER BUDGET" } else { "" };
        println!(
            "criterion {:>2} {}: {name} ({:.2} s of {} s{budget_note}) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs()
        );
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
