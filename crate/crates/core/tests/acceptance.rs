//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting.

use std::sync::Arc;
use std::time::Instant;

use fitolab::functional::{
    catalog_functional, vertical_derivative_into, BumpConfig, Bracket, Functional, ItoCheckOptions,
};
use fitolab::lab::{execute, with_threads, ExperimentConfig, ExperimentKind, FunctionalSpec, Steps, ThetaSpec};
use fitolab::pathspace::{
    bump_path, ito_integral, stop_path, BumpSpec, IntegrandPath, Path, TimeGrid, WienerGenerator,
};
use fitolab::representation::{
    build_ladder, convergence_ladder, integrand_from_functional, pairing_check, reconstruct, stabilization_check,
    stop_process, strict_locality_diagnostic, theta_independence_check, truncate_integrand, IntegrandOnGrid,
    ProcessOnGrid, ResidualKind, ThetaInfinite, WienerExit,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn verdict(criterion: u32, title: &str, passed: bool, detail: &str) {
    let line = format!("criterion {criterion} [{}] {title}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::Write::write_all(&mut std::io::stderr(), line.as_bytes());
    assert!(passed, "criterion {criterion} failed: {detail}");
}

/// Central vertical gradient with the default hybrid step.
fn grad(f: &dyn Functional, k: usize, p: &Path) -> Vec<f64> {
    let cfg = BumpConfig::default();
    let mut out = vec![0.0; p.dim()];
    vertical_derivative_into(f, k, &p.view(), cfg.vertical, cfg.scheme, &mut out).unwrap();
    out
}

fn uniform(horizon: f64, steps: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(horizon, steps).unwrap())
}

// ---------------------------------------------------------------------------
// Criterion 1: exactness suite
// ---------------------------------------------------------------------------

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn arb_grid() -> impl Strategy<Value = Arc<TimeGrid>> {
    prop::collection::vec(1u32..=64, 2..=24).prop_map(|ticks| {
        let mut t = 0.0;
        let mut times = vec![0.0];
        for d in ticks {
            t += d as f64 / 64.0;
            times.push(t);
        }
        Arc::new(TimeGrid::new(times).unwrap())
    })
}

/// A grid with a path of finite values in `[-100, 100]`.
fn arb_path() -> impl Strategy<Value = Path> {
    (arb_grid(), 1usize..=3).prop_flat_map(|(grid, dim)| {
        prop::collection::vec(-100.0f64..100.0, grid.len() * dim)
            .prop_map(move |values| Path::new(grid.clone(), dim, values).unwrap())
    })
}

fn bitwise(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn stop_bump_algebra() -> Result<(), String> {
    let strategy = arb_path().prop_flat_map(|p| {
        let n = p.grid().len();
        let d = p.dim();
        (Just(p), 0..n, 0..n, 0..d, -10.0f64..10.0)
    });
    runner()
        .run(&strategy, |(p, j, k, i, h)| {
            let twice = stop_path(&stop_path(&p, j).unwrap(), k).unwrap();
            prop_assert!(bitwise(twice.values(), stop_path(&p, j.min(k)).unwrap().values()));
            let b = BumpSpec::new(k, i, h);
            let bump_then_stop = stop_path(&bump_path(&p, &b).unwrap(), k).unwrap();
            let stop_then_bump = bump_path(&stop_path(&p, k).unwrap(), &b).unwrap();
            prop_assert!(bitwise(bump_then_stop.values(), stop_then_bump.values()));
            let view = p.view().stopped(k).shifted(k, i, h).to_path();
            prop_assert!(bitwise(view.values(), stop_then_bump.values()));
            let bumped = bump_path(&p, &b).unwrap();
            let d = p.dim();
            prop_assert!(bitwise(&bumped.values()[..k * d], &p.values()[..k * d]));
            for m in k..p.grid().len() {
                for c in 0..d {
                    let expected = if c == i { p.value(m, c) + h } else { p.value(m, c) };
                    prop_assert_eq!(bumped.value(m, c).to_bits(), expected.to_bits());
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn left_point_adaptedness() -> Result<(), String> {
    let strategy = arb_path().prop_flat_map(|p| {
        let steps = p.grid().steps();
        let d = p.dim();
        let len = p.values().len();
        (
            Just(p),
            0..=steps,
            prop::collection::vec(-10.0f64..10.0, steps * d),
            prop::collection::vec(-10.0f64..10.0, len),
            prop::collection::vec(-10.0f64..10.0, steps * d),
        )
    });
    let f = catalog_functional("exponential", &[]).unwrap();
    runner()
        .run(&strategy, |(p, k, rows, noise, other_rows)| {
            let d = p.dim();
            let mut future = p.values().to_vec();
            for (v, e) in future.iter_mut().zip(&noise).skip((k + 1) * d) {
                *v += e;
            }
            let q = Path::new(p.shared_grid().clone(), d, future).unwrap();
            let mut altered = rows.clone();
            altered[k * d..].copy_from_slice(&other_rows[k * d..]);
            let a = ito_integral(&IntegrandPath::new(d, rows).unwrap(), &p, k).unwrap();
            let b = ito_integral(&IntegrandPath::new(d, altered).unwrap(), &q, k).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
            if d == 1 && k < p.grid().steps() {
                let scaled = |x: &Path| {
                    let v: Vec<f64> = x.values().iter().map(|w| w / 50.0).collect();
                    Path::new(x.shared_grid().clone(), 1, v).unwrap()
                };
                let ga = grad(f.as_ref(), k, &scaled(&p));
                let gb = grad(f.as_ref(), k, &scaled(&q));
                prop_assert!(bitwise(&ga, &gb));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Scenarios, a seed, random integrand rows and random stopping indices.
fn arb_ensemble() -> impl Strategy<Value = (WienerGenerator, IntegrandOnGrid, Vec<usize>, f64)> {
    (arb_grid(), 1usize..=2, 1usize..=4, any::<u64>()).prop_flat_map(|(grid, d, p, seed)| {
        let steps = grid.steps();
        (
            Just(WienerGenerator::new(grid.clone(), d, p, seed).unwrap()),
            prop::collection::vec(-10.0f64..10.0, p * steps * d)
                .prop_map(move |rows| IntegrandOnGrid::new(grid.clone(), p, d, rows).unwrap()),
            prop::collection::vec(0..=steps, p),
            -5.0f64..5.0,
        )
    })
}

fn stopped_reconstruction_identity() -> Result<(), String> {
    runner()
        .run(&arb_ensemble(), |(src, phi, taus, m0)| {
            let lhs = reconstruct(m0, &truncate_integrand(&phi, &taus).unwrap(), &src).unwrap();
            let rhs = stop_process(&reconstruct(m0, &phi, &src).unwrap(), &taus).unwrap();
            prop_assert!(bitwise(lhs.values(), rhs.values()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn truncated_row_identity() -> Result<(), String> {
    runner()
        .run(&arb_ensemble(), |(_, phi, taus, _)| {
            let cut = truncate_integrand(&phi, &taus).unwrap();
            let zero = vec![0.0; phi.dim()];
            for (s, &tau) in taus.iter().enumerate() {
                for k in 0..phi.grid().steps() {
                    let expected: &[f64] = if k + 1 <= tau { phi.row(s, k) } else { &zero };
                    prop_assert!(bitwise(cut.row(s, k), expected));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn linear_reconstruction() -> Result<(), String> {
    let f = catalog_functional("linear", &[]).unwrap();
    let strategy = (arb_grid(), 1usize..=4, any::<u64>());
    runner()
        .run(&strategy, |(grid, p, seed)| {
            let src = WienerGenerator::new(grid, 1, p, seed).unwrap();
            let m = ProcessOnGrid::from_functional(f.as_ref(), &src).unwrap();
            let phi = integrand_from_functional(f.as_ref(), &src, &BumpConfig::default()).unwrap();
            prop_assert!(phi.rows().iter().all(|&r| r == 1.0));
            let rebuilt = reconstruct(m.initial(), &phi, &src).unwrap();
            prop_assert!(bitwise(rebuilt.values(), m.values()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

#[test]
fn criterion_1_exactness_suite() {
    let parts: [(&str, fn() -> Result<(), String>); 5] = [
        ("stop/bump algebra", stop_bump_algebra),
        ("left-point adaptedness", left_point_adaptedness),
        ("stopped-reconstruction identity", stopped_reconstruction_identity),
        ("truncated-row identity", truncated_row_identity),
        ("linear reconstruction", linear_reconstruction),
    ];
    let mut failures = Vec::new();
    for (name, run) in parts {
        if let Err(e) = run() {
            failures.push(format!("{name}: {e}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("5 properties x {CASES} cases, all bitwise exact")
    } else {
        failures.join("; ")
    };
    verdict(1, "exactness suite", failures.is_empty(), &detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: derivative oracles
// ---------------------------------------------------------------------------

/// Analytic gradients written out independently of the library.
fn oracle_gradient(id: &str, p: &Path, k: usize) -> Vec<f64> {
    let grid = p.grid();
    let t = grid.time(k);
    let w = p.row(k);
    match id {
        "linear" => vec![1.0],
        "quadratic" | "conditional-square" => vec![2.0 * w[0]],
        "integral" => vec![0.0],
        "anticipated-average" => vec![grid.horizon() - t],
        "exponential" => vec![(w[0] - t / 2.0).exp()],
        "inverse-bessel" => {
            let x = [1.0 + w[0], w[1], w[2]];
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            x.iter().map(|xi| -xi / (r * r * r)).collect()
        }
        _ => unreachable!(),
    }
}

/// `count` random `(path, k)` states from seeded Wiener paths.
fn random_states(dim: usize, count: usize, seed: u64, accept: impl Fn(&Path, usize) -> bool) -> Vec<(Path, usize)> {
    let grid = uniform(1.0, 256);
    let src = WienerGenerator::new(grid, dim, 10_000, seed).unwrap();
    let mut out = Vec::new();
    let mut s = 0;
    while out.len() < count {
        let p = src.generate(s);
        let k = (s * 97 + 13) % 257;
        if accept(&p, k) {
            out.push((p, k));
        }
        s += 1;
    }
    out
}

#[test]
fn criterion_2_derivative_oracles() {
    let mut worst_poly = 0.0f64;
    for id in ["linear", "quadratic", "conditional-square", "integral", "anticipated-average"] {
        let f = catalog_functional(id, &[]).unwrap();
        for (p, k) in random_states(1, 20, 101, |_, _| true) {
            let g = grad(f.as_ref(), k, &p);
            worst_poly = worst_poly.max((g[0] - oracle_gradient(id, &p, k)[0]).abs());
        }
    }
    let mut worst_smooth = 0.0f64;
    let f = catalog_functional("exponential", &[]).unwrap();
    for (p, k) in random_states(1, 20, 202, |_, _| true) {
        let g = grad(f.as_ref(), k, &p);
        worst_smooth = worst_smooth.max((g[0] - oracle_gradient("exponential", &p, k)[0]).abs());
    }
    let f = catalog_functional("inverse-bessel", &[]).unwrap();
    let away = |p: &Path, k: usize| {
        let w = p.row(k);
        ((1.0 + w[0]).powi(2) + w[1] * w[1] + w[2] * w[2]).sqrt() > 0.25
    };
    for (p, k) in random_states(3, 20, 303, away) {
        let g = grad(f.as_ref(), k, &p);
        for (a, b) in g.iter().zip(oracle_gradient("inverse-bessel", &p, k)) {
            worst_smooth = worst_smooth.max((a - b).abs());
        }
    }
    let passed = worst_poly <= 1e-10 && worst_smooth <= 1e-6;
    verdict(
        2,
        "derivative oracles",
        passed,
        &format!("max error polynomial {worst_poly:.3e} (<= 1e-10), exponential/inverse-bessel {worst_smooth:.3e} (<= 1e-6)"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: representation convergence
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_representation_convergence() {
    let f = catalog_functional("quadratic", &[]).unwrap();
    let steps: Vec<usize> = (10..=14).map(|e| 1usize << e).collect();
    let conv = convergence_ladder(
        f.as_ref(),
        ResidualKind::Representation(BumpConfig::default()),
        1.0,
        &steps,
        10_000,
        31,
    )
    .unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for (pt, &n) in conv.points.iter().zip(&steps) {
        // Var(sum (dW^2 - dt)) = 2 sum dt^2 on the grid.
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let target = (2.0 * (0..n).map(|k| grid.dt(k).powi(2)).sum::<f64>()).sqrt();
        let ratio = pt.terminal_rms.value / target;
        passed &= (ratio - 1.0).abs() <= 0.2;
        detail.push(format!("N={n}: {:.5}/{:.5}", pt.terminal_rms.value, target));
    }
    let slope = conv.slope.value;
    passed &= (0.4..=0.6).contains(&slope);
    verdict(
        3,
        "representation convergence",
        passed,
        &format!("{}; slope {slope:.4} in [0.4, 0.6]", detail.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: pairing identity
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_pairing_identity() {
    let src = WienerGenerator::new(uniform(1.0, 1024), 1, 100_000, 41).unwrap();
    let pairs = [
        ("linear", "linear", 1.0),
        ("linear", "quadratic", 0.0),
        ("conditional-square", "conditional-square", 2.0),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (y, z, closed) in pairs {
        let stats = pairing_check(
            catalog_functional(y, &[]).unwrap(),
            catalog_functional(z, &[]).unwrap(),
            &src,
            &BumpConfig::default(),
        )
        .unwrap();
        let ok = stats.agrees_within(3.0);
        passed &= ok;
        detail.push(format!(
            "({y},{z}) lhs {:.4} rhs {:.4} diff {:.4} se {:.4} [closed form {closed}, lhs within 3 se: {}]",
            stats.lhs.value,
            stats.rhs.value,
            stats.difference.value,
            stats.difference.se(),
            stats.lhs.within(closed, 3.0)
        ));
    }
    verdict(4, "pairing identity", passed, &detail.join("; "));
}

// ---------------------------------------------------------------------------
// Criterion 5: strict locality and localization
// ---------------------------------------------------------------------------

/// `E[1/|x0 + W_T|]` by quadrature of the radial density of a 3-d Gaussian
/// centred at distance `r0`, independent of the library's closed form.
fn inverse_bessel_quadrature(r0: f64, t: f64) -> f64 {
    let c = 1.0 / (r0 * (2.0 * std::f64::consts::PI * t).sqrt());
    let g = |r: f64| c * ((-(r - r0).powi(2) / (2.0 * t)).exp() - (-(r + r0).powi(2) / (2.0 * t)).exp());
    let (a, b, n) = (0.0, r0 + 40.0 * t.sqrt(), 200_000);
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn criterion_5_strict_locality() {
    let start = Instant::now();
    let oracle = inverse_bessel_quadrature(1.0, 1.0);
    let f = catalog_functional("inverse-bessel", &[1.0, 0.0, 0.0]).unwrap();
    let src = WienerGenerator::new(uniform(1.0, 4096), 3, 100_000, 51).unwrap();
    let stats = strict_locality_diagnostic(f.as_ref(), &src, &[2.0, 4.0, 8.0]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let term = stats.terminal;
    let mut passed = (oracle - 0.6827).abs() < 5e-5;
    passed &= term.within(oracle, 3.0);
    passed &= stats.initial - term.value > 10.0 * term.se();
    let mut levels = Vec::new();
    for l in &stats.levels {
        passed &= l.mean.within(stats.initial, 3.0);
        levels.push(format!("n={}: {:.4} (se {:.4})", l.level, l.mean.value, l.mean.se()));
    }
    passed &= elapsed <= 300.0;
    verdict(
        5,
        "strict locality + localization",
        passed,
        &format!(
            "E[M(T)] {:.4} (se {:.4}) vs {oracle:.4}, {:.1} se below 1; {}; singular {}; {elapsed:.0}s",
            term.value,
            term.se(),
            (stats.initial - term.value) / term.se(),
            levels.join(", "),
            stats.singular_scenarios
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: stabilization
// ---------------------------------------------------------------------------

fn stabilization_fractions(id: &str, dim: usize, seed: u64) -> Vec<f64> {
    let f = catalog_functional(id, &[]).unwrap();
    let src = WienerGenerator::new(uniform(1.0, 1024), dim, 10_000, seed).unwrap();
    let m = ProcessOnGrid::from_functional(f.as_ref(), &src).unwrap();
    let phi = integrand_from_functional(f.as_ref(), &src, &BumpConfig::default()).unwrap();
    let ladder = build_ladder(&m, &[2.0, 4.0, 8.0, 16.0], &ThetaInfinite).unwrap();
    stabilization_check(&phi, &ladder).unwrap().iter().map(|s| s.agreement).collect()
}

#[test]
fn criterion_6_stabilization() {
    let quad = stabilization_fractions("quadratic", 1, 61);
    let bessel = stabilization_fractions("inverse-bessel", 3, 62);
    let nondecreasing = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
    let top = *quad.last().unwrap();
    let passed = nondecreasing(&quad) && top >= 0.999 && nondecreasing(&bessel);
    verdict(
        6,
        "stabilization",
        passed,
        &format!(
            "quadratic {quad:?} (top >= 0.999); inverse-bessel {bessel:?} (strictly increasing: {})",
            increasing(&bessel)
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: theta-independence
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_theta_independence() {
    let mut passed = true;
    let mut detail = Vec::new();
    for (id, dim) in [("quadratic", 1), ("inverse-bessel", 3), ("exponential", 1)] {
        let f = catalog_functional(id, &[]).unwrap();
        let src = WienerGenerator::new(uniform(1.0, 1024), dim, 1000, 71).unwrap();
        let m = ProcessOnGrid::from_functional(f.as_ref(), &src).unwrap();
        let phi = integrand_from_functional(f.as_ref(), &src, &BumpConfig::default()).unwrap();
        let exit = WienerExit::from_source(&src);
        let levels = [1.0, 2.0, 4.0, 8.0, 16.0];
        let r = theta_independence_check(&phi, &m, &levels, &ThetaInfinite, &exit).unwrap();
        passed &= r.passed() && r.compared > 0;
        detail.push(format!("{id}: {} cells compared, {} mismatches", r.compared, r.mismatches));
    }
    verdict(7, "theta-independence", passed, &detail.join("; "));
}

// ---------------------------------------------------------------------------
// Criterion 8: functional Ito formula
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_functional_ito_formula() {
    let steps = [256, 512, 1024, 2048, 4096];
    let exp = catalog_functional("exponential", &[]).unwrap();
    let expected = ItoCheckOptions {
        bracket: Bracket::Expected,
        ..ItoCheckOptions::default()
    };
    let conv = convergence_ladder(exp.as_ref(), ResidualKind::ItoFormula(expected), 1.0, &steps, 10_000, 81).unwrap();
    let realized = convergence_ladder(
        exp.as_ref(),
        ResidualKind::ItoFormula(ItoCheckOptions::default()),
        1.0,
        &steps,
        2_000,
        81,
    )
    .unwrap();
    let linear = catalog_functional("linear", &[]).unwrap();
    let src = WienerGenerator::new(uniform(1.0, 1024), 1, 1000, 82).unwrap();
    let mut zero = true;
    for bracket in [Bracket::Realized, Bracket::Expected] {
        let opts = ItoCheckOptions {
            bracket,
            ..ItoCheckOptions::default()
        };
        let stats = fitolab::representation::ito_residual_stats(linear.as_ref(), &src, &opts).unwrap();
        zero &= stats.identically_zero();
    }
    let slope = conv.slope.value;
    let passed = (0.4..=0.6).contains(&slope) && zero;
    verdict(
        8,
        "functional Ito formula",
        passed,
        &format!(
            "exponential slope {slope:.4} (se {:.4}) with dt-bracket; realized-bracket slope {:.4}; linear identically zero: {zero}",
            conv.slope.se(),
            realized.slope.value
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: reproducibility
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_reproducibility() {
    let spec = |k, id: &str| {
        let mut c = ExperimentConfig::new(k, Some(FunctionalSpec::new(id)));
        c.steps = Some(Steps::One(256));
        c.scenarios = Some(2_000);
        c.seed = 91;
        c
    };
    let mut configs = vec![
        spec(ExperimentKind::Derive, "exponential"),
        spec(ExperimentKind::Represent, "quadratic"),
        spec(ExperimentKind::Localize, "inverse-bessel"),
        spec(ExperimentKind::ItoCheck, "exponential"),
        spec(ExperimentKind::StrictLocal, "inverse-bessel"),
        spec(ExperimentKind::Hedge, "conditional-square"),
    ];
    let mut pairing = spec(ExperimentKind::Pairing, "conditional-square");
    pairing.pair_with = Some(FunctionalSpec::new("quadratic"));
    configs.push(pairing);
    let mut ladder = spec(ExperimentKind::Represent, "exponential");
    ladder.steps = Some(Steps::Ladder(vec![64, 128, 256]));
    ladder.theta = ThetaSpec::WienerExit;
    configs.push(ladder);
    let mut identical = 0;
    let mut failures = Vec::new();
    for c in &configs {
        let runs: Vec<_> = [1, 2, 8]
            .iter()
            .map(|&n| with_threads(Some(n), || execute(c)).unwrap().unwrap())
            .collect();
        if runs.iter().all(|r| r.files == runs[0].files) {
            identical += 1;
        } else {
            failures.push(c.experiment.as_str());
        }
    }
    verdict(
        9,
        "reproducibility",
        failures.is_empty(),
        &format!(
            "{identical}/{} experiments byte-identical with 1, 2 and 8 workers{}",
            configs.len(),
            if failures.is_empty() { String::new() } else { format!("; differing: {failures:?}") }
        ),
    );
}
