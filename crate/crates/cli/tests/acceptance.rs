//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use kerrsim::analysis::{
    error_probabilities, error_probability_oracle, monte_carlo_error, peak_distance, peak_distance_approx,
    theta_for_smallest_gap,
};
use kerrsim::circuit::{closed_form_phase, Protocol};
use kerrsim::discriminator::Detector;
use kerrsim::homodyne::{collapse_numerator, outcome_density};
use kerrsim::quadrature::integrate_with_breakpoints;
use kerrsim::rng;
use kerrsim::special::midpoint_error;
use kerrsim::states::{build_input_state, InputSpec, SignalState};
use kerrsim::Complex64 as C64;
use rand::Rng;
use serde_json::Value;

/// erfc(2)/2 to 20 digits.
const ERFC2_HALF: f64 = 0.002_338_867_490_523_632_919;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kerrsim"))
}

fn run_json(args: &[&str]) -> Value {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn unbounded(theta: f64, alpha: f64) -> Protocol {
    Protocol::new(theta, alpha).with_max_n_theta(f64::INFINITY)
}

fn random_spec<R: Rng>(rng: &mut R, n: u32) -> InputSpec {
    loop {
        let amps = (0..=n / 2)
            .map(|_| {
                let mut c = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (c(), c())
            })
            .collect();
        let spec = InputSpec::new(n, amps).unwrap();
        if build_input_state(&spec).is_ok() {
            return spec;
        }
    }
}

/// 20 seeded (n ≤ 8, θ, α ≤ 10³) configurations shared by criteria 3 and 4.
fn configurations() -> Vec<(SignalState, f64, f64)> {
    let mut r = rng::stream(2015, 3);
    (0..20)
        .map(|_| {
            let n = r.random_range(1..=8u32);
            let theta = r.random_range(1e-4..0.1) / n as f64;
            let alpha = r.random_range(1.0..1e3);
            (build_input_state(&random_spec(&mut r, n)).unwrap(), theta, alpha)
        })
        .collect()
}

fn ac1_reference_point() -> Outcome {
    let two = run_json(&["analyze", "--reproduce", "--n", "2"]);
    let asym = run_json(&["analyze", "--reproduce", "--asymptotic"]);
    let f = |v: &Value, key: &str| v["discussion"][key].as_f64().unwrap();
    let na2 = f(&two, "n_alpha");
    let na_inf = f(&asym, "n_alpha");
    let e2 = f(&two, "epsilon_max");
    let e_inf = f(&asym, "epsilon_max");
    let six_figures = |got: f64, want: f64| ((got - want) / want).abs() < 5e-7;
    let pass = six_figures(na2, 5.12e10)
        && six_figures(na_inf, 3.2e9)
        && (e2 - ERFC2_HALF).abs() < 1e-12
        && (e_inf - ERFC2_HALF).abs() < 1e-12
        && (e2 - 2.33887e-3).abs() < 5e-9;
    check(pass, format!("n_alpha = {na2:.6e} / {na_inf:.6e}, epsilon_max = {e2:.9e} / {e_inf:.9e}"))
}

fn ac2_phase_law() -> Outcome {
    let mut r = rng::stream(2015, 2);
    let mut worst = 0.0f64;
    let mut branches = 0;
    for case in 0..100 {
        let n = (case % 12) as u32 + 1;
        let theta = r.random_range(1e-5..0.1) / n as f64;
        let state = build_input_state(&random_spec(&mut r, n)).unwrap();
        let j = Protocol::new(theta, r.random_range(1.0..1e5)).evolve(&state).unwrap();
        let scale = theta * (n * (n + 1)) as f64 / 2.0;
        for b in j.branches() {
            // Closed forms written out per parity.
            let want = if n.is_multiple_of(2) {
                let m = b.ket.0 as f64 - n as f64 / 2.0;
                -m * (n as f64 - 1.0) * theta
            } else if b.ket.0 > b.ket.1 {
                let m = (b.ket.0 - n.div_ceil(2)) as f64;
                -(2.0 * m + 1.0) * (n as f64 - 1.0) * theta / 2.0
            } else {
                let m = (b.ket.1 - n.div_ceil(2)) as f64;
                (2.0 * m + 1.0) * (n as f64 - 1.0) * theta / 2.0
            };
            let library = closed_form_phase(n, b.ket, theta);
            worst = worst
                .max((b.probe_phase - want).abs() / want.abs().max(scale))
                .max((library - want).abs() / want.abs().max(scale));
            branches += 1;
        }
    }
    check(worst < 1e-12, format!("{branches} branches over 100 cases, worst relative deviation {worst:.2e}"))
}

fn ac3_kernel_oracle() -> Outcome {
    let mut worst_norm = 0.0f64;
    let mut worst_point = 0.0f64;
    for (state, theta, alpha) in configurations() {
        let j = Protocol::new(theta, alpha).evolve(&state).unwrap();
        let d = outcome_density(&j);
        let (lo, hi) = d.default_range();
        let mut bps = vec![lo - 34.0];
        bps.extend(d.means());
        bps.push(hi + 34.0);
        let q = integrate_with_breakpoints(|x| collapse_numerator(&j, x).norm_sqr(), &bps, 1e-12);
        worst_norm = worst_norm.max((q.value - 1.0).abs());
        for i in 0..=400 {
            let x = lo - 30.0 + (hi - lo + 60.0) * i as f64 / 400.0;
            let p = d.pdf(x);
            if p > 1e-30 {
                let numerator = collapse_numerator(&j, x).norm_sqr();
                worst_point = worst_point.max(((numerator - p) / p).abs());
            }
        }
    }
    check(
        worst_norm < 1e-9 && worst_point < 1e-10,
        format!("20 configs: |∫ − 1| ≤ {worst_norm:.2e}, pointwise relative ≤ {worst_point:.2e}"),
    )
}

fn ac4_error_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut gaps = 0;
    for (state, theta, alpha) in configurations() {
        let n = state.n();
        if n < 2 {
            continue;
        }
        let report = error_probabilities(n, theta, alpha).unwrap();
        for g in &report.gaps {
            let oracle = error_probability_oracle(n, theta, alpha, g.k).unwrap();
            worst = worst.max((oracle - g.epsilon).abs());
            gaps += 1;
        }
    }
    // Small-angle approximation over a sweep inside ⌊n/2⌋(n−1)θ < 0.05.
    let mut worst_approx = 0.0f64;
    let mut checked = 0;
    let mut r = rng::stream(2015, 4);
    for _ in 0..2000 {
        let n = r.random_range(2..=12u32);
        let limit = 0.05 / ((n / 2) as f64 * (n as f64 - 1.0));
        let theta = r.random_range(0.0..limit);
        if theta == 0.0 {
            continue;
        }
        let alpha = r.random_range(1.0..1e6);
        for k in 0..(n / 2) as usize {
            let exact = peak_distance(n, theta, alpha, k).unwrap();
            let approx = peak_distance_approx(n, theta, alpha, k).unwrap();
            worst_approx = worst_approx.max(((exact - approx) / exact).abs());
            checked += 1;
        }
    }
    check(
        worst < 1e-10 && worst_approx < 1e-3,
        format!("{gaps} gaps: |erfc − quadrature| ≤ {worst:.2e}; {checked} small-angle gaps: rel ≤ {worst_approx:.2e}"),
    )
}

fn ac5_monte_carlo() -> Outcome {
    let trials = 1_000_000u64;
    let alpha = 1e3;
    let half = C64::new(0.5, 0.0);
    let mut details = Vec::new();
    let mut pass = true;

    // Engineered d = 2 gaps, n = 2 (equal weights) and n = 4 (interior bin sees two neighbours).
    let n2 = build_input_state(&InputSpec::new(2, vec![(half, half), (half, half)]).unwrap()).unwrap();
    let n4 = build_input_state(&InputSpec::uniform(4).unwrap()).unwrap();
    for (label, state, seed) in [("n=2 d=2", &n2, 51u64), ("n=4 d=2", &n4, 52)] {
        let n = state.n();
        let theta = theta_for_smallest_gap(n, alpha, 2.0).unwrap();
        let r = monte_carlo_error(state, unbounded(theta, alpha), trials, seed).unwrap();
        for b in &r.bins {
            let sigma = (b.analytic * (1.0 - b.analytic) / b.trials as f64).sqrt();
            let z = (b.rate - b.analytic) / sigma;
            pass &= z.abs() < 3.0;
            details.push(format!("{label} l={}: {:.5} vs {:.5} ({z:+.2}σ)", b.l, b.rate, b.analytic));
        }
    }
    if let Some(b) = {
        let theta = theta_for_smallest_gap(2, alpha, 2.0).unwrap();
        monte_carlo_error(&n2, unbounded(theta, alpha), 1000, 1).unwrap().bins.first().cloned()
    } {
        pass &= (b.analytic - 0.158_655_253_931_457_05).abs() < 1e-9;
    }

    // Reference operating point scaled to α = 10³: smallest gap 4√2, ε = erfc(2)/2.
    let gap = 4.0 * std::f64::consts::SQRT_2;
    let theta = theta_for_smallest_gap(2, alpha, gap).unwrap();
    pass &= (midpoint_error(peak_distance(2, theta, alpha, 0).unwrap()) - ERFC2_HALF).abs() < 1e-12;
    let r = monte_carlo_error(&n2, unbounded(theta, alpha), trials, 53).unwrap();
    let sigma = (ERFC2_HALF * (1.0 - ERFC2_HALF) / trials as f64).sqrt();
    let z = (r.rate - ERFC2_HALF) / sigma;
    pass &= z.abs() < 3.0;
    details.push(format!("scaled reference point: {:.6} vs {ERFC2_HALF:.6} ({z:+.2}σ)", r.rate));
    check(pass, details.join("; "))
}

fn ac6_feed_forward() -> Outcome {
    let mut r = rng::stream(2015, 6);
    let mut worst = 0.0f64;
    let mut shots = 0;
    for n in 1..=10u32 {
        for l in 0..=n / 2 {
            let m = n / 2 - l;
            let mut c = || C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let (a, b) = (c(), c());
            let state = build_input_state(&InputSpec::single_l(n, l, a, b).unwrap()).unwrap();
            // Overlapping peaks with the bin known, then well-separated peaks through classification.
            let overlapping = Detector::new(&state, Protocol::new(0.01 / n as f64, 1e3)).unwrap();
            let separated = Detector::new(&state, Protocol::new(0.1 / n as f64, 1e4)).unwrap();
            for det in [&overlapping, &separated] {
                let peak = det.density().components[0].mean;
                for _ in 0..50 {
                    let x = peak + r.random_range(-3.0..3.0);
                    let out = if std::ptr::eq(det, &overlapping) { det.measure_as(x, m) } else { det.measure(x) };
                    let out = out.unwrap();
                    worst = worst.max(1.0 - out.output.fidelity(&state).unwrap());
                    shots += 1;
                }
            }
        }
    }
    check(worst < 1e-10, format!("{shots} corrected shots, worst infidelity {worst:.2e}"))
}

fn ac7_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["analyze", "--n", "6", "--n-theta", "0.01", "--n-alpha", "1e10"],
        &["analyze", "--reproduce", "--n", "3", "--format", "csv"],
        &["simulate", "--n", "4", "--n-theta", "0.02", "--alpha", "2000", "--trials", "20000"],
        &["density", "--n", "3", "--theta", "0.01", "--alpha", "400", "--format", "csv"],
        &["demo", "entangler", "--n", "4", "--trials", "300"],
        &["demo", "parity2", "--trials", "300"],
        &["demo", "analyzer", "--n", "5", "--trials", "100"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{i}_{rep}.out"));
            let status = bin().args(*args).arg("--output").arg(&path).status().unwrap();
            assert!(status.success(), "{args:?}");
            let mut bytes = std::fs::read(&path).unwrap();
            let side = Path::new(&format!("{}.thresholds.json", path.display())).to_path_buf();
            if let Ok(s) = std::fs::read(&side) {
                bytes.extend(s);
            }
            outputs.push(bytes);
        }
        if outputs[0] == outputs[1] {
            identical += 1;
        }
    }
    check(identical == runs.len(), format!("{identical}/{} subcommand runs byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        ("AC1 reference-point reproduction", ac1_reference_point, Duration::from_secs(1)),
        ("AC2 phase law", ac2_phase_law, Duration::from_secs(5)),
        ("AC3 measurement-kernel oracle", ac3_kernel_oracle, Duration::from_secs(30)),
        ("AC4 error-formula oracle", ac4_error_oracle, Duration::from_secs(10)),
        ("AC5 Monte Carlo consistency", ac5_monte_carlo, Duration::from_secs(60)),
        ("AC6 feed-forward exactness", ac6_feed_forward, Duration::from_secs(5)),
        ("AC7 determinism", ac7_determinism, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed < budget;
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] {name}: {} ({:.2}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
