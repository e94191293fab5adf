//! Subcommand implementations. Each returns the rendered artifacts; writing
//! them out is left to the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use kerrsim::analysis::{
    error_probabilities, reproduce_discussion, DiscussionCase, ErrorReport, DISCUSSION_N_THETA,
    DISCUSSION_SCALED_ALPHA,
};
use kerrsim::discriminator::{simulate_detection, thresholds, BinLabel, Detector, MeasurementRecord};
use kerrsim::homodyne::{density_csv, outcome_density, Component, GRID_POINTS};
use kerrsim::states::{kets_for_l, InputSpec, SignalState};
use kerrsim::{rng, Complex64 as C64};
use serde::Serialize;

use crate::config::{self, Command, Format, Params, RunConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::SCHEMA_VERSION;

/// Rendered output of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub primary: String,
    /// Where the primary artifact goes; `None` means standard output.
    pub output: Option<PathBuf>,
    pub sidecar: Option<(PathBuf, String)>,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    body: T,
}

fn render<T: Serialize>(command: &str, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Document { schema_version: SCHEMA_VERSION, command, body })
        .expect("documents serialize");
    s.push('\n');
    s
}

pub fn execute(command: &Command) -> CliResult<Artifacts> {
    match command {
        Command::Analyze { common, reproduce, asymptotic } => {
            let (cfg, _) = config::load(common)?;
            cmd_analyze(&cfg, *reproduce, *asymptotic)
        }
        Command::Simulate { common, records } => {
            let (mut cfg, base) = config::load(common)?;
            if records.is_some() {
                cfg.records = *records;
            }
            cmd_simulate(&cfg, base.as_deref())
        }
        Command::Density { common, grid_min, grid_max, grid_points, sidecar } => {
            let (mut cfg, base) = config::load(common)?;
            cfg.grid_min = grid_min.or(cfg.grid_min);
            cfg.grid_max = grid_max.or(cfg.grid_max);
            cfg.grid_points = grid_points.or(cfg.grid_points);
            if sidecar.is_some() {
                cfg.sidecar = sidecar.clone();
            }
            cmd_density(&cfg, base.as_deref())
        }
        Command::Demo { scenario, common, l } => {
            let (mut cfg, base) = config::load(common)?;
            cfg.l = l.or(cfg.l);
            cmd_demo(&cfg, base.as_deref(), *scenario)
        }
    }
}

#[derive(Serialize)]
struct AnalyzeBody<'a> {
    params: &'a Params,
    report: &'a ErrorReport,
}

#[derive(Serialize)]
struct ReproduceBody<'a> {
    mode: &'static str,
    discussion: &'a kerrsim::DiscussionReport,
}

pub fn cmd_analyze(cfg: &RunConfig, reproduce: bool, asymptotic: bool) -> CliResult<Artifacts> {
    if reproduce {
        let case = if asymptotic { DiscussionCase::Asymptotic } else { DiscussionCase::Photons(cfg.n.unwrap_or(2)) };
        let d = reproduce_discussion(case)?;
        let primary = match config::format(cfg) {
            Format::Json => render("analyze", ReproduceBody { mode: "reproduce", discussion: &d }),
            Format::Csv => {
                let mut s = String::from("key,value\n");
                let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                let _ = writeln!(s, "n,{}", d.n.map_or(String::new(), |n| n.to_string()));
                let _ = writeln!(s, "n_theta,{}", d.n_theta);
                let _ = writeln!(s, "theta,{}", opt(d.theta));
                let _ = writeln!(s, "alpha,{}", d.alpha);
                let _ = writeln!(s, "n_alpha,{}", d.n_alpha);
                let _ = writeln!(s, "epsilon_max,{}", d.epsilon_max);
                let _ = writeln!(s, "epsilon_max_exact,{}", opt(d.report.as_ref().map(|r| r.epsilon_max)));
                s
            }
        };
        return Ok(Artifacts { primary, output: cfg.output.clone(), sidecar: None });
    }
    let n = config::resolve_n(cfg, None)?;
    let params = config::resolve_params(cfg, n, None)?;
    let report = error_probabilities(n, params.theta, params.alpha)?;
    let primary = match config::format(cfg) {
        Format::Json => render("analyze", AnalyzeBody { params: &params, report: &report }),
        Format::Csv => report.to_csv(),
    };
    Ok(Artifacts { primary, output: cfg.output.clone(), sidecar: None })
}

#[derive(Serialize)]
struct SimulateBody<'a> {
    params: &'a Params,
    input: &'a InputSpec,
    simulation: &'a kerrsim::SimulationReport,
    analytic: Option<&'a ErrorReport>,
}

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_RECORDS: usize = 10;

pub fn cmd_simulate(cfg: &RunConfig, base: Option<&std::path::Path>) -> CliResult<Artifacts> {
    let spec = config::load_spec(cfg, base)?;
    let n = config::resolve_n(cfg, spec.as_ref())?;
    let params = config::resolve_params(cfg, n, None)?;
    let (spec, state) = config::resolve_state(spec.as_ref(), n)?;
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let report = simulate_detection(
        &state,
        params.protocol(),
        trials,
        config::seed(cfg),
        cfg.records.unwrap_or(DEFAULT_RECORDS),
    )?;
    let analytic = error_probabilities(n, params.theta, params.alpha)?;
    let primary = match config::format(cfg) {
        Format::Json => render(
            "simulate",
            SimulateBody { params: &params, input: &spec, simulation: &report, analytic: Some(&analytic) },
        ),
        Format::Csv => {
            let mut s = String::from("l,m,count,errors,error_rate,mean_fidelity\n");
            for b in &report.bins {
                let _ = writeln!(s, "{},{},{},{},{},{}", b.l, b.m, b.count, b.errors, b.error_rate, b.mean_fidelity);
            }
            s
        }
    };
    Ok(Artifacts { primary, output: cfg.output.clone(), sidecar: None })
}

#[derive(Serialize)]
struct DensitySidecar<'a> {
    params: &'a Params,
    components: &'a [Component],
    peak_means: Vec<f64>,
    cuts: Vec<f64>,
    labels: Vec<BinLabel>,
}

#[derive(Serialize)]
struct DensityBody<'a> {
    #[serde(flatten)]
    sidecar: &'a DensitySidecar<'a>,
    grid: Vec<[f64; 2]>,
}

pub fn cmd_density(cfg: &RunConfig, base: Option<&std::path::Path>) -> CliResult<Artifacts> {
    let spec = config::load_spec(cfg, base)?;
    let n = config::resolve_n(cfg, spec.as_ref())?;
    let params = config::resolve_params(cfg, n, None)?;
    let (_, state) = config::resolve_state(spec.as_ref(), n)?;
    let joint = params.protocol().evolve(&state)?;
    let density = outcome_density(&joint);

    let (default_lo, default_hi) = density.default_range();
    let lo = cfg.grid_min.unwrap_or(default_lo);
    let hi = cfg.grid_max.unwrap_or(default_hi);
    let points = cfg.grid_points.unwrap_or(GRID_POINTS);
    if !(hi > lo) || points < 2 {
        return Err(CliError::Config(format!("grid needs min < max and >= 2 points, got [{lo}, {hi}] x {points}")));
    }
    let grid = density.grid(lo, hi, points);

    // One merged peak (θ = 0, or n = 1) has nothing to separate.
    let (cuts, labels, peak_means) = if n >= 2 && params.theta > 0.0 {
        let t = thresholds(n, params.theta, params.alpha)?;
        let means = t.peak_means();
        (t.cuts, t.labels, means)
    } else {
        (Vec::new(), Vec::new(), density.means())
    };
    let sidecar = DensitySidecar { params: &params, components: &density.components, peak_means, cuts, labels };

    match config::format(cfg) {
        Format::Csv => {
            let side_path = cfg.sidecar.clone().or_else(|| {
                cfg.output.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".thresholds.json");
                    PathBuf::from(s)
                })
            });
            Ok(Artifacts {
                primary: density_csv(&grid),
                output: cfg.output.clone(),
                sidecar: side_path.map(|p| (p, render("density", &sidecar))),
            })
        }
        Format::Json => Ok(Artifacts {
            primary: render(
                "density",
                DensityBody { sidecar: &sidecar, grid: grid.iter().map(|&(x, p)| [x, p]).collect() },
            ),
            output: cfg.output.clone(),
            sidecar: None,
        }),
    }
}

pub const DEFAULT_DEMO_TRIALS: u64 = 1_000;
const TRANSCRIPT_SHOTS: usize = 5;

/// Discussion operating point for photon number n: nθ = 0.01, (1 − 1/n)²α = 4√2·10⁴.
fn discussion_defaults(n: u32) -> (f64, f64) {
    let shrink = if n >= 2 { (1.0 - 1.0 / n as f64).powi(2) } else { 1.0 };
    (DISCUSSION_N_THETA, DISCUSSION_SCALED_ALPHA / shrink)
}

/// (|n−l, l⟩ + |l, n−l⟩)/√2, or |n/2, n/2⟩ when the two kets coincide.
pub fn entangled_number_state(n: u32, l: u32) -> SignalState {
    let one = C64::new(1.0, 0.0);
    let [a, b] = kets_for_l(n, l);
    SignalState::from_kets(n, [(a, one), (b, one)]).and_then(|s| s.normalize()).expect("valid kets")
}

fn describe_shot(i: usize, r: &MeasurementRecord) -> String {
    format!(
        "shot {i}: x = {:.6}, bin l = {} (m = {}), correction = {:.6} rad/photon, output = {}",
        r.x, r.bin_l, r.bin_m, r.correction, r.output
    )
}

#[derive(Serialize, Default)]
struct EntanglerBin {
    l: u32,
    m: u32,
    shots: u64,
    /// Shots whose sampled peak matches the bin.
    correct: u64,
    mean_fidelity_correct: Option<f64>,
    min_fidelity_correct: Option<f64>,
    #[serde(skip)]
    fidelity_sum: f64,
}

#[derive(Serialize)]
struct EntanglerBody<'a> {
    scenario: Scenario,
    params: &'a Params,
    seed: u64,
    trials: u64,
    input: &'a InputSpec,
    target: &'static str,
    bins: Vec<EntanglerBin>,
    transcript: Vec<String>,
}

#[derive(Serialize)]
struct Parity2Body<'a> {
    scenario: Scenario,
    params: &'a Params,
    seed: u64,
    trials_per_input: u64,
    inputs: [&'static str; 2],
    /// confusion[true l][identified l]
    confusion: [[u64; 2]; 2],
    off_diagonal_rates: [f64; 2],
    /// erfc(x_d / 2√2)/2 at the exact peak distance.
    analytic_error: f64,
    /// Discussion bound erfc(2)/2 when run at the default operating point.
    discussion_bound: f64,
    mean_fidelity_correct: [f64; 2],
    transcript: Vec<String>,
}

#[derive(Serialize)]
struct AnalyzerRow {
    l: u32,
    m: u32,
    input: SignalState,
    identified: u64,
    accuracy: f64,
    mean_fidelity_identified: Option<f64>,
    output_photon_numbers: Vec<u32>,
    nondestructive: bool,
}

#[derive(Serialize)]
struct AnalyzerBody<'a> {
    scenario: Scenario,
    params: &'a Params,
    seed: u64,
    trials_per_input: u64,
    rows: Vec<AnalyzerRow>,
    transcript: Vec<String>,
}

pub fn cmd_demo(cfg: &RunConfig, base: Option<&std::path::Path>, scenario: Scenario) -> CliResult<Artifacts> {
    if config::format(cfg) == Format::Csv {
        return Err(CliError::Config("demo transcripts are JSON only".into()));
    }
    let seed = config::seed(cfg);
    let trials = cfg.trials.unwrap_or(DEFAULT_DEMO_TRIALS);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let primary = match scenario {
        Scenario::Entangler => demo_entangler(cfg, base, seed, trials)?,
        Scenario::Parity2 => demo_parity2(cfg, seed, trials)?,
        Scenario::Analyzer => demo_analyzer(cfg, seed, trials)?,
    };
    Ok(Artifacts { primary, output: cfg.output.clone(), sidecar: None })
}

fn demo_entangler(cfg: &RunConfig, base: Option<&std::path::Path>, seed: u64, trials: u64) -> CliResult<String> {
    let spec = config::load_spec(cfg, base)?;
    let n = config::resolve_n(cfg, spec.as_ref()).or(Ok::<u32, CliError>(2))?;
    let spec = match (spec, cfg.l) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --input or --l, not both".into())),
        (Some(s), None) => s,
        (None, Some(l)) => InputSpec::single_l(n, l, C64::new(1.0, 0.0), C64::new(1.0, 0.0))?,
        (None, None) => InputSpec::uniform(n)?,
    };
    let params = config::resolve_params(cfg, n, Some(discussion_defaults(n)))?;
    let (spec, state) = config::resolve_state(Some(&spec), n)?;
    let det = Detector::new(&state, params.protocol())?;

    let mut bins: BTreeMap<u32, EntanglerBin> = BTreeMap::new();
    let mut transcript = Vec::new();
    for trial in 0..trials {
        let shot = det.run(&mut rng::stream(seed, trial))?;
        let r = &shot.record;
        let b = bins.entry(r.bin_l).or_insert_with(|| EntanglerBin { l: r.bin_l, m: r.bin_m, ..Default::default() });
        b.shots += 1;
        if shot.correct() {
            let f = entangled_number_state(n, r.bin_l).fidelity(&r.output)?;
            b.correct += 1;
            b.fidelity_sum += f;
            b.min_fidelity_correct = Some(b.min_fidelity_correct.map_or(f, |g| g.min(f)));
        }
        if transcript.len() < TRANSCRIPT_SHOTS {
            transcript.push(describe_shot(trial as usize, r));
        }
    }
    let bins = bins
        .into_values()
        .map(|mut b| {
            b.mean_fidelity_correct = (b.correct > 0).then(|| b.fidelity_sum / b.correct as f64);
            b
        })
        .collect();
    Ok(render(
        "demo",
        EntanglerBody {
            scenario: Scenario::Entangler,
            params: &params,
            seed,
            trials,
            input: &spec,
            target: "(|n-l,l> + |l,n-l>)/sqrt(2) for the identified l",
            bins,
            transcript,
        },
    ))
}

fn demo_parity2(cfg: &RunConfig, seed: u64, trials: u64) -> CliResult<String> {
    if let Some(n) = cfg.n.filter(|&n| n != 2) {
        return Err(CliError::Config(format!("parity2 runs at n = 2, got --n {n}")));
    }
    let params = config::resolve_params(cfg, 2, Some(discussion_defaults(2)))?;
    let inputs = [SignalState::noon(2), SignalState::fock(1, 1)];
    let mut confusion = [[0u64; 2]; 2];
    let mut fidelity = [0.0f64; 2];
    let mut transcript = Vec::new();
    for (truth, state) in inputs.iter().enumerate() {
        let det = Detector::new(state, params.protocol())?;
        for trial in 0..trials {
            // Disjoint stream ranges per input.
            let r = det.run(&mut rng::stream(seed, truth as u64 * trials + trial))?.record;
            confusion[truth][r.bin_l as usize] += 1;
            if r.bin_l as usize == truth {
                fidelity[truth] += state.fidelity(&r.output)?;
            }
            if (trial as usize) < 2 {
                transcript.push(format!("input l = {truth}: {}", describe_shot(trial as usize, &r)));
            }
        }
    }
    let report = error_probabilities(2, params.theta, params.alpha)?;
    let rate = |t: usize| confusion[t][1 - t] as f64 / trials as f64;
    let mean_f = |t: usize| fidelity[t] / confusion[t][t].max(1) as f64;
    Ok(render(
        "demo",
        Parity2Body {
            scenario: Scenario::Parity2,
            params: &params,
            seed,
            trials_per_input: trials,
            inputs: ["(|2,0> + |0,2>)/sqrt(2)", "|1,1>"],
            confusion,
            off_diagonal_rates: [rate(0), rate(1)],
            analytic_error: report.epsilon_max,
            discussion_bound: reproduce_discussion(DiscussionCase::Photons(2))?.epsilon_max,
            mean_fidelity_correct: [mean_f(0), mean_f(1)],
            transcript,
        },
    ))
}

fn demo_analyzer(cfg: &RunConfig, seed: u64, trials: u64) -> CliResult<String> {
    let n = cfg.n.unwrap_or(4);
    if n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let params = config::resolve_params(cfg, n, Some(discussion_defaults(n)))?;
    let mut rows = Vec::new();
    let mut transcript = Vec::new();
    for l in 0..=n / 2 {
        let spec = InputSpec::single_l(n, l, C64::new(0.6, 0.0), C64::new(0.0, 0.8))?;
        let (_, state) = config::resolve_state(Some(&spec), n)?;
        let det = Detector::new(&state, params.protocol())?;
        let mut identified = 0u64;
        let mut fidelity_sum = 0.0;
        let mut photon_numbers = std::collections::BTreeSet::new();
        for trial in 0..trials {
            let r = det.run(&mut rng::stream(seed, l as u64 * trials + trial))?.record;
            photon_numbers.extend(r.output.iter().map(|(k, _)| k.0 + k.1));
            if r.bin_l == l {
                identified += 1;
                fidelity_sum += state.fidelity(&r.output)?;
            }
            if trial == 0 {
                transcript.push(format!("input l = {l}: {}", describe_shot(0, &r)));
            }
        }
        let output_photon_numbers: Vec<u32> = photon_numbers.into_iter().collect();
        rows.push(AnalyzerRow {
            l,
            m: n / 2 - l,
            input: state,
            identified,
            accuracy: identified as f64 / trials as f64,
            mean_fidelity_identified: (identified > 0).then(|| fidelity_sum / identified as f64),
            nondestructive: output_photon_numbers == [n],
            output_photon_numbers,
        });
    }
    Ok(render(
        "demo",
        AnalyzerBody { scenario: Scenario::Analyzer, params: &params, seed, trials_per_input: trials, rows, transcript },
    ))
}
