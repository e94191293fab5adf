//! Discrimination error probabilities.
//!
//! Adjacent peaks a distance x_d apart, split at their midpoint, are confused
//! with probability ε = erfc(x_d / 2√2) / 2. The analytic per-bin figures
//! count nearest-neighbour leakage only; the Monte Carlo estimator counts
//! every misclassification.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{peak_angle, Protocol};
use crate::discriminator::thresholds;
use crate::error::{KerrError, KerrResult};
use crate::homodyne::outcome_density;
use crate::quadrature::integrate;
use crate::rng;
use crate::special::{erfc, erfc_inv, midpoint_error, normal_cdf, normal_sf};
use crate::states::{l_from_m, SignalState};

/// Number of gaps between adjacent peaks: ⌊n/2⌋.
pub fn gap_count(n: u32) -> usize {
    (n / 2) as usize
}

fn check_gap(n: u32, k: usize) -> KerrResult<()> {
    let gaps = gap_count(n);
    if k >= gaps {
        return Err(KerrError::GapOutOfRange { n, k, gaps });
    }
    Ok(())
}

/// Angles (A, B) = ((n/2 − k − 1)(n−1)θ, (n/2 − k)(n−1)θ) bounding gap k.
fn gap_angles(n: u32, theta: f64, k: usize) -> (f64, f64) {
    let top = n / 2;
    let k = k as u32;
    (peak_angle(n, top - k - 1, theta), peak_angle(n, top - k, theta))
}

/// Exact peak distance 2α(cos A − cos B), evaluated as 4α sin((A+B)/2) sin((B−A)/2).
pub fn peak_distance(n: u32, theta: f64, alpha: f64, k: usize) -> KerrResult<f64> {
    check_gap(n, k)?;
    let (a, b) = gap_angles(n, theta, k);
    Ok(4.0 * alpha * (0.5 * (a + b)).sin() * (0.5 * (b - a)).sin())
}

/// Small-angle distance (n − 2k − 1)(n − 1)² α θ².
pub fn peak_distance_approx(n: u32, theta: f64, alpha: f64, k: usize) -> KerrResult<f64> {
    check_gap(n, k)?;
    let nf = n as f64;
    Ok((nf - 2.0 * k as f64 - 1.0) * (nf - 1.0).powi(2) * alpha * theta * theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub k: usize,
    pub cut: f64,
    pub x_d_exact: f64,
    pub x_d_approx: f64,
    pub epsilon: f64,
    pub epsilon_approx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: u32,
    pub theta: f64,
    pub n_theta: f64,
    pub alpha: f64,
    pub n_alpha: f64,
    pub gaps: Vec<GapRecord>,
    /// Largest ε_k (0 when there are no gaps).
    pub epsilon_max: f64,
}

impl ErrorReport {
    /// One row per gap.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,theta,alpha,k,cut,x_d_exact,x_d_approx,epsilon,epsilon_approx\n");
        for g in &self.gaps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.n, self.theta, self.alpha, g.k, g.cut, g.x_d_exact, g.x_d_approx, g.epsilon, g.epsilon_approx
            );
        }
        out
    }
}

pub fn error_probabilities(n: u32, theta: f64, alpha: f64) -> KerrResult<ErrorReport> {
    let cuts = thresholds(n, theta, alpha)?.cuts;
    let gaps = (0..gap_count(n))
        .map(|k| {
            let x_d_exact = peak_distance(n, theta, alpha, k)?;
            let x_d_approx = peak_distance_approx(n, theta, alpha, k)?;
            Ok(GapRecord {
                k,
                cut: cuts[k],
                x_d_exact,
                x_d_approx,
                epsilon: midpoint_error(x_d_exact),
                epsilon_approx: midpoint_error(x_d_approx),
            })
        })
        .collect::<KerrResult<Vec<_>>>()?;
    let epsilon_max = gaps.iter().map(|g| g.epsilon).fold(0.0, f64::max);
    Ok(ErrorReport { n, theta, n_theta: n as f64 * theta, alpha, n_alpha: alpha * alpha, gaps, epsilon_max })
}

/// Which peak's tail the quadrature oracle integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// The peak above the cut, integrated below it.
    Upper,
    /// The peak below the cut, integrated above it.
    Lower,
}

/// Probability mass of one peak's unit Gaussian on the wrong side of cut k,
/// by adaptive quadrature (absolute tolerance 1e-12). The cut and peak come
/// from the cosine-sum threshold formula, not from the peak distance.
pub fn error_probability_oracle_tail(n: u32, theta: f64, alpha: f64, k: usize, tail: Tail) -> KerrResult<f64> {
    check_gap(n, k)?;
    let t = thresholds(n, theta, alpha)?;
    let peaks = t.peak_means();
    let cut = t.cuts[k];
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // In coordinates centred on the chosen peak.
    let reach = match tail {
        Tail::Upper => peaks[k + 1] - cut,
        Tail::Lower => cut - peaks[k],
    };
    const WIDTH: f64 = 40.0;
    if reach >= WIDTH {
        return Ok(0.0);
    }
    Ok(integrate(density, reach, WIDTH, 1e-12).value)
}

pub fn error_probability_oracle(n: u32, theta: f64, alpha: f64, k: usize) -> KerrResult<f64> {
    error_probability_oracle_tail(n, theta, alpha, k, Tail::Upper)
}

/// Peak distance giving midpoint error `epsilon`: 2√2 · erfc⁻¹(2ε).
pub fn gap_for_error(epsilon: f64) -> KerrResult<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(KerrError::InvalidParameter(format!("target error must lie in (0, 1/2), got {epsilon}")));
    }
    Ok(2.0 * SQRT_2 * erfc_inv(2.0 * epsilon).expect("in domain"))
}

/// θ at which the smallest gap of an n-photon configuration equals `d`,
/// searching the monotone range where every peak angle stays below π/2.
pub fn theta_for_smallest_gap(n: u32, alpha: f64, d: f64) -> KerrResult<f64> {
    if n < 2 {
        return Err(KerrError::InvalidParameter("n = 1 has no gaps".into()));
    }
    if !(d > 0.0 && alpha > 0.0) {
        return Err(KerrError::InvalidParameter(format!("need d > 0 and alpha > 0, got d = {d}, alpha = {alpha}")));
    }
    let last = gap_count(n) - 1;
    let gap = |theta: f64| peak_distance(n, theta, alpha, last).expect("valid gap");
    let mut hi = std::f64::consts::PI / (n as f64 * (n as f64 - 1.0));
    if gap(hi) < d {
        return Err(KerrError::InvalidParameter(format!(
            "smallest gap {d} unreachable for n = {n}, alpha = {alpha} (max {})",
            gap(hi)
        )));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which Discussion configuration to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscussionCase {
    Photons(u32),
    /// n ≫ 1, with (1 − 1/n)² taken as 1.
    Asymptotic,
}

pub const DISCUSSION_N_THETA: f64 = 1.0e-2;

/// (1 − 1/n)² α held at 4√2 × 10⁴.
pub const DISCUSSION_SCALED_ALPHA: f64 = 4.0 * SQRT_2 * 1.0e4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscussionReport {
    pub n: Option<u32>,
    pub n_theta: f64,
    pub theta: Option<f64>,
    pub alpha: f64,
    pub n_alpha: f64,
    /// erfc[(1 − 1/n)² α (nθ)² / 2√2] / 2, the smallest-gap error under the
    /// small-angle distance.
    pub epsilon_max: f64,
    /// Gap-by-gap report at the exact distances (finite n only).
    pub report: Option<ErrorReport>,
}

pub fn reproduce_discussion(case: DiscussionCase) -> KerrResult<DiscussionReport> {
    let shrink = match case {
        DiscussionCase::Photons(n) if n >= 2 => (1.0 - 1.0 / n as f64).powi(2),
        DiscussionCase::Photons(n) => {
            return Err(KerrError::InvalidParameter(format!("discussion needs n >= 2, got {n}")));
        }
        DiscussionCase::Asymptotic => 1.0,
    };
    let alpha = DISCUSSION_SCALED_ALPHA / shrink;
    let epsilon_max = 0.5 * erfc(shrink * alpha * DISCUSSION_N_THETA * DISCUSSION_N_THETA / (2.0 * SQRT_2));
    let (n, theta, report) = match case {
        DiscussionCase::Photons(n) => {
            let theta = DISCUSSION_N_THETA / n as f64;
            (Some(n), Some(theta), Some(error_probabilities(n, theta, alpha)?))
        }
        DiscussionCase::Asymptotic => (None, None, None),
    };
    Ok(DiscussionReport { n, n_theta: DISCUSSION_N_THETA, theta, alpha, n_alpha: alpha * alpha, epsilon_max, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRate {
    pub m: u32,
    pub l: u32,
    pub weight: f64,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    /// Empirical binomial standard error.
    pub stderr: f64,
    /// Sum of midpoint errors of the gaps adjacent to this bin.
    pub analytic: f64,
    /// Exact probability of leaving this bin's interval.
    pub analytic_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub n: u32,
    pub theta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub stderr: f64,
    /// Weight-averaged nearest-neighbour analytic rate.
    pub analytic: f64,
    /// Only bins whose peak carries weight appear.
    pub bins: Vec<BinRate>,
}

fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

const CHUNK: u64 = 8192;

/// Draws (true peak, x) pairs and counts misclassifications; trial i uses
/// stream i of `seed`.
pub fn monte_carlo_error(signal: &SignalState, protocol: Protocol, trials: u64, seed: u64) -> KerrResult<MonteCarloReport> {
    if trials == 0 {
        return Err(KerrError::InvalidParameter("trials must be at least 1".into()));
    }
    let n = signal.n();
    let joint = protocol.evolve(signal)?;
    let density = outcome_density(&joint);
    let t = thresholds(n, protocol.theta, protocol.alpha)?;
    if density.components.iter().any(|c| c.peaks.len() != 1) {
        return Err(KerrError::UnresolvablePeaks("distinct peak indices share one mixture component".into()));
    }

    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<BTreeMap<u32, (u64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = rng::stream(seed, trial);
                let (component, x) = density.sample(&mut rng);
                let truth = density.components[component].peaks[0];
                let e = tally.entry(truth).or_default();
                e.0 += 1;
                if t.classify(x).m != truth {
                    e.1 += 1;
                }
            }
            tally
        })
        .collect();
    let mut combined: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for tally in tallies {
        for (m, (count, errors)) in tally {
            let e = combined.entry(m).or_default();
            e.0 += count;
            e.1 += errors;
        }
    }

    let top = n / 2;
    let mut bins = Vec::new();
    let mut analytic_total = 0.0;
    for c in &density.components {
        let m = c.peaks[0];
        let l = l_from_m(n, m);
        let interval = l as usize;
        let mean = 2.0 * protocol.alpha * peak_angle(n, m, protocol.theta).cos();
        let mut nearest = 0.0;
        let mut exact = 0.0;
        if interval > 0 {
            nearest += midpoint_error(peak_distance(n, protocol.theta, protocol.alpha, interval - 1)?);
            exact += normal_cdf(t.cuts[interval - 1] - mean);
        }
        if interval < top as usize {
            nearest += midpoint_error(peak_distance(n, protocol.theta, protocol.alpha, interval)?);
            exact += normal_sf(t.cuts[interval] - mean);
        }
        analytic_total += c.weight * nearest;
        let (count, errors) = combined.get(&m).copied().unwrap_or_default();
        if count == 0 {
            continue;
        }
        let rate = errors as f64 / count as f64;
        bins.push(BinRate {
            m,
            l,
            weight: c.weight,
            trials: count,
            errors,
            rate,
            stderr: binomial_stderr(rate, count),
            analytic: nearest,
            analytic_exact: exact,
        });
    }
    bins.sort_by_key(|b| b.l);
    let errors: u64 = bins.iter().map(|b| b.errors).sum();
    let rate = errors as f64 / trials as f64;
    Ok(MonteCarloReport {
        n,
        theta: protocol.theta,
        alpha: protocol.alpha,
        seed,
        trials,
        errors,
        rate,
        stderr: binomial_stderr(rate, trials),
        analytic: analytic_total,
        bins,
    })
}
