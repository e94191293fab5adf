//! Midpoint thresholds, outcome classification, feed-forward correction and
//! the single-shot detection pipeline.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{peak_angle, JointState, Protocol};
use crate::error::{KerrError, KerrResult};
use crate::homodyne::{collapse, outcome_density, OutcomeDensity};
use crate::rng;
use crate::states::{l_from_m, SignalState};

/// Minimum separation of adjacent peaks for a threshold to be placed.
pub const MIN_PEAK_SPACING: f64 = 1e-12;

/// Homodyne bin, carrying both the peak index `m` and the minority-mode
/// photon count `l = ⌊n/2⌋ − m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BinLabel {
    pub m: u32,
    pub l: u32,
}

impl BinLabel {
    pub fn from_m(n: u32, m: u32) -> Self {
        Self { m, l: l_from_m(n, m) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub n: u32,
    pub theta: f64,
    pub alpha: f64,
    /// Ascending cuts x_{m_k}, k = 0, 1, ...
    pub cuts: Vec<f64>,
    /// One label per interval, in ascending x; the leftmost is l = 0.
    pub labels: Vec<BinLabel>,
}

/// Midpoints between neighbouring peaks 2α cos ψ_m.
///
/// Cut k sits between peaks m = ⌊n/2⌋ − k and ⌊n/2⌋ − k − 1:
/// α(cos ψ_{⌊n/2⌋−k} + cos ψ_{⌊n/2⌋−k−1}). For n = 1 there are no cuts.
pub fn thresholds(n: u32, theta: f64, alpha: f64) -> KerrResult<ThresholdSet> {
    if n == 0 {
        return Err(KerrError::InvalidParameter("n must be at least 1".into()));
    }
    if !(theta >= 0.0 && theta.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
        return Err(KerrError::InvalidParameter(format!(
            "thresholds need theta >= 0 and alpha > 0, got theta = {theta}, alpha = {alpha}"
        )));
    }
    let top = n / 2;
    let mut cuts = Vec::with_capacity(top as usize);
    for k in 0..top {
        let wide = peak_angle(n, top - k, theta);
        let narrow = peak_angle(n, top - k - 1, theta);
        let spacing = 2.0 * alpha * (narrow.cos() - wide.cos());
        if !(spacing.abs() >= MIN_PEAK_SPACING) {
            return Err(KerrError::UnresolvablePeaks(format!(
                "n = {n}, theta = {theta}: peaks m = {} and m = {} are {spacing:e} apart",
                top - k,
                top - k - 1
            )));
        }
        cuts.push(alpha * (wide.cos() + narrow.cos()));
    }
    if cuts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(KerrError::UnresolvablePeaks(format!(
            "n = {n}, theta = {theta}: peak order folds over (n(n-1)θ/2 beyond π)"
        )));
    }
    let labels = (0..=top).map(|l| BinLabel { m: top - l, l }).collect();
    Ok(ThresholdSet { n, theta, alpha, cuts, labels })
}

impl ThresholdSet {
    /// Interval of `x`; a value equal to a cut goes to the lower interval.
    pub fn classify(&self, x: f64) -> BinLabel {
        let index = self.cuts.partition_point(|&c| c < x);
        self.labels[index]
    }

    /// Peak positions 2α cos ψ_m in ascending order.
    pub fn peak_means(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|b| 2.0 * self.alpha * peak_angle(self.n, b.m, self.theta).cos())
            .collect()
    }
}

pub fn classify(t: &ThresholdSet, x: f64) -> BinLabel {
    t.classify(x)
}

/// φ_j(x) = α sin ψ (x − 2α cos ψ) mod 2π for the bin's own peak angle ψ.
pub fn feed_forward_phase(n: u32, theta: f64, alpha: f64, bin_m: u32, x: f64) -> f64 {
    let psi = peak_angle(n, bin_m, theta);
    (alpha * psi.sin() * (x - 2.0 * alpha * psi.cos())).rem_euclid(TAU)
}

/// Per-photon phase δ for the mode-s1 shifter e^{iδ·n1} that removes the
/// relative phase 2φ_j(x) between the two kets of bin m.
pub fn correction_phase(n: u32, theta: f64, alpha: f64, bin_m: u32, x: f64) -> f64 {
    let phi = feed_forward_phase(n, theta, alpha, bin_m, x);
    if n.is_multiple_of(2) {
        if bin_m == 0 {
            0.0
        } else {
            phi / bin_m as f64
        }
    } else {
        2.0 * phi / (2 * bin_m + 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub x: f64,
    pub bin_m: u32,
    pub bin_l: u32,
    /// δ applied to mode s1, radians per photon.
    pub correction: f64,
    pub output: SignalState,
}

/// One detection together with the mixture component that produced `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub record: MeasurementRecord,
    /// Peak indices of the sampled component (a single entry unless θ = 0).
    pub true_peaks: Vec<u32>,
}

impl Detection {
    pub fn correct(&self) -> bool {
        self.true_peaks == [self.record.bin_m]
    }
}

/// Evolved protocol state prepared for repeated shots.
#[derive(Debug, Clone)]
pub struct Detector {
    protocol: Protocol,
    input: SignalState,
    joint: JointState,
    density: OutcomeDensity,
    thresholds: ThresholdSet,
}

impl Detector {
    pub fn new(signal: &SignalState, protocol: Protocol) -> KerrResult<Self> {
        let joint = protocol.evolve(signal)?;
        let density = outcome_density(&joint);
        let thresholds = thresholds(signal.n(), protocol.theta, protocol.alpha)?;
        Ok(Self { protocol, input: signal.clone(), joint, density, thresholds })
    }

    pub fn joint(&self) -> &JointState {
        &self.joint
    }

    pub fn density(&self) -> &OutcomeDensity {
        &self.density
    }

    pub fn thresholds(&self) -> &ThresholdSet {
        &self.thresholds
    }

    pub fn input(&self) -> &SignalState {
        &self.input
    }

    /// Classify, collapse and correct for a given outcome `x`.
    pub fn measure(&self, x: f64) -> KerrResult<MeasurementRecord> {
        self.measure_as(x, self.thresholds.classify(x).m)
    }

    /// Collapse at `x` and apply the correction belonging to peak `m`,
    /// whatever bin `x` falls in.
    pub fn measure_as(&self, x: f64, m: u32) -> KerrResult<MeasurementRecord> {
        let n = self.input.n();
        let bin = BinLabel::from_m(n, m);
        let collapsed = collapse(&self.joint, x)?;
        let correction = correction_phase(n, self.protocol.theta, self.protocol.alpha, bin.m, x);
        let output = collapsed.shift_mode1(correction).normalize()?;
        Ok(MeasurementRecord { x, bin_m: bin.m, bin_l: bin.l, correction, output })
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> KerrResult<Detection> {
        let (component, x) = self.density.sample(rng);
        let record = self.measure(x)?;
        Ok(Detection { record, true_peaks: self.density.components[component].peaks.clone() })
    }

    /// Input projected onto bin m and normalized, the state a correct shot
    /// should produce. `None` if the input has no weight there.
    pub fn target(&self, m: u32) -> Option<SignalState> {
        self.input.project_peak(m).normalize().ok()
    }
}

/// evolve → sample → classify → collapse → correct.
pub fn detect<R: Rng + ?Sized>(
    signal: &SignalState,
    protocol: Protocol,
    rng: &mut R,
) -> KerrResult<MeasurementRecord> {
    Ok(Detector::new(signal, protocol)?.run(rng)?.record)
}

/// Counts for one classified bin across a simulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BinTally {
    pub m: u32,
    pub l: u32,
    pub count: u64,
    /// Shots whose sampled component belongs to a different peak.
    pub errors: u64,
    pub error_rate: f64,
    /// Mean fidelity of the corrected output to the bin's target state.
    pub mean_fidelity: f64,
    /// Smallest fidelity seen among correctly classified shots.
    pub min_fidelity_correct: Option<f64>,
    /// Output photon number equals n in every shot.
    pub photon_number_conserved: bool,
    #[serde(skip)]
    fidelity_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub n: u32,
    pub theta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub mean_fidelity: f64,
    pub bins: Vec<BinTally>,
    /// The first few shots, in trial order.
    pub records: Vec<MeasurementRecord>,
}

#[derive(Debug, Default, Clone)]
struct Partial {
    bins: BTreeMap<u32, BinTally>,
    records: Vec<MeasurementRecord>,
}

impl Partial {
    fn merge(mut self, other: Partial, keep: usize) -> Partial {
        for (m, t) in other.bins {
            let e = self.bins.entry(m).or_insert_with(|| BinTally { photon_number_conserved: true, ..t.clone_empty() });
            e.count += t.count;
            e.errors += t.errors;
            e.fidelity_sum += t.fidelity_sum;
            e.photon_number_conserved &= t.photon_number_conserved;
            e.min_fidelity_correct = match (e.min_fidelity_correct, t.min_fidelity_correct) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        let room = keep.saturating_sub(self.records.len());
        self.records.extend(other.records.into_iter().take(room));
        self
    }
}

impl BinTally {
    fn clone_empty(&self) -> BinTally {
        BinTally { m: self.m, l: self.l, ..Default::default() }
    }
}

const CHUNK: u64 = 4096;

/// Runs `trials` detections; trial i draws from stream i of `seed`.
pub fn simulate_detection(
    signal: &SignalState,
    protocol: Protocol,
    trials: u64,
    seed: u64,
    keep_records: usize,
) -> KerrResult<SimulationReport> {
    if trials == 0 {
        return Err(KerrError::InvalidParameter("trials must be at least 1".into()));
    }
    let detector = Detector::new(signal, protocol)?;
    let n = signal.n();
    let targets: BTreeMap<u32, Option<SignalState>> =
        detector.thresholds().labels.iter().map(|b| (b.m, detector.target(b.m))).collect();

    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<KerrResult<Partial>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial::default();
            let start = c * CHUNK;
            let end = (start + CHUNK).min(trials);
            for trial in start..end {
                let mut rng = rng::stream(seed, trial);
                let shot = detector.run(&mut rng)?;
                let r = &shot.record;
                let fidelity = targets[&r.bin_m].as_ref().map_or(0.0, |t| t.fidelity(&r.output).unwrap_or(0.0));
                let t = part.bins.entry(r.bin_m).or_insert_with(|| BinTally {
                    m: r.bin_m,
                    l: r.bin_l,
                    photon_number_conserved: true,
                    ..Default::default()
                });
                t.count += 1;
                t.fidelity_sum += fidelity;
                t.photon_number_conserved &= r.output.n() == n && r.output.iter().all(|(k, _)| k.0 + k.1 == n);
                if shot.correct() {
                    t.min_fidelity_correct = Some(t.min_fidelity_correct.map_or(fidelity, |f| f.min(fidelity)));
                } else {
                    t.errors += 1;
                }
                if part.records.len() < keep_records {
                    part.records.push(shot.record);
                }
            }
            Ok(part)
        })
        .collect();

    let mut total = Partial::default();
    for p in partials {
        total = total.merge(p?, keep_records);
    }
    let mut bins: Vec<BinTally> = total.bins.into_values().collect();
    let mut errors = 0;
    let mut fidelity_sum = 0.0;
    for b in &mut bins {
        b.error_rate = b.errors as f64 / b.count as f64;
        b.mean_fidelity = b.fidelity_sum / b.count as f64;
        errors += b.errors;
        fidelity_sum += b.fidelity_sum;
    }
    bins.sort_by_key(|b| b.l);
    Ok(SimulationReport {
        n,
        theta: protocol.theta,
        alpha: protocol.alpha,
        seed,
        trials,
        errors,
        error_rate: errors as f64 / trials as f64,
        mean_fidelity: fidelity_sum / trials as f64,
        bins,
        records: total.records,
    })
}
