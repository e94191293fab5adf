//! Signal ⊗ probe evolution through the two cross-Kerr interactions and the
//! probe phase gate R_n(θ) = −n(n+1)θ/2.
//!
//! Each branch pairs one signal ket with a coherent probe α·e^{iφ}. The
//! interactions only rotate φ, so branch weights never change.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{KerrError, KerrResult};
use crate::states::{Ket, SignalState, AMP_TOL};

/// Default upper bound on n·θ for the weak-nonlinearity regime.
pub const DEFAULT_MAX_N_THETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    S1,
    S2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub ket: Ket,
    pub amplitude: C64,
    /// Unreduced probe phase in radians; the branch probe is α·e^{i·probe_phase}.
    pub probe_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointState {
    n: u32,
    alpha: f64,
    branches: Vec<Branch>,
}

impl JointState {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    fn map_phases(mut self, f: impl Fn(&Branch) -> f64) -> Self {
        for b in &mut self.branches {
            b.probe_phase += f(b);
        }
        self
    }
}

/// Tensors a coherent probe of real amplitude `alpha` onto the signal.
pub fn attach_probe(signal: &SignalState, alpha: f64) -> KerrResult<JointState> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(KerrError::InvalidParameter(format!("probe amplitude alpha must be > 0, got {alpha}")));
    }
    let branches = signal
        .iter()
        .filter(|(_, a)| a.norm() > AMP_TOL)
        .map(|(ket, amplitude)| Branch { ket, amplitude, probe_phase: 0.0 })
        .collect();
    Ok(JointState { n: signal.n(), alpha, branches })
}

/// Cross-Kerr coupling of one signal mode to the probe: φ += rate · occupation.
pub fn apply_cross_kerr(j: JointState, mode: Mode, rate: f64) -> JointState {
    j.map_phases(|b| {
        let occupation = match mode {
            Mode::S1 => b.ket.0,
            Mode::S2 => b.ket.1,
        };
        rate * occupation as f64
    })
}

/// Branch-independent probe rotation by −n(n+1)θ/2.
pub fn apply_phase_gate(j: JointState, n: u32, theta: f64) -> JointState {
    let shift = -0.5 * (n as f64) * (n as f64 + 1.0) * theta;
    j.map_phases(|_| shift)
}

/// Probe phase a ket must carry after the full protocol: (n−1)θ(n/2 − n1).
///
/// For even n and ket |n/2 ± m, n/2 ∓ m⟩ this is ∓m(n−1)θ; for odd n and
/// |(n±1)/2 ± m, (n∓1)/2 ∓ m⟩ it is ∓(2m+1)(n−1)θ/2.
pub fn closed_form_phase(n: u32, ket: Ket, theta: f64) -> f64 {
    let offset = 0.5 * (n as f64 - 2.0 * ket.0 as f64);
    (n as f64 - 1.0) * theta * offset
}

/// Peak angle ψ_m of peak index `m`: m(n−1)θ for even n, (2m+1)(n−1)θ/2 for odd n.
pub fn peak_angle(n: u32, m: u32, theta: f64) -> f64 {
    let half_index = if n.is_multiple_of(2) { m as f64 } else { m as f64 + 0.5 };
    half_index * (n as f64 - 1.0) * theta
}

/// Bound on |probe_phase| after the protocol: n(n−1)θ/2.
pub fn max_phase_magnitude(n: u32, theta: f64) -> f64 {
    0.5 * n as f64 * (n as f64 - 1.0) * theta.abs()
}

/// Protocol parameters, validated once on entry to [`Protocol::evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Protocol {
    pub theta: f64,
    pub alpha: f64,
    /// Largest n·θ accepted; `f64::INFINITY` disables the regime check.
    pub max_n_theta: f64,
}

impl Protocol {
    pub fn new(theta: f64, alpha: f64) -> Self {
        Self { theta, alpha, max_n_theta: DEFAULT_MAX_N_THETA }
    }

    pub fn with_max_n_theta(mut self, max_n_theta: f64) -> Self {
        self.max_n_theta = max_n_theta;
        self
    }

    pub fn validate(&self, n: u32) -> KerrResult<()> {
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(KerrError::InvalidParameter(format!("theta must be finite and >= 0, got {}", self.theta)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(KerrError::InvalidParameter(format!("alpha must be finite and > 0, got {}", self.alpha)));
        }
        let n_theta = n as f64 * self.theta;
        if n_theta > self.max_n_theta {
            return Err(KerrError::InvalidParameter(format!(
                "n*theta = {n_theta} exceeds the weak-nonlinearity limit {}",
                self.max_n_theta
            )));
        }
        Ok(())
    }

    /// attach probe → Kerr(s1, θ) → Kerr(s2, nθ) → R_n(θ), with the closed-form
    /// phase law checked on the result.
    pub fn evolve(&self, signal: &SignalState) -> KerrResult<JointState> {
        let n = signal.n();
        self.validate(n)?;
        let j = attach_probe(signal, self.alpha)?;
        let j = apply_cross_kerr(j, Mode::S1, self.theta);
        let j = apply_cross_kerr(j, Mode::S2, n as f64 * self.theta);
        let j = apply_phase_gate(j, n, self.theta);
        check_phase_law(&j, self.theta)?;
        Ok(j)
    }
}

/// Checks every branch against [`closed_form_phase`] to 1e-12 relative to
/// the magnitude of the accumulated rotations.
pub fn check_phase_law(j: &JointState, theta: f64) -> KerrResult<()> {
    let n = j.n();
    let scale = 0.5 * n as f64 * (n as f64 + 1.0) * theta;
    for b in j.branches() {
        let expected = closed_form_phase(n, b.ket, theta);
        if (b.probe_phase - expected).abs() > 1e-12 * expected.abs().max(scale) {
            return Err(KerrError::PhaseLaw { n1: b.ket.0, n2: b.ket.1, got: b.probe_phase, expected });
        }
    }
    Ok(())
}

/// Evolution with the default weak-regime limit.
pub fn evolve_protocol(signal: &SignalState, theta: f64, alpha: f64) -> KerrResult<JointState> {
    Protocol::new(theta, alpha).evolve(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_input_state, InputSpec};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn attach_noon() {
        let j = attach_probe(&SignalState::noon(2), 100.0).unwrap();
        assert_eq!(j.branches().len(), 2);
        for b in j.branches() {
            assert_eq!(b.probe_phase, 0.0);
            assert!((b.amplitude.norm_sqr() - 0.5).abs() < 1e-15);
        }
        assert!(attach_probe(&SignalState::noon(2), 0.0).is_err());
        assert!(attach_probe(&SignalState::noon(2), -1.0).is_err());
    }

    #[test]
    fn attach_single_ket_and_drop_zeros() {
        let j = attach_probe(&SignalState::fock(1, 0), 5.0).unwrap();
        assert_eq!(j.branches(), &[Branch { ket: (1, 0), amplitude: c(1.0), probe_phase: 0.0 }]);

        let s = SignalState::from_kets(2, [((2, 0), c(1.0)), ((0, 2), c(0.0))]).unwrap();
        assert_eq!(attach_probe(&s, 5.0).unwrap().branches().len(), 1);
    }

    #[test]
    fn cross_kerr_by_occupation() {
        let theta = 0.003;
        let j = attach_probe(&SignalState::fock(3, 1), 1.0).unwrap();
        let j = apply_cross_kerr(j, Mode::S1, theta);
        assert_eq!(j.branches()[0].probe_phase, 3.0 * theta);

        let j = attach_probe(&SignalState::fock(0, 5), 1.0).unwrap();
        let j = apply_cross_kerr(j, Mode::S1, 0.7);
        assert_eq!(j.branches()[0].probe_phase, 0.0);
    }

    #[test]
    fn two_kerr_steps_total() {
        let (theta, n) = (0.002, 6u32);
        for m in 0..=n / 2 {
            let ket = (n / 2 + m, n / 2 - m);
            let j = attach_probe(&SignalState::fock(ket.0, ket.1), 1.0).unwrap();
            let j = apply_cross_kerr(apply_cross_kerr(j, Mode::S1, theta), Mode::S2, n as f64 * theta);
            // θ(n/2+m) + nθ(n/2−m) = θ·n(n+1)/2 − m(n−1)θ
            let want = theta * (n * (n + 1)) as f64 / 2.0 - (m * (n - 1)) as f64 * theta;
            assert!((j.branches()[0].probe_phase - want).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_gate_shift() {
        let j = apply_phase_gate(attach_probe(&SignalState::noon(2), 1.0).unwrap(), 2, 0.005);
        assert!(j.branches().iter().all(|b| (b.probe_phase + 0.015).abs() < 1e-17));
        let j = apply_phase_gate(attach_probe(&SignalState::fock(1, 0), 1.0).unwrap(), 1, 0.01);
        assert!((j.branches()[0].probe_phase + 0.01).abs() < 1e-17);
    }

    #[test]
    fn even_n_m1_branches() {
        let theta = 0.0025;
        let spec = InputSpec::single_l(4, 1, c(0.6), c(0.8)).unwrap();
        let j = evolve_protocol(&build_input_state(&spec).unwrap(), theta, 1000.0).unwrap();
        let phase = |ket| j.branches().iter().find(|b| b.ket == ket).unwrap().probe_phase;
        assert!((phase((3, 1)) + 3.0 * theta).abs() < 1e-15);
        assert!((phase((1, 3)) - 3.0 * theta).abs() < 1e-15);
    }

    #[test]
    fn odd_n_m0_branches() {
        let theta = 0.01;
        let spec = InputSpec::single_l(3, 1, c(1.0), c(1.0)).unwrap();
        let j = evolve_protocol(&build_input_state(&spec).unwrap(), theta, 10.0).unwrap();
        let phase = |ket| j.branches().iter().find(|b| b.ket == ket).unwrap().probe_phase;
        assert!((phase((2, 1)) + theta).abs() < 1e-15);
        assert!((phase((1, 2)) - theta).abs() < 1e-15);
    }

    #[test]
    fn zero_theta_leaves_probe_alone() {
        let s = build_input_state(&InputSpec::uniform(5).unwrap()).unwrap();
        let j = evolve_protocol(&s, 0.0, 3.0).unwrap();
        assert!(j.branches().iter().all(|b| b.probe_phase == 0.0));
    }

    #[test]
    fn regime_is_enforced_and_overridable() {
        let s = SignalState::noon(2);
        assert!(evolve_protocol(&s, 0.1, 200.0).is_err());
        assert!(Protocol::new(0.1, 200.0).with_max_n_theta(f64::INFINITY).evolve(&s).is_ok());
        assert!(evolve_protocol(&s, -0.01, 200.0).is_err());
        assert!(evolve_protocol(&s, 0.01, f64::NAN).is_err());
    }

    #[test]
    fn peak_angles() {
        assert_eq!(peak_angle(4, 2, 0.5), 3.0);
        assert_eq!(peak_angle(3, 0, 0.5), 0.5);
        assert_eq!(peak_angle(3, 1, 0.5), 1.5);
        assert_eq!(peak_angle(1, 0, 0.5), 0.0);
    }
}
