//! Simulation and analysis of weak cross-Kerr detection of two-mode
//! photon-number entangled states.
//!
//! A two-mode n-photon state Σ_l a_l|n−l, l⟩ + b_l|l, n−l⟩ imprints phases
//! θ·n1 + nθ·n2 on a coherent probe; a phase gate removes the common part.
//! An X-homodyne reading of the probe then identifies the l-sector, and a
//! feed-forward phase shifter on mode s1 restores the identified state.

pub mod analysis;
pub mod circuit;
pub mod discriminator;
pub mod error;
pub mod homodyne;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod states;

pub use analysis::{
    error_probabilities, error_probability_oracle, monte_carlo_error, peak_distance, peak_distance_approx,
    reproduce_discussion, DiscussionCase, DiscussionReport, ErrorReport, MonteCarloReport,
};
pub use circuit::{apply_cross_kerr, apply_phase_gate, attach_probe, evolve_protocol, Branch, JointState, Mode, Protocol};
pub use discriminator::{
    classify, correction_phase, detect, simulate_detection, thresholds, BinLabel, Detector, MeasurementRecord,
    SimulationReport, ThresholdSet,
};
pub use error::{KerrError, KerrResult};
pub use homodyne::{collapse, kernel_eval, outcome_density, sample_outcome, OutcomeDensity, QuadratureKernel};
pub use num_complex::Complex64;
pub use states::{build_input_state, fidelity, normalize, InputSpec, SignalState};
