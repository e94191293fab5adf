//! X-quadrature homodyne readout of the probe.
//!
//! A branch with probe α·e^{iφ} contributes the amplitude kernel
//! f(x, α cos φ)·e^{i α sin φ (x − 2α cos φ)}, with
//! f(x, β) = (2π)^{−1/4} exp(−(x − 2β)²/4). Distinct signal kets are
//! orthogonal, so the outcome density is an exact mixture of unit-variance
//! Gaussians centred at 2α cos φ.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::circuit::JointState;
use crate::error::{KerrError, KerrResult};
use crate::special::normal_cdf;
use crate::states::{m_of_ket, SignalState};

/// Branches whose means differ by less than this share a mixture component.
pub const GROUPING_TOL: f64 = 1e-9;

/// Collapsed states with norm below this are rejected as void.
pub const VOID_NORM: f64 = 1e-300;

/// Half-width (in σ) added around the outermost peaks for default grids.
pub const GRID_MARGIN: f64 = 6.0;
pub const GRID_POINTS: usize = 2001;

#[inline]
fn ln_kernel_prefactor() -> f64 {
    -0.25 * (2.0 * PI).ln()
}

/// Measurement kernel for one probe branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureKernel {
    pub alpha: f64,
    pub phi: f64,
}

impl QuadratureKernel {
    pub fn new(alpha: f64, phi: f64) -> Self {
        Self { alpha, phi }
    }

    /// Peak position 2α cos φ.
    pub fn mean(&self) -> f64 {
        2.0 * self.alpha * self.phi.cos()
    }

    /// ln |kernel(x)|.
    pub fn ln_magnitude(&self, x: f64) -> f64 {
        let dx = x - self.mean();
        ln_kernel_prefactor() - 0.25 * dx * dx
    }

    /// Feed-forward phase α sin φ (x − 2α cos φ), reduced to [0, 2π).
    pub fn phase(&self, x: f64) -> f64 {
        (self.alpha * self.phi.sin() * (x - self.mean())).rem_euclid(TAU)
    }

    pub fn eval(&self, x: f64) -> C64 {
        C64::from_polar(self.ln_magnitude(x).exp(), self.phase(x))
    }
}

/// f(x, α cos φ)·e^{iφcorr(x)}.
pub fn kernel_eval(alpha: f64, phi: f64, x: f64) -> C64 {
    QuadratureKernel::new(alpha, phi).eval(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    /// Peak indices m of the branches merged into this component.
    pub peaks: Vec<u32>,
}

/// Unit-variance Gaussian mixture, components sorted by ascending mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDensity {
    pub components: Vec<Component>,
}

impl OutcomeDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        let norm = 1.0 / (2.0 * PI).sqrt();
        self.components
            .iter()
            .map(|c| {
                let dx = x - c.mean;
                c.weight * norm * (-0.5 * dx * dx).exp()
            })
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * normal_cdf(x - c.mean)).sum()
    }

    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.mean).collect()
    }

    /// Default plotting range [min mean − 6, max mean + 6].
    pub fn default_range(&self) -> (f64, f64) {
        let lo = self.components.iter().map(|c| c.mean).fold(f64::INFINITY, f64::min);
        let hi = self.components.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max);
        (lo - GRID_MARGIN, hi + GRID_MARGIN)
    }

    /// `points` evenly spaced samples (x, p(x)) on [lo, hi].
    pub fn grid(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        match points {
            0 => Vec::new(),
            1 => vec![(lo, self.pdf(lo))],
            _ => {
                let step = (hi - lo) / (points - 1) as f64;
                (0..points)
                    .map(|i| {
                        let x = if i == points - 1 { hi } else { lo + step * i as f64 };
                        (x, self.pdf(x))
                    })
                    .collect()
            }
        }
    }

    /// Draws a component with probability equal to its weight, then a
    /// unit-variance deviate around its mean. Returns (component index, x).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut index = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                index = i;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        (index, self.components[index].mean + z)
    }
}

/// Renders (x, p) rows as CSV with an `x,p` header.
pub fn density_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("x,p\n");
    for (x, p) in rows {
        let _ = writeln!(out, "{x},{p}");
    }
    out
}

/// Exact outcome distribution of an evolved joint state.
pub fn outcome_density(j: &JointState) -> OutcomeDensity {
    let n = j.n();
    let mut entries: Vec<(f64, f64, u32)> = j
        .branches()
        .iter()
        .map(|b| {
            let mean = QuadratureKernel::new(j.alpha(), b.probe_phase).mean();
            (mean, b.amplitude.norm_sqr(), m_of_ket(n, b.ket))
        })
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total: f64 = entries.iter().map(|e| e.1).sum();
    let mut components: Vec<Component> = Vec::new();
    for (mean, weight, m) in entries {
        match components.last_mut() {
            Some(last) if (mean - last.mean).abs() < GROUPING_TOL => {
                last.weight += weight / total;
                if !last.peaks.contains(&m) {
                    last.peaks.push(m);
                    last.peaks.sort_unstable();
                }
            }
            _ => components.push(Component { weight: weight / total, mean, peaks: vec![m] }),
        }
    }
    OutcomeDensity { components }
}

/// Single homodyne outcome drawn from [`outcome_density`].
pub fn sample_outcome<R: Rng + ?Sized>(j: &JointState, rng: &mut R) -> f64 {
    outcome_density(j).sample(rng).1
}

/// Unnormalized post-measurement signal state: each branch amplitude times
/// its kernel at `x`. Underflows to zero far from every peak; use
/// [`collapse`] for the normalized state.
pub fn collapse_numerator(j: &JointState, x: f64) -> SignalState {
    let terms = j
        .branches()
        .iter()
        .map(|b| (b.ket, b.amplitude * kernel_eval(j.alpha(), b.probe_phase, x)));
    SignalState::from_kets(j.n(), terms).expect("branches hold n photons")
}

/// Normalized post-measurement signal state for outcome `x`.
pub fn collapse(j: &JointState, x: f64) -> KerrResult<SignalState> {
    if !x.is_finite() {
        return Err(KerrError::InvalidParameter(format!("homodyne outcome must be finite, got {x}")));
    }
    let kernels: Vec<QuadratureKernel> =
        j.branches().iter().map(|b| QuadratureKernel::new(j.alpha(), b.probe_phase)).collect();
    let ln_mags: Vec<f64> = kernels.iter().map(|k| k.ln_magnitude(x)).collect();
    let ln_max = ln_mags.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Rescale by the largest kernel so nothing underflows before normalizing.
    let scaled: Vec<C64> = j
        .branches()
        .iter()
        .zip(&kernels)
        .zip(&ln_mags)
        .map(|((b, k), &ln)| b.amplitude * C64::from_polar((ln - ln_max).exp(), k.phase(x)))
        .collect();
    let scaled_norm = scaled.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let ln_norm = ln_max + scaled_norm.ln();
    if !(ln_norm >= VOID_NORM.ln()) {
        return Err(KerrError::VoidOutcome { x });
    }
    let terms = j.branches().iter().zip(scaled).map(|(b, a)| (b.ket, a / scaled_norm));
    SignalState::from_kets(j.n(), terms)
}
