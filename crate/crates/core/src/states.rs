//! Two-mode photon-number states.
//!
//! The input family is Σ_l a_l|n−l, l⟩ + b_l|l, n−l⟩ for l = 0..⌊n/2⌋. Two
//! labels are used for one member of the family: `l`, the photon count of
//! the minority mode, and `m = ⌊n/2⌋ − l`, the homodyne peak index. For even
//! n the l = n/2 term names the same ket twice; its amplitudes are merged.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{KerrError, KerrResult};

/// Absolute tolerance for amplitude comparisons.
pub const AMP_TOL: f64 = 1e-12;

/// Occupation (n1, n2) of the signal modes s1 and s2.
pub type Ket = (u32, u32);

/// Minority-mode photon count `l` for a ket.
pub fn l_of_ket(ket: Ket) -> u32 {
    ket.0.min(ket.1)
}

/// Peak index `m` of a ket of total photon number `n`.
pub fn m_of_ket(n: u32, ket: Ket) -> u32 {
    n / 2 - l_of_ket(ket)
}

/// Converts between the two labels; the map is its own inverse.
pub fn l_from_m(n: u32, m: u32) -> u32 {
    n / 2 - m
}

/// The two kets |n−l, l⟩, |l, n−l⟩ (identical when 2l = n).
pub fn kets_for_l(n: u32, l: u32) -> [Ket; 2] {
    [(n - l, l), (l, n - l)]
}

/// Photon number `n` plus the amplitude pairs (a_l, b_l), indexed by l.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InputSpecRepr", into = "InputSpecRepr")]
pub struct InputSpec {
    n: u32,
    amps: Vec<(C64, C64)>,
}

/// Wire form: `{"n": int, "amps": [[re_a, im_a, re_b, im_b], ...]}`, l ascending.
#[derive(Serialize, Deserialize)]
struct InputSpecRepr {
    n: u32,
    amps: Vec<[f64; 4]>,
}

impl TryFrom<InputSpecRepr> for InputSpec {
    type Error = KerrError;

    fn try_from(r: InputSpecRepr) -> KerrResult<Self> {
        let amps = r
            .amps
            .iter()
            .map(|a| (C64::new(a[0], a[1]), C64::new(a[2], a[3])))
            .collect();
        InputSpec::new(r.n, amps)
    }
}

impl From<InputSpec> for InputSpecRepr {
    fn from(s: InputSpec) -> Self {
        InputSpecRepr {
            n: s.n,
            amps: s.amps.iter().map(|(a, b)| [a.re, a.im, b.re, b.im]).collect(),
        }
    }
}

impl InputSpec {
    pub fn new(n: u32, amps: Vec<(C64, C64)>) -> KerrResult<Self> {
        if n == 0 {
            return Err(KerrError::InvalidInput("photon number n must be at least 1".into()));
        }
        let expected = (n / 2 + 1) as usize;
        if amps.len() != expected {
            return Err(KerrError::InvalidInput(format!(
                "n = {n} needs {expected} amplitude pairs (l = 0..={}), got {}",
                n / 2,
                amps.len()
            )));
        }
        if amps.iter().any(|(a, b)| !(a.is_finite() && b.is_finite())) {
            return Err(KerrError::InvalidInput("amplitudes must be finite".into()));
        }
        Ok(Self { n, amps })
    }

    /// Only the l-th pair is non-zero.
    pub fn single_l(n: u32, l: u32, a: C64, b: C64) -> KerrResult<Self> {
        if l > n / 2 {
            return Err(KerrError::InvalidInput(format!("l = {l} exceeds ⌊n/2⌋ = {}", n / 2)));
        }
        let mut amps = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); (n / 2 + 1) as usize];
        amps[l as usize] = (a, b);
        Self::new(n, amps)
    }

    /// Equal weight on every ket of the family: a_l = b_l = 1, except the
    /// merged even-n pair, which gets (1/2, 1/2).
    pub fn uniform(n: u32) -> KerrResult<Self> {
        let one = C64::new(1.0, 0.0);
        let mut amps = vec![(one, one); (n / 2 + 1) as usize];
        if n.is_multiple_of(2) {
            amps[(n / 2) as usize] = (one * 0.5, one * 0.5);
        }
        Self::new(n, amps)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn amps(&self) -> &[(C64, C64)] {
        &self.amps
    }
}

/// Sparse two-mode n-photon state keyed by (n1, n2).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    n: u32,
    kets: BTreeMap<Ket, C64>,
}

impl SignalState {
    /// Builds a state from ket/amplitude pairs, summing repeated kets and
    /// dropping amplitudes below [`AMP_TOL`] times the largest one. Not normalized.
    pub fn from_kets<I>(n: u32, kets: I) -> KerrResult<Self>
    where
        I: IntoIterator<Item = (Ket, C64)>,
    {
        let mut map: BTreeMap<Ket, C64> = BTreeMap::new();
        for ((n1, n2), amp) in kets {
            if n1 + n2 != n {
                return Err(KerrError::InvalidInput(format!(
                    "ket |{n1},{n2}⟩ does not hold n = {n} photons"
                )));
            }
            *map.entry((n1, n2)).or_default() += amp;
        }
        // Relative cut so far-tail numerators keep their support.
        let largest = map.values().map(|a| a.norm()).fold(0.0, f64::max);
        map.retain(|_, a| a.norm() > AMP_TOL * largest);
        Ok(Self { n, kets: map })
    }

    /// A single Fock ket |n1, n2⟩.
    pub fn fock(n1: u32, n2: u32) -> Self {
        Self { n: n1 + n2, kets: BTreeMap::from([((n1, n2), C64::new(1.0, 0.0))]) }
    }

    /// (|n, 0⟩ + |0, n⟩)/√2.
    pub fn noon(n: u32) -> Self {
        let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { n, kets: BTreeMap::from([((n, 0), c), ((0, n), c)]) }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.kets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.is_empty()
    }

    pub fn amplitude(&self, ket: Ket) -> C64 {
        self.kets.get(&ket).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ket, C64)> + '_ {
        self.kets.iter().map(|(&k, &a)| (k, a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.kets.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> KerrResult<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > AMP_TOL) {
            return Err(KerrError::ZeroNorm(format!("state has norm {norm:e}")));
        }
        Ok(self.scale(C64::new(1.0 / norm, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { n: self.n, kets: self.kets.iter().map(|(&k, &a)| (k, a * c)).collect() }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> KerrResult<C64> {
        if self.n != other.n {
            return Err(KerrError::PhotonNumberMismatch { left: self.n, right: other.n });
        }
        Ok(self
            .kets
            .iter()
            .filter_map(|(k, a)| other.kets.get(k).map(|b| a.conj() * b))
            .sum())
    }

    /// |⟨u|v⟩|² for normalized states.
    pub fn fidelity(&self, other: &Self) -> KerrResult<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Applies e^{i·delta·n1}, a phase shifter on mode s1.
    pub fn shift_mode1(&self, delta: f64) -> Self {
        Self {
            n: self.n,
            kets: self
                .kets
                .iter()
                .map(|(&k, &a)| (k, a * C64::from_polar(1.0, delta * k.0 as f64)))
                .collect(),
        }
    }

    /// Keeps only the kets whose peak index is `m`. Not renormalized.
    pub fn project_peak(&self, m: u32) -> Self {
        Self {
            n: self.n,
            kets: self
                .kets
                .iter()
                .filter(|(&k, _)| m_of_ket(self.n, k) == m)
                .map(|(&k, &a)| (k, a))
                .collect(),
        }
    }

    /// Rows `[n1, n2, re, im]` in ket order.
    pub fn to_rows(&self) -> Vec<[f64; 4]> {
        self.iter().map(|((n1, n2), a)| [n1 as f64, n2 as f64, a.re, a.im]).collect()
    }
}

impl Serialize for SignalState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.kets.len()))?;
        for ((n1, n2), a) in self.iter() {
            seq.serialize_element(&(n1, n2, a.re, a.im))?;
        }
        seq.end()
    }
}

impl fmt::Display for SignalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kets.is_empty() {
            return write!(f, "0");
        }
        for (i, ((n1, n2), a)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|{n1},{n2}⟩", a.re, a.im)?;
        }
        Ok(())
    }
}

/// Resolves and normalizes the input family member described by `spec`.
pub fn build_input_state(spec: &InputSpec) -> KerrResult<SignalState> {
    let n = spec.n();
    let terms = spec.amps().iter().enumerate().flat_map(|(l, &(a, b))| {
        let [ka, kb] = kets_for_l(n, l as u32);
        [(ka, a), (kb, b)]
    });
    let resolved = SignalState::from_kets(n, terms)?;
    resolved.normalize().map_err(|_| {
        KerrError::ZeroNorm(format!(
            "n = {n}: amplitudes interfere to a zero vector (check a_{0} + b_{0} for the merged ket)",
            n / 2
        ))
    })
}

/// Normalized copy of `u`.
pub fn normalize(u: &SignalState) -> KerrResult<SignalState> {
    u.normalize()
}

/// |⟨u|v⟩|².
pub fn fidelity(u: &SignalState, v: &SignalState) -> KerrResult<f64> {
    u.fidelity(v)
}
