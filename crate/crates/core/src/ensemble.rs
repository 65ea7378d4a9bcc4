//! Projected ensembles: outcome sampling, conditional states and classical twins.
//!
//! Measuring the qubits in `A` of an `N`-qubit state in the computational
//! basis yields a label `z` with probability `p_z` and leaves the qubits in
//! `B` in the conditional state `ρ^Q_z`. The classical twin is a second
//! pre-measurement state whose conditional states `ρ^C_z` are computed
//! lazily for the labels that actually occur.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::{Rng, RngCore};

use crate::opalg::{trace_distance, DensityMatrix};
use crate::{Error, Mat, Result};

/// Outcomes with probability below this are unreachable.
pub const UNREACHABLE: f64 = 1e-14;
/// Default cap on the number of enumerated outcomes.
pub const ENUMERATION_CAP: usize = 1 << 16;
/// Default bound on memoized twin states.
pub const CACHE_CAP: usize = 1 << 20;
/// Largest supported conditional-state dimension.
pub const MAX_UNMEASURED: usize = 4;

/// Measurement label: `len` bits, first measured qubit most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    pub bits: u64,
    pub len: u8,
}

impl Outcome {
    pub fn new(bits: u64, len: usize) -> Self {
        Outcome { bits, len: len as u8 }
    }

    /// Bit of the `k`-th measured qubit.
    pub fn bit(&self, k: usize) -> u64 {
        (self.bits >> (self.len as usize - 1 - k)) & 1
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.len as usize {
            write!(f, "{}", self.bit(k))?;
        }
        Ok(())
    }
}

impl FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 63 {
            return Err(Error::Parse(format!("label too long: {} bits", s.len())));
        }
        let mut bits = 0u64;
        for ch in s.chars() {
            bits = (bits << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::Parse(format!("invalid label character {ch:?}"))),
                };
        }
        Ok(Outcome::new(bits, s.len()))
    }
}

/// Pre-measurement state of the full chain.
#[derive(Clone, Debug)]
pub enum PreState {
    Pure(Array1<C64>),
    Mixed(Mat),
}

impl PreState {
    pub fn dim(&self) -> usize {
        match self {
            PreState::Pure(v) => v.len(),
            PreState::Mixed(m) => m.nrows(),
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        match self {
            PreState::Pure(v) => v[i].norm_sqr(),
            PreState::Mixed(m) => m[[i, i]].re,
        }
    }
}

/// Measurement layout: which qubits are measured and how indices split.
#[derive(Clone, Debug)]
struct Layout {
    n: usize,
    measured: Vec<usize>,
    unmeasured: Vec<usize>,
    b_offsets: Vec<usize>,
}

impl Layout {
    fn new(n: usize, unmeasured: &[usize]) -> Result<Self> {
        let mut un: Vec<usize> = unmeasured.to_vec();
        un.sort_unstable();
        un.dedup();
        if un.is_empty() || un.len() != unmeasured.len() || un.iter().any(|&q| q >= n) {
            return Err(Error::InvalidParameter(format!(
                "unmeasured set {unmeasured:?} is not a valid subset of {n} qubits"
            )));
        }
        if un.len() > MAX_UNMEASURED {
            return Err(Error::InvalidParameter(format!(
                "at most {MAX_UNMEASURED} unmeasured qubits supported"
            )));
        }
        if n - un.len() > 63 {
            return Err(Error::InvalidParameter("too many measured qubits".into()));
        }
        let measured: Vec<usize> = (0..n).filter(|q| !un.contains(q)).collect();
        let nb = un.len();
        let b_offsets = (0..1usize << nb)
            .map(|b| {
                (0..nb)
                    .filter(|k| (b >> (nb - 1 - k)) & 1 == 1)
                    .map(|k| 1usize << (n - 1 - un[k]))
                    .sum()
            })
            .collect();
        Ok(Layout { n, measured, unmeasured: un, b_offsets })
    }

    fn z_offset(&self, z: Outcome) -> usize {
        (0..self.measured.len())
            .filter(|&k| z.bit(k) == 1)
            .map(|k| 1usize << (self.n - 1 - self.measured[k]))
            .sum()
    }

    fn d(&self) -> usize {
        self.b_offsets.len()
    }

    /// Unnormalized probability and normalized block, or `None` if unreachable.
    fn conditional(&self, pre: &PreState, z: Outcome) -> (f64, Option<Mat>) {
        let base = self.z_offset(z);
        let d = self.d();
        let idx: Vec<usize> = self.b_offsets.iter().map(|o| base + o).collect();
        let block = match pre {
            PreState::Pure(v) => {
                let phi: Vec<C64> = idx.iter().map(|&i| v[i]).collect();
                Mat::from_shape_fn((d, d), |(i, j)| phi[i] * phi[j].conj())
            }
            PreState::Mixed(m) => Mat::from_shape_fn((d, d), |(i, j)| m[[idx[i], idx[j]]]),
        };
        let p: f64 = (0..d).map(|i| block[[i, i]].re).sum();
        if p < UNREACHABLE {
            return (p, None);
        }
        (p, Some(block.mapv(|x| x / p)))
    }
}

/// Source of ensemble labels and states, as consumed by the shadow layer.
pub trait EnsembleSource: Sync {
    /// Conditional-state dimension `d`.
    fn dim(&self) -> usize;
    /// Number of bits in a label.
    fn label_len(&self) -> usize;
    /// Draws a label with probability `p_z`.
    fn sample(&self, rng: &mut dyn RngCore) -> Outcome;
    /// Device conditional state `ρ^Q_z`.
    fn quantum_state(&self, z: Outcome) -> Result<DensityMatrix>;
    /// Twin conditional state `ρ^C_z`.
    fn classical_state(&self, z: Outcome) -> Arc<DensityMatrix>;
}

/// Projected ensemble of an `N`-qubit pre-measurement state with a twin.
#[derive(Debug)]
pub struct ProjectedEnsemble {
    layout: Layout,
    quantum: PreState,
    twin: PreState,
    cdf: OnceLock<Vec<f64>>,
    cache: Mutex<HashMap<Outcome, Arc<DensityMatrix>>>,
    cache_cap: usize,
    fallbacks: AtomicUsize,
}

impl ProjectedEnsemble {
    /// `unmeasured` lists the 0-based qubits of `B`; all others are measured.
    pub fn new(quantum: PreState, twin: PreState, unmeasured: &[usize]) -> Result<Self> {
        let dim = quantum.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim} is not 2^N")));
        }
        if twin.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: twin.dim() });
        }
        let n = dim.trailing_zeros() as usize;
        Ok(ProjectedEnsemble {
            layout: Layout::new(n, unmeasured)?,
            quantum,
            twin,
            cdf: OnceLock::new(),
            cache: Mutex::new(HashMap::new()),
            cache_cap: CACHE_CAP,
            fallbacks: AtomicUsize::new(0),
        })
    }

    /// Twin identical to the device state.
    pub fn perfect(quantum: PreState, unmeasured: &[usize]) -> Result<Self> {
        let twin = quantum.clone();
        Self::new(quantum, twin, unmeasured)
    }

    pub fn with_cache_cap(mut self, cap: usize) -> Self {
        self.cache_cap = cap;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.layout.n
    }

    pub fn measured(&self) -> &[usize] {
        &self.layout.measured
    }

    pub fn unmeasured(&self) -> &[usize] {
        &self.layout.unmeasured
    }

    /// Number of twin lookups that fell back to `I/d`.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }

    fn check_label(&self, z: Outcome) -> Result<()> {
        if z.len as usize != self.layout.measured.len()
            || (z.len < 64 && z.bits >> z.len != 0)
        {
            return Err(Error::InvalidParameter(format!(
                "label {z} does not match {} measured qubits",
                self.layout.measured.len()
            )));
        }
        Ok(())
    }

    /// `(p_z, ρ^Q_z)`; unreachable outcomes are an error.
    pub fn conditional_state(&self, z: Outcome) -> Result<(f64, DensityMatrix)> {
        self.check_label(z)?;
        match self.layout.conditional(&self.quantum, z) {
            (p, Some(m)) => Ok((p, DensityMatrix::from_unchecked(m))),
            (_, None) => Err(Error::UnreachableOutcome(z.to_string())),
        }
    }

    /// Twin conditional state and whether the `I/d` fallback was used.
    pub fn classical_state_flagged(&self, z: Outcome) -> Result<(Arc<DensityMatrix>, bool)> {
        self.check_label(z)?;
        if let Some(s) = self.cache.lock().expect("cache lock").get(&z) {
            return Ok((s.clone(), false));
        }
        let (state, fallback) = match self.layout.conditional(&self.twin, z) {
            (_, Some(m)) => (DensityMatrix::from_unchecked(m), false),
            (_, None) => {
                self.fallbacks.fetch_add(1, Ordering::Relaxed);
                (DensityMatrix::maximally_mixed(self.layout.d()), true)
            }
        };
        let state = Arc::new(state);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() < self.cache_cap {
            cache.insert(z, state.clone());
        }
        Ok((state, fallback))
    }

    fn cdf(&self) -> &Vec<f64> {
        self.cdf.get_or_init(|| {
            let na = self.layout.measured.len();
            let mut acc = 0.0;
            (0..1u64 << na)
                .map(|z| {
                    let base = self.layout.z_offset(Outcome::new(z, na));
                    acc += self.layout.b_offsets.iter().map(|o| self.quantum.diagonal(base + o)).sum::<f64>();
                    acc
                })
                .collect()
        })
    }

    /// Draws `z` by cumulative search over the measured-qubit marginal.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let cdf = self.cdf();
        let total = *cdf.last().expect("nonempty");
        let u = rng.gen::<f64>() * total;
        let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        Outcome::new(i as u64, self.layout.measured.len())
    }

    /// All reachable outcomes with their device and twin states.
    pub fn enumerate(&self) -> Result<ExactEnsemble> {
        self.enumerate_capped(ENUMERATION_CAP)
    }

    pub fn enumerate_capped(&self, cap: usize) -> Result<ExactEnsemble> {
        let na = self.layout.measured.len();
        let count = 1usize << na;
        if count > cap {
            return Err(Error::EnumerationCap(count));
        }
        let d = self.layout.d();
        let mut members = Vec::new();
        let mut fallbacks = 0;
        for zb in 0..count as u64 {
            let z = Outcome::new(zb, na);
            if let (p, Some(rq)) = self.layout.conditional(&self.quantum, z) {
                let rc = match self.layout.conditional(&self.twin, z) {
                    (_, Some(m)) => DensityMatrix::from_unchecked(m),
                    (_, None) => {
                        fallbacks += 1;
                        DensityMatrix::maximally_mixed(d)
                    }
                };
                members.push(Member {
                    label: z,
                    p,
                    quantum: DensityMatrix::from_unchecked(rq),
                    classical: rc,
                });
            }
        }
        Ok(ExactEnsemble { dim: d, label_len: na, members, fallbacks, index: OnceLock::new() })
    }
}

impl EnsembleSource for ProjectedEnsemble {
    fn dim(&self) -> usize {
        self.layout.d()
    }

    fn label_len(&self) -> usize {
        self.layout.measured.len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Outcome {
        self.sample_outcome(rng)
    }

    fn quantum_state(&self, z: Outcome) -> Result<DensityMatrix> {
        self.conditional_state(z).map(|(_, r)| r)
    }

    fn classical_state(&self, z: Outcome) -> Arc<DensityMatrix> {
        self.classical_state_flagged(z).expect("label validated by caller").0
    }
}

/// One outcome of an explicitly enumerated ensemble.
#[derive(Clone, Debug)]
pub struct Member {
    pub label: Outcome,
    pub p: f64,
    pub quantum: DensityMatrix,
    pub classical: DensityMatrix,
}

/// Fully enumerated ensemble `{(z, p_z, ρ^Q_z, ρ^C_z)}`.
#[derive(Debug)]
pub struct ExactEnsemble {
    pub dim: usize,
    pub label_len: usize,
    pub members: Vec<Member>,
    /// Twin lookups that fell back to `I/d`.
    pub fallbacks: usize,
    index: OnceLock<HashMap<Outcome, usize>>,
}

impl Clone for ExactEnsemble {
    fn clone(&self) -> Self {
        ExactEnsemble {
            dim: self.dim,
            label_len: self.label_len,
            members: self.members.clone(),
            fallbacks: self.fallbacks,
            index: OnceLock::new(),
        }
    }
}

impl ExactEnsemble {
    /// Ensemble from explicit `(p, ρ^Q, ρ^C)` triples; labels are indices and
    /// the weights are renormalized.
    pub fn from_parts(parts: Vec<(f64, DensityMatrix, DensityMatrix)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        }
        let dim = parts[0].1.dim();
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if total <= 0.0 || parts.iter().any(|p| p.0 < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative with positive sum".into()));
        }
        let label_len = (usize::BITS - (parts.len() - 1).leading_zeros()).max(1) as usize;
        let mut members = Vec::with_capacity(parts.len());
        for (i, (p, q, c)) in parts.into_iter().enumerate() {
            if q.dim() != dim || c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: q.dim().max(c.dim()) });
            }
            members.push(Member { label: Outcome::new(i as u64, label_len), p: p / total, quantum: q, classical: c });
        }
        Ok(ExactEnsemble { dim, label_len, members, fallbacks: 0, index: OnceLock::new() })
    }

    /// Ensemble whose twin reproduces every device state.
    pub fn perfect(parts: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        Self::from_parts(parts.into_iter().map(|(p, r)| (p, r.clone(), r)).collect())
    }

    /// Same device states with replaced twin states.
    pub fn with_twins(&self, twins: Vec<DensityMatrix>) -> Result<Self> {
        if twins.len() != self.members.len() {
            return Err(Error::DimensionMismatch { expected: self.members.len(), found: twins.len() });
        }
        let mut out = self.clone();
        for (m, t) in out.members.iter_mut().zip(twins) {
            m.classical = t;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.members.iter().map(|m| m.p).sum()
    }

    pub fn max_probability(&self) -> f64 {
        self.members.iter().fold(0.0, |a, m| a.max(m.p))
    }

    /// `Σ_z p_z ρ^Q_z`.
    pub fn average_state(&self) -> Mat {
        self.members
            .iter()
            .fold(Mat::zeros((self.dim, self.dim)), |acc, m| acc + m.quantum.mapv(|x| x * m.p))
    }

    /// `Δ^QC = Σ_z p_z ‖ρ^Q_z - ρ^C_z‖₁`.
    pub fn delta_qc(&self) -> f64 {
        self.members
            .iter()
            .map(|m| m.p * trace_distance(&m.quantum, &m.classical).expect("same dims"))
            .sum()
    }

    /// `Σ_z p_z Tr[(ρ^Q_z)^2]`.
    pub fn mean_purity(&self) -> f64 {
        self.members.iter().map(|m| m.p * m.quantum.purity()).sum()
    }

    pub fn member(&self, z: Outcome) -> Option<&Member> {
        let index = self.index.get_or_init(|| {
            self.members.iter().enumerate().map(|(i, m)| (m.label, i)).collect()
        });
        index.get(&z).map(|&i| &self.members[i])
    }
}

impl EnsembleSource for ExactEnsemble {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label_len(&self) -> usize {
        self.label_len
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Outcome {
        let total = self.total_probability();
        let mut u = rng.gen::<f64>() * total;
        for m in &self.members {
            if u < m.p {
                return m.label;
            }
            u -= m.p;
        }
        self.members.iter().rev().find(|m| m.p > 0.0).expect("positive weight").label
    }

    fn quantum_state(&self, z: Outcome) -> Result<DensityMatrix> {
        self.member(z)
            .map(|m| m.quantum.clone())
            .ok_or_else(|| Error::UnreachableOutcome(z.to_string()))
    }

    fn classical_state(&self, z: Outcome) -> Arc<DensityMatrix> {
        Arc::new(
            self.member(z)
                .map(|m| m.classical.clone())
                .unwrap_or_else(|| DensityMatrix::maximally_mixed(self.dim)),
        )
    }
}
