//! Dual certificates for ensemble averages.
//!
//! Every bound is a Lagrange dual function evaluated at frozen multipliers.
//! At fixed multipliers the dual function is an average over data rows of
//! `Re Tr[B_z X] + c_z`, where `X` is either the device state `ρ^Q_z`
//! (asymptotic mode, weight `p_z`) or a dual-frame snapshot (empirical mode,
//! weight `1/M`). The same per-row values give the standard error.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleSource, ExactEnsemble, Outcome};
use crate::opalg::{
    dagger, eigh, eigh_real, embed, eye, herm_deviation, herm_fn, hermitian_part, partial_trace,
    pauli_basis, solve_superop, spectral_apply, trace, unvectorize, vectorize, DensityMatrix,
    HermFn, HermOp, Superoperator, LOG_FLOOR, PINV_CUTOFF,
};
use crate::shadows::{confidence_bound, dual_frame, Clifford, CorrelatorEstimate, ShadowRecord, Side};
use crate::{Error, Mat, Result, C64};

/// Default confidence level for one-sided adjustments.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
/// Default eigenvalue threshold of the regularized entropy bound.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// Clamp for the near-singular weight `δ̄^Q`.
pub const DELTA_CLAMP: f64 = 1e-12;
/// Tolerance on PSD inputs.
const PSD_INPUT_TOL: f64 = 1e-10;
/// Grid half-width and size used by multiplier refinement.
const REFINE_SPAN: f64 = 0.5;
const REFINE_POINTS: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact constraint values from enumeration.
    Asymptotic,
    /// Shadow estimates with confidence adjustment.
    Empirical,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(Mode::Asymptotic),
            "empirical" => Ok(Mode::Empirical),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// Run identification copied into every result.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub config_hash: Option<String>,
}

/// One side of a certified interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundResult {
    pub quantity: String,
    pub side: Side,
    /// Point value of the certificate.
    pub value: f64,
    pub stderr: f64,
    pub confidence: f64,
    /// `value ∓ z · stderr`, the bound to report at `confidence`.
    pub certified: f64,
    pub method: String,
    pub mode: Mode,
    /// Method-specific auxiliary number (for example the extreme-point floor).
    pub diagnostic: Option<f64>,
    /// Semicolon-separated flags.
    pub flags: String,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub config_hash: Option<String>,
    /// Per-row certificate values in empirical mode.
    #[serde(skip)]
    pub influence: Option<Arc<Vec<f64>>>,
}

impl BoundResult {
    /// Exact-valued result without data.
    pub fn exact(quantity: &str, side: Side, value: f64, method: &str, mode: Mode) -> Self {
        BoundResult {
            quantity: quantity.into(),
            side,
            value,
            stderr: 0.0,
            confidence: DEFAULT_CONFIDENCE,
            certified: value,
            method: method.into(),
            mode,
            diagnostic: None,
            flags: String::new(),
            seed: None,
            shots: None,
            config_hash: None,
            influence: None,
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.split(';').any(|f| f == flag)
    }

    /// Recomputes `certified` at another confidence level.
    pub fn with_confidence(mut self, level: f64) -> Result<Self> {
        self.confidence = level;
        self.certified = adjust(self.value, self.stderr, self.n_samples(), level, self.side)?;
        Ok(self)
    }

    fn n_samples(&self) -> usize {
        self.influence.as_ref().map(|v| v.len()).unwrap_or(usize::MAX)
    }
}

fn adjust(value: f64, stderr: f64, n: usize, level: f64, side: Side) -> Result<f64> {
    confidence_bound(&CorrelatorEstimate { value, stderr, n_samples: n }, level, side, false)
}

/// Certificate value with optional per-row values.
#[derive(Clone, Debug)]
pub(crate) struct Linear {
    value: f64,
    rows: Option<Arc<Vec<f64>>>,
}

impl Linear {
    fn constant(value: f64) -> Self {
        Linear { value, rows: None }
    }

    fn stderr(&self) -> f64 {
        match &self.rows {
            None => 0.0,
            Some(r) => CorrelatorEstimate::from_samples(r).map(|e| e.stderr).unwrap_or(0.0),
        }
    }

    /// `a x + b y + c`.
    fn combine(a: f64, x: &Linear, b: f64, y: &Linear, c: f64) -> Linear {
        let rows = match (&x.rows, &y.rows) {
            (Some(u), Some(v)) => Some(Arc::new(u.iter().zip(v.iter()).map(|(p, q)| a * p + b * q + c).collect())),
            (Some(u), None) => Some(Arc::new(u.iter().map(|p| a * p + b * y.value + c).collect())),
            (None, Some(v)) => Some(Arc::new(v.iter().map(|q| a * x.value + b * q + c).collect())),
            (None, None) => None,
        };
        Linear { value: a * x.value + b * y.value + c, rows }
    }
}

#[derive(Clone, Debug)]
enum Observation {
    State(Arc<DensityMatrix>),
    Shadow(Vec<Clifford>, Vec<u8>),
}

#[derive(Clone, Debug)]
struct Row {
    weight: f64,
    class: usize,
    obs: Observation,
}

/// Weighted rows `(w, ρ^C_z, X)` on which certificates are evaluated.
#[derive(Clone, Debug)]
pub struct Dataset {
    mode: Mode,
    dim: usize,
    labels: Vec<Outcome>,
    classes: Vec<Arc<DensityMatrix>>,
    rows: Vec<Row>,
    confidence: f64,
    provenance: Provenance,
    sums: OnceLock<(Vec<Mat>, Vec<f64>)>,
}

impl Dataset {
    /// Exact data: one row per outcome with weight `p_z` and `X = ρ^Q_z`.
    pub fn asymptotic(ens: &ExactEnsemble) -> Self {
        let mut labels = Vec::new();
        let mut classes = Vec::new();
        let mut rows = Vec::new();
        for (k, m) in ens.members.iter().enumerate() {
            labels.push(m.label);
            classes.push(Arc::new(m.classical.clone()));
            rows.push(Row { weight: m.p, class: k, obs: Observation::State(Arc::new(m.quantum.clone())) });
        }
        Dataset {
            mode: Mode::Asymptotic,
            dim: ens.dim,
            labels,
            classes,
            rows,
            confidence: DEFAULT_CONFIDENCE,
            provenance: Provenance::default(),
            sums: OnceLock::new(),
        }
    }

    /// Shadow data: one row per record with weight `1/M`.
    pub fn empirical<S: EnsembleSource + ?Sized>(records: &[ShadowRecord], source: &S) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyRecords);
        }
        let dim = source.dim();
        let nb = dim.trailing_zeros() as usize;
        let mut index: BTreeMap<Outcome, usize> = BTreeMap::new();
        for r in records {
            if r.c.len() != nb {
                return Err(Error::DimensionMismatch { expected: nb, found: r.c.len() });
            }
            let next = index.len();
            index.entry(r.z).or_insert(next);
        }
        let mut labels = vec![Outcome::new(0, 0); index.len()];
        for (z, &k) in &index {
            labels[k] = *z;
        }
        let classes = labels.iter().map(|z| source.classical_state(*z)).collect();
        let w = 1.0 / records.len() as f64;
        let rows = records
            .iter()
            .map(|r| Row { weight: w, class: index[&r.z], obs: Observation::Shadow(r.c.clone(), r.m.clone()) })
            .collect();
        Ok(Dataset {
            mode: Mode::Empirical,
            dim,
            labels,
            classes,
            rows,
            confidence: DEFAULT_CONFIDENCE,
            provenance: Provenance { shots: Some(records.len()), ..Provenance::default() },
            sums: OnceLock::new(),
        })
    }

    pub fn with_confidence(mut self, level: f64) -> Self {
        self.confidence = level;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn class_state(&self, k: usize) -> &DensityMatrix {
        &self.classes[k]
    }

    /// Splits alternate rows into two datasets, each reweighted to unit mass.
    /// Used to fit multipliers on one half and evaluate on the other.
    pub fn split(&self) -> (Dataset, Dataset) {
        let half = |parity: usize| {
            let rows: Vec<Row> = self.rows.iter().skip(parity).step_by(2).cloned().collect();
            let total: f64 = rows.iter().map(|r| r.weight).sum();
            let rows = rows.into_iter().map(|r| Row { weight: r.weight / total, ..r }).collect();
            Dataset { rows, sums: OnceLock::new(), ..self.clone() }
        };
        (half(0), half(1))
    }

    fn observed(&self, r: &Row) -> Mat {
        match &r.obs {
            Observation::State(s) => (***s).clone(),
            Observation::Shadow(c, m) => dual_frame(c, m),
        }
    }

    /// Per-class sums `Σ_{r∈z} w_r X_r` and weights `Σ_{r∈z} w_r`.
    fn class_sums(&self) -> &(Vec<Mat>, Vec<f64>) {
        self.sums.get_or_init(|| {
            let d = self.dim;
            let mut xs = vec![Mat::zeros((d, d)); self.classes.len()];
            let mut ws = vec![0.0; self.classes.len()];
            for r in &self.rows {
                xs[r.class].scaled_add(C64::from(r.weight), &self.observed(r));
                ws[r.class] += r.weight;
            }
            (xs, ws)
        })
    }

    /// Empirical distribution of the labels (exact `p_z` in asymptotic mode).
    pub fn class_weights(&self) -> &[f64] {
        &self.class_sums().1
    }

    /// `η^QC = Σ w |X>><<ρ^C|`.
    pub fn eta_qc(&self) -> Superoperator {
        let (xs, _) = self.class_sums();
        let n = self.dim * self.dim;
        let mut m = Mat::zeros((n, n));
        for (x, c) in xs.iter().zip(&self.classes) {
            crate::opalg::add_outer(&mut m, 1.0, &vectorize(x), &vectorize(c));
        }
        Superoperator::new(m).expect("square")
    }

    /// `η^CC = Σ w |ρ^C>><<ρ^C|`.
    pub fn eta_cc(&self) -> Superoperator {
        let (_, ws) = self.class_sums();
        let ops: Vec<&Mat> = self.classes.iter().map(|c| &***c).collect();
        Superoperator::gram(ws, &ops)
    }

    /// Averages `Re Tr[B_z X] + c_z` over rows.
    fn functional(&self, per_class: &[(Mat, f64)]) -> Linear {
        match self.mode {
            Mode::Asymptotic => {
                let (xs, ws) = self.class_sums();
                let value = per_class
                    .iter()
                    .zip(xs.iter().zip(ws))
                    .map(|((b, c), (x, w))| re_trace_product(b, x) + c * w)
                    .sum();
                Linear::constant(value)
            }
            Mode::Empirical => {
                let rows: Vec<f64> = self
                    .rows
                    .par_iter()
                    .map(|r| {
                        let (b, c) = &per_class[r.class];
                        re_trace_product(b, &self.observed(r)) + c
                    })
                    .collect();
                let value = rows.iter().zip(&self.rows).map(|(f, r)| f * r.weight).sum();
                Linear { value, rows: Some(Arc::new(rows)) }
            }
        }
    }

    fn result(
        &self,
        quantity: &str,
        side: Side,
        method: &str,
        lin: &Linear,
        flags: &[String],
    ) -> Result<BoundResult> {
        let stderr = lin.stderr();
        let certified = adjust(lin.value, stderr, self.rows.len(), self.confidence, side)?;
        Ok(BoundResult {
            quantity: quantity.into(),
            side,
            value: lin.value,
            stderr,
            confidence: self.confidence,
            certified,
            method: method.into(),
            mode: self.mode,
            diagnostic: None,
            flags: flags.join(";"),
            seed: self.provenance.seed,
            shots: self.provenance.shots,
            config_hash: self.provenance.config_hash.clone(),
            influence: lin.rows.clone(),
        })
    }

    /// `P^QC = Σ w Tr[ρ^C X]`.
    pub fn p_qc(&self) -> f64 {
        let terms: Vec<(Mat, f64)> = self.classes.iter().map(|c| ((***c).clone(), 0.0)).collect();
        self.functional(&terms).value
    }

    /// `P^CC = Σ w Tr[(ρ^C)^2]`.
    pub fn p_cc(&self) -> f64 {
        self.classes.iter().zip(self.class_weights()).map(|(c, w)| w * c.purity()).sum()
    }
}

/// `Re Tr[B X]`.
fn re_trace_product(b: &Mat, x: &Mat) -> f64 {
    b.iter().zip(x.t().iter()).map(|(p, q)| (p * q).re).sum()
}

fn check_psd_superop(n: &Superoperator) -> Result<()> {
    let dev = herm_deviation(n.matrix());
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let min = n.eigenvalues()[0];
    if min < -PSD_INPUT_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

fn top_eigenvalue(m: &Mat) -> f64 {
    let v = eigh(m).0;
    v[v.len() - 1]
}

// ---------------------------------------------------------------------------
// Superoperator certificates

/// Frozen multipliers of the superoperator certificates: `K = ζ = η^CC⁺ η^CQ`
/// and the dual matrix `Y(K) = η^QC K + K^† η^CQ - K^† η^CC K ⪯ η^QQ`.
#[derive(Clone, Debug)]
pub struct SuperopFit {
    pub zeta: Superoperator,
    pub y: Mat,
}

impl SuperopFit {
    /// `STr[Y]`, the superoperator purity certificate at the fit data.
    pub fn trace_y(&self) -> f64 {
        trace(&self.y).re
    }
}

pub fn fit_superop(ds: &Dataset) -> Result<SuperopFit> {
    let qc = ds.eta_qc();
    let cc = ds.eta_cc();
    let zeta = solve_superop(&cc, &qc, PINV_CUTOFF)?;
    let k = zeta.matrix();
    let a = qc.matrix().dot(k);
    let y = &a + &dagger(&a) - dagger(k).dot(cc.matrix()).dot(k);
    Ok(SuperopFit { zeta, y: hermitian_part(&y) })
}

/// Per-class `(B_z, c_z)` of `2 Re<<ρ^C|K N|X>> - <<ρ^C|K N K^†|ρ^C>>`,
/// whose average is `STr[N Y(K)]`.
fn quad_terms(ds: &Dataset, n: &Mat, k: &Mat) -> Vec<(Mat, f64)> {
    let kn_dag = dagger(&k.dot(n));
    let k_dag = dagger(k);
    ds.classes
        .par_iter()
        .map(|rc| {
            let v = vectorize(rc);
            let bm = unvectorize(&kn_dag.dot(&v));
            let b = &bm + &dagger(&bm);
            let u = k_dag.dot(&v);
            let nu = n.dot(&u);
            let c = -u.iter().zip(nu.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re;
            (b, c)
        })
        .collect()
}

fn quad_form(ds: &Dataset, n: &Mat, fit: &SuperopFit) -> Linear {
    ds.functional(&quad_terms(ds, n, fit.zeta.matrix()))
}

/// `𝔼 Tr[(ρ^Q)^2] ≥ STr[η^QC ζ]`.
pub fn purity_lower_super(ds: &Dataset) -> Result<BoundResult> {
    purity_lower_super_at(ds, &fit_superop(ds)?)
}

pub fn purity_lower_super_at(ds: &Dataset, fit: &SuperopFit) -> Result<BoundResult> {
    let id = eye(ds.dim * ds.dim);
    ds.result("purity", Side::Lower, "superop", &quad_form(ds, &id, fit), &[])
}

/// `𝔼 <<ρ|N|ρ>> ≥ STr[N η^QC ζ]` for `N ⪰ 0`.
pub fn quad_lower(ds: &Dataset, n: &Superoperator) -> Result<BoundResult> {
    quad_lower_at(ds, n, &fit_superop(ds)?)
}

pub fn quad_lower_at(ds: &Dataset, n: &Superoperator, fit: &SuperopFit) -> Result<BoundResult> {
    check_psd_superop(n)?;
    ds.result("quad", Side::Lower, "quad_dual", &quad_form(ds, n.matrix(), fit), &[])
}

/// `𝔼 <<ρ|N|ρ>> ≤ ‖N‖ + STr[(N - ‖N‖ id) η^QC ζ]`.
pub fn quad_upper(ds: &Dataset, n: &Superoperator) -> Result<BoundResult> {
    quad_upper_at(ds, n, &fit_superop(ds)?)
}

pub fn quad_upper_at(ds: &Dataset, n: &Superoperator, fit: &SuperopFit) -> Result<BoundResult> {
    check_psd_superop(n)?;
    let norm = top_eigenvalue(n.matrix()).max(0.0);
    let mut nbar = hermitian_part(n.matrix());
    for i in 0..nbar.nrows() {
        nbar[[i, i]] -= norm;
    }
    let lin = quad_form(ds, &nbar, fit);
    let lin = Linear::combine(1.0, &lin, 0.0, &Linear::constant(0.0), norm);
    let mut r = ds.result("quad", Side::Upper, "quad_dual", &lin, &[])?;
    r.diagnostic = Some(norm);
    Ok(r)
}

/// Both sides of the quadratic bound.
pub fn quad_bounds(ds: &Dataset, n: &Superoperator) -> Result<(BoundResult, BoundResult)> {
    let fit = fit_superop(ds)?;
    Ok((quad_lower_at(ds, n, &fit)?, quad_upper_at(ds, n, &fit)?))
}

/// `Σ_μ |τ_μ ⊗ I>><<τ_μ ⊗ I|` over an orthonormal basis of `Q_1`, so that
/// `<<ρ|N|ρ>> = Tr[(ρ^{Q_1})^2]`. `‖N‖ = 2^{n - |Q_1|}`.
pub fn subsystem_purity_superop(n_qubits: usize, keep: &[usize]) -> Result<Superoperator> {
    let basis = pauli_basis(keep.len());
    let lifted: Vec<Mat> = basis.iter().map(|t| embed(t, keep, n_qubits)).collect::<Result<_>>()?;
    let refs: Vec<&Mat> = lifted.iter().collect();
    Ok(Superoperator::gram(&vec![1.0; refs.len()], &refs))
}

/// `𝔼 <<ρ^Q|Z_q|ρ^Q>>`-type observable `|O>><<O|`.
pub fn observable_square_superop(o: &Mat) -> Superoperator {
    Superoperator::gram(&[1.0], &[o])
}

/// Purity upper bound. Extreme-point ensembles make `1` the only certificate
/// in general; the floor `1 - (1 - 1/d) R max_z p_z` is reported as
/// diagnostic (some feasible ensemble has purity at least this large).
pub fn purity_upper(r: usize, p_max: f64, d: usize, mode: Mode) -> Result<BoundResult> {
    if !(p_max > 0.0 && p_max <= 1.0) || d < 1 {
        return Err(Error::InvalidParameter(format!("p_max = {p_max}, d = {d}")));
    }
    let mut res = BoundResult::exact("purity", Side::Upper, 1.0, "trivial", mode);
    res.diagnostic = Some(1.0 - (1.0 - 1.0 / d as f64) * r as f64 * p_max);
    Ok(res)
}

/// Frame potential `F^(2) = STr[(η^QQ)^2]` bounds.
///
/// Lower: `2 STr[Y W] - STr[W^2]` with `W` the PSD part of the fitted `Y`.
/// Upper: `STr[Y^2] + 1 - STr[Y]^2`, valid for `Y ⪰ 0`; in empirical mode it is
/// a plug-in estimate with delta-method standard error.
pub fn frame_potential_bounds(ds: &Dataset, k: usize) -> Result<(BoundResult, BoundResult)> {
    frame_potential_bounds_at(ds, k, &fit_superop(ds)?)
}

pub fn frame_potential_bounds_at(
    ds: &Dataset,
    k: usize,
    fit: &SuperopFit,
) -> Result<(BoundResult, BoundResult)> {
    if k != 2 {
        return Err(Error::UnsupportedOrder(k));
    }
    let (vals, vecs) = eigh(&fit.y);
    let w = spectral_apply(&vals, &vecs, |x| C64::from(x.max(0.0)));
    let w_sq: f64 = vals.iter().map(|x| x.max(0.0).powi(2)).sum();
    let qw = quad_form(ds, &w, fit);
    let lower = Linear::combine(2.0, &qw, 0.0, &Linear::constant(0.0), -w_sq);

    // plug-in on this dataset's own Y
    let own = fit_superop(ds)?;
    let y = &own.y;
    let y_sq: f64 = y.iter().map(|x| x.norm_sqr()).sum();
    let s = own.trace_y();
    let id = eye(ds.dim * ds.dim);
    let qy = quad_form(ds, y, &own);
    let qi = quad_form(ds, &id, &own);
    let mut upper = Linear::combine(2.0, &qy, -2.0 * s, &qi, 0.0);
    upper.value = y_sq + 1.0 - s * s;
    let min_y = vals[0];
    let mut flags = Vec::new();
    if min_y < -1e-10 {
        flags.push("y_not_psd".to_string());
    }
    let lo = ds.result("frame_potential", Side::Lower, "fp_dual", &lower, &flags)?;
    let hi = ds.result("frame_potential", Side::Upper, "fp_plugin", &upper, &flags)?;
    Ok((lo, hi))
}

/// `‖ρ^(2) - ρ^(2)_Haar‖₂² = F^(2) - 2/(d(d+1)) 𝔼 Tr[(ρ^Q)^2]`.
pub fn design_distance_bounds(
    fp: &(BoundResult, BoundResult),
    purity: &(BoundResult, BoundResult),
    d: usize,
) -> Result<(BoundResult, BoundResult)> {
    let c = 2.0 / (d * (d + 1)) as f64;
    let side = |a: &BoundResult, b: &BoundResult, s: Side| -> Result<BoundResult> {
        let value = a.value - c * b.value;
        let (stderr, influence) = match (&a.influence, &b.influence) {
            (Some(u), Some(v)) if u.len() == v.len() => {
                let rows: Vec<f64> = u.iter().zip(v.iter()).map(|(x, y)| x - c * y).collect();
                let se = CorrelatorEstimate::from_samples(&rows)?.stderr;
                (se, Some(Arc::new(rows)))
            }
            (Some(u), None) => (a.stderr, Some(Arc::new(u.iter().map(|x| x - c * b.value).collect()))),
            _ => (a.stderr + c * b.stderr, None),
        };
        let n = influence.as_ref().map(|v: &Arc<Vec<f64>>| v.len()).unwrap_or(usize::MAX);
        let certified = adjust(value, stderr, n, a.confidence, s)?;
        let mut flags: Vec<&str> = a.flags.split(';').chain(b.flags.split(';')).filter(|f| !f.is_empty()).collect();
        flags.dedup();
        Ok(BoundResult {
            quantity: "design_distance".into(),
            side: s,
            value,
            stderr,
            confidence: a.confidence,
            certified,
            method: "dist2".into(),
            mode: a.mode,
            diagnostic: None,
            flags: flags.join(";"),
            seed: a.seed,
            shots: a.shots,
            config_hash: a.config_hash.clone(),
            influence,
        })
    };
    Ok((side(&fp.0, &purity.1, Side::Lower)?, side(&fp.1, &purity.0, Side::Upper)?))
}

// ---------------------------------------------------------------------------
// Linear constraints and the purity Gram bound

/// Generator of constraint operators `A_z` from the twin state.
#[derive(Clone)]
pub enum Constraint {
    /// `A_z = ρ^C_z`.
    Correlator,
    /// `A_z = O` for every `z`.
    Observable(HermOp),
    /// `A_z = Tr[O ρ^C_z] O`.
    QuantumClassical(HermOp),
    /// Arbitrary Hermitian function of the twin state.
    Map(Arc<dyn Fn(&DensityMatrix) -> HermOp + Send + Sync>),
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Correlator => write!(f, "Correlator"),
            Constraint::Observable(_) => write!(f, "Observable"),
            Constraint::QuantumClassical(_) => write!(f, "QuantumClassical"),
            Constraint::Map(_) => write!(f, "Map"),
        }
    }
}

impl Constraint {
    pub fn operator(&self, rho_c: &DensityMatrix) -> Mat {
        match self {
            Constraint::Correlator => (**rho_c).clone(),
            Constraint::Observable(o) => (**o).clone(),
            Constraint::QuantumClassical(o) => {
                let t = re_trace_product(o, rho_c);
                o.mapv(|x| x * t)
            }
            Constraint::Map(f) => f(rho_c).into_inner(),
        }
    }
}

/// Constraints `<A^(i)_z> = b_i`.
///
/// With `include_normalization` the dual uses `Tr ρ = 1` and gives
/// `1/d + (b - a)^T L⁺ (b - a)` with the traceless Gram matrix `L`;
/// without it the dual is `b^T J⁺ b` with the raw Gram matrix
/// `J_ij = 𝔼 Tr[A_i A_j]`.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
    pub include_normalization: bool,
}

/// Constraint data evaluated on a dataset.
#[derive(Clone, Debug)]
pub struct ConstraintData {
    pub b: Vec<f64>,
    pub b_stderr: Vec<f64>,
    /// `a_i = 𝔼 Tr[A_i] / d` (zero without normalization).
    pub a: Vec<f64>,
    /// `L_ij = 𝔼 Tr[Ã_i Ã_j]` or `J_ij = 𝔼 Tr[A_i A_j]`.
    pub gram: Array2<f64>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints, include_normalization: true }
    }

    pub fn raw(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints, include_normalization: false }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    /// Operators per class; traceless when normalization is included.
    fn class_operators(&self, ds: &Dataset) -> Vec<Vec<Mat>> {
        ds.classes
            .par_iter()
            .map(|rc| {
                self.constraints
                    .iter()
                    .map(|c| {
                        let a = c.operator(rc);
                        if self.include_normalization {
                            traceless(&a)
                        } else {
                            a
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn evaluate(&self, ds: &Dataset) -> ConstraintData {
        let r = self.len();
        let d = ds.dim as f64;
        let ws = ds.class_weights();
        let mut b = Vec::with_capacity(r);
        let mut b_stderr = Vec::with_capacity(r);
        let mut a = vec![0.0; r];
        for (i, c) in self.constraints.iter().enumerate() {
            let terms: Vec<(Mat, f64)> = ds.classes.iter().map(|rc| (c.operator(rc), 0.0)).collect();
            let lin = ds.functional(&terms);
            b.push(lin.value);
            b_stderr.push(lin.stderr());
            if self.include_normalization {
                a[i] = terms.iter().zip(ws).map(|((m, _), w)| w * trace(m).re / d).sum();
            }
        }
        let ops = self.class_operators(ds);
        let mut gram = Array2::zeros((r, r));
        for (k, opk) in ops.iter().enumerate() {
            for i in 0..r {
                for j in i..r {
                    let g = ws[k] * re_trace_product(&opk[i], &opk[j]);
                    gram[[i, j]] += g;
                    if i != j {
                        gram[[j, i]] += g;
                    }
                }
            }
        }
        ConstraintData { b, b_stderr, a, gram }
    }
}

fn traceless(a: &Mat) -> Mat {
    let d = a.nrows();
    let t = trace(a) / d as f64;
    let mut m = a.clone();
    for i in 0..d {
        m[[i, i]] -= t;
    }
    m
}

/// Pseudo-inverse of a real symmetric matrix with relative cutoff.
fn pinv_sym(m: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let (vals, vecs) = eigh_real(m);
    let top = vals.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let thr = PINV_CUTOFF * top;
    let mut out = Array2::zeros((n, n));
    for (k, &v) in vals.iter().enumerate() {
        if v.abs() > thr && top > 0.0 {
            let col = vecs.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[[i, j]] += col[i] * col[j] / v;
                }
            }
        }
    }
    out
}

/// Lower bound on `𝔼 Tr[(ρ^Q)^2]` from linear constraints.
///
/// The multipliers `λ = 2 L⁺ (b - a)` are frozen and the dual function
/// `1/d + Σ λ_i (b_i - a_i) - λ^T L λ / 4` is averaged row by row. The flag
/// `dual_optimal` records whether `min eig(Σ λ_i Ã_z^(i)) / 2 ≥ -1/d` for
/// every `z`, the condition under which the dual value is the exact minimum.
pub fn purity_lower_l(ds: &Dataset, cs: &ConstraintSet) -> Result<BoundResult> {
    let d = ds.dim as f64;
    let floor = if cs.include_normalization { 1.0 / d } else { 0.0 };
    let method = if cs.include_normalization { "gram_traceless" } else { "gram_raw" };
    if cs.is_empty() {
        return ds.result("purity", Side::Lower, method, &Linear::constant(floor), &[]);
    }
    let data = cs.evaluate(ds);
    let u = Array1::from_shape_fn(cs.len(), |i| data.b[i] - data.a[i]);
    let pinv = pinv_sym(&data.gram);
    let lam = pinv.dot(&u).mapv(|x| 2.0 * x);

    let residual = data.gram.dot(&pinv.dot(&u)) - &u;
    let res_norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if ds.mode == Mode::Asymptotic && res_norm > 1e-8 * u_norm.max(1.0) {
        return ds.result("purity", Side::Lower, method, &Linear::constant(floor), &["out_of_range".into()]);
    }

    let ops = cs.class_operators(ds);
    let raw: Vec<Vec<Mat>> = if cs.include_normalization {
        ds.classes.iter().map(|rc| cs.constraints.iter().map(|c| c.operator(rc)).collect()).collect()
    } else {
        ops.clone()
    };
    let mut min_eig = f64::INFINITY;
    let mut terms = Vec::with_capacity(ds.classes.len());
    for (opk, rawk) in ops.iter().zip(&raw) {
        let mut c_t = Mat::zeros((ds.dim, ds.dim));
        let mut c_full = Mat::zeros((ds.dim, ds.dim));
        for i in 0..cs.len() {
            c_t.scaled_add(C64::from(lam[i]), &opk[i]);
            c_full.scaled_add(C64::from(lam[i]), &rawk[i]);
        }
        let sq: f64 = c_t.iter().map(|x| x.norm_sqr()).sum();
        let c = if cs.include_normalization {
            min_eig = min_eig.min(eigh(&c_t).0[0] / 2.0);
            floor - trace(&c_full).re / d - sq / 4.0
        } else {
            -sq / 4.0
        };
        terms.push((c_full, c));
    }
    let lin = ds.functional(&terms);
    let mut flags = Vec::new();
    if cs.include_normalization {
        flags.push(if min_eig >= -1.0 / d - 1e-12 { "dual_optimal" } else { "dual_suboptimal" }.to_string());
    }
    let mut r = ds.result("purity", Side::Lower, method, &lin, &flags)?;
    r.diagnostic = Some(floor + u.dot(&pinv.dot(&u)));
    Ok(r)
}

// ---------------------------------------------------------------------------
// Entropy bounds

/// Upper bound on `𝔼 S(ρ^Q_z)`.
///
/// If every twin eigenvalue exceeds `epsilon` the certificate is
/// `Σ w (log Tr[(ρ^C)^λ] - λ Tr[X log ρ^C])`, by default at `λ = 1`.
/// Otherwise the twin spectrum is split at `epsilon` and the two-multiplier
/// dual `log(Tr[(Π^> ρ^C Π^>)^{λ1}] + e^{-λ2} r_z) + λ1 <A1> + λ2 <A2>` is
/// evaluated at `λ1 = 1` and the approximately optimal `λ2`.
/// With `refine`, `λ` (or `λ2`) is chosen on a grid of ±50% around the default.
pub fn vn_upper(ds: &Dataset, epsilon: f64, refine: bool) -> Result<BoundResult> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon}")));
    }
    let spectra: Vec<(Array1<f64>, Mat)> = ds.classes.par_iter().map(|c| eigh(c)).collect();
    let singular = spectra.iter().any(|(v, _)| v[0] <= epsilon);
    if !singular {
        let eval = |lambda: f64| -> Linear {
            let terms: Vec<(Mat, f64)> = spectra
                .iter()
                .map(|(v, u)| {
                    let b = spectral_apply(v, u, |q| C64::from(-lambda * q.ln()));
                    let c = v.iter().map(|q| q.powf(lambda)).sum::<f64>().ln();
                    (b, c)
                })
                .collect();
            ds.functional(&terms)
        };
        let (lambda, lin) = if refine {
            refine_1d(1.0, |l| eval(l), |a, b| a < b)
        } else {
            (1.0, eval(1.0))
        };
        let mut r = ds.result("vn", Side::Upper, "qc_entropy", &lin, &[])?;
        r.diagnostic = Some(lambda);
        return Ok(r);
    }

    let d = ds.dim as f64;
    let ws = ds.class_weights();
    let projectors: Vec<(Mat, Mat, f64, f64, f64)> = spectra
        .iter()
        .zip(&ds.classes)
        .map(|((v, u), rc)| {
            let a1 = spectral_apply(v, u, |q| C64::from(if q > epsilon { -q.ln() } else { 0.0 }));
            let p_low = spectral_apply(v, u, |q| C64::from(if q > epsilon { 0.0 } else { 1.0 }));
            let rank = v.iter().filter(|&&q| q <= epsilon).count() as f64;
            let delta_c = re_trace_product(&p_low, rc);
            let tr_high: f64 = v.iter().filter(|&&q| q > epsilon).sum();
            (a1, p_low, rank, delta_c, tr_high)
        })
        .collect();
    let low_terms: Vec<(Mat, f64)> = projectors.iter().map(|p| (p.1.clone(), 0.0)).collect();
    let delta_q_raw = ds.functional(&low_terms).value;
    if delta_q_raw >= 1.0 - DELTA_CLAMP {
        let lin = Linear::constant(d.ln());
        return ds.result("vn", Side::Upper, "qc_entropy_regularized", &lin, &["degenerate".into()]);
    }
    let delta_q = delta_q_raw.max(DELTA_CLAMP);
    let r_bar: f64 = projectors.iter().zip(ws).map(|(p, w)| w * p.2).sum();
    let delta_c: f64 = projectors.iter().zip(ws).map(|(p, w)| w * p.3).sum();
    let lambda2 = (r_bar * (1.0 - delta_q) / (delta_q * (1.0 - delta_c))).ln();

    let eval = |l2: f64| -> Linear {
        let terms: Vec<(Mat, f64)> = projectors
            .iter()
            .zip(&spectra)
            .map(|((a1, p_low, rank, _, _), (v, _))| {
                let high: f64 = v.iter().filter(|&&q| q > epsilon).sum();
                let c = (high + (-l2).exp() * rank).ln();
                (a1 + &p_low.mapv(|x| x * l2), c)
            })
            .collect();
        ds.functional(&terms)
    };
    let (l2, lin) = if refine { refine_1d(lambda2, |l| eval(l), |a, b| a < b) } else { (lambda2, eval(lambda2)) };
    let mut flags = vec!["regularized".to_string()];
    if delta_q_raw < DELTA_CLAMP {
        flags.push("delta_clamped".into());
    }
    let mut r = ds.result("vn", Side::Upper, "qc_entropy_regularized", &lin, &flags)?;
    r.diagnostic = Some(l2);
    Ok(r)
}

/// Grid search over `[x0 (1 - 0.5), x0 (1 + 0.5)]`, keeping `x0` when it wins.
fn refine_1d(x0: f64, eval: impl Fn(f64) -> Linear, better: impl Fn(f64, f64) -> bool) -> (f64, Linear) {
    let mut best = (x0, eval(x0));
    for k in 0..REFINE_POINTS {
        let x = x0 * (1.0 - REFINE_SPAN + 2.0 * REFINE_SPAN * k as f64 / (REFINE_POINTS - 1) as f64);
        if x == x0 {
            continue;
        }
        let lin = eval(x);
        if better(lin.value, best.1.value) {
            best = (x, lin);
        }
    }
    best
}

/// Lower bound on `𝔼 S(ρ^{Q_1}_z)` for the qubits `keep` of the conditional
/// register.
///
/// With `H_z = λ1 log ρ^C_z - λ2 log ρ^{C_1}_z ⊗ I` the certificate is
/// `Σ w (Tr[H_z X] - log ‖Tr_{Q_2} e^{H_z}‖_∞)`, valid for any Hermitian
/// `H_z` by Golden–Thompson. Logarithms are floored at [`LOG_FLOOR`] so
/// singular twins are admissible; this is flagged. With `refine`, `λ` is
/// chosen on an 11 x 11 grid of ±50% around the given multipliers.
pub fn vn_lower_subsystem(ds: &Dataset, keep: &[usize], lambda: [f64; 2], refine: bool) -> Result<BoundResult> {
    let nb = ds.dim.trailing_zeros() as usize;
    if keep.is_empty() || keep.len() >= nb || keep.iter().any(|&q| q >= nb) {
        return Err(Error::InvalidParameter(format!("subsystem {keep:?} of {nb} qubits")));
    }
    let dims = vec![2usize; nb];
    let mut floored = false;
    let logs: Vec<(Mat, Mat)> = ds
        .classes
        .iter()
        .map(|rc| -> Result<(Mat, Mat)> {
            let rc1 = partial_trace(rc, &dims, keep)?;
            floored |= eigh(rc).0[0] < LOG_FLOOR || eigh(&rc1).0[0] < LOG_FLOOR;
            let l = herm_fn(rc, HermFn::LogFloor(LOG_FLOOR))?.into_inner();
            let l1 = embed(&herm_fn(&rc1, HermFn::LogFloor(LOG_FLOOR))?.into_inner(), keep, nb)?;
            Ok((l, l1))
        })
        .collect::<Result<_>>()?;
    let eval = |l1: f64, l2: f64| -> Result<Linear> {
        let terms: Vec<(Mat, f64)> = logs
            .par_iter()
            .map(|(l, e)| -> Result<(Mat, f64)> {
                let h = l.mapv(|x| x * l1) - e.mapv(|x| x * l2);
                let ex = herm_fn(&h, HermFn::Exp)?;
                let red = partial_trace(&ex, &dims, keep)?;
                Ok((h, -top_eigenvalue(&red).ln()))
            })
            .collect::<Result<_>>()?;
        Ok(ds.functional(&terms))
    };
    let mut best = (lambda, eval(lambda[0], lambda[1])?);
    if refine {
        let grid = |x: f64, k: usize| x * (1.0 - REFINE_SPAN + 2.0 * REFINE_SPAN * k as f64 / (REFINE_POINTS - 1) as f64);
        for i in 0..REFINE_POINTS {
            for j in 0..REFINE_POINTS {
                let cand = [grid(lambda[0], i), grid(lambda[1], j)];
                if cand == lambda {
                    continue;
                }
                let lin = eval(cand[0], cand[1])?;
                if lin.value > best.1.value {
                    best = (cand, lin);
                }
            }
        }
    }
    let flags: Vec<String> = if floored { vec!["log_floor".into()] } else { vec![] };
    let mut r = ds.result("vn_sub", Side::Lower, "golden_thompson", &best.1, &flags)?;
    r.diagnostic = Some(best.0[0]);
    Ok(r)
}

/// Point values computed directly from `η^QC` and `η^CC`, without data rows.
pub mod from_superops {
    use super::*;

    fn y(eta_qc: &Superoperator, eta_cc: &Superoperator) -> Result<Mat> {
        let zeta = solve_superop(eta_cc, eta_qc, PINV_CUTOFF)?;
        Ok(hermitian_part(&eta_qc.matrix().dot(zeta.matrix())))
    }

    /// `STr[η^QC ζ]`.
    pub fn purity_lower(eta_qc: &Superoperator, eta_cc: &Superoperator) -> Result<f64> {
        Ok(trace(&y(eta_qc, eta_cc)?).re)
    }

    /// `STr[N η^QC ζ]`.
    pub fn quad_lower(n: &Superoperator, eta_qc: &Superoperator, eta_cc: &Superoperator) -> Result<f64> {
        check_psd_superop(n)?;
        Ok(trace(&n.matrix().dot(&y(eta_qc, eta_cc)?)).re)
    }

    /// `‖N‖ (1 - STr[η^QC ζ]) + STr[N η^QC ζ]`.
    pub fn quad_upper(n: &Superoperator, eta_qc: &Superoperator, eta_cc: &Superoperator) -> Result<f64> {
        check_psd_superop(n)?;
        let y = y(eta_qc, eta_cc)?;
        let norm = top_eigenvalue(n.matrix()).max(0.0);
        Ok(norm * (1.0 - trace(&y).re) + trace(&n.matrix().dot(&y)).re)
    }

    /// `(STr[Y^2], STr[Y^2] + 1 - STr[Y]^2)` with `Y = η^QC ζ`.
    pub fn frame_potential(eta_qc: &Superoperator, eta_cc: &Superoperator) -> Result<(f64, f64)> {
        let y = y(eta_qc, eta_cc)?;
        let sq: f64 = y.iter().map(|x| x.norm_sqr()).sum();
        let s = trace(&y).re;
        Ok((sq, sq + 1.0 - s * s))
    }
}
