//! The simulate, estimate and bound pipeline behind the figure tables.
//!
//! A [`ModelConfig`] fixes the Floquet chain, the noise, the measured qubits
//! and the twin. [`Benchmark`] evolves it, enumerates projected ensembles and
//! evaluates a [`Target`] at one sweep point in both evaluation modes.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    design_distance_bounds, frame_potential_bounds, observable_square_superop, purity_lower_super,
    purity_upper, quad_bounds, BoundResult, Dataset, Provenance, DEFAULT_CONFIDENCE,
};
use crate::dynamics::{perturb, zero_state, Floquet, IsingParams, NoiseParams, PerturbationSpec};
use crate::ensemble::{ExactEnsemble, PreState, ProjectedEnsemble};
use crate::opalg::{embed, pauli, Superoperator};
use crate::oracle::{true_average, true_design_distance, Quantity};
use crate::shadows::simulate_records;
use crate::{Error, Mat, Result};

/// Physical model of a benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_params")]
    pub params: IsingParams,
    #[serde(default)]
    pub p_dec: f64,
    /// Unmeasured qubits; the rest are measured in the computational basis.
    #[serde(default = "default_unmeasured")]
    pub unmeasured: Vec<usize>,
    /// Fractional parameter uncertainty of the twin.
    #[serde(default)]
    pub f: f64,
    /// Seed for the perturbation signs, kept fixed across a sweep.
    #[serde(default)]
    pub perturbation_seed: u64,
    /// Whether the twin applies the same amplitude damping as the device.
    #[serde(default)]
    pub twin_noise: bool,
}

fn default_params() -> IsingParams {
    IsingParams::benchmark(10)
}

fn default_unmeasured() -> Vec<usize> {
    vec![0]
}

impl ModelConfig {
    /// Benchmark chain of `n` qubits, noiseless, perfect twin.
    pub fn benchmark(n: usize) -> Self {
        ModelConfig {
            params: IsingParams::benchmark(n),
            p_dec: 0.0,
            unmeasured: default_unmeasured(),
            f: 0.0,
            perturbation_seed: 0,
            twin_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        NoiseParams::new(self.p_dec)?;
        let n = self.params.n_qubits;
        if self.unmeasured.is_empty() || self.unmeasured.len() >= n || self.unmeasured.iter().any(|&q| q >= n) {
            return Err(Error::InvalidParameter(format!("unmeasured qubits {:?} of {n}", self.unmeasured)));
        }
        if !(self.f >= 0.0 && self.f.is_finite()) {
            return Err(Error::InvalidParameter(format!("f = {}", self.f)));
        }
        Ok(())
    }

    /// Perturbed twin parameters at fraction `f`.
    pub fn twin_params(&self, f: f64) -> Result<IsingParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.perturbation_seed);
        let spec = PerturbationSpec::draw(&self.params, f, &mut rng);
        perturb(&self.params, &spec)
    }
}

/// Pre-measurement states for `t = 0..=t_max`.
pub fn trajectory(params: &IsingParams, p_dec: f64, t_max: usize) -> Result<Vec<PreState>> {
    let fl = Floquet::new(params.clone())?;
    let psi0 = zero_state(params.n_qubits);
    if p_dec == 0.0 {
        Ok(fl.pure_trajectory(&psi0, t_max)?.into_iter().map(PreState::Pure).collect())
    } else {
        let rho0 = Mat::from_shape_fn((psi0.len(), psi0.len()), |(i, j)| psi0[i] * psi0[j].conj());
        let traj = fl.mixed_trajectory(&rho0, NoiseParams::new(p_dec)?, t_max)?;
        Ok(traj.into_iter().map(PreState::Mixed).collect())
    }
}

/// Quantity evaluated at each sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `𝔼 Tr[ρ Z_1]^2` with `Z_1` on the first unmeasured qubit.
    Gbar,
    Purity,
    DesignDistance,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Gbar => "gbar",
            Target::Purity => "purity",
            Target::DesignDistance => "design_distance",
        })
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gbar" => Ok(Target::Gbar),
            "purity" => Ok(Target::Purity),
            "design_distance" => Ok(Target::DesignDistance),
            _ => Err(Error::Parse(format!("unknown quantity {s:?}"))),
        }
    }
}

/// `|Z_1>><<Z_1|` on a register of `k` qubits.
pub fn gbar_superop(k: usize) -> Result<Superoperator> {
    Ok(observable_square_superop(&embed(&pauli(3), &[0], k)?))
}

/// Exact value of a target.
pub fn truth(ens: &ExactEnsemble, target: Target) -> Result<f64> {
    match target {
        Target::Gbar => true_average(ens, &Quantity::Quad(gbar_superop(ens.dim.trailing_zeros() as usize)?)),
        Target::Purity => Ok(ens.mean_purity()),
        Target::DesignDistance => true_design_distance(ens),
    }
}

/// Lower and upper certificates of a target on one dataset.
pub fn certify(ds: &Dataset, ens: &ExactEnsemble, target: Target) -> Result<(BoundResult, BoundResult)> {
    let d = ds.dim();
    let upper_purity = || purity_upper(d * d * d * d, ens.max_probability(), d, ds.mode());
    match target {
        Target::Gbar => quad_bounds(ds, &gbar_superop(d.trailing_zeros() as usize)?),
        Target::Purity => Ok((purity_lower_super(ds)?, upper_purity()?)),
        Target::DesignDistance => {
            let fp = frame_potential_bounds(ds, 2)?;
            let purity = (purity_lower_super(ds)?, upper_purity()?);
            design_distance_bounds(&fp, &purity, d)
        }
    }
}

/// One row of a figure table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub figure: String,
    pub sweep: String,
    pub x: f64,
    pub t: usize,
    pub f: f64,
    pub p_dec: f64,
    pub quantity: String,
    pub truth: f64,
    pub lower_empirical: Option<f64>,
    pub upper_empirical: Option<f64>,
    pub lower_empirical_stderr: Option<f64>,
    pub upper_empirical_stderr: Option<f64>,
    pub lower_asymptotic: f64,
    pub upper_asymptotic: f64,
    pub delta_qc: f64,
    pub one_minus_purity: f64,
    pub confidence: f64,
    pub shots: Option<usize>,
    pub seed: u64,
    pub config_hash: String,
    pub flags: String,
}

impl Row {
    /// Whether the asymptotic interval contains the truth within `tol`.
    pub fn asymptotic_contains(&self, tol: f64) -> bool {
        self.lower_asymptotic <= self.truth + tol && self.truth <= self.upper_asymptotic + tol
    }

    /// Whether the certified empirical interval contains the truth, if present.
    pub fn empirical_contains(&self, tol: f64) -> Option<bool> {
        match (self.lower_empirical, self.upper_empirical) {
            (Some(lo), Some(hi)) => Some(lo <= self.truth + tol && self.truth <= hi + tol),
            _ => None,
        }
    }

    pub fn asymptotic_width(&self) -> f64 {
        self.upper_asymptotic - self.lower_asymptotic
    }

    pub fn empirical_width(&self) -> Option<f64> {
        Some(self.upper_empirical? - self.lower_empirical?)
    }
}

/// Deterministic per-point seed: the first word of ChaCha stream `k`.
pub fn point_seed(seed: u64, k: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng.next_u64()
}

/// Sweep-independent settings of a point evaluation.
#[derive(Clone, Debug)]
pub struct EvalSettings {
    pub confidence: f64,
    pub seed: u64,
    pub config_hash: String,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { confidence: DEFAULT_CONFIDENCE, seed: 0, config_hash: String::new() }
    }
}

/// Coordinates of a sweep point.
#[derive(Clone, Debug)]
pub struct Point<'a> {
    pub figure: &'a str,
    pub sweep: &'a str,
    pub x: f64,
    pub t: usize,
    pub f: f64,
    pub p_dec: f64,
    /// Index used to derive the shot seed.
    pub index: u64,
}

/// Truth, asymptotic bounds and, with `shots`, empirical bounds at one point.
pub fn evaluate(
    ens: &ExactEnsemble,
    target: Target,
    shots: Option<usize>,
    point: &Point<'_>,
    settings: &EvalSettings,
) -> Result<Row> {
    let exact = truth(ens, target)?;
    let ds = Dataset::asymptotic(ens).with_confidence(settings.confidence);
    let (alo, ahi) = certify(&ds, ens, target)?;
    let mut flags: Vec<String> =
        alo.flags.split(';').chain(ahi.flags.split(';')).filter(|f| !f.is_empty()).map(String::from).collect();
    let mut row = Row {
        figure: point.figure.into(),
        sweep: point.sweep.into(),
        x: point.x,
        t: point.t,
        f: point.f,
        p_dec: point.p_dec,
        quantity: target.to_string(),
        truth: exact,
        lower_empirical: None,
        upper_empirical: None,
        lower_empirical_stderr: None,
        upper_empirical_stderr: None,
        lower_asymptotic: alo.value,
        upper_asymptotic: ahi.value,
        delta_qc: ens.delta_qc(),
        one_minus_purity: 1.0 - ens.mean_purity(),
        confidence: settings.confidence,
        shots,
        seed: settings.seed,
        config_hash: settings.config_hash.clone(),
        flags: String::new(),
    };
    if let Some(m) = shots {
        let seed = point_seed(settings.seed, point.index);
        let records = simulate_records(ens, m, seed)?;
        let ds = Dataset::empirical(&records, ens)?.with_confidence(settings.confidence).with_provenance(Provenance {
            seed: Some(settings.seed),
            shots: Some(m),
            config_hash: Some(settings.config_hash.clone()),
        });
        let (lo, hi) = certify(&ds, ens, target)?;
        row.lower_empirical = Some(lo.certified);
        row.upper_empirical = Some(hi.certified);
        row.lower_empirical_stderr = Some(lo.stderr);
        row.upper_empirical_stderr = Some(hi.stderr);
        flags.extend(lo.flags.split(';').chain(hi.flags.split(';')).filter(|f| !f.is_empty()).map(String::from));
    }
    if ens.fallbacks > 0 {
        flags.push("twin_fallback".into());
    }
    flags.sort();
    flags.dedup();
    row.flags = flags.join(";");
    Ok(row)
}

/// Evolved model with cached device trajectories.
pub struct Benchmark {
    pub model: ModelConfig,
    device: Vec<PreState>,
}

impl Benchmark {
    /// Evolves the device up to `t_max`.
    pub fn new(model: ModelConfig, t_max: usize) -> Result<Self> {
        model.validate()?;
        let device = trajectory(&model.params, model.p_dec, t_max)?;
        Ok(Benchmark { model, device })
    }

    pub fn t_max(&self) -> usize {
        self.device.len() - 1
    }

    fn device_state(&self, t: usize) -> Result<&PreState> {
        self.device.get(t).ok_or_else(|| Error::InvalidParameter(format!("t = {t} > t_max = {}", self.t_max())))
    }

    /// Twin pre-states at fraction `f` for `t = 0..=t_max`.
    pub fn twin_trajectory(&self, f: f64) -> Result<Vec<PreState>> {
        let twin_p = if self.model.twin_noise { self.model.p_dec } else { 0.0 };
        if f == 0.0 && twin_p == self.model.p_dec {
            return Ok(self.device.clone());
        }
        trajectory(&self.model.twin_params(f)?, twin_p, self.t_max())
    }

    /// Enumerated projected ensemble at time `t` against a twin pre-state.
    pub fn ensemble(&self, t: usize, twin: &PreState) -> Result<ExactEnsemble> {
        let pe = ProjectedEnsemble::new(self.device_state(t)?.clone(), twin.clone(), &self.model.unmeasured)?;
        pe.enumerate()
    }

    /// Ensembles for every `t` in `ts` against the twin at fraction `f`.
    pub fn ensembles(&self, ts: &[usize], f: f64) -> Result<Vec<ExactEnsemble>> {
        let twin = self.twin_trajectory(f)?;
        ts.iter()
            .map(|&t| {
                let c = twin.get(t).ok_or_else(|| Error::InvalidParameter(format!("t = {t}")))?;
                self.ensemble(t, c)
            })
            .collect()
    }
}

/// Figure tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// `Ḡ` against `t` for several shot counts, noiseless, perfect twin.
    Converge,
    /// `Ḡ` against the twin uncertainty `f` at fixed `t`, noiseless.
    FSweep,
    /// As `FSweep` with amplitude damping.
    NoisySweep,
    /// Design distance against `t` for several `p_dec`.
    Design,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Converge, Figure::FSweep, Figure::NoisySweep, Figure::Design];
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Converge => "converge",
            Figure::FSweep => "f_sweep",
            Figure::NoisySweep => "noisy_sweep",
            Figure::Design => "design",
        })
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown figure {s:?}")))
    }
}

/// Sweep grids of a figure run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t_values: Vec<usize>,
    pub shots: Vec<usize>,
    pub f_values: Vec<f64>,
    pub p_dec_values: Vec<f64>,
    /// Time of the `f` sweeps.
    pub t_fixed: usize,
    /// Noise of `noisy_sweep`.
    pub p_dec_noisy: f64,
    /// Twin uncertainty of `design`.
    pub f_design: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            t_values: (1..=8).collect(),
            shots: vec![5_000, 50_000],
            f_values: vec![0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
            p_dec_values: vec![0.0, 0.002, 0.005],
            t_fixed: 8,
            p_dec_noisy: 0.002,
            f_design: 0.005,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} must be nonempty")));
        if self.t_values.is_empty() {
            return bad("t_values");
        }
        if self.shots.is_empty() {
            return bad("shots");
        }
        if self.f_values.is_empty() {
            return bad("f_values");
        }
        if self.p_dec_values.is_empty() {
            return bad("p_dec_values");
        }
        if self.shots.iter().any(|&m| m < 30) {
            return Err(Error::InvalidParameter("shots must be at least 30".into()));
        }
        for &p in self.p_dec_values.iter().chain([&self.p_dec_noisy]) {
            NoiseParams::new(p)?;
        }
        if self.f_values.iter().chain([&self.f_design]).any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(Error::InvalidParameter("f values must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Runs one figure. Rows are ordered by sweep value (and shot count).
///
/// The model's `p_dec`, `f` and `twin_noise` are overridden per figure:
/// `converge` and `f_sweep` are noiseless, `noisy_sweep` uses `p_dec_noisy`
/// with a twin that models the same damping, and `design` uses a noiseless
/// twin at `f_design`.
pub fn run_figure(fig: Figure, model: &ModelConfig, sweep: &SweepConfig, settings: &EvalSettings) -> Result<Vec<Row>> {
    sweep.validate()?;
    let name = fig.to_string();
    let max_shots = *sweep.shots.iter().max().expect("validated");
    let mut rows = Vec::new();
    let mut index = 0u64;
    let mut next = || {
        index += 1;
        index
    };
    match fig {
        Figure::Converge => {
            let m = ModelConfig { p_dec: 0.0, f: 0.0, ..model.clone() };
            let t_max = *sweep.t_values.iter().max().expect("validated");
            let bench = Benchmark::new(m, t_max)?;
            let mut ts = sweep.t_values.clone();
            ts.sort_unstable();
            let ens = bench.ensembles(&ts, 0.0)?;
            let mut shots = sweep.shots.clone();
            shots.sort_unstable();
            for (t, e) in ts.iter().zip(&ens) {
                for &s in &shots {
                    let p = Point { figure: &name, sweep: "t", x: *t as f64, t: *t, f: 0.0, p_dec: 0.0, index: next() };
                    rows.push(evaluate(e, Target::Gbar, Some(s), &p, settings)?);
                }
            }
        }
        Figure::FSweep | Figure::NoisySweep => {
            let (p_dec, twin_noise) = if fig == Figure::FSweep { (0.0, false) } else { (sweep.p_dec_noisy, true) };
            let m = ModelConfig { p_dec, twin_noise, ..model.clone() };
            let bench = Benchmark::new(m, sweep.t_fixed)?;
            let mut fs = sweep.f_values.clone();
            fs.sort_by(f64::total_cmp);
            for f in fs {
                let e = bench.ensembles(&[sweep.t_fixed], f)?.pop().expect("one");
                let p = Point { figure: &name, sweep: "f", x: f, t: sweep.t_fixed, f, p_dec, index: next() };
                rows.push(evaluate(&e, Target::Gbar, Some(max_shots), &p, settings)?);
            }
        }
        Figure::Design => {
            let t_max = *sweep.t_values.iter().max().expect("validated");
            let mut ts = sweep.t_values.clone();
            ts.sort_unstable();
            let mut ps = sweep.p_dec_values.clone();
            ps.sort_by(f64::total_cmp);
            for p_dec in ps {
                let m = ModelConfig { p_dec, twin_noise: false, ..model.clone() };
                let bench = Benchmark::new(m, t_max)?;
                let ens = bench.ensembles(&ts, sweep.f_design)?;
                for (t, e) in ts.iter().zip(&ens) {
                    let p = Point {
                        figure: &name,
                        sweep: "t",
                        x: *t as f64,
                        t: *t,
                        f: sweep.f_design,
                        p_dec,
                        index: next(),
                    };
                    rows.push(evaluate(e, Target::DesignDistance, Some(max_shots), &p, settings)?);
                }
            }
        }
    }
    Ok(rows)
}

/// Asymptotic-only bound pair for a target on an ensemble.
pub fn asymptotic_bounds(ens: &ExactEnsemble, target: Target) -> Result<(BoundResult, BoundResult)> {
    certify(&Dataset::asymptotic(ens), ens, target)
}
