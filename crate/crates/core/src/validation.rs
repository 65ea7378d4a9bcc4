//! Randomized property suites run by `qcbounds validate`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    design_distance_bounds, frame_potential_bounds, purity_lower_l, purity_lower_super, purity_upper, quad_bounds,
    vn_lower_subsystem, vn_upper, Constraint, ConstraintSet, Dataset, Mode, DEFAULT_EPSILON,
};
use crate::ensemble::ExactEnsemble;
use crate::opalg::{
    eigh, embed, max_abs, partial_trace, pauli, pinv_herm, random, spectral_apply, trace, unvectorize, vectorize,
    DensityMatrix, HermOp, Superoperator, PINV_CUTOFF,
};
use crate::oracle::{distinguish_check, true_average, true_design_distance, true_frame_potential, Quantity};
use crate::shadows::{estimate_linear, reconstruct_exact, simulate_records};
use crate::{Error, Mat, Result, C64};

/// How the twin of a random instance relates to the device states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwinKind {
    Perfect,
    /// Convex mixture of the device state with an independent random state.
    Mixed,
    Independent,
}

/// Random ensemble with `d ∈ {2, 4}`, `2..=16` labels, random ranks and a
/// random twin kind.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> ExactEnsemble {
    let d = if rng.gen_bool(0.5) { 2 } else { 4 };
    let n = rng.gen_range(2..=16);
    let kind = match rng.gen_range(0..3) {
        0 => TwinKind::Perfect,
        1 => TwinKind::Mixed,
        _ => TwinKind::Independent,
    };
    random_instance_with(d, n, kind, rng.gen_bool(0.3), rng)
}

/// Random ensemble with the given shape. With `pure` every device state is
/// pure, otherwise ranks are drawn uniformly in `1..=d`.
pub fn random_instance_with<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    kind: TwinKind,
    pure: bool,
    rng: &mut R,
) -> ExactEnsemble {
    let parts = (0..n)
        .map(|_| {
            let p = -rng.gen::<f64>().max(1e-12).ln();
            let rank = if pure { 1 } else { rng.gen_range(1..=d) };
            let q = random::density(d, rank, rng);
            let c = match kind {
                TwinKind::Perfect => q.clone(),
                TwinKind::Mixed => {
                    let other = random::density(d, rng.gen_range(1..=d), rng);
                    random::mix(&q, &other, rng.gen())
                }
                TwinKind::Independent => random::density(d, rng.gen_range(1..=d), rng),
            };
            (p, q, c)
        })
        .collect();
    ExactEnsemble::from_parts(parts).expect("valid random ensemble")
}

/// Margin allowed on exact validity checks.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Suites of `qcbounds validate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Bounds,
    Shadows,
    Opalg,
    Distinguish,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Bounds, Suite::Shadows, Suite::Opalg, Suite::Distinguish];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Bounds => "bounds",
            Suite::Shadows => "shadows",
            Suite::Opalg => "opalg",
            Suite::Distinguish => "distinguish",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Outcome of one property over all instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    /// Largest violation seen (positive means failure).
    pub worst: f64,
    /// Description of the first failing instance.
    pub counterexample: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Machine-readable suite report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub instances: usize,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

/// Accumulates checks by property name in insertion order.
#[derive(Default)]
struct Tally {
    props: Vec<PropertyResult>,
}

impl Tally {
    /// Records `violation ≤ 0` as a pass.
    fn check(&mut self, name: &str, violation: f64, context: impl FnOnce() -> String) {
        let idx = match self.props.iter().position(|p| p.name == name) {
            Some(i) => i,
            None => {
                self.props.push(PropertyResult {
                    name: name.into(),
                    checked: 0,
                    failures: 0,
                    worst: f64::NEG_INFINITY,
                    counterexample: None,
                });
                self.props.len() - 1
            }
        };
        let p = &mut self.props[idx];
        p.checked += 1;
        let bad = !(violation <= 0.0);
        if violation > p.worst || violation.is_nan() {
            p.worst = violation;
        }
        if bad {
            p.failures += 1;
            if p.counterexample.is_none() {
                p.counterexample = Some(format!("violation {violation:.3e}: {}", context()));
            }
        }
    }

    fn error(&mut self, name: &str, err: &Error, context: impl FnOnce() -> String) {
        self.check(name, f64::INFINITY, || format!("error {err}: {}", context()));
    }

    fn into_report(self, suite: Suite, seed: u64, instances: usize) -> Report {
        let passed = self.props.iter().all(PropertyResult::passed);
        Report { suite, seed, instances, passed, properties: self.props }
    }
}

/// Runs a suite on `instances` random instances (where applicable).
pub fn run(suite: Suite, seed: u64, instances: usize) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    match suite {
        Suite::Bounds => {
            for k in 0..instances {
                let ens = random_instance(&mut rng);
                let n = random::psd_superop(ens.dim, rng.gen_range(1..=3), &mut rng);
                let o = random::hermitian(ens.dim, 1.0, &mut rng);
                if let Err(e) = bounds_instance(&mut tally, k, &ens, &n, o) {
                    tally.error("no_errors", &e, || describe(k, &ens));
                } else {
                    tally.check("no_errors", 0.0, String::new);
                }
            }
        }
        Suite::Shadows => shadows_suite(&mut tally, &mut rng, instances),
        Suite::Opalg => opalg_suite(&mut tally, &mut rng, instances),
        Suite::Distinguish => distinguish_suite(&mut tally, &mut rng, instances),
    }
    tally.into_report(suite, seed, instances)
}

fn describe(k: usize, ens: &ExactEnsemble) -> String {
    let probs: Vec<String> = ens.members.iter().map(|m| format!("{:.4}", m.p)).collect();
    let purities: Vec<String> = ens.members.iter().map(|m| format!("{:.4}", m.quantum.purity())).collect();
    format!(
        "instance {k}: d = {}, |Z| = {}, p = [{}], purities = [{}], delta_qc = {:.4}",
        ens.dim,
        ens.len(),
        probs.join(", "),
        purities.join(", "),
        ens.delta_qc()
    )
}

/// Every bound operation on one instance with exact constraint values.
fn bounds_instance(tally: &mut Tally, k: usize, ens: &ExactEnsemble, n: &Superoperator, o: HermOp) -> Result<()> {
    let ctx = || describe(k, ens);
    let ds = Dataset::asymptotic(ens);
    let tol = VALIDITY_TOL;
    let purity = true_average(ens, &Quantity::Purity)?;

    let cs = ConstraintSet::new(vec![
        Constraint::Correlator,
        Constraint::Observable(o.clone()),
        Constraint::QuantumClassical(o),
    ]);
    let gram = purity_lower_l(&ds, &cs)?;
    tally.check("purity_lower_l_valid", gram.value - purity - tol, ctx);
    let raw = purity_lower_l(&ds, &ConstraintSet::raw(vec![Constraint::Correlator]))?;
    tally.check("purity_lower_l_raw_valid", raw.value - purity - tol, ctx);
    let cs_ratio = ds.p_qc().powi(2) / ds.p_cc();
    tally.check("cauchy_schwarz_ratio", (raw.value - cs_ratio).abs() - 1e-12, ctx);
    let fewer = purity_lower_l(&ds, &ConstraintSet::new(vec![Constraint::Correlator]))?;
    tally.check("gram_monotone", fewer.value - gram.value - 1e-12, ctx);

    let ps = purity_lower_super(&ds)?;
    tally.check("purity_lower_super_valid", ps.value - purity - tol, ctx);
    let pu = purity_upper(cs.len(), ens.max_probability(), ens.dim, Mode::Asymptotic)?;
    tally.check("purity_upper_valid", purity - pu.value - tol, ctx);

    let quad_truth = true_average(ens, &Quantity::Quad(n.clone()))?;
    let (ql, qu) = quad_bounds(&ds, n)?;
    tally.check("quad_lower_valid", ql.value - quad_truth - tol, ctx);
    tally.check("quad_upper_valid", quad_truth - qu.value - tol, ctx);
    let norm = qu.diagnostic.unwrap_or(0.0);
    tally.check("quad_gap_identity", (qu.value - ql.value - norm * (1.0 - ps.value)).abs() - 1e-12, ctx);

    let vn = true_average(ens, &Quantity::Vn)?;
    let vu = vn_upper(&ds, DEFAULT_EPSILON, false)?;
    tally.check("vn_upper_valid", vn - vu.value - tol, ctx);
    let vr = vn_upper(&ds, DEFAULT_EPSILON, true)?;
    tally.check("vn_upper_refined_valid", vn - vr.value - tol, ctx);

    if ens.dim == 4 {
        let sub = true_average(ens, &Quantity::VnSub(vec![0]))?;
        let vl = vn_lower_subsystem(&ds, &[0], [1.0, 1.0], false)?;
        tally.check("vn_lower_subsystem_valid", vl.value - sub - tol, ctx);
    }

    let fp_truth = true_frame_potential(ens, 2)?;
    let fp = frame_potential_bounds(&ds, 2)?;
    tally.check("frame_potential_lower_valid", fp.0.value - fp_truth - tol, ctx);
    tally.check("frame_potential_upper_valid", fp_truth - fp.1.value - tol, ctx);

    let dist = true_design_distance(ens)?;
    let (dl, du) = design_distance_bounds(&fp, &(ps, pu), ens.dim)?;
    tally.check("design_distance_lower_valid", dl.value - dist - tol, ctx);
    tally.check("design_distance_upper_valid", dist - du.value - tol, ctx);
    Ok(())
}

fn shadows_suite<R: Rng + ?Sized>(tally: &mut Tally, rng: &mut R, instances: usize) {
    for k in 0..instances {
        let nb = 1 + k % 2;
        let d = 1 << nb;
        let rho = random::density(d, rng.gen_range(1..=d), rng);
        let err = max_abs(&(reconstruct_exact(&rho) - &*rho));
        tally.check("exhaustive_reconstruction", err - 1e-12, || format!("instance {k}: d = {d}"));
    }
    // Monte Carlo: mean Z-correlator of a fixed qubit ensemble within 5 stderr.
    let ens = ExactEnsemble::perfect(vec![
        (0.4, DensityMatrix::bloch([0.0, 0.0, 0.9]).expect("valid")),
        (0.6, DensityMatrix::bloch([0.5, -0.5, 0.1]).expect("valid")),
    ])
    .expect("valid");
    let truth = ens.average_state()[[0, 0]].re - ens.average_state()[[1, 1]].re;
    for k in 0..instances.min(20) {
        let records = match simulate_records(&ens, 2000, rng.gen()) {
            Ok(r) => r,
            Err(e) => {
                tally.error("monte_carlo_within_5_stderr", &e, || format!("trial {k}"));
                continue;
            }
        };
        let z = HermOp::new(pauli(3)).expect("Hermitian");
        match estimate_linear(&records, |_| z.clone()) {
            Ok(est) => tally.check("monte_carlo_within_5_stderr", (est.value - truth).abs() - 5.0 * est.stderr, || {
                format!("trial {k}: estimate {} ± {}, truth {truth}", est.value, est.stderr)
            }),
            Err(e) => tally.error("monte_carlo_within_5_stderr", &e, || format!("trial {k}")),
        }
    }
}

fn opalg_suite<R: Rng + ?Sized>(tally: &mut Tally, rng: &mut R, instances: usize) {
    for k in 0..instances {
        let nb = 1 + k % 3;
        let d = 1 << nb;
        let ctx = || format!("instance {k}: {nb} qubits");
        let a = random::hermitian(d, 1.0, rng);
        let (vals, vecs) = eigh(&a);
        let back = spectral_apply(&vals, &vecs, C64::from);
        tally.check("eigh_reconstructs", max_abs(&(back - &*a)) - 1e-10, ctx);
        let round = unvectorize(&vectorize(&a));
        tally.check("vectorize_round_trip", max_abs(&(round - &*a)), ctx);
        let rho = random::density(d, rng.gen_range(1..=d), rng);
        tally.check("density_trace_one", (trace(&rho).re - 1.0).abs() - 1e-12, ctx);
        if nb >= 2 {
            let dims = vec![2; nb];
            let keep = [rng.gen_range(0..nb)];
            let b = random::hermitian(2, 1.0, rng);
            let lhs = match partial_trace(&rho, &dims, &keep) {
                Ok(r) => re_trace(&r, &b),
                Err(e) => {
                    tally.error("partial_trace_adjoint", &e, ctx);
                    continue;
                }
            };
            let rhs = match embed(&b, &keep, nb) {
                Ok(e) => re_trace(&rho, &e),
                Err(e) => {
                    tally.error("partial_trace_adjoint", &e, ctx);
                    continue;
                }
            };
            tally.check("partial_trace_adjoint", (lhs - rhs).abs() - 1e-12, ctx);
        }
        let p = pinv_herm(&rho, PINV_CUTOFF);
        let prp = rho.dot(&p).dot(&*rho);
        tally.check("pinv_identity", max_abs(&(prp - &*rho)) - 1e-8, ctx);
    }
}

fn re_trace(a: &Mat, b: &Mat) -> f64 {
    trace(&a.dot(b)).re
}

fn distinguish_suite<R: Rng + ?Sized>(tally: &mut Tally, rng: &mut R, instances: usize) {
    for k in 0..instances {
        let nz = 2 + k % 2;
        let ens = random_instance_with(2, nz, TwinKind::Perfect, rng.gen_bool(0.5), rng);
        for m in 1..=2 {
            let ctx = || format!("{} with M = {m}", describe(k, &ens));
            match distinguish_check(&ens, m) {
                Ok(r) => {
                    tally.check("distinguish_bound", r.p_succ_symmetrized - r.bound - 1e-10, ctx);
                    tally.check("symmetrized_below_helstrom", r.p_succ_symmetrized - r.p_succ_helstrom - 1e-10, ctx);
                    tally.check("helstrom_at_most_one", r.p_succ_helstrom - 1.0 - 1e-10, ctx);
                }
                Err(e) => tally.error("distinguish_bound", &e, ctx),
            }
        }
    }
}
