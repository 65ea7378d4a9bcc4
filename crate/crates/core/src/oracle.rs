//! Brute-force ground truth by enumeration, used to validate the certificates.

use itertools::Itertools;
use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ExactEnsemble, ENUMERATION_CAP};
use crate::opalg::{
    eigh, kron, kron_all, partial_trace, sym_projector, trace, trace_norm, DensityMatrix,
    Superoperator,
};
use crate::{Error, Mat, Result, C64};

/// Ensemble functional `G` averaged by [`true_average`].
#[derive(Clone, Debug)]
pub enum Quantity {
    Purity,
    /// `<<ρ|N|ρ>>`.
    Quad(Superoperator),
    /// Von Neumann entropy in nats.
    Vn,
    /// Entropy of the reduced state on the listed qubits of the register.
    VnSub(Vec<usize>),
}

/// `Σ_z p_z G(ρ^Q_z)`.
pub fn true_average(ens: &ExactEnsemble, g: &Quantity) -> Result<f64> {
    if ens.len() > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(ens.len()));
    }
    let nb = ens.dim.trailing_zeros() as usize;
    let mut total = 0.0;
    for m in &ens.members {
        let v = match g {
            Quantity::Purity => m.quantum.purity(),
            Quantity::Quad(n) => n.sandwich(&m.quantum, &m.quantum).re,
            Quantity::Vn => m.quantum.entropy(),
            Quantity::VnSub(keep) => {
                DensityMatrix::from_unchecked(partial_trace(&m.quantum, &vec![2; nb], keep)?).entropy()
            }
        };
        total += m.p * v;
    }
    Ok(total)
}

/// `F^(k) = Σ_{z,z'} p_z p_z' Tr[ρ_z ρ_z']^k` by explicit pair sum.
pub fn true_frame_potential(ens: &ExactEnsemble, k: usize) -> Result<f64> {
    if ens.len() > 1 << 12 {
        return Err(Error::EnumerationCap(ens.len()));
    }
    let mut total = 0.0;
    for a in &ens.members {
        for b in &ens.members {
            let overlap: f64 = a.quantum.iter().zip(b.quantum.t().iter()).map(|(x, y)| (x * y).re).sum();
            total += a.p * b.p * overlap.powi(k as i32);
        }
    }
    Ok(total)
}

/// `‖ρ^(2) - Π_sym / binom(d+1, 2)‖₂²` from the second moment operator.
pub fn true_design_distance(ens: &ExactEnsemble) -> Result<f64> {
    let d = ens.dim;
    if d > 16 || ens.len() > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(ens.len()));
    }
    let mut moment = Mat::zeros((d * d, d * d));
    for m in &ens.members {
        moment.scaled_add(C64::from(m.p), &kron(&m.quantum, &m.quantum));
    }
    let haar = sym_projector(2, d)?.mapv(|x| x / (d * (d + 1) / 2) as f64);
    Ok((moment - haar).iter().map(|x| x.norm_sqr()).sum())
}

/// Right-hand side `F^(2) - 2/(d(d+1)) 𝔼 Tr[ρ^2]` of the design-distance identity.
pub fn design_distance_from_fp(ens: &ExactEnsemble) -> Result<f64> {
    let d = ens.dim as f64;
    Ok(true_frame_potential(ens, 2)? - 2.0 / (d * (d + 1.0)) * ens.mean_purity())
}

/// Exact value next to a certified interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub quantity: String,
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
    pub contained: bool,
}

impl ExactReport {
    pub const TOL: f64 = 1e-9;

    pub fn new(quantity: &str, exact: f64, lower: f64, upper: f64) -> Self {
        ExactReport {
            quantity: quantity.into(),
            exact,
            lower,
            upper,
            contained: lower - Self::TOL <= exact && exact <= upper + Self::TOL,
        }
    }
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `min_{n1² + n3² ≤ 1} n3² - α1 n1 - α3 n3`.
///
/// The boundary circle is scanned on 10⁴ angles and the best cell is refined
/// by golden-section search; the interior stationary point `n3 = α3/2` exists
/// only for `α1 = 0`.
pub fn f2_minus_qubit(alpha1: f64, alpha3: f64) -> f64 {
    let f = |theta: f64| {
        let (s, c) = theta.sin_cos();
        c * c - alpha1 * s - alpha3 * c
    };
    let n = 10_000;
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let (k_best, _) = (0..n)
        .map(|k| (k, f(k as f64 * step)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let t0 = k_best as f64 * step;
    let (_, mut best) = golden_min(&f, t0 - step, t0 + step, 1e-12);
    if alpha1 == 0.0 && alpha3.abs() <= 2.0 {
        best = best.min(-alpha3 * alpha3 / 4.0);
    }
    best
}

/// Pure-state ensemble whose average state is `ρ0`.
///
/// For `n = 2` the eigendecomposition is used. For `n ≥ 3` the states sit on
/// a cone around the Bloch vector `r` with opening `cos θ = |r|` and equal
/// weights. Every `z`-independent linear property matches the constant
/// ensemble `ρ_z = ρ0`, while the average purity is 1.
pub fn ambiguity_construction(rho0: &DensityMatrix, n: usize) -> Result<ExactEnsemble> {
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho0.dim() });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} < 2")));
    }
    if n == 2 {
        let (vals, vecs) = eigh(rho0);
        let parts = (0..2)
            .rev()
            .map(|k| {
                let v: Array1<C64> = vecs.column(k).to_owned();
                Ok((vals[k].max(0.0), DensityMatrix::pure(&v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        return ExactEnsemble::perfect(parts);
    }
    let bloch = |k: usize| trace(&rho0.dot(&crate::opalg::pauli(k))).re;
    let r = [bloch(1), bloch(2), bloch(3)];
    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let axis = if len > 1e-12 { [r[0] / len, r[1] / len, r[2] / len] } else { [0.0, 0.0, 1.0] };
    // orthonormal frame (e1, e2, axis)
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let e1 = {
        let c = cross(axis, helper);
        let l = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        [c[0] / l, c[1] / l, c[2] / l]
    };
    let e2 = cross(axis, e1);
    let cos_t = len.min(1.0);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let parts = (0..n)
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let (s, c) = phi.sin_cos();
            let v: [f64; 3] = std::array::from_fn(|i| cos_t * axis[i] + sin_t * (c * e1[i] + s * e2[i]));
            Ok((1.0 / n as f64, DensityMatrix::bloch(v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ExactEnsemble::perfect(parts)
}

/// Outcome of the exact two-hypothesis test between an ensemble and its
/// `z`-independent average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishReport {
    pub n_labels: usize,
    pub samples: usize,
    /// Success probability of the optimal measurement after symmetrizing the labels.
    pub p_succ_symmetrized: f64,
    /// Success probability with known labels.
    pub p_succ_helstrom: f64,
    /// `1/2 + M² Σ p_z²`.
    pub bound: f64,
    /// `1/2 + binom(M, 2) Σ p_z²`.
    pub pair_bound: f64,
}

impl DistinguishReport {
    pub fn satisfied(&self) -> bool {
        self.p_succ_symmetrized <= self.bound + 1e-10
            && self.p_succ_symmetrized <= self.p_succ_helstrom + 1e-10
            && self.p_succ_helstrom <= 1.0 + 1e-10
    }
}

pub const DISTINGUISH_MAX_LABELS: usize = 4;
pub const DISTINGUISH_MAX_SAMPLES: usize = 3;

/// Exact optimal success probability for telling `(Σ p_z |z><z| ⊗ ρ_z)^{⊗M}`
/// from `(Σ p_z |z><z| ⊗ ρ̄)^{⊗M}` after the label symmetrizer, via the
/// Helstrom form `1/2 + ‖ρ_1 - ρ_2‖₁ / 4`.
///
/// Both states are block diagonal in the label strings `w`, so the trace norm
/// is the sum of the blockwise trace norms. The symmetrizer averages the
/// block of `w` over all relabelings `π`.
pub fn distinguish_check(ens: &ExactEnsemble, samples: usize) -> Result<DistinguishReport> {
    let nz = ens.len();
    if nz > DISTINGUISH_MAX_LABELS || samples > DISTINGUISH_MAX_SAMPLES || ens.dim != 2 || samples == 0 {
        return Err(Error::EnumerationCap(nz.pow(samples as u32) * ens.dim.pow(samples as u32)));
    }
    let avg = ens.average_state();
    let avg_power = kron_all(&vec![avg; samples]);
    let words: Vec<Vec<usize>> = (0..samples).map(|_| 0..nz).multi_cartesian_product().collect();
    let block = |w: &[usize]| -> (f64, Mat) {
        let p: f64 = w.iter().map(|&z| ens.members[z].p).product();
        let states: Vec<Mat> = w.iter().map(|&z| (*ens.members[z].quantum).clone()).collect();
        (p, kron_all(&states))
    };
    let perms: Vec<Vec<usize>> = (0..nz).permutations(nz).collect();
    let mut sym = 0.0;
    let mut plain = 0.0;
    for w in &words {
        let (p, rho) = block(w);
        plain += trace_norm(&(rho - &avg_power).mapv(|x| x * p));
        let mut acc = Mat::zeros(avg_power.dim());
        for pi in &perms {
            // preimage of w under the relabeling π
            let pre: Vec<usize> = w.iter().map(|&z| pi[z]).collect();
            let (pp, rr) = block(&pre);
            acc.scaled_add(C64::from(pp / perms.len() as f64), &(rr - &avg_power));
        }
        sym += trace_norm(&acc);
    }
    let sum_p2: f64 = ens.members.iter().map(|m| m.p * m.p).sum();
    let m = samples as f64;
    Ok(DistinguishReport {
        n_labels: nz,
        samples,
        p_succ_symmetrized: 0.5 + sym / 4.0,
        p_succ_helstrom: 0.5 + plain / 4.0,
        bound: 0.5 + m * m * sum_p2,
        pair_bound: 0.5 + m * (m - 1.0) / 2.0 * sum_p2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{hs_inner, max_abs, pauli, pauli_basis, random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e0() -> ExactEnsemble {
        ExactEnsemble::perfect(vec![(0.5, DensityMatrix::basis(2, 0)), (0.5, DensityMatrix::basis(2, 1))]).unwrap()
    }

    fn stabilizer_states() -> ExactEnsemble {
        let v = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        ExactEnsemble::perfect(v.iter().map(|r| (1.0 / 6.0, DensityMatrix::bloch(*r).unwrap())).collect()).unwrap()
    }

    #[test]
    fn averages_on_simple_ensembles() {
        assert!((true_average(&e0(), &Quantity::Purity).unwrap() - 1.0).abs() < 1e-15);
        let mixed = ExactEnsemble::perfect(vec![(1.0, DensityMatrix::maximally_mixed(2))]).unwrap();
        assert!((true_average(&mixed, &Quantity::Purity).unwrap() - 0.5).abs() < 1e-15);
        assert!((true_average(&mixed, &Quantity::Vn).unwrap() - 2f64.ln()).abs() < 1e-14);
        let zz = Superoperator::gram(&[1.0], &[&pauli(3)]);
        assert!((true_average(&e0(), &Quantity::Quad(zz.clone())).unwrap() - 1.0).abs() < 1e-15);
        assert!(true_average(&mixed, &Quantity::Quad(zz)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn subsystem_entropy_of_bell_state() {
        let s = 0.5f64.sqrt();
        let bell = DensityMatrix::pure(&ndarray::arr1(&[C64::from(s), C64::from(0.0), C64::from(0.0), C64::from(s)])).unwrap();
        let ens = ExactEnsemble::perfect(vec![(1.0, bell)]).unwrap();
        assert!((true_average(&ens, &Quantity::VnSub(vec![0])).unwrap() - 2f64.ln()).abs() < 1e-13);
        assert!(true_average(&ens, &Quantity::Vn).unwrap().abs() < 1e-13);
    }

    #[test]
    fn frame_potential_examples() {
        assert!((true_frame_potential(&e0(), 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((true_design_distance(&e0()).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        let stab = stabilizer_states();
        assert!((true_frame_potential(&stab, 2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(true_design_distance(&stab).unwrap().abs() < 1e-12);
        let single = ExactEnsemble::perfect(vec![(0.3, DensityMatrix::basis(2, 1)), (0.7, DensityMatrix::basis(2, 1))]).unwrap();
        assert!((true_frame_potential(&single, 2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn design_identity_holds_on_random_ensembles() {
        let mut r = ChaCha8Rng::seed_from_u64(61);
        for d in [2, 4] {
            for nz in [1, 3, 7] {
                let parts = (0..nz).map(|k| (1.0 + k as f64, random::density(d, 1 + k % d, &mut r))).collect();
                let ens = ExactEnsemble::perfect(parts).unwrap();
                let lhs = true_design_distance(&ens).unwrap();
                let rhs = design_distance_from_fp(&ens).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn f2_branches() {
        assert!((f2_minus_qubit(0.0, 1.0) + 0.25).abs() < 1e-8);
        assert!((f2_minus_qubit(0.0, 3.0) + 2.0).abs() < 1e-8);
        for k in 0..=80 {
            let a3 = -4.0 + 0.1 * k as f64;
            let expected = if a3.abs() <= 2.0 { -a3 * a3 / 4.0 } else { 1.0 - a3.abs() };
            assert!((f2_minus_qubit(0.0, a3) - expected).abs() < 1e-8, "α3 = {a3}");
        }
        let a1 = 0.05;
        let approx = -0.25 - a1 * 0.75f64.sqrt();
        let got = f2_minus_qubit(a1, 1.0);
        assert!((got - approx).abs() <= 2.0 * a1 * a1, "{got} vs {approx}");
    }

    #[test]
    fn ambiguity_examples() {
        let ens = ambiguity_construction(&DensityMatrix::maximally_mixed(2), 2).unwrap();
        assert!(max_abs(&(ens.average_state() - &*DensityMatrix::maximally_mixed(2))) < 1e-15);
        let rho0 = DensityMatrix::bloch([0.0, 0.0, 0.6]).unwrap();
        let ens = ambiguity_construction(&rho0, 2).unwrap();
        assert!((ens.members[0].p - 0.8).abs() < 1e-14);
        assert!((ens.members[1].p - 0.2).abs() < 1e-14);
        assert!((ens.members[0].quantum[[0, 0]].re - 1.0).abs() < 1e-14);
        assert!((ens.mean_purity() - 1.0).abs() < 1e-14);
        assert!((rho0.purity() - 0.68).abs() < 1e-14);
    }

    #[test]
    fn ambiguity_matches_on_operator_basis() {
        let mut r = ChaCha8Rng::seed_from_u64(62);
        for n in 2..7 {
            let rho0 = random::density(2, 2, &mut r);
            let ens = ambiguity_construction(&rho0, n).unwrap();
            assert_eq!(ens.len(), n);
            let avg = ens.average_state();
            for b in pauli_basis(1) {
                let lhs = hs_inner(&b, &avg).unwrap();
                let rhs = hs_inner(&b, &rho0).unwrap();
                assert!((lhs - rhs).norm() < 1e-12);
            }
            assert!((ens.mean_purity() - 1.0).abs() < 1e-12);
        }
        assert!(ambiguity_construction(&DensityMatrix::maximally_mixed(4), 2).is_err());
    }

    #[test]
    fn distinguish_examples() {
        let same = ExactEnsemble::perfect(vec![(0.5, DensityMatrix::maximally_mixed(2)), (0.5, DensityMatrix::maximally_mixed(2))]).unwrap();
        let rep = distinguish_check(&same, 2).unwrap();
        assert!((rep.p_succ_symmetrized - 0.5).abs() < 1e-14);
        let rep = distinguish_check(&e0(), 1).unwrap();
        assert!((rep.p_succ_symmetrized - 0.5).abs() < 1e-14);
        assert!(rep.p_succ_helstrom > 0.5);
        let rep = distinguish_check(&e0(), 2).unwrap();
        assert!(rep.satisfied());
        assert!(rep.p_succ_symmetrized <= rep.pair_bound + 1e-10);
        assert!(distinguish_check(&e0(), 4).is_err());
    }

    /// Dense construction of both hypotheses and the symmetrizer for
    /// `|Z| = 2`, `M = 2`, factor order `(label ⊗ system)^{⊗M}`.
    #[test]
    fn distinguish_matches_dense_construction() {
        let mut r = ChaCha8Rng::seed_from_u64(63);
        let ens = ExactEnsemble::perfect(vec![(0.3, random::density(2, 2, &mut r)), (0.7, random::density(2, 1, &mut r))]).unwrap();
        let avg = ens.average_state();
        let single = |avg_only: bool| {
            let mut w = Mat::zeros((4, 4));
            for (z, m) in ens.members.iter().enumerate() {
                let state = if avg_only { avg.clone() } else { (*m.quantum).clone() };
                w = w + kron(&DensityMatrix::basis(2, z), &state).mapv(|x| x * m.p);
            }
            w
        };
        let rho1 = kron(&single(false), &single(false));
        let rho2 = kron(&single(true), &single(true));
        // label swap acting on both label factors
        let x = pauli(1);
        let id = crate::opalg::eye(2);
        let u = kron_all(&[x.clone(), id.clone(), x, id]);
        let sym = |m: &Mat| (m + &u.dot(m).dot(&crate::opalg::dagger(&u))).mapv(|v| v * 0.5);
        let p_sym = 0.5 + trace_norm(&(sym(&rho1) - sym(&rho2))) / 4.0;
        let p_plain = 0.5 + trace_norm(&(rho1 - rho2)) / 4.0;
        let rep = distinguish_check(&ens, 2).unwrap();
        assert!((rep.p_succ_symmetrized - p_sym).abs() < 1e-12);
        assert!((rep.p_succ_helstrom - p_plain).abs() < 1e-12);
    }

    #[test]
    fn exact_report_containment() {
        assert!(ExactReport::new("purity", 0.5, 0.5 + 1e-10, 1.0).contained);
        assert!(!ExactReport::new("purity", 0.5, 0.6, 1.0).contained);
    }
}
