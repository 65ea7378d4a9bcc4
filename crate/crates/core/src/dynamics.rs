//! Tilted-field Ising Floquet dynamics with amplitude damping.
//!
//! Qubit `q` (0-based, site `j = q + 1`) is bit `N - 1 - q` of a basis index,
//! so qubit 0 is the leftmost tensor factor. `Z|0> = |0>`.

use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::opalg::{dagger, eigh_real, HermOp};
use crate::{Error, Mat, Result};

/// Largest supported chain length by default (`2^10` dimensional states).
pub const DEFAULT_QUBIT_CAP: usize = 10;

/// Golden ratio, the default longitudinal field.
pub const GOLDEN: f64 = 1.618_033_988_749_894_8;

/// Parameters of the two-step Floquet drive. Index `[α]` is the half-step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub n_qubits: usize,
    /// `J_{j,α}` for bonds `j = 0..N-1`.
    pub couplings: [Vec<f64>; 2],
    /// `h^x_{j,α}` for sites `j = 0..N`.
    pub hx: [Vec<f64>; 2],
    /// `h^z_{j,α}` for sites `j = 0..N`.
    pub hz: [Vec<f64>; 2],
    /// Step durations `t_1, t_2`.
    pub durations: [f64; 2],
}

pub const BENCHMARK_DURATIONS: [f64; 2] = [0.625, 3.0];

impl IsingParams {
    /// Homogeneous chain.
    pub fn uniform(n: usize, j: [f64; 2], hx: [f64; 2], hz: [f64; 2], durations: [f64; 2]) -> Self {
        let bonds = n.saturating_sub(1);
        IsingParams {
            n_qubits: n,
            couplings: [vec![j[0]; bonds], vec![j[1]; bonds]],
            hx: [vec![hx[0]; n], vec![hx[1]; n]],
            hz: [vec![hz[0]; n], vec![hz[1]; n]],
            durations,
        }
    }

    /// Benchmark parameters: `J = 1`, `h^z = (1 + √5)/2`, `h^x = (0.4, -0.6)`,
    /// `t_1 = 0.625`, `t_2 = 3`.
    ///
    /// The durations are chosen so that the 10-qubit chain at `t = 8` with
    /// damping `p = 0.002` has mean conditional purity close to 0.95.
    pub fn benchmark(n: usize) -> Self {
        Self::uniform(n, [1.0, 1.0], [0.4, -0.6], [GOLDEN, GOLDEN], BENCHMARK_DURATIONS)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return Err(Error::InvalidParameter("n_qubits must be positive".into()));
        }
        for a in 0..2 {
            if self.couplings[a].len() != n - 1 {
                return Err(Error::InvalidParameter(format!(
                    "half-step {}: {} couplings for {} bonds",
                    a + 1,
                    self.couplings[a].len(),
                    n - 1
                )));
            }
            if self.hx[a].len() != n || self.hz[a].len() != n {
                return Err(Error::InvalidParameter(format!(
                    "half-step {}: field lists must have {n} entries",
                    a + 1
                )));
            }
        }
        let all = self.couplings.iter().chain(&self.hx).chain(&self.hz).flatten();
        if all.chain(&self.durations).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        Ok(())
    }
}

/// Amplitude-damping strength applied to every qubit after each period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseParams {
    pub p_dec: f64,
}

impl NoiseParams {
    pub fn new(p_dec: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_dec) {
            return Err(Error::InvalidParameter(format!("p_dec = {p_dec} outside [0, 1]")));
        }
        Ok(NoiseParams { p_dec })
    }

    /// Kraus operators `K_0 = diag(1, √(1-p))`, `K_1 = √p |0><1|`.
    pub fn kraus(&self) -> [Mat; 2] {
        let p = self.p_dec;
        let mut k0 = Mat::zeros((2, 2));
        k0[[0, 0]] = C64::from(1.0);
        k0[[1, 1]] = C64::from((1.0 - p).sqrt());
        let mut k1 = Mat::zeros((2, 2));
        k1[[0, 1]] = C64::from(p.sqrt());
        [k0, k1]
    }
}

/// Relative signs `n ∈ {±1/2}` for every parameter, drawn once per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub f: f64,
    pub couplings: [Vec<f64>; 2],
    pub hx: [Vec<f64>; 2],
    pub hz: [Vec<f64>; 2],
}

impl PerturbationSpec {
    /// Draws independent uniform signs for every parameter of `p`.
    pub fn draw<R: Rng + ?Sized>(p: &IsingParams, f: f64, rng: &mut R) -> Self {
        let mut signs = |len: usize| -> Vec<f64> {
            (0..len).map(|_| if rng.gen::<bool>() { 0.5 } else { -0.5 }).collect()
        };
        let couplings = [signs(p.couplings[0].len()), signs(p.couplings[1].len())];
        let hx = [signs(p.hx[0].len()), signs(p.hx[1].len())];
        let hz = [signs(p.hz[0].len()), signs(p.hz[1].len())];
        PerturbationSpec { f, couplings, hx, hz }
    }

    /// Same signs with a different fraction.
    pub fn with_fraction(&self, f: f64) -> Self {
        PerturbationSpec { f, ..self.clone() }
    }
}

/// Multiplies every parameter by `1 + f n`.
pub fn perturb(p: &IsingParams, spec: &PerturbationSpec) -> Result<IsingParams> {
    let scale = |vals: &[f64], signs: &[f64], what: &str| -> Result<Vec<f64>> {
        if vals.len() != signs.len() {
            return Err(Error::InvalidParameter(format!(
                "perturbation signs for {what}: {} given, {} needed",
                signs.len(),
                vals.len()
            )));
        }
        Ok(vals.iter().zip(signs).map(|(v, n)| v * (1.0 + spec.f * n)).collect())
    };
    let mut out = p.clone();
    for a in 0..2 {
        out.couplings[a] = scale(&p.couplings[a], &spec.couplings[a], "couplings")?;
        out.hx[a] = scale(&p.hx[a], &spec.hx[a], "hx")?;
        out.hz[a] = scale(&p.hz[a], &spec.hz[a], "hz")?;
    }
    Ok(out)
}

fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Real matrix of `H_α` with a configurable qubit cap.
pub fn hamiltonian_real(p: &IsingParams, alpha: usize, qubit_cap: usize) -> Result<Array2<f64>> {
    p.validate()?;
    if !(1..=2).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("half-step {alpha} not in {{1, 2}}")));
    }
    let n = p.n_qubits;
    if n > qubit_cap {
        return Err(Error::DimensionCap { n, cap: qubit_cap });
    }
    let a = alpha - 1;
    let d = 1usize << n;
    let z = |idx: usize, q: usize| if idx & bit(n, q) == 0 { 1.0 } else { -1.0 };
    let mut h = Array2::<f64>::zeros((d, d));
    for idx in 0..d {
        let mut diag = 0.0;
        for q in 0..n.saturating_sub(1) {
            diag += p.couplings[a][q] * z(idx, q) * z(idx, q + 1);
        }
        for q in 0..n {
            diag += p.hz[a][q] * z(idx, q);
            h[[idx ^ bit(n, q), idx]] += p.hx[a][q];
        }
        h[[idx, idx]] = diag;
    }
    Ok(h)
}

/// `H_α = Σ_j J_{j,α} Z_j Z_{j+1} + Σ_j (h^x_{j,α} X_j + h^z_{j,α} Z_j)`.
pub fn build_hamiltonian(p: &IsingParams, alpha: usize) -> Result<HermOp> {
    let h = hamiltonian_real(p, alpha, DEFAULT_QUBIT_CAP)?;
    HermOp::new(h.mapv(C64::from))
}

/// `exp(-i t H)` for real symmetric `H`.
fn expm_real_symmetric(h: &Array2<f64>, t: f64) -> Mat {
    let (vals, vecs) = eigh_real(h);
    let d = vals.len();
    let mut vc = vecs.clone();
    let mut vs = vecs.clone();
    for k in 0..d {
        let (s, c) = (-t * vals[k]).sin_cos();
        vc.column_mut(k).mapv_inplace(|x| x * c);
        vs.column_mut(k).mapv_inplace(|x| x * s);
    }
    let vt = vecs.t();
    let re = vc.dot(&vt);
    let im = vs.dot(&vt);
    Mat::from_shape_fn((d, d), |(i, j)| C64::new(re[[i, j]], im[[i, j]]))
}

/// `U_F = e^{-i t_2 H_2} e^{-i t_1 H_1}`.
pub fn floquet_unitary(p: &IsingParams) -> Result<Mat> {
    let h1 = hamiltonian_real(p, 1, DEFAULT_QUBIT_CAP)?;
    let h2 = hamiltonian_real(p, 2, DEFAULT_QUBIT_CAP)?;
    let u1 = expm_real_symmetric(&h1, p.durations[0]);
    let u2 = expm_real_symmetric(&h2, p.durations[1]);
    Ok(u2.dot(&u1))
}

/// Floquet drive with a lazily built, cached unitary.
#[derive(Debug)]
pub struct Floquet {
    params: IsingParams,
    unitary: OnceLock<Mat>,
}

impl Floquet {
    pub fn new(params: IsingParams) -> Result<Self> {
        params.validate()?;
        if params.n_qubits > DEFAULT_QUBIT_CAP {
            return Err(Error::DimensionCap { n: params.n_qubits, cap: DEFAULT_QUBIT_CAP });
        }
        Ok(Floquet { params, unitary: OnceLock::new() })
    }

    pub fn params(&self) -> &IsingParams {
        &self.params
    }

    pub fn unitary(&self) -> &Mat {
        self.unitary
            .get_or_init(|| floquet_unitary(&self.params).expect("parameters validated"))
    }

    /// Pure states `U_F^t |ψ_0>` for `t = 0..=t_max`.
    pub fn pure_trajectory(&self, psi0: &Array1<C64>, t_max: usize) -> Result<Vec<Array1<C64>>> {
        check_len(psi0.len(), self.params.dim())?;
        let u = self.unitary();
        let mut out = vec![psi0.clone()];
        for _ in 0..t_max {
            let next = u.dot(out.last().expect("nonempty"));
            out.push(next);
        }
        Ok(out)
    }

    /// Noisy states for `t = 0..=t_max`; each period is unitary conjugation
    /// followed by amplitude damping on every qubit.
    pub fn mixed_trajectory(&self, rho0: &Mat, noise: NoiseParams, t_max: usize) -> Result<Vec<Mat>> {
        check_len(rho0.nrows(), self.params.dim())?;
        NoiseParams::new(noise.p_dec)?;
        let u = self.unitary();
        let ud = dagger(u);
        let mut out = vec![rho0.clone()];
        for _ in 0..t_max {
            let mut rho = u.dot(out.last().expect("nonempty")).dot(&ud);
            for q in 0..self.params.n_qubits {
                amplitude_damp(&mut rho, self.params.n_qubits, q, noise.p_dec);
            }
            out.push(rho);
        }
        Ok(out)
    }
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `t` noisy Floquet periods applied to `ρ_0`.
pub fn evolve(rho0: &Mat, p: &IsingParams, noise: NoiseParams, t: usize) -> Result<Mat> {
    let fl = Floquet::new(p.clone())?;
    Ok(fl.mixed_trajectory(rho0, noise, t)?.pop().expect("nonempty"))
}

/// `U_F^t |ψ_0>`.
pub fn evolve_pure(psi0: &Array1<C64>, p: &IsingParams, t: usize) -> Result<Array1<C64>> {
    let fl = Floquet::new(p.clone())?;
    Ok(fl.pure_trajectory(psi0, t)?.pop().expect("nonempty"))
}

/// Applies the amplitude-damping channel in place on qubit `q`.
pub fn amplitude_damp(rho: &mut Mat, n: usize, q: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    let b = bit(n, q);
    let s = (1.0 - p).sqrt();
    let d = rho.nrows();
    for i in 0..d {
        if i & b != 0 {
            continue;
        }
        let i1 = i | b;
        for j in 0..d {
            if j & b != 0 {
                continue;
            }
            let j1 = j | b;
            let r11 = rho[[i1, j1]];
            rho[[i, j]] += r11 * p;
            rho[[i1, j1]] = r11 * (1.0 - p);
            rho[[i, j1]] *= s;
            rho[[i1, j]] *= s;
        }
    }
}

/// `|0...0>`.
pub fn zero_state(n: usize) -> Array1<C64> {
    let mut psi = Array1::zeros(1 << n);
    psi[0] = C64::from(1.0);
    psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{
        eigh, eye, kron_all, max_abs, min_eigenvalue, partial_trace, pauli, random, trace,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::from(x)
    }

    /// Independent construction of `H_α` from Kronecker products of Paulis.
    fn kron_hamiltonian(p: &IsingParams, a: usize) -> Mat {
        let n = p.n_qubits;
        let site = |q: usize, k: usize| {
            let ops: Vec<Mat> = (0..n).map(|s| if s == q { pauli(k) } else { eye(2) }).collect();
            kron_all(&ops)
        };
        let mut h = Mat::zeros((1 << n, 1 << n));
        for q in 0..n - 1 {
            h = h + site(q, 3).dot(&site(q + 1, 3)).mapv(|x| x * p.couplings[a][q]);
        }
        for q in 0..n {
            h = h + site(q, 1).mapv(|x| x * p.hx[a][q]) + site(q, 3).mapv(|x| x * p.hz[a][q]);
        }
        h
    }

    #[test]
    fn hamiltonian_pure_zz() {
        let p = IsingParams::uniform(2, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]);
        let h = build_hamiltonian(&p, 1).unwrap();
        let expected = Mat::from_diag(&ndarray::arr1(&[c(1.0), c(-1.0), c(-1.0), c(1.0)]));
        assert!(max_abs(&(&*h - &expected)) < 1e-15);
    }

    #[test]
    fn hamiltonian_single_site() {
        let p = IsingParams::uniform(1, [1.0, 1.0], [0.4, 0.4], [1.618, 1.618], [1.0, 1.0]);
        let h = build_hamiltonian(&p, 1).unwrap();
        let expected = pauli(1).mapv(|x| x * 0.4) + pauli(3).mapv(|x| x * 1.618);
        assert!(max_abs(&(&*h - &expected)) < 1e-15);
    }

    #[test]
    fn hamiltonian_matches_kronecker_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = IsingParams::benchmark(4);
        for a in 0..2 {
            for v in p.couplings[a].iter_mut().chain(p.hx[a].iter_mut()).chain(p.hz[a].iter_mut()) {
                *v = rng.gen::<f64>() * 2.0 - 1.0;
            }
        }
        for alpha in 1..=2 {
            let h = build_hamiltonian(&p, alpha).unwrap();
            assert!(max_abs(&(&*h - &kron_hamiltonian(&p, alpha - 1))) < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_n10_spectrum_power_sums() {
        // Tr[H^k] for k = 1, 2 has a closed form in the couplings and fields;
        // the dense spectrum must reproduce it, and the complex Hermitian
        // solver must agree with the real symmetric one.
        let p = IsingParams::benchmark(10);
        let h = hamiltonian_real(&p, 1, 10).unwrap();
        let (vals, _) = eigh_real(&h);
        let d = 1024.0;
        let s1: f64 = vals.sum();
        let s2: f64 = vals.iter().map(|x| x * x).sum();
        let expected_s2 = d * (9.0 * 1.0 + 10.0 * (0.4f64.powi(2) + GOLDEN.powi(2)));
        assert!(s1.abs() < 1e-9);
        assert!((s2 - expected_s2).abs() < 1e-9 * expected_s2);
        let small = IsingParams::benchmark(6);
        let hs = hamiltonian_real(&small, 1, 10).unwrap();
        let (rv, _) = eigh_real(&hs);
        let (cv, _) = eigh(&hs.mapv(C64::from));
        for (a, b) in rv.iter().zip(cv.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_errors() {
        let p = IsingParams::benchmark(11);
        assert!(matches!(build_hamiltonian(&p, 1), Err(Error::DimensionCap { .. })));
        let p = IsingParams::benchmark(3);
        assert!(build_hamiltonian(&p, 3).is_err());
        let mut bad = IsingParams::benchmark(3);
        bad.hx[0].pop();
        assert!(build_hamiltonian(&bad, 1).is_err());
    }

    #[test]
    fn floquet_identity_at_zero_time() {
        let mut p = IsingParams::benchmark(3);
        p.durations = [0.0, 0.0];
        let u = floquet_unitary(&p).unwrap();
        assert!(max_abs(&(&u - &eye(8))) < 1e-12);
    }

    #[test]
    fn floquet_unitarity_and_composition() {
        let p = IsingParams::uniform(2, [0.7, 1.1], [0.3, -0.5], [0.9, 0.2], [0.8, 1.3]);
        let u = floquet_unitary(&p).unwrap();
        assert!(max_abs(&(dagger(&u).dot(&u) - eye(4))) < 1e-10);
        let h1 = build_hamiltonian(&p, 1).unwrap();
        let h2 = build_hamiltonian(&p, 2).unwrap();
        // exp(-i t H) through the generic Hermitian function of t H with
        // e^{-i x} = cos x - i sin x, split into two real spectral functions
        let expm = |h: &HermOp, t: f64| {
            let (vals, vecs) = eigh(&h.mapv(|x| x * t));
            crate::opalg::spectral_apply(&vals, &vecs, |x| C64::new(x.cos(), -x.sin()))
        };
        let oracle = expm(&h2, 1.3).dot(&expm(&h1, 0.8));
        assert!(max_abs(&(&u - &oracle)) < 1e-10);
    }

    #[test]
    fn floquet_unitarity_n10() {
        let fl = Floquet::new(IsingParams::benchmark(10)).unwrap();
        let u = fl.unitary();
        assert!(max_abs(&(dagger(u).dot(u) - eye(1024))) < 1e-10);
    }

    #[test]
    fn kraus_completeness() {
        for p in [0.0, 0.002, 0.3, 1.0] {
            let [k0, k1] = NoiseParams::new(p).unwrap().kraus();
            let s = dagger(&k0).dot(&k0) + dagger(&k1).dot(&k1);
            assert!(max_abs(&(s - eye(2))) < 1e-15);
        }
        assert!(NoiseParams::new(1.5).is_err());
        assert!(NoiseParams::new(-0.1).is_err());
    }

    #[test]
    fn damping_matches_kraus_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 3;
        let rho = random::density(8, 8, &mut rng);
        let noise = NoiseParams::new(0.3).unwrap();
        let [k0, k1] = noise.kraus();
        for q in 0..n {
            let lift = |k: &Mat| {
                let ops: Vec<Mat> = (0..n).map(|s| if s == q { k.clone() } else { eye(2) }).collect();
                kron_all(&ops)
            };
            let (a0, a1) = (lift(&k0), lift(&k1));
            let expected = a0.dot(&*rho).dot(&dagger(&a0)) + a1.dot(&*rho).dot(&dagger(&a1));
            let mut got = (*rho).clone();
            amplitude_damp(&mut got, n, q, 0.3);
            assert!(max_abs(&(got - expected)) < 1e-14);
        }
    }

    #[test]
    fn damping_order_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random::density(8, 8, &mut rng);
        let mut a = (*rho).clone();
        let mut b = (*rho).clone();
        for q in [0, 1, 2] {
            amplitude_damp(&mut a, 3, q, 0.2);
        }
        for q in [2, 0, 1] {
            amplitude_damp(&mut b, 3, q, 0.2);
        }
        assert!(max_abs(&(a - b)) < 1e-15);
    }

    #[test]
    fn noiseless_evolution_stays_pure_and_matches_vector() {
        let p = IsingParams::benchmark(4);
        let psi0 = zero_state(4);
        let rho0 = Mat::from_shape_fn((16, 16), |(i, j)| psi0[i] * psi0[j].conj());
        let rho = evolve(&rho0, &p, NoiseParams::default(), 5).unwrap();
        let purity = crate::opalg::hs_inner(&rho, &rho).unwrap().re;
        assert!((purity - 1.0).abs() < 1e-10);
        let psi = evolve_pure(&psi0, &p, 5).unwrap();
        let outer = Mat::from_shape_fn((16, 16), |(i, j)| psi[i] * psi[j].conj());
        assert!(max_abs(&(rho - outer)) < 1e-10);
    }

    #[test]
    fn full_damping_resets_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let p = IsingParams::benchmark(3);
        let rho0 = random::density(8, 3, &mut rng);
        let rho = evolve(&rho0, &p, NoiseParams::new(1.0).unwrap(), 1).unwrap();
        for q in 0..3 {
            let m = partial_trace(&rho, &[2, 2, 2], &[q]).unwrap();
            let expected = crate::opalg::DensityMatrix::basis(2, 0);
            assert!(max_abs(&(m - &*expected)) < 1e-10);
        }
    }

    #[test]
    fn perturb_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = IsingParams::benchmark(4);
        let spec = PerturbationSpec::draw(&p, 0.0, &mut rng);
        assert_eq!(perturb(&p, &spec).unwrap(), p);
        let single = IsingParams::uniform(2, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]);
        let mut spec = PerturbationSpec::draw(&single, 0.01, &mut rng);
        spec.couplings[0][0] = 0.5;
        let q = perturb(&single, &spec).unwrap();
        assert!((q.couplings[0][0] - 1.005).abs() < 1e-15);
        let mut bad = spec.clone();
        bad.hx[1].pop();
        assert!(perturb(&single, &bad).is_err());
    }

    #[test]
    fn perturbation_signs_are_half_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let p = IsingParams::benchmark(10);
        let spec = PerturbationSpec::draw(&p, 0.005, &mut rng);
        let all = spec.couplings.iter().chain(&spec.hx).chain(&spec.hz).flatten();
        assert!(all.clone().all(|&s| s == 0.5 || s == -0.5));
        assert!(all.clone().any(|&s| s == 0.5) && all.clone().any(|&s| s == -0.5));
    }

    #[test]
    fn evolve_dimension_mismatch() {
        let p = IsingParams::benchmark(3);
        assert!(evolve(&eye(4), &p, NoiseParams::default(), 1).is_err());
        assert!(evolve_pure(&zero_state(2), &p, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn evolution_preserves_trace_and_positivity(p_dec in 0.0f64..=1.0, seed in 0u64..1000, t in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = IsingParams::benchmark(3);
            let rho0 = random::density(8, 2, &mut rng);
            let rho = evolve(&rho0, &p, NoiseParams::new(p_dec).unwrap(), t).unwrap();
            prop_assert!((trace(&rho).re - 1.0).abs() < 1e-10);
            prop_assert!(min_eigenvalue(&rho) >= -1e-10);
        }
    }
}
