//! Dense operator and superoperator algebra.
//!
//! Operators are `d x d` complex matrices. Vectorization is column stacking,
//! `vec(X)[i + j d] = X[i, j]`, so that `<<A|B>> = vec(A)^† vec(B) = Tr[A^† B]`.
//! Superoperators are `d^2 x d^2` matrices acting on vectorized operators.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::{Error, Mat, Result};

/// Hermiticity tolerance on the max elementwise deviation.
pub const HERM_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue for density matrices.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this are outside the support of a restricted logarithm.
pub const LOG_FLOOR: f64 = 1e-14;
/// Default relative cutoff of the spectral pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermOp(Mat);

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Mat);

/// Linear map on vectorized `d x d` operators, stored as a `d^2 x d^2` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    mat: Mat,
    hermitian: bool,
}

impl HermOp {
    /// Checked constructor.
    pub fn new(m: Mat) -> Result<Self> {
        check_square(&m)?;
        let dev = herm_deviation(&m);
        if dev > HERM_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermOp(m))
    }

    /// Projects onto the Hermitian part `(m + m^†)/2`.
    pub fn hermitize(m: &Mat) -> Self {
        HermOp(hermitian_part(m))
    }

    pub fn identity(d: usize) -> Self {
        HermOp(eye(d))
    }

    pub fn zeros(d: usize) -> Self {
        HermOp(Mat::zeros((d, d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    /// Traceless part `A - Tr[A] I / d`.
    pub fn traceless(&self) -> HermOp {
        let d = self.dim();
        let t = self.trace() / d as f64;
        let mut m = self.0.clone();
        for i in 0..d {
            m[[i, i]] -= t;
        }
        HermOp(m)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Array1<f64> {
        eigh(&self.0).0
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
    }
}

impl Deref for HermOp {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl From<DensityMatrix> for HermOp {
    fn from(r: DensityMatrix) -> Self {
        HermOp(r.0)
    }
}

impl DensityMatrix {
    /// Checked constructor: Hermitian, unit trace, no eigenvalue below `-1e-10`.
    pub fn new(m: Mat) -> Result<Self> {
        check_square(&m)?;
        let dev = herm_deviation(&m);
        if dev > HERM_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let min = eigh(&m).0[0];
        if min < -PSD_TOL {
            return Err(Error::NotDensity(format!("min eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Wraps a matrix known to be a state by construction. Only the Hermitian
    /// part is kept.
    pub fn from_unchecked(m: Mat) -> Self {
        DensityMatrix(hermitian_part(&m))
    }

    /// `|ψ><ψ| / <ψ|ψ>`.
    pub fn pure(psi: &Array1<C64>) -> Result<Self> {
        let n: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if n <= 0.0 {
            return Err(Error::NotDensity("zero vector".into()));
        }
        let d = psi.len();
        let m = Mat::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj() / n);
        Ok(DensityMatrix(m))
    }

    /// Computational basis state `|i><i|`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut m = Mat::zeros((d, d));
        m[[i, i]] = ONE;
        DensityMatrix(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(eye(d).mapv(|x| x / d as f64))
    }

    /// Qubit state with Bloch vector `r`.
    pub fn bloch(r: [f64; 3]) -> Result<Self> {
        let m = (&pauli(0) + &(&pauli(1) * C64::from(r[0])) + &(&pauli(2) * C64::from(r[1]))
            + &(&pauli(3) * C64::from(r[2])))
            .mapv(|x| x * 0.5);
        DensityMatrix::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn purity(&self) -> f64 {
        hs_inner(&self.0, &self.0).expect("square").re
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        eigh(&self.0)
            .0
            .iter()
            .filter(|&&x| x > LOG_FLOOR)
            .map(|&x| -x * x.ln())
            .sum()
    }
}

impl Deref for DensityMatrix {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl Superoperator {
    pub fn new(mat: Mat) -> Result<Self> {
        check_square(&mat)?;
        let n = mat.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(Error::InconsistentDims(format!("{n} is not a square dimension")));
        }
        Ok(Superoperator { mat, hermitian: false })
    }

    /// Identity map on `d x d` operators.
    pub fn identity(d: usize) -> Self {
        Superoperator { mat: eye(d * d), hermitian: true }
    }

    pub fn zeros(d: usize) -> Self {
        Superoperator { mat: Mat::zeros((d * d, d * d)), hermitian: true }
    }

    /// `|A>><<B|`.
    pub fn outer(a: &Mat, b: &Mat) -> Self {
        let va = vectorize(a);
        let vb = vectorize(b);
        let n = va.len();
        let mat = Mat::from_shape_fn((n, n), |(i, j)| va[i] * vb[j].conj());
        Superoperator { mat, hermitian: std::ptr::eq(a, b) }
    }

    /// `Σ_k w_k |A_k>><<A_k|`, Hermitian by construction.
    pub fn gram(weights: &[f64], ops: &[&Mat]) -> Self {
        let d = ops.first().map(|m| m.nrows()).unwrap_or(1);
        let n = d * d;
        let mut mat = Mat::zeros((n, n));
        for (w, a) in weights.iter().zip(ops) {
            let v = vectorize(a);
            add_outer(&mut mat, *w, &v, &v);
        }
        Superoperator { mat, hermitian: true }
    }

    /// Operator dimension `d`.
    pub fn op_dim(&self) -> usize {
        (self.mat.nrows() as f64).sqrt().round() as usize
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat {
        self.mat
    }

    pub fn is_hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Superoperator { mat: dagger(&self.mat), hermitian: self.hermitian }
    }

    pub fn compose(&self, other: &Superoperator) -> Self {
        Superoperator { mat: self.mat.dot(&other.mat), hermitian: false }
    }

    /// Applies the map to an operator.
    pub fn apply(&self, x: &Mat) -> Mat {
        unvectorize(&self.mat.dot(&vectorize(x)))
    }

    /// `<<A|S|B>>`.
    pub fn sandwich(&self, a: &Mat, b: &Mat) -> C64 {
        let va = vectorize(a);
        let sb = self.mat.dot(&vectorize(b));
        va.iter().zip(sb.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    /// Hermitian part `(S + S^†)/2` as a Hermitian matrix.
    pub fn hermitian_part(&self) -> Self {
        Superoperator { mat: hermitian_part(&self.mat), hermitian: true }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Array1<f64> {
        eigh(&hermitian_part(&self.mat)).0
    }

    pub fn scale(&self, s: f64) -> Self {
        Superoperator { mat: self.mat.mapv(|x| x * s), hermitian: self.hermitian }
    }

    pub fn add(&self, other: &Superoperator) -> Self {
        Superoperator { mat: &self.mat + &other.mat, hermitian: self.hermitian && other.hermitian }
    }

    pub fn sub(&self, other: &Superoperator) -> Self {
        Superoperator { mat: &self.mat - &other.mat, hermitian: self.hermitian && other.hermitian }
    }
}

fn check_square(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

fn check_same(a: &Mat, b: &Mat) -> Result<()> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(())
}

/// Max elementwise `|m - m^†|`.
pub fn herm_deviation(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(m: &Mat) -> Mat {
    let n = m.nrows();
    Mat::from_shape_fn((n, n), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * 0.5)
}

pub fn eye(d: usize) -> Mat {
    Mat::from_diag_elem(d, ONE)
}

pub fn dagger(m: &Mat) -> Mat {
    m.t().mapv(|x| x.conj())
}

pub fn trace(m: &Mat) -> C64 {
    m.diag().sum()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Mat::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

/// Kronecker product of a list, left factor most significant.
pub fn kron_all(ops: &[Mat]) -> Mat {
    ops.iter().fold(eye(1), |acc, m| kron(&acc, m))
}

/// Single-qubit Pauli matrix: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn pauli(k: usize) -> Mat {
    let e = |a: C64, b: C64, c: C64, d: C64| ndarray::arr2(&[[a, b], [c, d]]);
    match k {
        0 => e(ONE, ZERO, ZERO, ONE),
        1 => e(ZERO, ONE, ONE, ZERO),
        2 => e(ZERO, -I, I, ZERO),
        3 => e(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Pauli string `σ_{k_1} ⊗ ... ⊗ σ_{k_n}`.
pub fn pauli_string(ks: &[usize]) -> Mat {
    kron_all(&ks.iter().map(|&k| pauli(k)).collect::<Vec<_>>())
}

/// Orthonormal Pauli-string basis `σ / sqrt(2^n)` of the `4^n`-dimensional
/// operator space, in lexicographic order of the Pauli labels.
pub fn pauli_basis(n_qubits: usize) -> Vec<Mat> {
    let d = 1usize << n_qubits;
    let norm = C64::from(1.0 / (d as f64).sqrt());
    (0..1usize << (2 * n_qubits))
        .map(|mut idx| {
            let mut ks = vec![0; n_qubits];
            for q in (0..n_qubits).rev() {
                ks[q] = idx & 3;
                idx >>= 2;
            }
            pauli_string(&ks).mapv(|x| x * norm)
        })
        .collect()
}

/// `<<A|B>> = Tr[A^† B]`.
pub fn hs_inner(a: &Mat, b: &Mat) -> Result<C64> {
    check_same(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Column-stacking vectorization.
pub fn vectorize(m: &Mat) -> Array1<C64> {
    let (r, c) = m.dim();
    Array1::from_shape_fn(r * c, |k| m[[k % r, k / r]])
}

/// Inverse of [`vectorize`] for square operators.
pub fn unvectorize(v: &Array1<C64>) -> Mat {
    let d = (v.len() as f64).sqrt().round() as usize;
    Mat::from_shape_fn((d, d), |(i, j)| v[i + j * d])
}

/// `mat += w |a><b|`.
pub fn add_outer(mat: &mut Mat, w: f64, a: &Array1<C64>, b: &Array1<C64>) {
    let n = a.len();
    for i in 0..n {
        let ai = a[i] * w;
        if ai == ZERO {
            continue;
        }
        for j in 0..n {
            mat[[i, j]] += ai * b[j].conj();
        }
    }
}

/// Superoperator trace `STr[N] = Σ_μ <<σ_μ|N|σ_μ>>`, the matrix trace.
pub fn super_trace(n: &Superoperator) -> f64 {
    trace(&n.mat).re
}

/// Reduced operator on the factors listed in `keep` (0-based, any order;
/// output factors are in ascending order).
pub fn partial_trace(rho: &Mat, dims: &[usize], keep: &[usize]) -> Result<Mat> {
    check_square(rho)?;
    let total: usize = dims.iter().product();
    if total != rho.nrows() {
        return Err(Error::InconsistentDims(format!(
            "factor dims {dims:?} multiply to {total}, operator has dimension {}",
            rho.nrows()
        )));
    }
    if keep.is_empty() || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InconsistentDims(format!("invalid keep set {keep:?}")));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let dk: usize = kept.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();

    // strides of each factor in the full index, left factor most significant
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |factors: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &f in factors.iter().rev() {
            off += (idx % dims[f]) * strides[f];
            idx /= dims[f];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(&kept, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offset(&traced, i)).collect();

    let mut out = Mat::zeros((dk, dk));
    for i in 0..dk {
        for j in 0..dk {
            let mut s = ZERO;
            for &t in &traced_off {
                s += rho[[kept_off[i] + t, kept_off[j] + t]];
            }
            out[[i, j]] = s;
        }
    }
    Ok(out)
}

/// `A ⊗ I` with `A` acting on the qubits in `keep` of an `n_qubits` register.
/// Qubit 0 is the leftmost factor; `A`'s factors follow ascending qubit order.
pub fn embed(a: &Mat, keep: &[usize], n_qubits: usize) -> Result<Mat> {
    check_square(a)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&q| q >= n_qubits) || a.nrows() != 1 << kept.len() {
        return Err(Error::InconsistentDims(format!(
            "operator of dimension {} on qubits {keep:?} of {n_qubits}",
            a.nrows()
        )));
    }
    let d = 1usize << n_qubits;
    let mask: usize = kept.iter().map(|&q| 1usize << (n_qubits - 1 - q)).sum();
    let sub = |i: usize| -> usize {
        kept.iter().fold(0, |acc, &q| (acc << 1) | ((i >> (n_qubits - 1 - q)) & 1))
    };
    Ok(Mat::from_shape_fn((d, d), |(i, j)| {
        if i & !mask == j & !mask {
            a[[sub(i), sub(j)]]
        } else {
            ZERO
        }
    }))
}

/// Reduced state of a density matrix.
pub fn partial_trace_state(
    rho: &DensityMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_unchecked(partial_trace(rho, dims, keep)?))
}

/// Eigendecomposition of the Hermitian part of `m`: ascending eigenvalues and
/// eigenvectors as columns.
pub fn eigh(m: &Mat) -> (Array1<f64>, Mat) {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| (m[[i, j]] + m[[j, i]].conj()) * 0.5);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Array1::from_shape_fn(n, |k| eig.eigenvalues[order[k]]);
    let vecs = Mat::from_shape_fn((n, n), |(i, k)| eig.eigenvectors[(i, order[k])]);
    (vals, vecs)
}

/// Eigendecomposition of a real symmetric matrix, ascending.
pub fn eigh_real(m: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]));
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Array1::from_shape_fn(n, |k| eig.eigenvalues[order[k]]);
    let vecs = Array2::from_shape_fn((n, n), |(i, k)| eig.eigenvectors[(i, order[k])]);
    (vals, vecs)
}

/// `V diag(f(λ)) V^†`.
pub fn spectral_apply(vals: &Array1<f64>, vecs: &Mat, f: impl Fn(f64) -> C64) -> Mat {
    let n = vals.len();
    let fv: Vec<C64> = vals.iter().map(|&x| f(x)).collect();
    let mut scaled = vecs.clone();
    for k in 0..n {
        for i in 0..n {
            scaled[[i, k]] *= fv[k];
        }
    }
    scaled.dot(&dagger(vecs))
}

/// Scalar function applied through the spectral decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HermFn {
    Exp,
    /// Natural logarithm; every eigenvalue must exceed [`LOG_FLOOR`].
    Log,
    /// Logarithm on the support (eigenvalues above [`LOG_FLOOR`]), zero on
    /// the kernel.
    LogSupport,
    /// Logarithm with eigenvalues clamped from below at the given floor.
    LogFloor(f64),
    Power(f64),
}

pub fn herm_fn(a: &Mat, f: HermFn) -> Result<HermOp> {
    check_square(a)?;
    let (vals, vecs) = eigh(a);
    let out = match f {
        HermFn::Exp => spectral_apply(&vals, &vecs, |x| C64::from(x.exp())),
        HermFn::Log => {
            if vals[0] <= LOG_FLOOR {
                return Err(Error::SingularLog(vals[0]));
            }
            spectral_apply(&vals, &vecs, |x| C64::from(x.ln()))
        }
        HermFn::LogSupport => spectral_apply(&vals, &vecs, |x| {
            C64::from(if x > LOG_FLOOR { x.ln() } else { 0.0 })
        }),
        HermFn::LogFloor(floor) => spectral_apply(&vals, &vecs, |x| C64::from(x.max(floor).ln())),
        HermFn::Power(p) => spectral_apply(&vals, &vecs, |x| {
            C64::from(if x > LOG_FLOOR { x.powf(p) } else if p == 0.0 { 1.0 } else { 0.0 })
        }),
    };
    Ok(HermOp::hermitize(&out))
}

/// Moore–Penrose pseudo-inverse of the Hermitian part of `m`, discarding
/// eigenvalues with `|λ| <= cutoff * max|λ|`.
pub fn pinv_herm(m: &Mat, cutoff: f64) -> Mat {
    let (vals, vecs) = eigh(m);
    let top = vals.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let thr = cutoff * top;
    spectral_apply(&vals, &vecs, |x| {
        C64::from(if x.abs() > thr && top > 0.0 { 1.0 / x } else { 0.0 })
    })
}

/// Solves `ηCC ζ = (ηQC)^†` through the spectral pseudo-inverse of `ηCC`.
pub fn solve_superop(
    eta_cc: &Superoperator,
    eta_qc: &Superoperator,
    cutoff: f64,
) -> Result<Superoperator> {
    if eta_cc.mat.dim() != eta_qc.mat.dim() {
        return Err(Error::DimensionMismatch {
            expected: eta_cc.mat.nrows(),
            found: eta_qc.mat.nrows(),
        });
    }
    let pinv = pinv_herm(&eta_cc.mat, cutoff);
    Ok(Superoperator { mat: pinv.dot(&dagger(&eta_qc.mat)), hermitian: false })
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> Mat {
    let mut m = Mat::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            m[[i * d + j, j * d + i]] = ONE;
        }
    }
    m
}

/// Projector onto the symmetric subspace of `(C^d)^{⊗k}`, `k ∈ {1, 2}`.
pub fn sym_projector(k: usize, d: usize) -> Result<HermOp> {
    if d < 1 {
        return Err(Error::InvalidParameter(format!("d = {d}")));
    }
    match k {
        1 => Ok(HermOp::identity(d)),
        2 => Ok(HermOp((eye(d * d) + swap(d)).mapv(|x| x * 0.5))),
        _ => Err(Error::UnsupportedOrder(k)),
    }
}

/// Trace norm `‖A‖₁` of a Hermitian operator.
pub fn trace_norm(a: &Mat) -> f64 {
    eigh(a).0.iter().map(|x| x.abs()).sum()
}

/// `‖ρ - σ‖₁`.
pub fn trace_distance(rho: &Mat, sigma: &Mat) -> Result<f64> {
    check_same(rho, sigma)?;
    Ok(trace_norm(&(rho - sigma)))
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    eigh(m).0[0]
}

/// Frobenius norm.
pub fn frobenius(m: &Mat) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Max elementwise absolute value.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.norm()))
}

/// Random operators for tests and validation suites.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
        Mat::from_shape_fn((rows, cols), |_| C64::new(gaussian(rng), gaussian(rng)))
    }

    /// Haar-random unit vector.
    pub fn pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Array1<C64> {
        let v = Array1::from_shape_fn(d, |_| C64::new(gaussian(rng), gaussian(rng)));
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|x| x / n)
    }

    pub fn pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
        DensityMatrix::pure(&pure_vector(d, rng)).expect("nonzero")
    }

    /// Random state `G G^† / Tr` with a `d x rank` Ginibre matrix.
    pub fn density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
        let g = ginibre(d, rank.max(1), rng);
        let m = g.dot(&dagger(&g));
        let t = trace(&m).re;
        DensityMatrix::from_unchecked(m.mapv(|x| x / t))
    }

    /// Random Hermitian matrix with Gaussian entries of the given scale.
    pub fn hermitian<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> HermOp {
        let g = ginibre(d, d, rng);
        HermOp::hermitize(&g.mapv(|x| x * scale))
    }

    /// Random positive semidefinite superoperator on `d x d` operators.
    pub fn psd_superop<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Superoperator {
        let g = ginibre(d * d, rank.max(1), rng);
        let m = g.dot(&dagger(&g)).mapv(|x| x / (d * d) as f64);
        Superoperator { mat: hermitian_part(&m), hermitian: true }
    }

    /// Convex mixture `(1 - w) ρ + w σ`.
    pub fn mix(rho: &DensityMatrix, sigma: &DensityMatrix, w: f64) -> DensityMatrix {
        DensityMatrix::from_unchecked(rho.mapv(|x| x * (1.0 - w)) + sigma.mapv(|x| x * w))
    }
}
