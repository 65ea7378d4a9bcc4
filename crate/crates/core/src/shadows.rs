//! Classical shadows with random single-qubit Clifford frames.
//!
//! Each repetition records the ensemble label `z`, a frame label per
//! unmeasured qubit and the measured bits. Frame `I` measures `Z`, `H_X`
//! (the Hadamard) measures `X`, and `H_Y = (Y + Z)/√2` measures `Y`. The dual
//! frame `⊗_i (3 u_i^† |m_i><m_i| u_i - I)` reconstructs the state in
//! expectation.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ensemble::{EnsembleSource, Outcome};
use crate::opalg::{dagger, kron_all, vectorize, DensityMatrix, HermOp, Superoperator};
use crate::{Error, Mat, Result};

/// Single-qubit frame rotation applied before a `Z` measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Clifford {
    I,
    HX,
    HY,
}

impl Clifford {
    pub const ALL: [Clifford; 3] = [Clifford::I, Clifford::HX, Clifford::HY];

    pub fn unitary(self) -> Mat {
        let s = 1.0 / 2f64.sqrt();
        let c = |re: f64, im: f64| C64::new(re * s, im * s);
        match self {
            Clifford::I => crate::opalg::eye(2),
            Clifford::HX => ndarray::arr2(&[[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(-1.0, 0.0)]]),
            Clifford::HY => ndarray::arr2(&[[c(1.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(-1.0, 0.0)]]),
        }
    }

    fn symbol(self) -> char {
        match self {
            Clifford::I => 'I',
            Clifford::HX => 'X',
            Clifford::HY => 'Y',
        }
    }

    fn from_symbol(ch: char) -> Result<Self> {
        match ch {
            'I' => Ok(Clifford::I),
            'X' => Ok(Clifford::HX),
            'Y' => Ok(Clifford::HY),
            _ => Err(Error::Parse(format!("invalid frame label {ch:?}"))),
        }
    }

    /// `3 u^† |m><m| u - I`.
    pub fn dual_factor(self, m: u8) -> Mat {
        let u = self.unitary();
        let row = u.row(m as usize).to_owned();
        let mut f = Mat::from_shape_fn((2, 2), |(i, j)| row[i].conj() * row[j] * 3.0);
        f[[0, 0]] -= 1.0;
        f[[1, 1]] -= 1.0;
        f
    }
}

/// One experimental repetition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowRecord {
    pub z: Outcome,
    pub c: Vec<Clifford>,
    pub m: Vec<u8>,
}

impl ShadowRecord {
    /// Dense dual-frame operator `F̃_{(c,m)}`.
    pub fn dual(&self) -> Mat {
        dual_frame(&self.c, &self.m)
    }
}

impl fmt::Display for ShadowRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: String = self.c.iter().map(|c| c.symbol()).collect();
        let m: String = self.m.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect();
        write!(f, "z={} c={} m={}", self.z, c, m)
    }
}

impl FromStr for ShadowRecord {
    type Err = Error;
    fn from_str(line: &str) -> Result<Self> {
        let mut z = None;
        let mut c = None;
        let mut m = None;
        for tok in line.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, found {tok:?}")))?;
            match key {
                "z" => z = Some(val.parse::<Outcome>()?),
                "c" => c = Some(val.chars().map(Clifford::from_symbol).collect::<Result<Vec<_>>>()?),
                "m" => {
                    m = Some(
                        val.chars()
                            .map(|ch| match ch {
                                '0' => Ok(0u8),
                                '1' => Ok(1u8),
                                _ => Err(Error::Parse(format!("invalid bit {ch:?}"))),
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                _ => return Err(Error::Parse(format!("unknown field {key:?}"))),
            }
        }
        let (z, c, m) = match (z, c, m) {
            (Some(z), Some(c), Some(m)) => (z, c, m),
            _ => return Err(Error::Parse(format!("missing field in {line:?}"))),
        };
        if c.len() != m.len() || c.is_empty() {
            return Err(Error::Parse(format!("frame and outcome lengths differ in {line:?}")));
        }
        Ok(ShadowRecord { z, c, m })
    }
}

/// `⊗_i (3 u_{c_i}^† |m_i><m_i| u_{c_i} - I)`.
pub fn dual_frame(c: &[Clifford], m: &[u8]) -> Mat {
    let factors: Vec<Mat> = c.iter().zip(m).map(|(c, &m)| c.dual_factor(m)).collect();
    kron_all(&factors)
}

/// Draws uniform frames and Born-rule outcomes for the state `ρ`.
pub fn sample_shadow<R: Rng + ?Sized>(rho: &Mat, rng: &mut R) -> (Vec<Clifford>, Vec<u8>) {
    let d = rho.nrows();
    let nb = d.trailing_zeros() as usize;
    let c: Vec<Clifford> = (0..nb).map(|_| Clifford::ALL[rng.gen_range(0..3)]).collect();
    let u = kron_all(&c.iter().map(|c| c.unitary()).collect::<Vec<_>>());
    let rotated = u.dot(rho).dot(&dagger(&u));
    let probs: Vec<f64> = (0..d).map(|i| rotated[[i, i]].re.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    let mut outcome = d - 1;
    for (i, p) in probs.iter().enumerate() {
        if r < *p {
            outcome = i;
            break;
        }
        r -= p;
    }
    let m = (0..nb).map(|k| ((outcome >> (nb - 1 - k)) & 1) as u8).collect();
    (c, m)
}

/// Born probabilities `<m|U_c ρ U_c^†|m>` for every outcome string.
pub fn born_distribution(rho: &Mat, c: &[Clifford]) -> Vec<f64> {
    let u = kron_all(&c.iter().map(|c| c.unitary()).collect::<Vec<_>>());
    let rotated = u.dot(rho).dot(&dagger(&u));
    (0..rho.nrows()).map(|i| rotated[[i, i]].re).collect()
}

/// `M` records with one ChaCha stream per shot, seeded by `(seed, shot)`, so
/// the output does not depend on the thread count.
pub fn simulate_records<S: EnsembleSource + ?Sized>(
    source: &S,
    shots: usize,
    seed: u64,
) -> Result<Vec<ShadowRecord>> {
    (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shot as u64);
            let z = source.sample(&mut rng);
            let rho = source.quantum_state(z)?;
            let (c, m) = sample_shadow(&rho, &mut rng);
            Ok(ShadowRecord { z, c, m })
        })
        .collect()
}

/// Scalar sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl CorrelatorEstimate {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyRecords);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(CorrelatorEstimate { value: mean, stderr, n_samples: n })
    }

    /// Noise-free value.
    pub fn exact(value: f64) -> Self {
        CorrelatorEstimate { value, stderr: 0.0, n_samples: usize::MAX }
    }
}

/// Superoperator sample mean with elementwise standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperopEstimate {
    pub value: Superoperator,
    pub stderr: Array2<f64>,
    pub n_samples: usize,
}

/// Mean of `Tr[A_z F̃_x]` over the records.
pub fn estimate_linear<F>(records: &[ShadowRecord], a: F) -> Result<CorrelatorEstimate>
where
    F: Fn(Outcome) -> HermOp + Sync,
{
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let values: Vec<f64> = records
        .par_iter()
        .map(|r| {
            let f = r.dual();
            let az = a(r.z);
            az.iter().zip(f.t().iter()).map(|(x, y)| x * y).sum::<C64>().re
        })
        .collect();
    CorrelatorEstimate::from_samples(&values)
}

/// `η̂^QC = (1/M) Σ_r |F̃_r>><<ρ^C_{z_r}|` and `η̂^CC = (1/M) Σ_r |ρ^C_{z_r}>><<ρ^C_{z_r}|`.
///
/// Records are grouped by label so the cost scales with the number of
/// distinct labels.
pub fn estimate_superops<S: EnsembleSource + ?Sized>(
    records: &[ShadowRecord],
    source: &S,
) -> Result<(SuperopEstimate, SuperopEstimate)> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let d = source.dim();
    let n = d * d;
    let mm = records.len() as f64;

    // per label: count, Σ vec(F̃), Σ |vec(F̃)|^2 elementwise
    let mut groups: std::collections::BTreeMap<Outcome, (usize, Vec<C64>, Vec<f64>)> =
        Default::default();
    for r in records {
        let f = vectorize(&r.dual());
        let g = groups.entry(r.z).or_insert_with(|| (0, vec![C64::from(0.0); n], vec![0.0; n]));
        g.0 += 1;
        for (k, v) in f.iter().enumerate() {
            g.1[k] += v;
            g.2[k] += v.norm_sqr();
        }
    }

    let mut qc = Mat::zeros((n, n));
    let mut qc_sq = Array2::<f64>::zeros((n, n));
    let mut cc = Mat::zeros((n, n));
    let mut cc_sq = Array2::<f64>::zeros((n, n));
    for (z, (count, fsum, fsq)) in &groups {
        let rc = source.classical_state(*z);
        let vc = vectorize(&rc);
        let w = *count as f64;
        for i in 0..n {
            for j in 0..n {
                let cj = vc[j].conj();
                qc[[i, j]] += fsum[i] * cj;
                qc_sq[[i, j]] += fsq[i] * vc[j].norm_sqr();
                let x = vc[i] * cj;
                cc[[i, j]] += x * w;
                cc_sq[[i, j]] += x.norm_sqr() * w;
            }
        }
    }
    let finish = |sum: Mat, sq: Array2<f64>| -> (Mat, Array2<f64>) {
        let mean = sum.mapv(|x| x / mm);
        let se = if records.len() > 1 {
            Array2::from_shape_fn((n, n), |(i, j)| {
                let var = (sq[[i, j]] - mm * mean[[i, j]].norm_sqr()) / (mm - 1.0);
                (var.max(0.0) / mm).sqrt()
            })
        } else {
            Array2::zeros((n, n))
        };
        (mean, se)
    };
    let (qc_mean, qc_se) = finish(qc, qc_sq);
    let (cc_mean, cc_se) = finish(cc, cc_sq);
    let m = records.len();
    Ok((
        SuperopEstimate { value: Superoperator::new(qc_mean)?, stderr: qc_se, n_samples: m },
        SuperopEstimate { value: Superoperator::new(cc_mean)?.hermitian_part(), stderr: cc_se, n_samples: m },
    ))
}

/// Side of a bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Normal quantile for a confidence level.
pub fn z_score(level: f64, two_sided: bool) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level {level} not in (0, 1)")));
    }
    let q = if two_sided { 0.5 * (1.0 + level) } else { level };
    Ok(Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(q))
}

/// `value ∓ z_level · stderr` for the requested side.
pub fn confidence_bound(est: &CorrelatorEstimate, level: f64, side: Side, two_sided: bool) -> Result<f64> {
    if est.stderr == 0.0 {
        return Ok(est.value);
    }
    if est.n_samples < 30 {
        return Err(Error::TooFewSamples(est.n_samples));
    }
    let z = z_score(level, two_sided)?;
    Ok(match side {
        Side::Lower => est.value - z * est.stderr,
        Side::Upper => est.value + z * est.stderr,
    })
}

/// Bootstrap standard error of the mean with `resamples` resamples.
pub fn bootstrap_stderr(values: &[f64], resamples: usize, seed: u64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = values.len();
    let means: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    let mu = means.iter().sum::<f64>() / resamples as f64;
    let var = means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / (resamples.max(2) - 1) as f64;
    Ok(var.sqrt())
}

/// Writes records one per line after a comment header.
pub fn write_records<W: Write>(mut w: W, records: &[ShadowRecord]) -> std::io::Result<()> {
    writeln!(w, "# shadow records: z=<label bits> c=<frames I|X|Y> m=<outcome bits>")?;
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Reads records, skipping blank lines and `#` comments.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<ShadowRecord>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.parse().map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))?);
    }
    Ok(out)
}

/// Exact expectation of the dual frame over frames and Born outcomes.
pub fn reconstruct_exact(rho: &DensityMatrix) -> Mat {
    let d = rho.dim();
    let nb = d.trailing_zeros() as usize;
    let mut acc = Mat::zeros((d, d));
    let n_frames = 3usize.pow(nb as u32);
    for ci in 0..n_frames {
        let mut k = ci;
        let c: Vec<Clifford> = (0..nb)
            .map(|_| {
                let f = Clifford::ALL[k % 3];
                k /= 3;
                f
            })
            .collect();
        let probs = born_distribution(rho, &c);
        for (mi, p) in probs.iter().enumerate() {
            let m: Vec<u8> = (0..nb).map(|q| ((mi >> (nb - 1 - q)) & 1) as u8).collect();
            acc = acc + dual_frame(&c, &m).mapv(|x| x * (*p / n_frames as f64));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::ExactEnsemble;
    use crate::opalg::{max_abs, min_eigenvalue, pauli, random, trace};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn frames_measure_the_right_paulis() {
        // u^† Z u should be Z, X, Y respectively
        for (c, k) in [(Clifford::I, 3), (Clifford::HX, 1), (Clifford::HY, 2)] {
            let u = c.unitary();
            let rotated = dagger(&u).dot(&pauli(3)).dot(&u);
            assert!(max_abs(&(rotated - pauli(k))) < 1e-15);
            assert!(max_abs(&(dagger(&u).dot(&u) - crate::opalg::eye(2))) < 1e-15);
        }
    }

    #[test]
    fn sample_shadow_examples() {
        let mut r = rng(31);
        let zero = DensityMatrix::basis(2, 0);
        let mut counts = [0usize; 2];
        for _ in 0..20_000 {
            let (c, m) = sample_shadow(&zero, &mut r);
            if c[0] == Clifford::I {
                assert_eq!(m[0], 0);
            } else {
                counts[m[0] as usize] += 1;
            }
        }
        let n = (counts[0] + counts[1]) as f64;
        assert!((counts[0] as f64 - n / 2.0).abs() < 5.0 * (n / 4.0).sqrt());
    }

    #[test]
    fn maximally_mixed_outcomes_uniform() {
        let mut r = rng(32);
        let mm = DensityMatrix::maximally_mixed(2);
        let n = 100_000;
        let mut counts = [[0usize; 2]; 3];
        for _ in 0..n {
            let (c, m) = sample_shadow(&mm, &mut r);
            let ci = Clifford::ALL.iter().position(|x| *x == c[0]).unwrap();
            counts[ci][m[0] as usize] += 1;
        }
        // chi-square over 6 cells with expected n/6, 5 dof, 1% critical 15.086
        let e = n as f64 / 6.0;
        let chi2: f64 = counts.iter().flatten().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 15.086, "chi2 = {chi2}");
    }

    #[test]
    fn dual_frame_examples() {
        let f = dual_frame(&[Clifford::I], &[0]);
        let expected = Mat::from_diag(&ndarray::arr1(&[C64::from(2.0), C64::from(-1.0)]));
        assert!(max_abs(&(f - expected)) < 1e-15);
        for c in Clifford::ALL {
            for m in 0..2 {
                assert!((trace(&c.dual_factor(m)).re - 1.0).abs() < 1e-15);
            }
        }
        let f = dual_frame(&[Clifford::HY, Clifford::HX], &[1, 0]);
        assert!((trace(&f).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exhaustive_reconstruction() {
        let mut r = rng(33);
        for d in [2, 4] {
            for rank in 1..=d {
                let rho = random::density(d, rank, &mut r);
                assert!(max_abs(&(reconstruct_exact(&rho) - &*rho)) < 1e-12);
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let rec = ShadowRecord {
            z: "0110".parse().unwrap(),
            c: vec![Clifford::HY, Clifford::I],
            m: vec![1, 0],
        };
        let line = rec.to_string();
        assert_eq!(line, "z=0110 c=YI m=10");
        assert_eq!(line.parse::<ShadowRecord>().unwrap(), rec);
        let mut buf = Vec::new();
        write_records(&mut buf, &[rec.clone(), rec.clone()]).unwrap();
        let back = read_records(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, vec![rec.clone(), rec]);
        assert!("z=01 c=Q m=1".parse::<ShadowRecord>().is_err());
        assert!("z=01 c=XX m=1".parse::<ShadowRecord>().is_err());
        assert!("z=01 c=X".parse::<ShadowRecord>().is_err());
        assert!(read_records(std::io::Cursor::new("z=0 c=X m=2\n")).is_err());
    }

    fn two_state_ensemble() -> ExactEnsemble {
        ExactEnsemble::perfect(vec![(0.5, DensityMatrix::basis(2, 0)), (0.5, DensityMatrix::basis(2, 1))]).unwrap()
    }

    #[test]
    fn estimate_linear_identity_is_exact() {
        let e = two_state_ensemble();
        let recs = simulate_records(&e, 1000, 34).unwrap();
        let est = estimate_linear(&recs, |_| HermOp::identity(2)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
        assert!(matches!(estimate_linear(&[], |_| HermOp::identity(2)), Err(Error::EmptyRecords)));
    }

    #[test]
    fn estimate_linear_z_on_ground_state() {
        let e = ExactEnsemble::perfect(vec![(1.0, DensityMatrix::basis(2, 0))]).unwrap();
        let recs = simulate_records(&e, 100_000, 35).unwrap();
        let est = estimate_linear(&recs, |_| HermOp::new(pauli(3)).unwrap()).unwrap();
        assert!((est.value - 1.0).abs() < 5.0 * est.stderr);
    }

    #[test]
    fn simulation_is_deterministic_across_thread_counts() {
        let e = two_state_ensemble();
        let a = simulate_records(&e, 2000, 36).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_records(&e, 2000, 36).unwrap());
        assert_eq!(a, b);
        let c = simulate_records(&e, 2000, 37).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn superop_estimates_converge() {
        let e = two_state_ensemble();
        let recs = simulate_records(&e, 100_000, 38).unwrap();
        let (qc, cc) = estimate_superops(&recs, &e).unwrap();
        let r0 = DensityMatrix::basis(2, 0);
        let r1 = DensityMatrix::basis(2, 1);
        let exact = Superoperator::gram(&[0.5, 0.5], &[&r0, &r1]);
        for i in 0..4 {
            for j in 0..4 {
                let diff = (qc.value.matrix()[[i, j]] - exact.matrix()[[i, j]]).norm();
                assert!(diff <= 5.0 * qc.stderr[[i, j]] + 1e-12, "({i},{j}) diff {diff}");
            }
        }
        // P^QC = STr[η^QC]
        let pqc: Vec<f64> = recs
            .iter()
            .map(|r| {
                let rc = e.classical_state(r.z);
                crate::opalg::hs_inner(&rc, &r.dual()).unwrap().re
            })
            .collect();
        let est = CorrelatorEstimate::from_samples(&pqc).unwrap();
        assert!((est.value - crate::opalg::super_trace(&qc.value)).abs() < 1e-12);
        assert!((est.value - 1.0).abs() < 5.0 * est.stderr);
        assert!(min_eigenvalue(cc.value.matrix()) > -1e-12);
    }

    #[test]
    fn cc_has_no_noise_for_a_single_label() {
        let e = ExactEnsemble::perfect(vec![(1.0, DensityMatrix::maximally_mixed(2))]).unwrap();
        let recs = simulate_records(&e, 500, 39).unwrap();
        let (_, cc) = estimate_superops(&recs, &e).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        let exact = Superoperator::outer(&half, &half);
        assert!(max_abs(&(cc.value.matrix() - exact.matrix())) < 1e-15);
        assert!(cc.stderr.iter().all(|&s| s < 1e-12));
    }

    #[test]
    fn confidence_bound_examples() {
        let e = CorrelatorEstimate { value: 0.3, stderr: 0.0, n_samples: 10 };
        assert_eq!(confidence_bound(&e, 0.99, Side::Lower, false).unwrap(), 0.3);
        let e = CorrelatorEstimate { value: 1.0, stderr: 0.01, n_samples: 1000 };
        let lo = confidence_bound(&e, 0.99, Side::Lower, false).unwrap();
        assert!((lo - 0.9767).abs() < 1e-4);
        let hi = confidence_bound(&e, 0.99, Side::Upper, true).unwrap();
        assert!((hi - 1.02576).abs() < 1e-4);
        let few = CorrelatorEstimate { value: 1.0, stderr: 0.01, n_samples: 10 };
        assert!(matches!(confidence_bound(&few, 0.99, Side::Lower, false), Err(Error::TooFewSamples(10))));
        assert!(z_score(1.0, false).is_err());
    }

    #[test]
    fn one_sided_coverage() {
        use rand_distr::{Distribution, Exp};
        // skewed data with known mean 1: the lower bound should exceed the
        // mean in about 1% of 1000 experiments
        let dist = Exp::new(1.0).unwrap();
        let mut r = rng(40);
        let mut failures = 0;
        for _ in 0..1000 {
            let xs: Vec<f64> = (0..400).map(|_| dist.sample(&mut r)).collect();
            let est = CorrelatorEstimate::from_samples(&xs).unwrap();
            if confidence_bound(&est, 0.99, Side::Lower, false).unwrap() > 1.0 {
                failures += 1;
            }
        }
        assert!(failures <= 20, "{failures} failures");
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt() {
        let e = ExactEnsemble::perfect(vec![(0.3, DensityMatrix::basis(2, 0)), (0.7, DensityMatrix::maximally_mixed(2))]).unwrap();
        let a = HermOp::new(pauli(3)).unwrap();
        let se: Vec<f64> = [1_000usize, 10_000, 100_000]
            .iter()
            .map(|&m| {
                let recs = simulate_records(&e, m, 41).unwrap();
                estimate_linear(&recs, |_| a.clone()).unwrap().stderr
            })
            .collect();
        for w in se.windows(2) {
            let slope = (w[1] / w[0]).log10();
            assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn bootstrap_agrees_with_normal_stderr() {
        let mut r = rng(42);
        let xs: Vec<f64> = (0..500).map(|_| r.gen::<f64>()).collect();
        let est = CorrelatorEstimate::from_samples(&xs).unwrap();
        let bs = bootstrap_stderr(&xs, 1000, 7).unwrap();
        assert!((bs / est.stderr - 1.0).abs() < 0.15);
    }
}
