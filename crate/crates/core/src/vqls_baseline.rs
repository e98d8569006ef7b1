//! Pauli-string decompositions and a shot-noise model of the VQLS cost
//! `C(ψ) = ⟨ψ|A|ψ⟩ / ⟨ψ|M†M|ψ⟩` estimated one Pauli string at a time, next to
//! the single binomial estimator of the measurement approach.

use std::fmt;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::StateVector;
use crate::error::{invalid, Result};
use crate::linalg::ComplexMatrix;
use crate::measurement::{sample_zero_from_probability, ZeroOutcomeMeter};
use crate::problem::unscaled_objective;
use crate::rng::{derive_seed, rng_from_seed};

/// Coefficients smaller than this are dropped from decompositions.
pub const COEFF_CUTOFF: f64 = 1e-12;

/// Below this `|mean|` the absolute standard deviation is reported instead of
/// the relative one.
pub const RELATIVE_SWITCH: f64 = 1e-6;

/// Tensor product of single-qubit Paulis in symplectic form: qubit `q` carries
/// `X` if bit `q` of `x` is set, `Z` if bit `q` of `z` is set, `Y` if both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    /// Enumerates the `4^n` strings; index bits `2q`, `2q+1` hold the `x`, `z`
    /// bits of qubit `q`.
    pub fn from_index(n_qubits: usize, index: u64) -> Self {
        let (mut x, mut z) = (0u64, 0u64);
        for q in 0..n_qubits {
            x |= (index >> (2 * q) & 1) << q;
            z |= (index >> (2 * q + 1) & 1) << q;
        }
        Self { n_qubits, x, z }
    }

    /// Parses labels such as `"XIZY"`; the leftmost letter acts on the highest qubit.
    pub fn from_label(label: &str) -> Result<Self> {
        let n_qubits = label.chars().count();
        let (mut x, mut z) = (0u64, 0u64);
        for (pos, ch) in label.chars().enumerate() {
            let q = n_qubits - 1 - pos;
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                other => return Err(invalid(format!("bad Pauli letter `{other}`"))),
            }
        }
        Ok(Self { n_qubits, x, z })
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// `P|j⟩ = phase(j)·|j ⊕ x⟩`.
    #[inline]
    fn phase(&self, j: usize) -> Complex64 {
        let y_count = (self.x & self.z).count_ones();
        let sign = if (j as u64 & self.z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let i_pow = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        i_pow * sign
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.n_qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            m[(j ^ self.x as usize, j)] = self.phase(j);
        }
        m
    }

    /// `⟨ψ|P|ψ⟩`, real for every Pauli string.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .enumerate()
            .map(|(j, a)| psi[j ^ self.x as usize].conj() * self.phase(j) * a)
            .sum::<Complex64>()
            .re
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n_qubits).rev() {
            let c = match (self.x >> q & 1, self.z >> q & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliDecomposition {
    pub n_qubits: usize,
    /// Coefficients `Tr(P† m)/2^n`, real whenever `m` is Hermitian.
    pub terms: Vec<(PauliString, Complex64)>,
}

impl PauliDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.n_qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (p, c) in &self.terms {
            for j in 0..dim {
                m[(j ^ p.x as usize, j)] += c * p.phase(j);
            }
        }
        m
    }
}

/// `c_P = Tr(P† m)/2^n` over all `4^n` strings, keeping `|c_P| ≥ 1e-12`.
pub fn pauli_decompose(m: &ComplexMatrix) -> Result<PauliDecomposition> {
    let dim = m.rows();
    if !m.is_square() || dim == 0 || !dim.is_power_of_two() {
        return Err(invalid(format!(
            "Pauli decomposition needs a 2^n x 2^n matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 16 {
        return Err(invalid("too many qubits for a dense Pauli decomposition"));
    }
    let terms = (0..1u64 << (2 * n))
        .filter_map(|idx| {
            let p = PauliString::from_index(n, idx);
            let c: Complex64 = (0..dim)
                .map(|j| p.phase(j).conj() * m[(j ^ p.x as usize, j)])
                .sum::<Complex64>()
                / dim as f64;
            (c.norm() >= COEFF_CUTOFF).then_some((p, c))
        })
        .collect();
    Ok(PauliDecomposition { n_qubits: n, terms })
}

/// Hermitian sum of `n_terms` distinct random strings with coefficients
/// uniform on `[-1, 1]`.
pub fn random_pauli_decomposition(n_qubits: usize, n_terms: usize, seed: u64) -> Result<PauliDecomposition> {
    if n_qubits == 0 || n_qubits > 16 {
        return Err(invalid("random Pauli matrices need 1..=16 qubits"));
    }
    let total = 1usize << (2 * n_qubits);
    if n_terms == 0 || n_terms > total {
        return Err(invalid(format!("T = {n_terms} outside 1..={total}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut picks: Vec<usize> = sample(&mut rng, total, n_terms).into_vec();
    picks.sort_unstable();
    let terms = picks
        .into_iter()
        .map(|idx| {
            let c = rng.random_range(-1.0..=1.0);
            (PauliString::from_index(n_qubits, idx as u64), Complex64::new(c, 0.0))
        })
        .collect();
    Ok(PauliDecomposition { n_qubits, terms })
}

pub fn random_pauli_matrix(n_qubits: usize, n_terms: usize, seed: u64) -> Result<ComplexMatrix> {
    Ok(random_pauli_decomposition(n_qubits, n_terms, seed)?.to_matrix())
}

/// Sample mean and spread of a repeated estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub mean: f64,
    /// Sample standard deviation.
    pub sigma: f64,
    /// `σ/|mean|`, or `σ` itself when `relative` is false.
    pub sigma_rel: f64,
    pub relative: bool,
    pub repetitions_used: usize,
    pub repetitions_excluded: usize,
    /// Number of separately measured terms (1 for the binomial estimator).
    pub measured_terms: usize,
}

fn summarize(values: &[f64], excluded: usize, measured_terms: usize) -> SigmaEstimate {
    let n = values.len();
    let mean = if n > 0 { values.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let sigma = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let relative = mean.abs() >= RELATIVE_SWITCH;
    SigmaEstimate {
        mean,
        sigma,
        sigma_rel: if relative { sigma / mean.abs() } else { sigma },
        relative,
        repetitions_used: n,
        repetitions_excluded: excluded,
        measured_terms,
    }
}

/// Estimates `C(ψ)` from per-string Hadamard-test statistics.
///
/// The numerator `M†(I − |b̂⟩⟨b̂|)M` and denominator `M†M` are decomposed into
/// Pauli strings; the shot budget is split evenly over all terms of both and
/// each `⟨P⟩` is the mean of `±1` outcomes. Repetitions whose denominator
/// estimate is not positive are excluded.
pub fn estimate_vqls_cost_sigma(
    m: &ComplexMatrix,
    b: &[Complex64],
    psi: &StateVector,
    n_shots_total: u64,
    repetitions: usize,
    seed: u64,
) -> Result<SigmaEstimate> {
    if !m.is_square() || m.rows() != b.len() || b.len() != psi.dim() {
        return Err(invalid("matrix, b and state dimensions disagree"));
    }
    let bn = crate::linalg::norm(b);
    if bn == 0.0 {
        return Err(invalid("b is zero"));
    }
    let b_hat: Vec<Complex64> = b.iter().map(|v| v / bn).collect();
    let numerator = pauli_decompose(&unscaled_objective(m, &b_hat)?)?;
    let denominator = pauli_decompose(&m.adjoint().matmul(m)?.hermitian_part())?;
    let measured_terms = numerator.len() + denominator.len();
    let shots_per_term = (n_shots_total / measured_terms.max(1) as u64).max(1);

    let expectations = |d: &PauliDecomposition| -> Vec<(f64, f64)> {
        d.terms
            .iter()
            .map(|(p, c)| (c.re, p.expectation(psi.amplitudes()).clamp(-1.0, 1.0)))
            .collect()
    };
    let num_terms = expectations(&numerator);
    let den_terms = expectations(&denominator);

    let mut values = Vec::with_capacity(repetitions);
    let mut excluded = 0;
    for rep in 0..repetitions {
        let mut rng = rng_from_seed(derive_seed(seed, rep as u64));
        let mut estimate = |terms: &[(f64, f64)]| -> f64 {
            terms
                .iter()
                .map(|&(c, e)| {
                    let plus = Binomial::new(shots_per_term, 0.5 * (1.0 + e))
                        .expect("probability in [0, 1]")
                        .sample(&mut rng);
                    c * (2.0 * plus as f64 / shots_per_term as f64 - 1.0)
                })
                .sum()
        };
        let num = estimate(&num_terms);
        let den = estimate(&den_terms);
        if den <= 0.0 {
            excluded += 1;
            continue;
        }
        values.push(num / den);
    }
    Ok(summarize(&values, excluded, measured_terms))
}

/// Repeats the zero-outcome frequency estimate with the full shot budget.
pub fn estimate_mta_sigma(
    meter: &ZeroOutcomeMeter<'_>,
    psi: &StateVector,
    n_shots_total: u64,
    repetitions: usize,
    seed: u64,
) -> Result<SigmaEstimate> {
    let p0 = meter.zero_probability(psi)?;
    Ok(estimate_binomial_sigma(p0, n_shots_total, repetitions, seed))
}

/// [`estimate_mta_sigma`] for a known zero-outcome probability.
pub fn estimate_binomial_sigma(p0: f64, n_shots: u64, repetitions: usize, seed: u64) -> SigmaEstimate {
    let values: Vec<f64> = (0..repetitions)
        .map(|rep| sample_zero_from_probability(p0, n_shots, derive_seed(seed, rep as u64)).rel_freq)
        .collect();
    summarize(&values, 0, 1)
}

/// One row of the Pauli-count comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub n_pauli_terms: usize,
    pub sigma_rel_mta: f64,
    pub sigma_rel_vqls: f64,
    pub repetitions: usize,
    pub shot_budget: u64,
}

impl VarianceReport {
    pub fn csv_header() -> &'static str {
        "T,sigma_rel_mta,sigma_rel_vqls,repetitions,N_total"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n_pauli_terms, self.sigma_rel_mta, self.sigma_rel_vqls, self.repetitions, self.shot_budget
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, ComplexMatrix};

    const C1: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn decompose_identity_and_x() {
        let d = pauli_decompose(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.terms[0].0.to_string(), "I");
        assert!((d.terms[0].1 - C1).norm() < 1e-15);

        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let d = pauli_decompose(&x).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.terms[0].0.to_string(), "X");
    }

    #[test]
    fn labels_and_matrices() {
        let z = PauliString::from_label("Z").unwrap().to_matrix();
        assert_eq!(z, ComplexMatrix::diag_real(&[1.0, -1.0]));
        let y = PauliString::from_label("Y").unwrap().to_matrix();
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        let zi = PauliString::from_label("ZI").unwrap();
        assert_eq!(zi.z, 0b10);
        assert_eq!(zi.to_string(), "ZI");
        assert!(PauliString::from_label("Q").is_err());
    }

    #[test]
    fn decompose_rejects_non_power_of_two() {
        assert!(pauli_decompose(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn random_hermitian_round_trip() {
        let mut rng = rng_from_seed(4);
        let g = ComplexMatrix::from_fn(4, 4, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let h = g.add(&g.adjoint()).unwrap();
        let d = pauli_decompose(&h).unwrap();
        assert!(d.len() <= 16);
        assert!(d.terms.iter().all(|(_, c)| c.im.abs() < 1e-14));
        let err = d.to_matrix().sub(&h).unwrap().frobenius_norm();
        assert!(err <= 1e-10 * h.frobenius_norm());
    }

    #[test]
    fn random_pauli_matrix_properties() {
        let a = random_pauli_matrix(2, 10, 3).unwrap();
        let b = random_pauli_matrix(2, 10, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.is_hermitian(1e-14));
        assert_eq!(pauli_decompose(&a).unwrap().len(), 10);
        assert!(hermitian_eig(&a).is_ok());
        assert!(random_pauli_matrix(2, 0, 1).is_err());
        assert!(random_pauli_matrix(2, 17, 1).is_err());
        let single = PauliDecomposition {
            n_qubits: 1,
            terms: vec![(PauliString::from_label("Z").unwrap(), C1)],
        };
        assert_eq!(single.to_matrix(), ComplexMatrix::diag_real(&[1.0, -1.0]));
    }

    #[test]
    fn expectation_matches_dense() {
        let mut rng = rng_from_seed(8);
        let psi: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let psi = StateVector::from_amplitudes(psi).unwrap();
        for idx in 0..64 {
            let p = PauliString::from_index(3, idx);
            let dense = crate::linalg::inner(psi.amplitudes(), &p.to_matrix().mul_vec(psi.amplitudes()).unwrap());
            assert!((dense.re - p.expectation(psi.amplitudes())).abs() < 1e-14);
            assert!(dense.im.abs() < 1e-14);
        }
    }

    #[test]
    fn binomial_sigma_closed_form() {
        let est = estimate_binomial_sigma(0.5, 100_000, 400, 1);
        let want = (0.25f64 / 1e5).sqrt() / 0.5;
        assert!((est.sigma_rel / want - 1.0).abs() < 0.2, "{} vs {want}", est.sigma_rel);
        let one = estimate_binomial_sigma(1.0, 1000, 50, 1);
        assert_eq!(one.sigma_rel, 0.0);
        let zero = estimate_binomial_sigma(0.0, 1000, 50, 1);
        assert!(!zero.relative);
        assert_eq!(zero.sigma_rel, 0.0);
    }

    #[test]
    fn vqls_cost_vanishes_on_solution() {
        let m = random_pauli_matrix(2, 6, 12).unwrap();
        let b: Vec<Complex64> = [0.3, -0.5, 0.7, 0.1].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        // solution ray of M y ∥ b
        let a = unscaled_objective(&m, &{
            let n = crate::linalg::norm(&b);
            b.iter().map(|v| v / n).collect::<Vec<_>>()
        })
        .unwrap();
        let y = hermitian_eig(&a).unwrap().eigenvector(0);
        let psi = StateVector::from_amplitudes(y).unwrap();
        let est = estimate_vqls_cost_sigma(&m, &b, &psi, 1_000_000, 40, 5).unwrap();
        assert!(est.mean.abs() <= 4.0 * est.sigma / 40f64.sqrt(), "{est:?}");
    }
}
