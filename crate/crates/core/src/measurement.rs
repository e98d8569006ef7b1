//! Phase-estimation measurement of the objective observable.
//!
//! Three backends compute the distribution of the `m`-qubit pointer register:
//!
//! * [`Backend::Projective`]: the idealized von Neumann measurement, every
//!   eigenvalue snapped to its nearest grid point `j/K`;
//! * [`Backend::Spectral`]: exact phase-estimation statistics evaluated in the
//!   eigenbasis with the Fejér kernel (including leakage of off-grid phases);
//! * [`Backend::Circuit`]: full statevector simulation of the phase-estimation
//!   circuit on `n + m` qubits.
//!
//! Outcome `j` encodes the eigenvalue estimate `j/K`; the first pointer qubit
//! carries the most significant fractional bit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::ansatz::StateVector;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::problem::ObjectiveObservable;
use crate::rng::rng_from_seed;

/// Largest register (`n + m` qubits) the circuit backend will allocate.
pub const MAX_CIRCUIT_QUBITS: usize = 26;

/// Largest pointer register accepted anywhere.
pub const MAX_POINTER_QUBITS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerConfig {
    pub m_qubits: usize,
}

impl PointerConfig {
    pub fn new(m_qubits: usize) -> Result<Self> {
        if m_qubits == 0 || m_qubits > MAX_POINTER_QUBITS {
            return Err(invalid(format!(
                "pointer register must have 1..={MAX_POINTER_QUBITS} qubits, got {m_qubits}"
            )));
        }
        Ok(Self { m_qubits })
    }

    /// Number of outcomes `K = 2^m`.
    pub fn outcomes(&self) -> usize {
        1 << self.m_qubits
    }

    /// `R = 2^{-m}`.
    pub fn resolution(&self) -> f64 {
        0.5f64.powi(self.m_qubits as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Projective,
    #[default]
    Spectral,
    Circuit,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Projective => "projective",
            Backend::Spectral => "spectral",
            Backend::Circuit => "circuit",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projective" => Ok(Backend::Projective),
            "spectral" => Ok(Backend::Spectral),
            "circuit" => Ok(Backend::Circuit),
            other => Err(invalid(format!("unknown backend `{other}`"))),
        }
    }
}

/// Probabilities of the `K` pointer outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointerDistribution {
    pub probs: Vec<f64>,
}

impl PointerDistribution {
    /// Distribution with weight `p0` on outcome 0 and the rest on outcome 1.
    pub fn two_outcome(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(invalid(format!("p0 = {p0} outside [0, 1]")));
        }
        Ok(Self {
            probs: vec![p0, 1.0 - p0],
        })
    }

    pub fn zero_probability(&self) -> f64 {
        self.probs[0]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,probability\n");
        for (j, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{j},{p:e}\n"));
        }
        out
    }
}

/// Outcome of `N` shots reduced to the count of all-zero pointer readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub n_shots: u64,
    pub n_zero: u64,
    pub rel_freq: f64,
    pub rng_seed: u64,
}

/// Fejér kernel `|sin(πKδ)|² / (K²|sin(πδ)|²)`, equal to 1 at integer `δ`.
pub fn fejer(k: usize, delta: f64) -> f64 {
    let d = delta - delta.round();
    let kf = k as f64;
    if d.abs() < 1e-9 {
        let x = PI * d;
        return 1.0 - (kf * kf - 1.0) * x * x / 3.0;
    }
    let num = (PI * kf * d).sin();
    let den = kf * (PI * d).sin();
    (num / den).powi(2)
}

/// Pointer bin nearest to `lambda`; exact halves round down; wraps modulo `K`.
pub fn nearest_bin(lambda: f64, k: usize) -> usize {
    let x = (lambda * k as f64 - 0.5).ceil() as i64;
    x.rem_euclid(k as i64) as usize
}

fn check_dims(obs: &ObjectiveObservable, psi: &StateVector) -> Result<()> {
    if obs.dim() != psi.dim() {
        return Err(invalid(format!(
            "observable has dimension {}, state has {}",
            obs.dim(),
            psi.dim()
        )));
    }
    Ok(())
}

/// `|⟨a_i|ψ⟩|²` for every eigenvector.
pub fn eigen_weights(obs: &ObjectiveObservable, psi: &StateVector) -> Result<Vec<f64>> {
    check_dims(obs, psi)?;
    let v = &obs.spectrum.eigenvectors;
    let amps = psi.amplitudes();
    let n = obs.dim();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|r| v[(r, i)].conj() * amps[r])
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect())
}

pub fn pointer_distribution_projective(
    obs: &ObjectiveObservable,
    psi: &StateVector,
    cfg: &PointerConfig,
) -> Result<PointerDistribution> {
    let weights = eigen_weights(obs, psi)?;
    let k = cfg.outcomes();
    let mut probs = vec![0.0; k];
    for (w, &l) in weights.iter().zip(&obs.spectrum.eigenvalues) {
        probs[nearest_bin(l, k)] += w;
    }
    Ok(PointerDistribution { probs })
}

pub fn pointer_distribution_spectral(
    obs: &ObjectiveObservable,
    psi: &StateVector,
    cfg: &PointerConfig,
) -> Result<PointerDistribution> {
    let weights = eigen_weights(obs, psi)?;
    let k = cfg.outcomes();
    let kf = k as f64;
    let probs = (0..k)
        .map(|l| {
            weights
                .iter()
                .zip(&obs.spectrum.eigenvalues)
                .map(|(w, &lam)| w * fejer(k, lam - l as f64 / kf))
                .sum()
        })
        .collect();
    Ok(PointerDistribution { probs })
}

/// Simulates Hadamards on the pointer register, controlled `U^{2^t}` with
/// `U = exp(2πi A)`, and the inverse QFT, then marginalizes the pointer.
pub fn pointer_distribution_circuit(
    obs: &ObjectiveObservable,
    psi: &StateVector,
    cfg: &PointerConfig,
) -> Result<PointerDistribution> {
    check_dims(obs, psi)?;
    let n = psi.n_qubits();
    let m = cfg.m_qubits;
    if n + m > MAX_CIRCUIT_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{} qubits exceed the circuit backend limit of {MAX_CIRCUIT_QUBITS}",
            n + m
        )));
    }
    let dim = 1usize << n;
    let k = cfg.outcomes();

    // Hadamards on the pointer register turn |ψ⟩|0⟩ into |ψ⟩ Σ_k |k⟩/√K.
    let amp = 1.0 / (k as f64).sqrt();
    let mut state: Vec<Complex64> = Vec::with_capacity(dim * k);
    for _ in 0..k {
        state.extend(psi.amplitudes().iter().map(|a| a * amp));
    }

    // Pointer qubit t controls U^{2^t}.
    let mut power = linalg::unitary_exp_pade(&obs.a)?;
    for t in 0..m {
        for ptr in (0..k).filter(|p| p >> t & 1 == 1) {
            let block = &mut state[ptr * dim..(ptr + 1) * dim];
            let out = power.mul_vec(block)?;
            block.copy_from_slice(&out);
        }
        if t + 1 < m {
            power = power.matmul(&power)?;
        }
    }

    inverse_qft_pointer(&mut state, dim, m);

    let mut probs = vec![0.0; k];
    for ptr in 0..k {
        let j = (0..m).fold(0usize, |acc, t| acc | ((ptr >> t & 1) << (m - 1 - t)));
        probs[j] += state[ptr * dim..(ptr + 1) * dim]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>();
    }
    Ok(PointerDistribution { probs })
}

/// Swap-free inverse QFT on the pointer qubits; afterwards pointer qubit `t`
/// holds fractional bit `b_t` (weight `2^{-(t+1)}`).
fn inverse_qft_pointer(state: &mut [Complex64], dim: usize, m: usize) {
    let k = 1usize << m;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for t in (0..m).rev() {
        for s in t + 1..m {
            let phase = Complex64::from_polar(1.0, -2.0 * PI * 0.5f64.powi((s - t + 1) as i32));
            for ptr in (0..k).filter(|p| p >> t & 1 == 1 && p >> s & 1 == 1) {
                state[ptr * dim..(ptr + 1) * dim].iter_mut().for_each(|a| *a *= phase);
            }
        }
        let bit = 1usize << t;
        for ptr in (0..k).filter(|p| p & bit == 0) {
            for i in 0..dim {
                let a0 = state[ptr * dim + i];
                let a1 = state[(ptr | bit) * dim + i];
                state[ptr * dim + i] = (a0 + a1) * h;
                state[(ptr | bit) * dim + i] = (a0 - a1) * h;
            }
        }
    }
}

pub fn pointer_distribution(
    backend: Backend,
    obs: &ObjectiveObservable,
    psi: &StateVector,
    cfg: &PointerConfig,
) -> Result<PointerDistribution> {
    match backend {
        Backend::Projective => pointer_distribution_projective(obs, psi, cfg),
        Backend::Spectral => pointer_distribution_spectral(obs, psi, cfg),
        Backend::Circuit => pointer_distribution_circuit(obs, psi, cfg),
    }
}

/// Draws `N₀ ~ Binomial(N, p₀)` and reports `r = N₀/N`.
pub fn sample_zero_frequency(dist: &PointerDistribution, n_shots: u64, seed: u64) -> ShotRecord {
    sample_zero_from_probability(dist.zero_probability(), n_shots, seed)
}

pub fn sample_zero_from_probability(p0: f64, n_shots: u64, seed: u64) -> ShotRecord {
    let n_shots = n_shots.max(1);
    let p = p0.clamp(0.0, 1.0);
    let mut rng = rng_from_seed(seed);
    let n_zero = Binomial::new(n_shots, p)
        .expect("p clamped to [0, 1]")
        .sample(&mut rng);
    ShotRecord {
        n_shots,
        n_zero,
        rel_freq: n_zero as f64 / n_shots as f64,
        rng_seed: seed,
    }
}

/// Counts of every pointer outcome in `n_shots` shots (multinomial draw by
/// sequential conditional binomials).
pub fn sample_outcomes(dist: &PointerDistribution, n_shots: u64, seed: u64) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    let mut remaining = n_shots;
    let mut mass_left = 1.0f64;
    let mut counts = vec![0u64; dist.probs.len()];
    for (c, &p) in counts.iter_mut().zip(&dist.probs) {
        if remaining == 0 {
            break;
        }
        let q = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = Binomial::new(remaining, q).expect("q in [0, 1]").sample(&mut rng);
        *c = draw;
        remaining -= draw;
        mass_left -= p;
    }
    if remaining > 0 {
        // round-off left some mass unassigned
        *counts.last_mut().unwrap() += remaining;
    }
    counts
}

/// `|⟨a₀|ψ⟩|²`, the target fidelity.
pub fn exact_target_fidelity(obs: &ObjectiveObservable, psi: &StateVector) -> Result<f64> {
    check_dims(obs, psi)?;
    if obs.lambda1 <= 1e-10 * obs.lambda_max() {
        return Err(Error::Ambiguity(format!(
            "λ₁ = {:e} is numerically zero",
            obs.lambda1
        )));
    }
    let a0 = obs.null_vector();
    Ok(linalg::inner(&a0, psi.amplitudes()).norm_sqr())
}

/// Precomputed measurement of one observable, specialized for the zero outcome.
#[derive(Debug, Clone)]
pub struct ZeroOutcomeMeter<'a> {
    obs: &'a ObjectiveObservable,
    cfg: PointerConfig,
    backend: Backend,
    zero_weights: Vec<f64>,
    adjoint_vectors: ComplexMatrix,
}

impl<'a> ZeroOutcomeMeter<'a> {
    pub fn new(obs: &'a ObjectiveObservable, cfg: PointerConfig, backend: Backend) -> Result<Self> {
        if backend == Backend::Circuit && obs.dim().trailing_zeros() as usize + cfg.m_qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "{} pointer qubits are too many for the circuit backend",
                cfg.m_qubits
            )));
        }
        let k = cfg.outcomes();
        let zero_weights = obs
            .spectrum
            .eigenvalues
            .iter()
            .map(|&l| match backend {
                Backend::Projective => f64::from(u8::from(nearest_bin(l, k) == 0)),
                _ => fejer(k, l),
            })
            .collect();
        Ok(Self {
            obs,
            cfg,
            backend,
            zero_weights,
            adjoint_vectors: obs.spectrum.eigenvectors.adjoint(),
        })
    }

    pub fn observable(&self) -> &ObjectiveObservable {
        self.obs
    }

    pub fn config(&self) -> PointerConfig {
        self.cfg
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// `p(0)` for `psi`.
    pub fn zero_probability(&self, psi: &StateVector) -> Result<f64> {
        if self.backend == Backend::Circuit {
            return Ok(pointer_distribution_circuit(self.obs, psi, &self.cfg)?.zero_probability());
        }
        let coeffs = self.adjoint_vectors.mul_vec(psi.amplitudes())?;
        Ok(coeffs
            .iter()
            .zip(&self.zero_weights)
            .map(|(c, w)| c.norm_sqr() * w)
            .sum::<f64>()
            .clamp(0.0, 1.0))
    }

    /// Exact `|⟨a₀|ψ⟩|²`.
    pub fn target_fidelity(&self, psi: &StateVector) -> Result<f64> {
        exact_target_fidelity(self.obs, psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_objective, LinearSystem};

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    fn diag_obs(values: &[f64], m: usize) -> ObjectiveObservable {
        // Observable with a prescribed spectrum and basis eigenvectors; only the
        // fields used by the backends matter here.
        let a = ComplexMatrix::diag_real(values);
        let spectrum = linalg::hermitian_eig(&a).unwrap();
        ObjectiveObservable {
            lambda1: spectrum.eigenvalues[1],
            a,
            spectrum,
            scale_factor: 1.0,
            m_qubits: m,
            kappa: 1.0,
        }
    }

    fn basis(dim: usize, i: usize) -> StateVector {
        let mut v = vec![C0; dim];
        v[i] = Complex64::new(1.0, 0.0);
        StateVector::from_amplitudes(v).unwrap()
    }

    #[test]
    fn fejer_limits() {
        assert_eq!(fejer(8, 0.0), 1.0);
        assert!((fejer(8, 1.0) - 1.0).abs() < 1e-12);
        assert!(fejer(8, 0.25).abs() < 1e-25);
        let mid = fejer(8, 1.0 / 16.0);
        let want = 1.0 / (8.0 * (PI / 16.0).sin()).powi(2);
        assert!((mid - want).abs() < 1e-14);
        assert!((mid - 0.4105).abs() < 1e-4);
    }

    #[test]
    fn null_state_lands_in_bin_zero() {
        let obs = diag_obs(&[0.0, 0.25, 0.5, 0.75], 3);
        let cfg = PointerConfig::new(3).unwrap();
        for backend in [Backend::Projective, Backend::Spectral, Backend::Circuit] {
            let d = pointer_distribution(backend, &obs, &basis(4, 0), &cfg).unwrap();
            assert!((d.probs[0] - 1.0).abs() < 1e-12, "{backend}");
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn on_grid_superposition_splits_evenly() {
        let obs = diag_obs(&[0.0, 0.25], 3);
        let cfg = PointerConfig::new(3).unwrap();
        let psi = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        for backend in [Backend::Projective, Backend::Spectral, Backend::Circuit] {
            let d = pointer_distribution(backend, &obs, &psi, &cfg).unwrap();
            assert!((d.probs[0] - 0.5).abs() < 1e-12);
            assert!((d.probs[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_qubit_phase_kickback() {
        let obs = diag_obs(&[0.0, 0.5], 1);
        let cfg = PointerConfig::new(1).unwrap();
        let d = pointer_distribution_circuit(&obs, &basis(2, 1), &cfg).unwrap();
        assert!(d.probs[0] < 1e-15);
        assert!((d.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn midway_eigenvalue_leaks_into_two_bins() {
        let obs = diag_obs(&[0.0, 1.0 / 16.0], 3);
        let cfg = PointerConfig::new(3).unwrap();
        let d = pointer_distribution_spectral(&obs, &basis(2, 1), &cfg).unwrap();
        // oracle: direct evaluation of the phase-estimation amplitude sum
        let k = 8;
        let lam: f64 = 1.0 / 16.0;
        let oracle = |l: usize| {
            let s: Complex64 = (0..k)
                .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (lam - l as f64 / k as f64) * j as f64))
                .sum();
            (s / k as f64).norm_sqr()
        };
        for l in 0..k {
            assert!((d.probs[l] - oracle(l)).abs() < 1e-14);
        }
        assert!((d.probs[0] - 0.4105).abs() < 1e-4);
        assert!((d.probs[1] - 0.4105).abs() < 1e-4);
    }

    #[test]
    fn projective_tie_rounds_down() {
        assert_eq!(nearest_bin(1.0 / 16.0, 8), 0);
        assert_eq!(nearest_bin(3.0 / 16.0, 8), 1);
        assert_eq!(nearest_bin(0.99, 8), 0);
        assert_eq!(nearest_bin(-1e-17, 8), 0);
    }

    #[test]
    fn circuit_register_limit() {
        let obs = diag_obs(&[0.0, 0.5], 26);
        let cfg = PointerConfig::new(26).unwrap();
        assert!(matches!(
            pointer_distribution_circuit(&obs, &basis(2, 0), &cfg),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let obs = diag_obs(&[0.0, 0.5], 2);
        let cfg = PointerConfig::new(2).unwrap();
        for backend in [Backend::Projective, Backend::Spectral, Backend::Circuit] {
            assert!(pointer_distribution(backend, &obs, &basis(4, 0), &cfg).is_err());
        }
    }

    #[test]
    fn shot_sampling_edges() {
        for seed in 0..5 {
            assert_eq!(sample_zero_from_probability(1.0, 777, seed).rel_freq, 1.0);
            assert_eq!(sample_zero_from_probability(0.0, 777, seed).rel_freq, 0.0);
        }
        let a = sample_zero_from_probability(0.3, 1000, 9);
        let b = sample_zero_from_probability(0.3, 1000, 9);
        assert_eq!(a, b);
        assert!(a.n_zero <= a.n_shots);
    }

    #[test]
    fn shot_sampling_spread() {
        let n = 1_000_000u64;
        let rs: Vec<f64> = (0..100)
            .map(|s| sample_zero_from_probability(0.5, n, s).rel_freq)
            .collect();
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        let sd = (rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rs.len() - 1) as f64).sqrt();
        let want = (0.25 / n as f64).sqrt();
        assert!((sd / want - 1.0).abs() < 0.15, "sd {sd} vs {want}");
    }

    #[test]
    fn multinomial_counts_sum_to_shots() {
        let dist = PointerDistribution {
            probs: vec![0.1, 0.2, 0.3, 0.4],
        };
        let counts = sample_outcomes(&dist, 100_000, 3);
        assert_eq!(counts.iter().sum::<u64>(), 100_000);
        for (c, p) in counts.iter().zip(&dist.probs) {
            assert!((*c as f64 / 1e5 - p).abs() < 0.01);
        }
    }

    #[test]
    fn fidelity_examples() {
        let s = LinearSystem::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]], vec![0.0, 1.0]).unwrap();
        let obs = build_objective(&s, 3).unwrap();
        assert!((exact_target_fidelity(&obs, &basis(2, 1)).unwrap() - 1.0).abs() < 1e-15);
        assert!(exact_target_fidelity(&obs, &basis(2, 0)).unwrap() < 1e-15);
        let degenerate = diag_obs(&[0.0, 0.0, 0.5, 0.5], 2);
        assert!(matches!(
            exact_target_fidelity(&degenerate, &basis(4, 0)),
            Err(Error::Ambiguity(_))
        ));
    }

    #[test]
    fn meter_matches_full_distribution() {
        let s = crate::problem::random_instance(2, 8, 50.0).unwrap();
        let obs = build_objective(&s, 5).unwrap();
        let cfg = PointerConfig::new(5).unwrap();
        let psi = crate::ansatz::prepare_state(&crate::ansatz::AnsatzParameters::random(2, 1, 4)).unwrap();
        for backend in [Backend::Projective, Backend::Spectral, Backend::Circuit] {
            let meter = ZeroOutcomeMeter::new(&obs, cfg, backend).unwrap();
            let full = pointer_distribution(backend, &obs, &psi, &cfg).unwrap();
            assert!((meter.zero_probability(&psi).unwrap() - full.probs[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export() {
        let d = PointerDistribution::two_outcome(0.25).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("outcome,probability\n0,2.5e-1\n1,7.5e-1"));
        assert!(PointerDistribution::two_outcome(1.5).is_err());
    }
}
