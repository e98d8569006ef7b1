//! Linear systems, the objective observable whose null vector is the
//! normalized solution, and reconstruction of `x` from a converged state.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, ComplexMatrix, SpectralDecomposition};
use crate::rng::rng_from_seed;

/// Default number of pointer qubits added on top of `ceil(2·log2 κ)`.
pub const DEFAULT_GUARD_QUBITS: usize = 2;

/// Default condition-number ceiling for generated instances.
pub const DEFAULT_KAPPA_MAX: f64 = 100.0;

const MAX_GENERATION_ATTEMPTS: usize = 1000;

/// `M x = b` with real square `M` of size `2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    matrix: ComplexMatrix,
    b: Vec<f64>,
    b_norm: f64,
    kappa: f64,
    n_qubits: usize,
    seed: Option<u64>,
}

/// JSON layout used to store a system on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDocument {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub matrix: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub kappa: f64,
}

impl LinearSystem {
    pub fn new(matrix: ComplexMatrix, b: Vec<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("system matrix must be square"));
        }
        if !matrix.is_real(0.0) {
            return Err(invalid("system matrix must have real entries"));
        }
        let dim = matrix.rows();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(invalid(format!("dimension {dim} is not a power of two ≥ 2")));
        }
        if b.len() != dim {
            return Err(invalid(format!("rhs has length {}, expected {dim}", b.len())));
        }
        if b.iter().chain(matrix.data().iter().map(|z| &z.re)).any(|v| !v.is_finite()) {
            return Err(invalid("non-finite entries"));
        }
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm <= 0.0 {
            return Err(invalid("right-hand side is zero"));
        }
        let kappa = linalg::condition_number(&matrix)?;
        Ok(Self {
            matrix,
            b,
            b_norm,
            kappa,
            n_qubits: dim.trailing_zeros() as usize,
            seed: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: Vec<f64>) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows)?, b)
    }

    /// Parses the matrix and right-hand side CSV texts.
    pub fn from_csv(matrix_csv: &str, rhs_csv: &str) -> Result<Self> {
        Self::new(
            ComplexMatrix::from_csv_str(matrix_csv)?,
            linalg::parse_real_vector_csv(rhs_csv)?,
        )
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            n: self.n_qubits,
            seed: self.seed,
            matrix: self.matrix.real_parts(),
            b: self.b.clone(),
            kappa: self.kappa,
        }
    }

    /// Rebuilds a system from its JSON document; `kappa` is recomputed.
    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let mut sys = Self::from_rows(&doc.matrix, doc.b.clone())?;
        if sys.n_qubits != doc.n {
            return Err(invalid(format!(
                "document says n = {}, matrix has n = {}",
                doc.n, sys.n_qubits
            )));
        }
        sys.seed = doc.seed;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("system document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b_norm(&self) -> f64 {
        self.b_norm
    }

    /// `b / ‖b‖` as a state.
    pub fn b_state(&self) -> Vec<Complex64> {
        self.b.iter().map(|&v| Complex64::new(v / self.b_norm, 0.0)).collect()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Normalized classical solution, the state the optimizer should reach.
    pub fn solution_ray(&self) -> Result<Vec<Complex64>> {
        let x = linalg::classical_solve(self)?;
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(x.iter().map(|&v| Complex64::new(v / nx, 0.0)).collect())
    }

    /// `‖M x − b‖ / ‖b‖`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let mx = self
            .matrix
            .mul_vec(&linalg::real_to_complex(x))
            .expect("dimension checked by caller");
        let r: f64 = mx
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (a.re - b).powi(2))
            .sum::<f64>()
            .sqrt();
        r / self.b_norm
    }
}

/// The Hermitian PSD observable `A = M†(I − |b̂⟩⟨b̂|)M`, rescaled so that its
/// spectrum fits below the top pointer bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveObservable {
    pub a: ComplexMatrix,
    pub spectrum: SpectralDecomposition,
    /// `s` in `M → M/s`; the unscaled observable is `s² · a`.
    pub scale_factor: f64,
    /// Second-smallest eigenvalue of the scaled observable.
    pub lambda1: f64,
    pub m_qubits: usize,
    pub kappa: f64,
}

impl ObjectiveObservable {
    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Eigenvector of the (unique) zero eigenvalue.
    pub fn null_vector(&self) -> Vec<Complex64> {
        self.spectrum.eigenvector(0)
    }

    pub fn lambda_max(&self) -> f64 {
        *self.spectrum.eigenvalues.last().unwrap()
    }

    /// A warning when `m` pointer qubits cannot resolve `λ₁` from zero: either
    /// `m < 2·log2 κ` or `λ₁ < 2^{-m}` after scaling.
    pub fn resolution_warning(&self) -> Option<String> {
        let resolution = 0.5f64.powi(self.m_qubits as i32);
        let needed = 2.0 * self.kappa.log2();
        let mut reasons = Vec::new();
        if (self.m_qubits as f64) < needed - 1e-12 {
            reasons.push(format!("m = {} < 2·log2(κ) = {needed:.3}", self.m_qubits));
        }
        if self.lambda1 < resolution {
            reasons.push(format!(
                "λ₁ = {:.3e} is below the pointer resolution {resolution:.3e}",
                self.lambda1
            ));
        }
        (!reasons.is_empty()).then(|| reasons.join("; "))
    }
}

/// Builds the objective observable for `system` with `m_qubits` pointer qubits.
pub fn build_objective(system: &LinearSystem, m_qubits: usize) -> Result<ObjectiveObservable> {
    objective_from_operator(system.matrix(), &system.b_state(), m_qubits)
}

/// Same as [`build_objective`] for an arbitrary square (possibly complex)
/// operator and normalized `b`.
pub fn objective_from_operator(
    m: &ComplexMatrix,
    b_state: &[Complex64],
    m_qubits: usize,
) -> Result<ObjectiveObservable> {
    if m_qubits == 0 {
        return Err(invalid("at least one pointer qubit is required"));
    }
    if !m.is_square() || m.rows() != b_state.len() {
        return Err(invalid("operator and b have inconsistent dimensions"));
    }
    let kappa = linalg::condition_number(m)?;
    let a0 = unscaled_objective(m, b_state)?;
    let spec0 = linalg::hermitian_eig(&a0)?;
    let lmax = *spec0.eigenvalues.last().unwrap();
    if lmax <= 0.0 || spec0.eigenvalues[1] <= 1e-10 * lmax {
        return Err(Error::SingularMatrix(
            "objective observable has a degenerate null space".into(),
        ));
    }
    let top = 1.0 - 0.5f64.powi(m_qubits as i32);
    let s2 = lmax / top;
    let spectrum = SpectralDecomposition {
        eigenvalues: spec0.eigenvalues.iter().map(|l| l / s2).collect(),
        eigenvectors: spec0.eigenvectors,
    };
    Ok(ObjectiveObservable {
        a: a0.scale_real(1.0 / s2),
        lambda1: spectrum.eigenvalues[1],
        spectrum,
        scale_factor: s2.sqrt(),
        m_qubits,
        kappa,
    })
}

/// `M†(I − |b⟩⟨b|)M` for normalized `b`, without rescaling.
pub fn unscaled_objective(m: &ComplexMatrix, b_state: &[Complex64]) -> Result<ComplexMatrix> {
    let n = m.rows();
    let proj = ComplexMatrix::identity(n).sub(&ComplexMatrix::outer(b_state, b_state))?;
    Ok(m.adjoint().matmul(&proj)?.matmul(m)?.hermitian_part())
}

/// Smallest `m` with `2^{-m} ≤ 1/κ²`, plus `guard`, and never below 1.
pub fn required_pointer_qubits(kappa: f64, guard: usize) -> usize {
    let base = (2.0 * kappa.max(1.0).log2() - 1e-12).ceil().max(0.0) as usize;
    (base + guard).max(1)
}

/// A classical solution read off a converged ansatz state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub y: Vec<Complex64>,
    pub z: Complex64,
    pub x: Vec<f64>,
    pub relative_residual: f64,
    /// Norm of the imaginary parts discarded from `z·y`.
    pub imag_magnitude: f64,
}

/// Recovers `x = z·y` with `z = ‖b‖ / ⟨b̂|M|y⟩`, using the unscaled `M`.
pub fn reconstruct_solution(y: &[Complex64], system: &LinearSystem) -> Result<SolutionRecord> {
    if y.len() != system.dim() {
        return Err(invalid("state dimension does not match the system"));
    }
    let my = system.matrix().mul_vec(y)?;
    let overlap = linalg::inner(&system.b_state(), &my);
    if overlap.norm() <= 1e-12 {
        return Err(Error::NonConvergence(format!(
            "|⟨b|M|y⟩| = {:.3e}",
            overlap.norm()
        )));
    }
    let z = Complex64::new(system.b_norm(), 0.0) / overlap;
    let xc: Vec<Complex64> = y.iter().map(|v| v * z).collect();
    let x: Vec<f64> = xc.iter().map(|v| v.re).collect();
    let imag_magnitude = xc.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    Ok(SolutionRecord {
        y: y.to_vec(),
        z,
        relative_residual: system.relative_residual(&x),
        x,
        imag_magnitude,
    })
}

/// Random symmetric instance: entries uniform on `[-1, 1]`, symmetrized, and
/// redrawn until nonsingular with `κ ≤ kappa_max`.
pub fn random_instance(n_qubits: usize, seed: u64, kappa_max: f64) -> Result<LinearSystem> {
    if n_qubits == 0 {
        return Err(invalid("need at least one qubit"));
    }
    let dim = 1usize << n_qubits;
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let raw: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| 0.5 * (raw[i * dim + j] + raw[j * dim + i])).collect())
            .collect();
        let matrix = ComplexMatrix::from_real_rows(&rows)?;
        let kappa = match linalg::condition_number(&matrix) {
            Ok(k) if k <= kappa_max => k,
            _ => continue,
        };
        let b = loop {
            let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if b.iter().map(|v| v * v).sum::<f64>().sqrt() >= 1e-6 {
                break b;
            }
        };
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(LinearSystem {
            matrix,
            b,
            b_norm,
            kappa,
            n_qubits,
            seed: Some(seed),
        });
    }
    Err(Error::GenerationFailure {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Symmetric instance with a prescribed condition number: `M = Q D Qᵀ` with a
/// random orthogonal `Q` and `|D|` spread geometrically over `[1, κ]`.
pub fn instance_with_condition(n_qubits: usize, seed: u64, kappa: f64) -> Result<LinearSystem> {
    if n_qubits == 0 || kappa < 1.0 {
        return Err(invalid("need n ≥ 1 and κ ≥ 1"));
    }
    let dim = 1usize << n_qubits;
    let mut rng = rng_from_seed(seed);
    // Gram–Schmidt on a random matrix gives the orthogonal factor.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        for u in &q {
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= d * ui);
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv > 1e-8 {
            q.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    let diag: Vec<f64> = (0..dim)
        .map(|i| {
            let mag = kappa.powf(i as f64 / (dim - 1) as f64);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..dim).map(|k| q[k][i] * diag[k] * q[k][j]).sum())
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut sys = LinearSystem::from_rows(&rows, b)?;
    sys.seed = Some(seed);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rows: &[Vec<f64>], b: &[f64]) -> LinearSystem {
        LinearSystem::from_rows(rows, b.to_vec()).unwrap()
    }

    #[test]
    fn identity_objective_is_projector_scaled() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]);
        let obs = build_objective(&s, 3).unwrap();
        assert!((obs.a[(0, 0)].re).abs() < 1e-15);
        assert!((obs.a[(1, 1)].re - 0.875).abs() < 1e-15);
        assert!(obs.a[(0, 1)].norm() < 1e-15);
        assert!((obs.lambda_max() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn diag_objective_null_vector() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 2.0]], &[0.0, 1.0]);
        let a0 = unscaled_objective(s.matrix(), &s.b_state()).unwrap();
        assert!((a0[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(a0[(1, 1)].norm() < 1e-15);
        let obs = build_objective(&s, 3).unwrap();
        let y = obs.null_vector();
        assert!(y[0].norm() < 1e-15 && (y[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn objective_rejects_zero_pointer_qubits() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]);
        assert!(build_objective(&s, 0).is_err());
    }

    #[test]
    fn pointer_qubit_rule() {
        assert_eq!(required_pointer_qubits(1.0, 0), 1);
        assert_eq!(required_pointer_qubits(4.0, 0), 4);
        assert_eq!(required_pointer_qubits(10.0, 2), 9);
        assert_eq!(required_pointer_qubits(8.0, 0), 6);
    }

    #[test]
    fn reconstruct_simple_cases() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[3.0, 0.0]);
        let y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let rec = reconstruct_solution(&y, &s).unwrap();
        assert!((rec.z - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert_eq!(rec.x, vec![3.0, 0.0]);

        let s = sys(&[vec![1.0, 0.0], vec![0.0, 2.0]], &[0.0, 1.0]);
        let y = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let rec = reconstruct_solution(&y, &s).unwrap();
        assert!((rec.z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(rec.x, vec![0.0, 0.5]);
        assert!(rec.relative_residual < 1e-15);
    }

    #[test]
    fn reconstruct_rejects_orthogonal_state() {
        let s = sys(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]);
        let y = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(reconstruct_solution(&y, &s), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn reconstruct_is_phase_invariant() {
        let s = random_instance(3, 4, 50.0).unwrap();
        let y = s.solution_ray().unwrap();
        let base = reconstruct_solution(&y, &s).unwrap();
        let rotated: Vec<Complex64> = y.iter().map(|v| v * Complex64::from_polar(1.0, 1.234)).collect();
        let rec = reconstruct_solution(&rotated, &s).unwrap();
        for (a, b) in base.x.iter().zip(&rec.x) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(rec.imag_magnitude < 1e-10);
    }

    #[test]
    fn system_validation() {
        assert!(LinearSystem::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).is_err());
        assert!(LinearSystem::from_rows(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]], vec![1.0; 3]).is_err());
        assert!(matches!(
            LinearSystem::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 0.0]),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn random_instance_is_deterministic_and_symmetric() {
        let a = random_instance(4, 17, 100.0).unwrap();
        let b = random_instance(4, 17, 100.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 16);
        assert!(a.kappa() <= 100.0);
        let m = a.matrix();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }

    #[test]
    fn generation_failure_is_reported() {
        // κ < 1 is unattainable
        assert!(matches!(
            random_instance(2, 1, 0.5),
            Err(Error::GenerationFailure { attempts: 1000 })
        ));
    }

    #[test]
    fn conditioned_instance_hits_target_kappa() {
        let s = instance_with_condition(4, 3, 8.0).unwrap();
        assert!((s.kappa() - 8.0).abs() < 1e-8);
    }

    #[test]
    fn json_round_trip() {
        let s = random_instance(2, 5, 100.0).unwrap();
        let back = LinearSystem::from_json(&s.to_json()).unwrap();
        assert_eq!(back.matrix(), s.matrix());
        assert_eq!(back.b(), s.b());
        assert_eq!(back.seed(), Some(5));
    }

    #[test]
    fn resolution_warning_triggers() {
        let s = instance_with_condition(2, 1, 8.0).unwrap();
        assert!(build_objective(&s, 3).unwrap().resolution_warning().is_some());
        assert!(build_objective(&s, 8).unwrap().resolution_warning().is_none());
    }
}
