//! The layered rotation ansatz and a small statevector simulator for it.
//!
//! Qubit `q` is bit `q` of the basis index. One module on `n ≥ 2` qubits is
//!
//! 1. an Euler layer: `R_z` on every qubit, then `R_y` on every qubit, then `R_z`
//!    on every qubit (`3n` angles);
//! 2. an entangling ring: for `c = 0..n` with `t = (c + 1) mod n`
//!    `CX(c→t) · [R_z(c), R_y(t)] · CX(t→c) · R_y(t) · CX(c→t)` (`3n` angles);
//! 3. a second Euler layer (`3n` angles).
//!
//! For `n = 4` this is 36 angles per module. A single qubit has no ring, so its
//! module is just the two Euler layers (6 angles).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Rz { qubit: usize, param: usize },
    Cx { control: usize, target: usize },
}

/// Number of rotation angles in one module on `n` qubits.
pub fn angles_per_module(n_qubits: usize) -> usize {
    if n_qubits >= 2 {
        9 * n_qubits
    } else {
        6 * n_qubits
    }
}

/// Gate sequence of `k` modules on `n` qubits, with parameter slots numbered
/// in application order.
pub fn circuit(n_qubits: usize, k_modules: usize) -> Vec<Gate> {
    let mut gates = Vec::new();
    let mut next = 0usize;
    let mut slot = || {
        next += 1;
        next - 1
    };
    for _ in 0..k_modules {
        euler_layer(n_qubits, &mut gates, &mut slot);
        if n_qubits >= 2 {
            for c in 0..n_qubits {
                let t = (c + 1) % n_qubits;
                gates.push(Gate::Cx { control: c, target: t });
                gates.push(Gate::Rz { qubit: c, param: slot() });
                gates.push(Gate::Ry { qubit: t, param: slot() });
                gates.push(Gate::Cx { control: t, target: c });
                gates.push(Gate::Ry { qubit: t, param: slot() });
                gates.push(Gate::Cx { control: c, target: t });
            }
        }
        euler_layer(n_qubits, &mut gates, &mut slot);
    }
    gates
}

fn euler_layer(n: usize, gates: &mut Vec<Gate>, slot: &mut impl FnMut() -> usize) {
    for q in 0..n {
        gates.push(Gate::Rz { qubit: q, param: slot() });
    }
    for q in 0..n {
        gates.push(Gate::Ry { qubit: q, param: slot() });
    }
    for q in 0..n {
        gates.push(Gate::Rz { qubit: q, param: slot() });
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParameters {
    #[serde(rename = "n")]
    pub n_qubits: usize,
    #[serde(rename = "k")]
    pub k_modules: usize,
    pub angles: Vec<f64>,
}

impl AnsatzParameters {
    pub fn new(n_qubits: usize, k_modules: usize, angles: Vec<f64>) -> Result<Self> {
        let params = Self {
            n_qubits,
            k_modules,
            angles,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn zeros(n_qubits: usize, k_modules: usize) -> Self {
        Self {
            n_qubits,
            k_modules,
            angles: vec![0.0; angles_per_module(n_qubits) * k_modules],
        }
    }

    /// Angles drawn uniformly from `(-π, π]`.
    pub fn random(n_qubits: usize, k_modules: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let len = angles_per_module(n_qubits) * k_modules;
        Self {
            n_qubits,
            k_modules,
            angles: (0..len).map(|_| PI - rng.random_range(0.0..2.0 * PI)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.k_modules == 0 {
            return Err(invalid("ansatz needs n ≥ 1 and k ≥ 1"));
        }
        let want = angles_per_module(self.n_qubits) * self.k_modules;
        if self.angles.len() != want {
            return Err(invalid(format!(
                "expected {want} angles for n = {}, k = {}, got {}",
                self.n_qubits,
                self.k_modules,
                self.angles.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Copy with every angle in `(-π, π]`.
    pub fn reduced(&self) -> Self {
        Self {
            angles: self.angles.iter().map(|&a| wrap_angle(a)).collect(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.reduced()).expect("parameters serialize")
    }
}

/// Normalized `n`-qubit state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Wraps the amplitudes after normalizing them.
    pub fn from_amplitudes(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(invalid("state length must be a power of two"));
        }
        let nrm = linalg::norm(&amplitudes);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(invalid("state has zero or non-finite norm"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= nrm);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    fn apply_1q(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (0.5 * theta).sin_cos();
        let c = Complex64::new(c, 0.0);
        let s = Complex64::new(s, 0.0);
        self.apply_1q(qubit, [[c, -s], [s, c]]);
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let bit = 1usize << qubit;
        let lo = Complex64::from_polar(1.0, -0.5 * theta);
        let hi = Complex64::from_polar(1.0, 0.5 * theta);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & bit == 0 { lo } else { hi };
        }
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) {
        let cb = 1usize << control;
        let tb = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amplitudes.swap(i, i | tb);
            }
        }
    }
}

/// `V(θ)|0…0⟩` for the ansatz described in the module docs.
pub fn prepare_state(params: &AnsatzParameters) -> Result<StateVector> {
    params.validate()?;
    Ok(run_circuit(
        &circuit(params.n_qubits, params.k_modules),
        params.n_qubits,
        &params.angles,
    ))
}

/// Applies a prebuilt gate list; `angles` must cover every parameter slot.
pub fn run_circuit(gates: &[Gate], n_qubits: usize, angles: &[f64]) -> StateVector {
    let mut state = StateVector::zero_state(n_qubits);
    for gate in gates {
        match *gate {
            Gate::Ry { qubit, param } => state.apply_ry(qubit, angles[param]),
            Gate::Rz { qubit, param } => state.apply_rz(qubit, angles[param]),
            Gate::Cx { control, target } => state.apply_cx(control, target),
        }
    }
    state
}

/// `⟨φ|ψ⟩`.
pub fn state_overlap(psi: &StateVector, phi: &StateVector) -> Result<Complex64> {
    if psi.dim() != phi.dim() {
        return Err(invalid("states have different dimensions"));
    }
    Ok(linalg::inner(phi.amplitudes(), psi.amplitudes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;

    const C0: Complex64 = Complex64::new(0.0, 0.0);
    const C1: Complex64 = Complex64::new(1.0, 0.0);

    fn kron_1q(n: usize, qubit: usize, g: [[Complex64; 2]; 2]) -> ComplexMatrix {
        ComplexMatrix::from_fn(1 << n, 1 << n, |r, c| {
            let others = !(1usize << qubit);
            if r & others != c & others {
                return C0;
            }
            g[(r >> qubit) & 1][(c >> qubit) & 1]
        })
    }

    fn dense_gate(n: usize, gate: Gate, angles: &[f64]) -> ComplexMatrix {
        match gate {
            Gate::Ry { qubit, param } => {
                let (s, c) = (angles[param] / 2.0).sin_cos();
                let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
                kron_1q(n, qubit, [[c, -s], [s, c]])
            }
            Gate::Rz { qubit, param } => {
                let t = angles[param] / 2.0;
                kron_1q(n, qubit, [[Complex64::from_polar(1.0, -t), C0], [C0, Complex64::from_polar(1.0, t)]])
            }
            Gate::Cx { control, target } => ComplexMatrix::from_fn(1 << n, 1 << n, |r, c| {
                let image = if c >> control & 1 == 1 { c ^ (1 << target) } else { c };
                if r == image {
                    C1
                } else {
                    C0
                }
            }),
        }
    }

    #[test]
    fn module_has_36_angles_on_four_qubits() {
        assert_eq!(angles_per_module(4), 36);
        assert_eq!(AnsatzParameters::zeros(4, 3).len(), 108);
        let gates = circuit(4, 1);
        let params: Vec<usize> = gates
            .iter()
            .filter_map(|g| match g {
                Gate::Ry { param, .. } | Gate::Rz { param, .. } => Some(*param),
                Gate::Cx { .. } => None,
            })
            .collect();
        assert_eq!(params, (0..36).collect::<Vec<_>>());
        assert_eq!(gates.iter().filter(|g| matches!(g, Gate::Cx { .. })).count(), 12);
    }

    #[test]
    fn zero_angles_give_zero_state() {
        let psi = prepare_state(&AnsatzParameters::zeros(4, 1)).unwrap();
        assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_qubit_flip() {
        let params = AnsatzParameters::new(1, 1, vec![0.0, PI, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let psi = prepare_state(&params).unwrap();
        assert!(psi.amplitudes()[0].norm() < 1e-15);
        assert!((psi.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_unitary_product() {
        let params = AnsatzParameters::random(4, 3, 42);
        let psi = prepare_state(&params).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let mut u = ComplexMatrix::identity(16);
        for g in circuit(4, 3) {
            u = dense_gate(4, g, &params.angles).matmul(&u).unwrap();
        }
        let want = u.column(0);
        for (a, b) in psi.amplitudes().iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(AnsatzParameters::new(4, 1, vec![0.0; 35]).is_err());
        let bad = AnsatzParameters {
            n_qubits: 2,
            k_modules: 1,
            angles: vec![0.0; 3],
        };
        assert!(prepare_state(&bad).is_err());
    }

    #[test]
    fn overlap_examples() {
        let zero = StateVector::zero_state(1);
        let one = StateVector::from_amplitudes(vec![C0, C1]).unwrap();
        let plus = StateVector::from_amplitudes(vec![C1, C1]).unwrap();
        assert!((state_overlap(&zero, &zero).unwrap() - C1).norm() < 1e-15);
        assert!(state_overlap(&one, &zero).unwrap().norm() < 1e-15);
        assert!((state_overlap(&plus, &zero).unwrap().re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(state_overlap(&zero, &StateVector::zero_state(2)).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        let p = AnsatzParameters::random(2, 2, 1);
        assert!(p.angles.iter().all(|a| *a > -PI && *a <= PI));
    }

    #[test]
    fn parameters_json_shape() {
        let p = AnsatzParameters::zeros(2, 1);
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["k"], 1);
        assert_eq!(v["angles"].as_array().unwrap().len(), 18);
    }
}
