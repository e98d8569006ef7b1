//! Solves real linear systems `M x = b` by maximizing the probability of
//! reading the zero eigenvalue of `A = M†(I − |b̂⟩⟨b̂|)M` in a simulated
//! phase-estimation measurement, then reading `x` off the optimized state.
//!
//! Modules, bottom-up:
//!
//! * [`linalg`]: dense complex matrices, Hermitian eigensolver, `exp(2πiA)`.
//! * [`problem`]: systems, the objective observable, solution reconstruction.
//! * [`ansatz`]: the parameterized state-preparation circuit.
//! * [`measurement`]: pointer-register statistics and shot sampling.
//! * [`optimizer`]: Rotosolve with shot escalation and termination rules.
//! * [`vqls_baseline`]: Pauli decompositions and the per-term shot-noise model.

pub mod ansatz;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod optimizer;
pub mod problem;
pub mod rng;
pub mod vqls_baseline;

pub use error::{Error, Result};
