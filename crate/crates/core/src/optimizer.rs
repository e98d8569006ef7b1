//! Rotosolve coordinate ascent on the shot-estimated zero-outcome probability.
//!
//! One iteration updates a single angle and consumes three fresh shot records
//! of `N` shots each (at `θ_d`, `θ_d + π/2`, `θ_d − π/2`). Parameters are
//! visited cyclically.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::ansatz::{self, wrap_angle, AnsatzParameters, StateVector};
use crate::error::{invalid, Error, Result};
use crate::measurement::{sample_zero_from_probability, ZeroOutcomeMeter};
use crate::rng::derive_seed;

/// Amplitude below which a coordinate is treated as flat.
pub const FLAT_EPS: f64 = 1e-12;

/// Fidelity above which a trace counts as saturated when fitting.
pub const SATURATION_LEVEL: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub param_index: usize,
    /// Relative frequency measured for the state entering the iteration.
    pub rel_freq: f64,
    /// Exact target fidelity after the update.
    pub exact_fidelity: f64,
    pub n_shots: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub iterations: Vec<IterationRecord>,
}

impl OptimizerTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.exact_fidelity).collect()
    }

    pub fn rel_freqs(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.rel_freq).collect()
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.exact_fidelity)
    }

    pub fn csv_header() -> &'static str {
        "iter,param_index,r,F_T,N"
    }

    pub fn csv_row(r: &IterationRecord) -> String {
        format!(
            "{},{},{},{},{}",
            r.iter, r.param_index, r.rel_freq, r.exact_fidelity, r.n_shots
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.len() + 1));
        out.push_str(Self::csv_header());
        out.push('\n');
        for r in &self.iterations {
            out.push_str(&Self::csv_row(r));
            out.push('\n');
        }
        out
    }
}

/// Mean exact fidelity over the final 10% of `records` (at least one record).
pub fn asymptotic_fidelity(records: &[IterationRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let tail = records.len().div_ceil(10);
    let slice = &records[records.len() - tail..];
    Some(slice.iter().map(|r| r.exact_fidelity).sum::<f64>() / slice.len() as f64)
}

/// `a = sqrt(N(1 − F)/F)`, inverting `F = N/(N + a²)`.
pub fn inferred_a(n_shots: u64, fidelity: f64) -> f64 {
    (n_shots as f64 * (1.0 - fidelity) / fidelity).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub shots_initial: u64,
    /// Shot count after a stall; equal to `shots_initial` disables escalation.
    pub shots_escalated: u64,
    pub escalate_after_stall: usize,
    pub max_iterations: usize,
    pub terminate_window: usize,
    pub terminate_threshold: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            shots_initial: 1000,
            shots_escalated: 100_000,
            escalate_after_stall: 1500,
            max_iterations: 10_000,
            terminate_window: 200,
            terminate_threshold: 0.5,
        }
    }
}

impl ScheduleConfig {
    /// Default schedule with a constant shot count.
    pub fn fixed(n_shots: u64) -> Self {
        Self {
            shots_initial: n_shots,
            shots_escalated: n_shots,
            ..Self::default()
        }
    }

    pub fn escalates(&self) -> bool {
        self.shots_escalated != self.shots_initial
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_initial == 0
            || self.shots_escalated == 0
            || self.escalate_after_stall == 0
            || self.max_iterations == 0
            || self.terminate_window == 0
        {
            return Err(invalid("schedule counts must be at least 1"));
        }
        if !(self.terminate_threshold > 0.0 && self.terminate_threshold <= 1.0) {
            return Err(invalid("terminate_threshold must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotosolveUpdate {
    pub theta: f64,
    /// Objective at `φ₀`, `φ₀ + π/2`, `φ₀ − π/2`.
    pub samples: [f64; 3],
    pub flat: bool,
}

/// One Rotosolve coordinate update from three evaluations of
/// `f(θ) = a + b·cos(θ − φ₀) + c·sin(θ − φ₀)`; the new angle is the analytic
/// maximizer `φ₀ + atan2(c, b)` in `(-π, π]`.
pub fn rotosolve_step<F>(phi0: f64, mut evaluate: F) -> Result<RotosolveUpdate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = evaluate(phi0)?;
    let fp = evaluate(phi0 + FRAC_PI_2)?;
    let fm = evaluate(phi0 - FRAC_PI_2)?;
    let a = 0.5 * (fp + fm);
    let b = f0 - a;
    let c = 0.5 * (fp - fm);
    let samples = [f0, fp, fm];
    if b.abs() < FLAT_EPS && c.abs() < FLAT_EPS {
        return Ok(RotosolveUpdate {
            theta: phi0,
            samples,
            flat: true,
        });
    }
    Ok(RotosolveUpdate {
        theta: wrap_angle(phi0 + c.atan2(b)),
        samples,
        flat: false,
    })
}

/// Which quantity Rotosolve maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Merit {
    /// Relative frequency `r = N₀/N` from simulated shots.
    #[default]
    Shots,
    /// The zero-outcome probability itself, no shot noise.
    NoiseFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub trace: OptimizerTrace,
    pub params: AnsatzParameters,
    pub converged: bool,
    /// First iteration run with the escalated shot count.
    pub escalated_at: Option<usize>,
}

impl OptimizeOutcome {
    pub fn final_state(&self) -> Result<StateVector> {
        ansatz::prepare_state(&self.params)
    }
}

/// Runs Rotosolve against the measurement in `meter`.
pub fn optimize(
    meter: &ZeroOutcomeMeter<'_>,
    params0: &AnsatzParameters,
    cfg: &ScheduleConfig,
    merit: Merit,
    seed: u64,
) -> Result<OptimizeOutcome> {
    if params0.n_qubits != meter.observable().dim().trailing_zeros() as usize {
        return Err(invalid("ansatz and observable act on different qubit counts"));
    }
    optimize_with(
        params0,
        cfg,
        seed,
        |psi, n_shots, eval_seed| {
            let p0 = meter.zero_probability(psi)?;
            Ok(match merit {
                Merit::Shots => sample_zero_from_probability(p0, n_shots, eval_seed).rel_freq,
                Merit::NoiseFree => p0,
            })
        },
        |psi| meter.target_fidelity(psi),
    )
}

/// Generic driver: `merit(ψ, N, seed)` is maximized, `fidelity(ψ)` is only logged.
pub fn optimize_with<M, F>(
    params0: &AnsatzParameters,
    cfg: &ScheduleConfig,
    seed: u64,
    mut merit: M,
    mut fidelity: F,
) -> Result<OptimizeOutcome>
where
    M: FnMut(&StateVector, u64, u64) -> Result<f64>,
    F: FnMut(&StateVector) -> Result<f64>,
{
    params0.validate()?;
    cfg.validate()?;
    let gates = ansatz::circuit(params0.n_qubits, params0.k_modules);
    let n = params0.n_qubits;
    let n_params = params0.len();
    let mut angles = params0.angles.clone();

    let mut shots = cfg.shots_initial;
    let mut escalated_at = None;
    let mut best_r = f64::NEG_INFINITY;
    let mut since_improvement = 0usize;
    let mut window: VecDeque<bool> = VecDeque::with_capacity(cfg.terminate_window);
    let mut ones_in_window = 0usize;
    let mut converged = false;
    let mut trace = OptimizerTrace {
        iterations: Vec::with_capacity(cfg.max_iterations.min(1 << 20)),
    };

    for t in 0..cfg.max_iterations {
        let d = t % n_params;
        let phi0 = angles[d];
        let mut j = 0u64;
        let update = rotosolve_step(phi0, |theta| {
            angles[d] = theta;
            let psi = ansatz::run_circuit(&gates, n, &angles);
            let eval_seed = derive_seed(seed, 3 * t as u64 + j);
            j += 1;
            merit(&psi, shots, eval_seed)
        })?;
        angles[d] = update.theta;
        let psi = ansatz::run_circuit(&gates, n, &angles);
        let f = fidelity(&psi)?;
        let r = update.samples[0];
        trace.iterations.push(IterationRecord {
            iter: t + 1,
            param_index: d,
            rel_freq: r,
            exact_fidelity: f,
            n_shots: shots,
        });

        if r > best_r {
            best_r = r;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }

        let hit = r >= 1.0;
        window.push_back(hit);
        ones_in_window += usize::from(hit);
        if window.len() > cfg.terminate_window {
            ones_in_window -= usize::from(window.pop_front().unwrap());
        }

        if cfg.escalates() && escalated_at.is_none() {
            if since_improvement >= cfg.escalate_after_stall {
                shots = cfg.shots_escalated;
                escalated_at = Some(t + 2);
                best_r = f64::NEG_INFINITY;
                since_improvement = 0;
                window.clear();
                ones_in_window = 0;
                log::debug!("escalating to {shots} shots after iteration {}", t + 1);
            }
            continue;
        }

        if window.len() == cfg.terminate_window
            && ones_in_window as f64 >= cfg.terminate_threshold * cfg.terminate_window as f64
        {
            converged = true;
            break;
        }
    }

    Ok(OptimizeOutcome {
        trace,
        params: AnsatzParameters {
            angles,
            ..params0.clone()
        },
        converged,
        escalated_at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub gamma: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Least-squares fit of `F(t) ≈ 1 − e^{−γt}` on the leading segment with
/// `F < 0.99`.
pub fn fit_exponential_rise(points: &[(f64, f64)]) -> Result<ExponentialFit> {
    let segment: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .take_while(|&(_, f)| f < SATURATION_LEVEL)
        .collect();
    if segment.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} pre-saturation points, need at least 10",
            segment.len()
        )));
    }
    let sse = |gamma: f64| -> f64 {
        segment
            .iter()
            .map(|&(t, f)| (f - 1.0 + (-gamma * t).exp()).powi(2))
            .sum()
    };

    // coarse log-grid, then golden section around the best cell
    let (lo_exp, hi_exp, steps) = (-8.0f64, 2.0f64, 400);
    let grid: Vec<f64> = (0..=steps)
        .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / steps as f64))
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| sse(grid[a]).total_cmp(&sse(grid[b])))
        .unwrap();
    let mut lo = grid[best.saturating_sub(1)].ln();
    let mut hi = grid[(best + 1).min(grid.len() - 1)].ln();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (sse(x1.exp()), sse(x2.exp()));
    for _ in 0..200 {
        if hi - lo < 1e-14 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = sse(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = sse(x2.exp());
        }
    }
    let mut gamma = (0.5 * (lo + hi)).exp();

    // Gauss–Newton polish
    for _ in 0..20 {
        let (mut num, mut den) = (0.0, 0.0);
        for &(t, f) in &segment {
            let e = (-gamma * t).exp();
            let r = f - 1.0 + e;
            let jac = -t * e;
            num += r * jac;
            den += jac * jac;
        }
        if den == 0.0 {
            break;
        }
        let step = num / den;
        let candidate = gamma - step;
        if candidate <= 0.0 || sse(candidate) > sse(gamma) {
            break;
        }
        gamma = candidate;
        if step.abs() <= 1e-15 * gamma {
            break;
        }
    }

    Ok(ExponentialFit {
        gamma,
        rms_residual: (sse(gamma) / segment.len() as f64).sqrt(),
        points: segment.len(),
    })
}

/// Fits the exact fidelity column of `trace` against the iteration number.
pub fn fit_trace(trace: &OptimizerTrace) -> Result<ExponentialFit> {
    let pts: Vec<(f64, f64)> = trace
        .iterations
        .iter()
        .map(|r| (r.iter as f64, r.exact_fidelity))
        .collect();
    fit_exponential_rise(&pts)
}
