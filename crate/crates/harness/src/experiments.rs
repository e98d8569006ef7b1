//! Experiment drivers behind the CLI subcommands.
//!
//! Seeding: replica `r` of a run uses instance seed `seed + r`; its initial
//! angles and shot noise come from `derive_seed(instance_seed, INIT_STREAM)`
//! and `derive_seed(instance_seed, OPTIMIZER_STREAM)`. Every replica is
//! therefore reproducible on its own, whatever thread runs it.

use std::fs;

use mta_core::ansatz::{AnsatzParameters, StateVector};
use mta_core::linalg::{self, classical_solve};
use mta_core::measurement::{sample_zero_frequency, PointerConfig, PointerDistribution, ZeroOutcomeMeter};
use mta_core::optimizer::{
    asymptotic_fidelity, fit_exponential_rise, inferred_a, optimize, ExponentialFit, Merit, OptimizeOutcome,
    OptimizerTrace,
};
use mta_core::problem::{
    build_objective, objective_from_operator, random_instance, reconstruct_solution, LinearSystem,
};
use mta_core::rng::{derive_seed, rng_from_seed};
use mta_core::vqls_baseline::{estimate_mta_sigma, estimate_vqls_cost_sigma, random_pauli_matrix};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{io_err, HarnessError, Result};
use crate::stats;

pub const INIT_STREAM: u64 = 1;
pub const OPTIMIZER_STREAM: u64 = 2;

/// Attempts per slot before the Pauli sweep gives up on drawing a usable matrix.
const MAX_MATRIX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub x: Vec<f64>,
    pub z_re: f64,
    pub z_im: f64,
    pub relative_residual: f64,
    pub imag_magnitude: f64,
    pub classical_x: Vec<f64>,
    /// `‖x − x_classical‖ / ‖x_classical‖`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub instance_seed: u64,
    pub n_shots: u64,
    pub kappa: f64,
    pub m_qubits: usize,
    pub resolution_warning: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    pub escalated_at: Option<usize>,
    pub final_fidelity: f64,
    pub asymptotic_fidelity: f64,
    pub inferred_a: f64,
    pub solution: Option<SolutionSummary>,
    /// Why `solution` is missing.
    pub solution_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub summary: ReplicaSummary,
    pub outcome: OptimizeOutcome,
    pub system: LinearSystem,
}

/// Replica-mean curves; shorter traces are padded with their final value.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AggregateCurves {
    pub mean_fidelity: Vec<f64>,
    pub mean_rel_freq: Vec<f64>,
    /// `padded[t]` is set when some replica had already stopped at step `t`.
    pub padded: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_shots: u64,
    pub asymptotic_fidelity: f64,
    pub heisenberg_reference: f64,
    pub inferred_a: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig5Row {
    pub p0: f64,
    pub n_shots: u64,
    pub repetitions: usize,
    pub mean_r: f64,
    pub sigma: f64,
    pub sigma_theory: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceRow {
    pub n_pauli_terms: usize,
    /// `None` marks the per-count median row.
    pub matrix: Option<usize>,
    pub matrix_seed: Option<u64>,
    pub sigma_rel_mta: f64,
    pub sigma_rel_vqls: f64,
    pub mean_p0: f64,
    pub mean_cost: f64,
    pub repetitions: usize,
    pub shot_budget: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceTrend {
    /// Spearman ρ of the per-count medians against T.
    pub median_rho_mta: f64,
    pub median_rho_vqls: f64,
    /// Spearman ρ over every (T, matrix) point.
    pub pooled_rho_mta: f64,
    pub pooled_rho_vqls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub replicas: Vec<ReplicaSummary>,
    pub aggregate: Option<AggregateCurves>,
    pub fit: Option<ExponentialFit>,
    pub fit_error: Option<String>,
    pub asymptotic_fidelity: Option<f64>,
    pub inferred_a: Option<f64>,
    pub solution: Option<SolutionSummary>,
    pub converged: bool,
    pub scaling: Vec<ScalingRow>,
    pub fig5: Vec<Fig5Row>,
    pub variance: Vec<VarianceRow>,
    pub variance_trend: Option<VarianceTrend>,
    /// Per-replica traces, written to `trace.csv` rather than the JSON report.
    #[serde(skip)]
    pub traces: Vec<OptimizerTrace>,
}

impl ExperimentReport {
    fn empty(cfg: &ExperimentConfig) -> Self {
        let mut config = cfg.clone();
        config.out_dir = None;
        Self {
            mode: cfg.mode,
            config,
            replicas: Vec::new(),
            aggregate: None,
            fit: None,
            fit_error: None,
            asymptotic_fidelity: None,
            inferred_a: None,
            solution: None,
            converged: false,
            scaling: Vec::new(),
            fig5: Vec::new(),
            variance: Vec::new(),
            variance_trend: None,
            traces: Vec::new(),
        }
    }
}

/// Loads the CSV pair from the config, or generates the seeded instance.
pub fn load_system(cfg: &ExperimentConfig, instance_seed: u64) -> Result<LinearSystem> {
    match (&cfg.matrix, &cfg.rhs) {
        (Some(m), Some(b)) => {
            let mt = fs::read_to_string(m).map_err(io_err(m))?;
            let bt = fs::read_to_string(b).map_err(io_err(b))?;
            Ok(LinearSystem::from_csv(&mt, &bt)?)
        }
        (None, None) => Ok(random_instance(cfg.n_qubits, instance_seed, cfg.kappa_max)?),
        _ => Err(HarnessError::Usage("--matrix and --rhs must be given together".into())),
    }
}

fn vec_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn solution_summary(psi: &StateVector, system: &LinearSystem) -> std::result::Result<SolutionSummary, String> {
    let rec = reconstruct_solution(psi.amplitudes(), system).map_err(|e| e.to_string())?;
    let classical = classical_solve(system).map_err(|e| e.to_string())?;
    let xn = classical.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(SolutionSummary {
        relative_error: vec_distance(&rec.x, &classical) / xn,
        x: rec.x,
        z_re: rec.z.re,
        z_im: rec.z.im,
        relative_residual: rec.relative_residual,
        imag_magnitude: rec.imag_magnitude,
        classical_x: classical,
    })
}

/// Optimizes one replica of `system` with the given initial shot count.
pub fn run_replica_on(
    cfg: &ExperimentConfig,
    system: LinearSystem,
    replica: usize,
    instance_seed: u64,
    n_shots: u64,
    fixed_shots: bool,
) -> Result<ReplicaRun> {
    let m = cfg.m_qubits.resolve(system.kappa(), cfg.guard_qubits);
    let obs = build_objective(&system, m)?;
    let warning = obs.resolution_warning();
    if let Some(w) = &warning {
        log::warn!("replica {replica}: {w}");
    }
    let meter = ZeroOutcomeMeter::new(&obs, PointerConfig::new(m)?, cfg.backend)?;
    let params0 = AnsatzParameters::random(
        system.n_qubits(),
        cfg.k_modules,
        derive_seed(instance_seed, INIT_STREAM),
    );
    let mut schedule = cfg.schedule_for(n_shots);
    if fixed_shots {
        schedule.shots_escalated = n_shots;
    }
    let outcome = optimize(
        &meter,
        &params0,
        &schedule,
        Merit::Shots,
        derive_seed(instance_seed, OPTIMIZER_STREAM),
    )?;
    let asymptotic = asymptotic_fidelity(&outcome.trace.iterations).unwrap_or(f64::NAN);
    let final_shots = outcome.trace.iterations.last().map_or(n_shots, |r| r.n_shots);
    let (solution, solution_error) = match solution_summary(&outcome.final_state()?, &system) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e)),
    };
    let summary = ReplicaSummary {
        replica,
        instance_seed,
        n_shots,
        kappa: system.kappa(),
        m_qubits: m,
        resolution_warning: warning,
        iterations: outcome.trace.len(),
        converged: outcome.converged,
        escalated_at: outcome.escalated_at,
        final_fidelity: outcome.trace.final_fidelity().unwrap_or(f64::NAN),
        asymptotic_fidelity: asymptotic,
        inferred_a: inferred_a(final_shots, asymptotic),
        solution,
        solution_error,
    };
    Ok(ReplicaRun {
        summary,
        outcome,
        system,
    })
}

pub fn run_replica(cfg: &ExperimentConfig, replica: usize, n_shots: u64, fixed_shots: bool) -> Result<ReplicaRun> {
    let instance_seed = cfg.seed.wrapping_add(replica as u64);
    let system = load_system(cfg, instance_seed)?;
    run_replica_on(cfg, system, replica, instance_seed, n_shots, fixed_shots)
}

fn run_replicas(cfg: &ExperimentConfig, n_shots: u64, fixed_shots: bool) -> Result<Vec<ReplicaRun>> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r, n_shots, fixed_shots))
        .collect()
}

pub fn aggregate(traces: &[OptimizerTrace]) -> AggregateCurves {
    let len = traces.iter().map(OptimizerTrace::len).max().unwrap_or(0);
    let mut out = AggregateCurves::default();
    let live: Vec<&OptimizerTrace> = traces.iter().filter(|t| !t.is_empty()).collect();
    for t in 0..len {
        let (mut f, mut r, mut padded) = (0.0, 0.0, false);
        for tr in &live {
            let rec = tr.iterations.get(t).unwrap_or_else(|| {
                padded = true;
                tr.iterations.last().unwrap()
            });
            f += rec.exact_fidelity;
            r += rec.rel_freq;
        }
        let n = live.len() as f64;
        out.mean_fidelity.push(f / n);
        out.mean_rel_freq.push(r / n);
        out.padded.push(padded);
    }
    out
}

/// Fits `1 − e^{−γt}` to a replica-mean fidelity curve (`t` starts at 1).
pub fn fit_curve(mean_fidelity: &[f64]) -> mta_core::Result<ExponentialFit> {
    let pts: Vec<(f64, f64)> = mean_fidelity
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64, f))
        .collect();
    fit_exponential_rise(&pts)
}

fn fill_from_runs(report: &mut ExperimentReport, runs: Vec<ReplicaRun>) {
    report.converged = runs.iter().all(|r| r.summary.converged);
    let asym: Vec<f64> = runs.iter().map(|r| r.summary.asymptotic_fidelity).collect();
    let shots = runs.first().map_or(0, |r| r.outcome.trace.iterations.last().map_or(0, |x| x.n_shots));
    let f = stats::mean(&asym);
    report.asymptotic_fidelity = Some(f);
    report.inferred_a = Some(inferred_a(shots, f));
    for run in runs {
        report.replicas.push(run.summary);
        report.traces.push(run.outcome.trace);
    }
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    let runs = run_replicas(cfg, cfg.shots, false)?;
    fill_from_runs(&mut report, runs);
    report.solution = report.replicas[0].solution.clone();
    if !report.converged {
        log::warn!(
            "optimizer stopped at the iteration limit without meeting the termination rule (final F_T = {:.6})",
            report.replicas[0].final_fidelity
        );
    }
    Ok(report)
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    let runs = run_replicas(cfg, cfg.shots, false)?;
    fill_from_runs(&mut report, runs);
    let agg = aggregate(&report.traces);
    match fit_curve(&agg.mean_fidelity) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    report.aggregate = Some(agg);
    Ok(report)
}

/// One row per shot count: fixed-N runs to `max_iterations`, asymptotic F_T
/// averaged over replicas, and the `1 − 4/N` reference.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    let jobs: Vec<(u64, usize)> = cfg
        .shot_list
        .iter()
        .flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r)))
        .collect();
    let runs: Vec<ReplicaRun> = jobs
        .par_iter()
        .map(|&(n, r)| run_replica(cfg, r, n, true))
        .collect::<Result<_>>()?;
    for &n in &cfg.shot_list {
        let f: Vec<f64> = runs
            .iter()
            .filter(|r| r.summary.n_shots == n)
            .map(|r| r.summary.asymptotic_fidelity)
            .collect();
        let mean_f = stats::mean(&f);
        report.scaling.push(ScalingRow {
            n_shots: n,
            asymptotic_fidelity: mean_f,
            heisenberg_reference: 1.0 - 4.0 / n as f64,
            inferred_a: inferred_a(n, mean_f),
            replicas: f.len(),
        });
    }
    report.converged = runs.iter().all(|r| r.summary.converged);
    for run in runs {
        report.replicas.push(run.summary);
        report.traces.push(run.outcome.trace);
    }
    Ok(report)
}

/// Empirical spread of `r` for synthetic two-outcome pointers.
pub fn run_fig5(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    let n = cfg.shots;
    let reps = cfg.fig5.repetitions;
    report.fig5 = cfg
        .fig5
        .p0
        .par_iter()
        .enumerate()
        .map(|(i, &p0)| {
            let dist = PointerDistribution::two_outcome(p0)?;
            let base = derive_seed(cfg.seed, i as u64);
            let r: Vec<f64> = (0..reps)
                .map(|k| sample_zero_frequency(&dist, n, derive_seed(base, k as u64)).rel_freq)
                .collect();
            Ok(Fig5Row {
                p0,
                n_shots: n,
                repetitions: reps,
                mean_r: stats::mean(&r),
                sigma: stats::std_dev(&r),
                sigma_theory: (p0 * (1.0 - p0) / n as f64).sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    report.converged = true;
    Ok(report)
}

/// A random Pauli matrix with a usable objective, its right-hand side and
/// the probe state `(y + y⊥)/√2`.
struct PauliCase {
    seed: u64,
    matrix: linalg::ComplexMatrix,
    b: Vec<Complex64>,
    m_qubits: usize,
    psi: StateVector,
}

fn pauli_case(cfg: &ExperimentConfig, n_terms: usize, slot: usize) -> Result<PauliCase> {
    let n = cfg.variance.n_qubits;
    let dim = 1usize << n;
    let base = derive_seed(cfg.seed, n_terms as u64);
    for attempt in 0..MAX_MATRIX_ATTEMPTS {
        let seed = derive_seed(base, (slot as u64) << 20 | attempt);
        let matrix = random_pauli_matrix(n, n_terms, seed)?;
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        let b: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..=1.0), 0.0)).collect();
        let bn = linalg::norm(&b);
        if bn < 1e-6 {
            continue;
        }
        let b_hat: Vec<Complex64> = b.iter().map(|v| v / bn).collect();
        let Ok(kappa) = linalg::condition_number(&matrix) else { continue };
        let m = cfg.m_qubits.resolve(kappa, cfg.guard_qubits);
        if m > 30 {
            continue;
        }
        let Ok(obs) = objective_from_operator(&matrix, &b_hat, m) else { continue };
        let y = obs.null_vector();
        let mut w: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect();
        let ov = linalg::inner(&y, &w);
        w.iter_mut().zip(&y).for_each(|(wi, yi)| *wi -= ov * yi);
        let wn = linalg::norm(&w);
        if wn < 1e-6 {
            continue;
        }
        let psi = StateVector::from_amplitudes(y.iter().zip(&w).map(|(a, c)| a + c / wn).collect())?;
        return Ok(PauliCase {
            seed,
            matrix,
            b,
            m_qubits: m,
            psi,
        });
    }
    Err(mta_core::Error::GenerationFailure {
        attempts: MAX_MATRIX_ATTEMPTS as usize,
    }
    .into())
}

/// Estimator spreads of both methods for random Pauli matrices, one row per
/// (T, matrix) and a median row per T.
pub fn run_variance_compare(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::empty(cfg);
    let v = &cfg.variance;
    let jobs: Vec<(usize, usize)> = v
        .pauli_terms
        .iter()
        .flat_map(|&t| (0..v.matrices_per_count).map(move |j| (t, j)))
        .collect();
    let rows: Vec<VarianceRow> = jobs
        .par_iter()
        .map(|&(t, j)| {
            let case = pauli_case(cfg, t, j)?;
            let dim = case.b.len();
            let b_hat: Vec<Complex64> = case.b.iter().map(|x| x / linalg::norm(&case.b)).collect();
            let obs = objective_from_operator(&case.matrix, &b_hat, case.m_qubits)?;
            debug_assert_eq!(obs.dim(), dim);
            let meter = ZeroOutcomeMeter::new(&obs, PointerConfig::new(case.m_qubits)?, cfg.backend)?;
            let mta = estimate_mta_sigma(&meter, &case.psi, v.shot_budget, v.repetitions, derive_seed(case.seed, 2))?;
            let vqls = estimate_vqls_cost_sigma(
                &case.matrix,
                &case.b,
                &case.psi,
                v.shot_budget,
                v.repetitions,
                derive_seed(case.seed, 3),
            )?;
            Ok(VarianceRow {
                n_pauli_terms: t,
                matrix: Some(j),
                matrix_seed: Some(case.seed),
                sigma_rel_mta: mta.sigma_rel,
                sigma_rel_vqls: vqls.sigma_rel,
                mean_p0: mta.mean,
                mean_cost: vqls.mean,
                repetitions: v.repetitions,
                shot_budget: v.shot_budget,
            })
        })
        .collect::<Result<_>>()?;

    let mut medians = Vec::new();
    for &t in &v.pauli_terms {
        let group: Vec<&VarianceRow> = rows.iter().filter(|r| r.n_pauli_terms == t).collect();
        let pick = |f: fn(&VarianceRow) -> f64| stats::median(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
        report.variance.extend(group.iter().map(|r| **r));
        let med = VarianceRow {
            n_pauli_terms: t,
            matrix: None,
            matrix_seed: None,
            sigma_rel_mta: pick(|r| r.sigma_rel_mta),
            sigma_rel_vqls: pick(|r| r.sigma_rel_vqls),
            mean_p0: pick(|r| r.mean_p0),
            mean_cost: pick(|r| r.mean_cost),
            repetitions: v.repetitions,
            shot_budget: v.shot_budget,
        };
        report.variance.push(med);
        medians.push(med);
    }
    let tm: Vec<f64> = medians.iter().map(|r| r.n_pauli_terms as f64).collect();
    let tp: Vec<f64> = rows.iter().map(|r| r.n_pauli_terms as f64).collect();
    let col = |rs: &[VarianceRow], f: fn(&VarianceRow) -> f64| rs.iter().map(f).collect::<Vec<_>>();
    report.variance_trend = Some(VarianceTrend {
        median_rho_mta: stats::spearman(&tm, &col(&medians, |r| r.sigma_rel_mta)),
        median_rho_vqls: stats::spearman(&tm, &col(&medians, |r| r.sigma_rel_vqls)),
        pooled_rho_mta: stats::spearman(&tp, &col(&rows, |r| r.sigma_rel_mta)),
        pooled_rho_vqls: stats::spearman(&tp, &col(&rows, |r| r.sigma_rel_vqls)),
    });
    report.converged = true;
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.mode {
        Mode::Solve => run_solve(cfg),
        Mode::Convergence => run_convergence(cfg),
        Mode::Scaling => run_scaling(cfg),
        Mode::Fig5 => run_fig5(cfg),
        Mode::VarianceCompare => run_variance_compare(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mta_core::optimizer::IterationRecord;

    fn trace(f: &[f64]) -> OptimizerTrace {
        OptimizerTrace {
            iterations: f
                .iter()
                .enumerate()
                .map(|(i, &v)| IterationRecord {
                    iter: i + 1,
                    param_index: 0,
                    rel_freq: v,
                    exact_fidelity: v,
                    n_shots: 10,
                })
                .collect(),
        }
    }

    #[test]
    fn aggregate_pads_with_final_value() {
        let agg = aggregate(&[trace(&[0.2, 0.4, 0.6]), trace(&[0.0, 1.0])]);
        assert_eq!(agg.mean_fidelity, vec![0.1, 0.7, 0.8]);
        assert_eq!(agg.padded, vec![false, false, true]);
    }

    #[test]
    fn fig5_matches_binomial_spread() {
        let mut cfg = ExperimentConfig {
            mode: Mode::Fig5,
            ..Default::default()
        };
        cfg.fig5.p0 = vec![0.5];
        let rep = run_fig5(&cfg).unwrap();
        let row = rep.fig5[0];
        assert!((row.sigma / 0.0158 - 1.0).abs() < 0.15);
    }
}
