//! Artifact files. Everything written here is a pure function of the report,
//! so equal configs and seeds give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mta_core::problem::LinearSystem;

use crate::config::Mode;
use crate::error::{io_err, Result};
use crate::experiments::ExperimentReport;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("replica,iter,param_index,r,F_T,N\n");
    for (summary, trace) in report.replicas.iter().zip(&report.traces) {
        for r in &trace.iterations {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                summary.replica, r.iter, r.param_index, r.rel_freq, r.exact_fidelity, r.n_shots
            );
        }
    }
    s
}

pub fn aggregate_csv(report: &ExperimentReport) -> Option<String> {
    let agg = report.aggregate.as_ref()?;
    let mut s = String::from("iter,mean_F_T,mean_r,padded\n");
    for (t, ((f, r), p)) in agg.mean_fidelity.iter().zip(&agg.mean_rel_freq).zip(&agg.padded).enumerate() {
        let _ = writeln!(s, "{},{f},{r},{}", t + 1, u8::from(*p));
    }
    Some(s)
}

pub fn scaling_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("N,asymptotic_F_T,one_minus_4_over_N,a,replicas\n");
    for r in &report.scaling {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.n_shots, r.asymptotic_fidelity, r.heisenberg_reference, r.inferred_a, r.replicas
        );
    }
    s
}

pub fn fig5_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("p0,N,repetitions,mean_r,sigma,sigma_theory\n");
    for r in &report.fig5 {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.p0, r.n_shots, r.repetitions, r.mean_r, r.sigma, r.sigma_theory
        );
    }
    s
}

pub fn variance_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("T,matrix,matrix_seed,sigma_rel_mta,sigma_rel_vqls,mean_p0,mean_cost,repetitions,N_total\n");
    for r in &report.variance {
        let matrix = r.matrix.map_or_else(|| "median".to_string(), |m| m.to_string());
        let _ = writeln!(
            s,
            "{},{matrix},{},{},{},{},{},{},{}",
            r.n_pauli_terms,
            opt(r.matrix_seed),
            r.sigma_rel_mta,
            r.sigma_rel_vqls,
            r.mean_p0,
            r.mean_cost,
            r.repetitions,
            r.shot_budget
        );
    }
    s
}

fn write(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(io_err(&path))?;
    written.push(path);
    Ok(())
}

/// Writes the mode's artifacts into `dir` and returns their paths.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write(dir, "report.json", &(json + "\n"), &mut written)?;
    match report.mode {
        Mode::Solve => {
            write(dir, "trace.csv", &trace_csv(report), &mut written)?;
            let sol = serde_json::to_string_pretty(&report.solution).expect("solution serializes");
            write(dir, "solution.json", &(sol + "\n"), &mut written)?;
        }
        Mode::Convergence => {
            write(dir, "trace.csv", &trace_csv(report), &mut written)?;
            if let Some(a) = aggregate_csv(report) {
                write(dir, "aggregate.csv", &a, &mut written)?;
            }
        }
        Mode::Scaling => {
            write(dir, "trace.csv", &trace_csv(report), &mut written)?;
            write(dir, "scaling.csv", &scaling_csv(report), &mut written)?;
        }
        Mode::Fig5 => write(dir, "fig5.csv", &fig5_csv(report), &mut written)?,
        Mode::VarianceCompare => write(dir, "variance.csv", &variance_csv(report), &mut written)?,
    }
    Ok(written)
}

/// `instance.json` plus the CSV pair accepted by `--matrix/--rhs`.
pub fn write_instance(dir: &Path, system: &LinearSystem) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    write(dir, "instance.json", &(system.to_json() + "\n"), &mut written)?;
    write(dir, "matrix.csv", &system.matrix().to_csv_string(), &mut written)?;
    let rhs: String = system.b().iter().map(|v| format!("{v:?}\n")).collect();
    write(dir, "rhs.csv", &rhs, &mut written)?;
    Ok(written)
}
