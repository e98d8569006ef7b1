use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mta_core::measurement::Backend;
use mta_harness::config::{ExperimentConfig, Mode, PointerQubits};
use mta_harness::error::{io_err, Result};
use mta_harness::experiments::{self, ExperimentReport};
use mta_harness::output;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "mta", version, about = "Measurement-test variational linear solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one system and reconstruct x.
    Solve(RunArgs),
    /// Replica-averaged convergence curves and an exponential-rise fit.
    Convergence(RunArgs),
    /// Asymptotic fidelity against shot count.
    Scaling(RunArgs),
    /// Spread of the zero-outcome estimator for synthetic probabilities.
    Fig5(RunArgs),
    /// Estimator spread against the number of Pauli strings, compared with VQLS.
    VarianceCompare(RunArgs),
    /// Write a seeded instance as JSON and as a CSV pair.
    GenInstance(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, requires = "rhs")]
    matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of system qubits (the matrix is 2^n x 2^n).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    shots: Option<u64>,
    /// Comma separated shot counts for `scaling`.
    #[arg(long, value_delimiter = ',')]
    shot_list: Option<Vec<u64>>,
    #[arg(long)]
    modules: Option<usize>,
    /// Pointer qubits, or `auto` for the condition-number rule.
    #[arg(long)]
    m_qubits: Option<PointerQubits>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory (default: $MTA_OUT_DIR, else ./mta-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self, mode: Mode) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p).map_err(io_err(p))?)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        if let (Some(m), Some(r)) = (self.matrix, self.rhs) {
            cfg.matrix = Some(m);
            cfg.rhs = Some(r);
        } else if self.n.is_some() {
            // A size on the command line asks for a generated instance, even
            // if the config file names matrix files.
            cfg.matrix = None;
            cfg.rhs = None;
        }
        macro_rules! set {
            ($flag:expr => $($field:tt)+) => {
                if let Some(v) = $flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(self.seed => seed);
        set!(self.n => n_qubits);
        set!(self.shots => shots);
        set!(self.shot_list => shot_list);
        set!(self.modules => k_modules);
        set!(self.m_qubits => m_qubits);
        set!(self.backend => backend);
        set!(self.max_iters => schedule.max_iterations);
        set!(self.replicas => replicas);
        if let Some(o) = self.out {
            cfg.out_dir = Some(o);
        }
        Ok(cfg)
    }
}

fn summarize(report: &ExperimentReport) {
    if let Some(s) = &report.solution {
        println!(
            "relative residual {:.3e}, relative error vs classical solve {:.3e}",
            s.relative_residual, s.relative_error
        );
    }
    if let (Some(f), Some(a)) = (report.asymptotic_fidelity, report.inferred_a) {
        println!("asymptotic F_T {f:.6}, inferred a {a:.3}");
    }
    if let Some(fit) = &report.fit {
        println!("fit gamma {:.5}, rms residual {:.4} over {} points", fit.gamma, fit.rms_residual, fit.points);
    }
    for row in &report.scaling {
        println!(
            "N = {:>7}: F_T {:.6} (1 - 4/N = {:.6}), a = {:.3}",
            row.n_shots, row.asymptotic_fidelity, row.heisenberg_reference, row.inferred_a
        );
    }
    if let Some(t) = &report.variance_trend {
        println!(
            "Spearman rho vs T: VQLS median {:.2} (pooled {:.2}), MTA median {:.2} (pooled {:.2})",
            t.median_rho_vqls, t.pooled_rho_vqls, t.median_rho_mta, t.pooled_rho_mta
        );
    }
}

fn execute(cli: Cli) -> Result<u8> {
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Some(Mode::Solve), a),
        Command::Convergence(a) => (Some(Mode::Convergence), a),
        Command::Scaling(a) => (Some(Mode::Scaling), a),
        Command::Fig5(a) => (Some(Mode::Fig5), a),
        Command::VarianceCompare(a) => (Some(Mode::VarianceCompare), a),
        Command::GenInstance(a) => (None, a),
    };
    let cfg = args.into_config(mode.unwrap_or_default())?;
    let dir = cfg.output_dir();
    let Some(mode) = mode else {
        let system = experiments::load_system(&cfg, cfg.seed)?;
        for p in output::write_instance(&dir, &system)? {
            println!("wrote {}", p.display());
        }
        return Ok(0);
    };
    let report = experiments::run(&cfg)?;
    for p in output::write_report(&dir, &report)? {
        println!("wrote {}", p.display());
    }
    summarize(&report);
    if mode == Mode::Solve && !report.converged {
        eprintln!(
            "not converged: termination rule unmet after {} iterations (see {})",
            report.replicas[0].iterations,
            dir.join("report.json").display()
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
