//! Experiment configuration, loaded from TOML and overridden by CLI flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mta_core::measurement::Backend;
use mta_core::optimizer::ScheduleConfig;
use mta_core::problem::{DEFAULT_GUARD_QUBITS, DEFAULT_KAPPA_MAX};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MTA_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Solve,
    Convergence,
    Scaling,
    VarianceCompare,
    Fig5,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Solve => "solve",
            Mode::Convergence => "convergence",
            Mode::Scaling => "scaling",
            Mode::VarianceCompare => "variance-compare",
            Mode::Fig5 => "fig5",
        })
    }
}

/// Pointer register size: fixed, or from the condition-number rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointerQubits {
    #[default]
    Auto,
    Fixed(usize),
}

impl PointerQubits {
    pub fn resolve(self, kappa: f64, guard: usize) -> usize {
        match self {
            PointerQubits::Auto => mta_core::problem::required_pointer_qubits(kappa, guard),
            PointerQubits::Fixed(m) => m,
        }
    }
}

impl FromStr for PointerQubits {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(PointerQubits::Auto);
        }
        s.parse::<usize>()
            .map(PointerQubits::Fixed)
            .map_err(|_| HarnessError::Usage(format!("m-qubits must be an integer or `auto`, got `{s}`")))
    }
}

impl fmt::Display for PointerQubits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointerQubits::Auto => f.write_str("auto"),
            PointerQubits::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for PointerQubits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PointerQubits::Auto => s.serialize_str("auto"),
            PointerQubits::Fixed(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for PointerQubits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) => Ok(PointerQubits::Fixed(m as usize)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Shot schedule; `shots_escalated` absent means a constant shot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub shots_escalated: Option<u64>,
    pub escalate_after_stall: usize,
    pub max_iterations: usize,
    pub terminate_window: usize,
    pub terminate_threshold: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let d = ScheduleConfig::default();
        Self {
            shots_escalated: None,
            escalate_after_stall: d.escalate_after_stall,
            max_iterations: d.max_iterations,
            terminate_window: d.terminate_window,
            terminate_threshold: d.terminate_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig5Section {
    pub p0: Vec<f64>,
    pub repetitions: usize,
}

impl Default for Fig5Section {
    fn default() -> Self {
        Self {
            p0: (1..20).map(|i| i as f64 / 20.0).collect(),
            repetitions: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceSection {
    pub n_qubits: usize,
    pub pauli_terms: Vec<usize>,
    pub matrices_per_count: usize,
    pub repetitions: usize,
    pub shot_budget: u64,
}

impl Default for VarianceSection {
    fn default() -> Self {
        Self {
            n_qubits: 2,
            pauli_terms: vec![2, 4, 8, 16],
            matrices_per_count: 10,
            repetitions: 50,
            shot_budget: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Matrix CSV; together with `rhs` replaces seeded generation.
    pub matrix: Option<PathBuf>,
    pub rhs: Option<PathBuf>,
    pub n_qubits: usize,
    pub k_modules: usize,
    pub m_qubits: PointerQubits,
    pub guard_qubits: usize,
    pub kappa_max: f64,
    pub shots: u64,
    /// Shot counts swept by `scaling`.
    pub shot_list: Vec<u64>,
    pub backend: Backend,
    pub replicas: usize,
    /// Root seed: instance `r` of a sweep uses seed `seed + r`.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub schedule: ScheduleSection,
    pub fig5: Fig5Section,
    pub variance: VarianceSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Solve,
            matrix: None,
            rhs: None,
            n_qubits: 4,
            k_modules: 3,
            m_qubits: PointerQubits::Auto,
            guard_qubits: DEFAULT_GUARD_QUBITS,
            kappa_max: DEFAULT_KAPPA_MAX,
            shots: 1000,
            shot_list: vec![100, 1000, 10_000],
            backend: Backend::Spectral,
            replicas: 1,
            seed: 1,
            out_dir: None,
            schedule: ScheduleSection::default(),
            fig5: Fig5Section::default(),
            variance: VarianceSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schedule_for(&self, shots: u64) -> ScheduleConfig {
        ScheduleConfig {
            shots_initial: shots,
            shots_escalated: self.schedule.shots_escalated.unwrap_or(shots),
            escalate_after_stall: self.schedule.escalate_after_stall,
            max_iterations: self.schedule.max_iterations,
            terminate_window: self.schedule.terminate_window,
            terminate_threshold: self.schedule.terminate_threshold,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("mta-out"))
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(HarnessError::Usage(m.to_string()));
        if self.replicas == 0 {
            return usage("replicas must be at least 1");
        }
        if self.matrix.is_some() != self.rhs.is_some() {
            return usage("--matrix and --rhs must be given together");
        }
        if self.n_qubits == 0 || self.k_modules == 0 || self.shots == 0 {
            return usage("n, modules and shots must be at least 1");
        }
        if let PointerQubits::Fixed(m) = self.m_qubits {
            if m == 0 || m > 30 {
                return usage("m-qubits must lie in 1..=30");
            }
        }
        self.schedule_for(self.shots)
            .validate()
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        match self.mode {
            Mode::Convergence if self.replicas < 2 => usage("convergence needs at least 2 replicas"),
            Mode::Scaling if self.shot_list.is_empty() || self.shot_list.contains(&0) => {
                usage("scaling needs a nonempty list of positive shot counts")
            }
            Mode::Fig5 if self.fig5.p0.iter().any(|&p| !(p > 0.0 && p < 1.0)) || self.fig5.p0.is_empty() => {
                usage("fig5 needs p0 values in (0, 1)")
            }
            Mode::Fig5 if self.fig5.repetitions < 2 => usage("fig5 needs at least 2 repetitions"),
            Mode::VarianceCompare
                if self.variance.pauli_terms.is_empty()
                    || self.variance.matrices_per_count == 0
                    || self.variance.repetitions < 2
                    || self.variance.shot_budget == 0 =>
            {
                usage("variance-compare needs Pauli counts, ≥1 matrix, ≥2 repetitions and a shot budget")
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig {
            m_qubits: PointerQubits::Fixed(7),
            ..Default::default()
        };
        c.schedule.shots_escalated = Some(100_000);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml("mode = \"scaling\"\nm_qubits = \"auto\"\n[schedule]\nmax_iterations = 50\n").unwrap();
        assert_eq!(c.mode, Mode::Scaling);
        assert_eq!(c.schedule.max_iterations, 50);
        assert_eq!(c.k_modules, 3);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.replicas = 0;
        assert!(c.validate().is_err());
        c.replicas = 1;
        c.mode = Mode::Convergence;
        assert!(c.validate().is_err());
        c.replicas = 2;
        assert!(c.validate().is_ok());
        c.matrix = Some("m.csv".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn pointer_qubits_parse() {
        assert_eq!("auto".parse::<PointerQubits>().unwrap(), PointerQubits::Auto);
        assert_eq!("5".parse::<PointerQubits>().unwrap(), PointerQubits::Fixed(5));
        assert!("x".parse::<PointerQubits>().is_err());
        assert_eq!(PointerQubits::Auto.resolve(10.0, 2), 9);
    }
}
