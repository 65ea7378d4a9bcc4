//! Run configuration: a JSON document overridden by command-line flags.

use std::fmt;
use std::path::Path;

use qcbounds::bounds::{Mode, DEFAULT_CONFIDENCE, DEFAULT_EPSILON};
use qcbounds::dynamics::IsingParams;
use qcbounds::experiment::{ModelConfig, SweepConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Quantities accepted by `bound` and `oracle`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum QuantityName {
    /// `𝔼 Tr[ρ Z_1]^2`.
    Gbar,
    /// Average purity from the superoperator correlators.
    Purity,
    /// Average purity from the single correlator constraint.
    PurityGram,
    /// Average von Neumann entropy (upper bound).
    Vn,
    /// Entropy of the first unmeasured qubit (lower bound).
    VnSub,
    FramePotential,
    DesignDistance,
}

impl QuantityName {
    pub fn name(self) -> &'static str {
        match self {
            QuantityName::Gbar => "gbar",
            QuantityName::Purity => "purity",
            QuantityName::PurityGram => "purity_gram",
            QuantityName::Vn => "vn",
            QuantityName::VnSub => "vn_sub",
            QuantityName::FramePotential => "frame_potential",
            QuantityName::DesignDistance => "design_distance",
        }
    }
}

fn default_quantities() -> Vec<QuantityName> {
    vec![QuantityName::Gbar, QuantityName::Purity, QuantityName::DesignDistance]
}

fn default_model() -> ModelConfig {
    ModelConfig::benchmark(10)
}

fn default_t() -> usize {
    8
}

fn default_shots() -> usize {
    50_000
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_mode() -> Mode {
    Mode::Empirical
}

/// Everything a run depends on. Its canonical JSON is hashed into every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Shortcut for the benchmark chain of this length; replaces `model.params`.
    #[serde(default)]
    pub n_qubits: Option<usize>,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    /// Floquet period of `simulate`, `bound` and `oracle`.
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<QuantityName>,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// Invalid configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}:{e}", path.display())))
    }

    /// Parses a JSON document; errors carry `line:column`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("{}:{}: {e}", e.line(), e.column())))
    }

    /// Applies the `n_qubits` shortcut.
    pub fn resolve(mut self) -> Self {
        if let Some(n) = self.n_qubits {
            self.model.params = IsingParams::benchmark(n);
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.seed.is_none() {
            return err("a seed is required (--seed)".into());
        }
        if !(self.confidence > 0.5 && self.confidence < 1.0) {
            return err(format!("confidence = {} must lie in (0.5, 1)", self.confidence));
        }
        if !(self.epsilon > 0.0) {
            return err(format!("epsilon = {} must be positive", self.epsilon));
        }
        if self.shots < 30 {
            return err(format!("shots = {} must be at least 30", self.shots));
        }
        if self.quantities.is_empty() {
            return err("quantities must be nonempty".into());
        }
        self.model.validate().map_err(|e| ConfigError(format!("model: {e}")))?;
        self.sweep.validate().map_err(|e| ConfigError(format!("sweep: {e}")))?;
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("serializable");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
