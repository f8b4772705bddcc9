use newton_atlas_core::LogBase;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Master seed used when neither `--seed` nor `NEWTON_ATLAS_SEED` is set.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EPSILON: f64 = 1e-10;
pub const DEFAULT_ETA: f64 = newton_atlas_core::orbit::DEFAULT_ETA;
pub const DEFAULT_DEGREES: &str = "10,20,40,80";
pub const DEFAULT_TRIALS: usize = 20;

/// Everything one invocation ran with. Echoed into every output header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub degrees: Vec<usize>,
    pub trials: Option<usize>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub seed: u64,
    pub phase_seed: Option<u64>,
    pub log_base: LogBase,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub trace: Option<String>,
    /// As requested; 0 means one worker per available core.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        RunConfig {
            command: command.to_string(),
            degrees: Vec::new(),
            trials: None,
            epsilon: None,
            eta: None,
            seed,
            phase_seed: None,
            log_base: LogBase::Natural,
            inputs: Vec::new(),
            outputs: Vec::new(),
            trace: None,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(&d) = self.degrees.iter().find(|&&d| d < 2) {
            return Err(CliError::validation(format!("degree {d} is invalid (must be at least 2)")));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps <= 1e-2) {
                return Err(CliError::validation(format!("epsilon {eps} must lie in (0, 1e-2]")));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(CliError::validation(format!("eta {eta} must be positive")));
            }
        }
        if self.trials == Some(0) {
            return Err(CliError::validation("trials must be at least 1"));
        }
        Ok(())
    }
}

pub fn parse_degrees(list: &str) -> std::result::Result<Vec<usize>, String> {
    list.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad degree {s:?}: {e}")))
        .collect()
}

pub fn parse_log_base(s: &str) -> std::result::Result<LogBase, String> {
    match s {
        "natural" | "e" | "ln" => Ok(LogBase::Natural),
        "two" | "2" => Ok(LogBase::Two),
        "ten" | "10" => Ok(LogBase::Ten),
        _ => Err(format!("unknown log base {s:?} (natural, two, ten)")),
    }
}
