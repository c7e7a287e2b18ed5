use std::process::ExitCode;

use gearr_core::{PhyError, PolicyError, SimError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: config, flags or profile documents.
    #[error("{0}")]
    Validation(String),
    /// Failure while running or writing results.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    /// Classifies a simulator error and rewrites field names to config keys.
    pub fn from_sim(e: &SimError) -> Self {
        let message = match e {
            SimError::InvalidConfig { field, reason } => format!("sim.{field}: {reason}"),
            SimError::Phy(p) => phy_message(p),
            SimError::Policy(PolicyError::InvalidConfig { field, reason }) => {
                format!("policy.{}: {reason}", policy_key(field))
            }
            SimError::Policy(PolicyError::Phy(p)) => phy_message(p),
            SimError::Reliability(r) | SimError::Policy(PolicyError::Reliability(r)) => {
                format!("catalog: {r}")
            }
            other => other.to_string(),
        };
        if e.is_validation() {
            CliError::Validation(message)
        } else {
            CliError::Runtime(message)
        }
    }
}

fn phy_message(e: &PhyError) -> String {
    match e {
        PhyError::InvalidConfig { field, reason } => format!("phy.{}: {reason}", phy_key(field)),
        PhyError::ColocatedUser(field) => {
            format!("phy.{field}_m: user coincides with the access point")
        }
        other => other.to_string(),
    }
}

fn phy_key(field: &str) -> &str {
    match field {
        "slot_s" => "slot_ms",
        other => other,
    }
}

fn policy_key(field: &str) -> &str {
    match field {
        "f_th_flops" => "f_th_tflops",
        "f_max_flops" => "f_max_tflops",
        "d_max_s" => "d_max_ms",
        other => other,
    }
}
