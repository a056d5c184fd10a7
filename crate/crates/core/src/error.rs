//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problem in a network description (bad line endpoints,
    /// duplicate lines, non-positive parameters, ...).
    #[error("invalid topology: {0}")]
    Topology(String),

    /// The tie-line graph does not connect all buses.
    #[error("disconnected topology: {0}")]
    Disconnected(String),

    /// Scenario document could not be parsed or fails validation.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// The steady-state system has no unique solution.
    #[error("singular network: {0}")]
    Singular(String),

    /// A state variable left the finite range during integration.
    #[error("integration blow-up at node {node} (t = {time} s): {detail}")]
    IntegrationBlowup {
        node: usize,
        time: f64,
        detail: String,
    },

    /// Inputs to an operation are dimensionally or semantically inconsistent.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by a bad scenario/configuration rather than a
    /// failure while executing a valid one. The CLI maps these to exit code 1
    /// and everything else to exit code 2.
    pub fn is_scenario_error(&self) -> bool {
        matches!(
            self,
            Error::Topology(_) | Error::Disconnected(_) | Error::Scenario(_)
        )
    }
}
