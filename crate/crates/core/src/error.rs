//! Error taxonomy shared by every module of the simulator.
//!
//! Configuration problems and numerical failures are kept distinct because the
//! command-line runner maps them to different exit codes (2 and 3). Everything
//! carries enough context to be printed as a one-line diagnostic.

use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum DriveError {
    /// Invalid configuration value or unparsable config text. `line` is the
    /// 1-based line number in the config file, or 0 when the error does not
    /// originate from a file.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    /// A state variable or input became non-finite.
    #[error("state corruption: {0}")]
    StateCorruption(String),

    /// Vector/matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Operation called in a sampling mode that does not support it.
    #[error("mode error: {0}")]
    Mode(String),

    /// Extrapolated reference runs parallel to the carrier line; the caller
    /// holds the previous switch state.
    #[error("no crossing: extrapolated reference parallel to carrier line")]
    NoCrossing,

    /// Every fuzzy rule fired with zero weight; the caller falls back to the
    /// previous output.
    #[error("uncovered input: all rule weights are zero")]
    UncoveredInput,

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    /// Data violates a structural invariant (for example a level command
    /// outside the inverter's band).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Waveform does not span an integer number of fundamental periods.
    #[error("analysis window error: {0}")]
    AnalysisWindow(String),

    /// THD is undefined because the fundamental magnitude is zero.
    #[error("undefined THD: fundamental magnitude is zero")]
    UndefinedThd,

    /// Phase is undefined because the fundamental is missing.
    #[error("undefined phase: fundamental magnitude is zero")]
    UndefinedPhase,

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Underlying file-system failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl DriveError {
    /// Exit code the scenario runner reports for this error:
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriveError::Config { .. } => 2,
            DriveError::StateCorruption(_)
            | DriveError::TrainingDiverged { .. }
            | DriveError::UndefinedThd
            | DriveError::UndefinedPhase
            | DriveError::AnalysisWindow(_)
            | DriveError::Domain(_) => 3,
            _ => 1,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DriveError>;
