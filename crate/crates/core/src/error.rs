use thiserror::Error;

/// Errors produced by the simulation engine.
///
/// The variants fall into three families that callers (the CLI in
/// particular) branch on: bad input, "the physics says no", and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed config at `{path}`: {message}")]
    MalformedConfig { path: String, message: String },

    #[error("invalid parameter: {field} must be {bound} (got {value})")]
    Validation {
        field: &'static str,
        bound: &'static str,
        value: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate denominator {which}: modulus {modulus:e} below {threshold:e}")]
    DegenerateDenominator {
        which: &'static str,
        modulus: f64,
        threshold: f64,
    },

    #[error("no physical steady state: the intensity cubic has no real non-negative root")]
    NoPhysicalRoot,

    #[error("branch {requested} not available ({available} physical roots)")]
    NoSuchBranch { requested: String, available: usize },

    #[error("singular response: {which} modulus {modulus:e} below {threshold:e}")]
    SingularResponse {
        which: &'static str,
        modulus: f64,
        threshold: f64,
    },

    #[error("ill-conditioned {order}-order block: condition number {condition:e}")]
    IllConditioned { order: u8, condition: f64 },

    #[error("closed form and hierarchical A2- disagree: relative difference {rel_diff:e}")]
    HierarchyMismatch { rel_diff: f64 },

    #[error("undefined ratio: probe amplitude is zero")]
    UndefinedRatio,

    #[error("steady state is linearly unstable (max Re λ = {max_re:e} rad/s); time-domain oracle refused")]
    InstabilityGate { max_re: f64 },

    #[error("trajectory diverged at t = {time:e} s (|state| = {magnitude:e})")]
    Diverged { time: f64, magnitude: f64 },

    #[error("integrator step size underflow at t = {time:e} s")]
    StepSizeUnderflow { time: f64 },

    #[error("insufficient harmonic window: {0}")]
    InsufficientWindow(String),

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Coarse classification used for exit codes and sweep masking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Physics,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MalformedConfig { .. }
            | Error::Validation { .. }
            | Error::InvalidInput(_)
            | Error::UnknownFigure(_)
            | Error::InsufficientWindow(_)
            | Error::UndefinedRatio
            | Error::NoSuchBranch { .. } => ErrorKind::Input,
            Error::Io { .. } | Error::Serialize(_) => ErrorKind::Io,
            _ => ErrorKind::Physics,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
