use thiserror::Error;

/// Failure of an adaptive numerical procedure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericalError {
    #[error("adaptive quadrature did not converge after {intervals} intervals (achieved relative error {achieved_rel:.3e})")]
    QuadratureNotConverged { intervals: usize, achieved_rel: f64 },
    #[error("bessel evaluation failed: {0}")]
    Bessel(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {degree} outside supported range 0..={max}")]
    DegreeOutOfRange { degree: usize, max: usize },
    #[error("order m = {m} invalid for degree l = {l}")]
    InvalidOrder { l: usize, m: i64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error("degree {degree} is ill-conditioned: amplification {amplification:.3e} exceeds the cap {cap:.1e}")]
    IllConditioned {
        degree: usize,
        amplification: f64,
        cap: f64,
    },
    #[error("denominator field too small: min |psi| = {min_modulus:.3e} below floor {threshold:.3e}; perturb the source first")]
    ConditionViolated { min_modulus: f64, threshold: f64 },
    #[error("source perturbation failed after {rounds} rounds: min |psi_delta| on support = {min_modulus:.3e}, required {target:.3e}")]
    PerturbationFailed {
        rounds: usize,
        min_modulus: f64,
        target: f64,
    },
    #[error("linear solver did not converge in {iterations} iterations (last relative residual {last:.3e})", last = residual_history.last().copied().unwrap_or(f64::NAN))]
    SolverNotConverged {
        iterations: usize,
        residual_history: Vec<f64>,
    },
    #[error("partial-wave matching singular at degree {degree}")]
    OracleSingular { degree: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config: {key}: {message}")]
    Config { key: String, message: String },
    #[error("invalid config: {}", problems.iter().map(|(k, m)| format!("{k}: {m}")).collect::<Vec<_>>().join("; "))]
    InvalidConfig { problems: Vec<(String, String)> },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Strip `Stage` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Tags an error with the pipeline stage it came from.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
