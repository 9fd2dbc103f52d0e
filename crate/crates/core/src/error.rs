use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants carry enough context (states, parameters) to report a failed
/// integration or a violated precondition without re-running anything.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation of {component} is not finite at {point:?}")]
    Evaluation {
        component: &'static str,
        point: [f64; 4],
    },

    #[error("step size underflow at t = {t}; last state {state:?}")]
    Stiffness { t: f64, state: Vec<f64> },

    #[error("solution blew up at t = {t}; last finite state {state:?}")]
    BlowUp { t: f64, state: Vec<f64> },

    #[error("no section crossing before t_max = {t_max}; final state {state:?}")]
    Timeout { t_max: f64, state: Vec<f64> },

    #[error("degenerate fiber: {0}")]
    DegenerateFiber(String),

    #[error("fold singularity: {0}")]
    FoldSingularity(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("chart-domain error: {0}")]
    ChartDomain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("map is not contractive at this point: {0}")]
    NonContractive(String),

    #[error("not a diffeomorphism: {0}")]
    Diffeomorphism(String),

    #[error("shift violation: {0}")]
    ShiftViolation(String),

    #[error("chain-structure error: {0}")]
    ChainStructure(String),

    #[error("sweep failed: {0}")]
    Sweep(String),

    #[error("fold detection failed: {0}")]
    FoldDetection(String),

    #[error("transition failed at b0 = {b0}, eps = {eps}: {source}")]
    Transition {
        b0: f64,
        eps: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Stiffness { .. }
            | Error::BlowUp { .. }
            | Error::Timeout { .. }
            | Error::DegenerateFiber(_)
            | Error::NonContractive(_)
            | Error::FoldDetection(_)
            | Error::Evaluation { .. } => true,
            Error::Transition { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
