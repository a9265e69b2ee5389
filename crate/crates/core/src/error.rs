use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dielectric coefficient {value} is not positive at {location}")]
    NonPositiveDielectric { value: f64, location: String },

    #[error("solvent concentration {value:e} is not positive at node ({i}, {j})")]
    NonPositiveSolvent { i: usize, j: usize, value: f64 },

    #[error("concentration of species {species} is not positive ({value:e}) at node ({i}, {j})")]
    NonPositiveConcentration {
        species: usize,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error(
        "linear solver stopped after {iterations} iterations at relative residual {residual:e}"
    )]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("linear solve lost positivity: minimum {value:e} at node ({i}, {j})")]
    PositivityLost { i: usize, j: usize, value: f64 },

    #[error("curl-free relaxation did not reach {tol:e} in {sweeps} sweeps (metric {metric:e})")]
    NotConverged {
        sweeps: usize,
        metric: f64,
        tol: f64,
    },

    #[error("total charge {total:e} is not zero")]
    NonNeutral { total: f64 },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the failure kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidParams(_) => "InvalidParams",
            Error::Config(_) => "Config",
            Error::NonPositiveDielectric { .. } => "NonPositiveDielectric",
            Error::NonPositiveSolvent { .. } => "NonPositiveSolvent",
            Error::NonPositiveConcentration { .. } => "NonPositiveConcentration",
            Error::SolverDiverged { .. } => "SolverDiverged",
            Error::PositivityLost { .. } => "PositivityLost",
            Error::NotConverged { .. } => "NotConverged",
            Error::NonNeutral { .. } => "NonNeutral",
            Error::Step { source, .. } => source.kind(),
            Error::Io(_) => "Io",
        }
    }

    /// Problems with the inputs (including a non-neutral initial state or a
    /// non-positive dielectric), as opposed to failures of the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::Config(_)
            | Error::NonNeutral { .. }
            | Error::NonPositiveDielectric { .. } => true,
            Error::Step { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// Step index for errors raised inside the time loop.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::Step { step, .. } => Some(*step),
            _ => None,
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }
}
