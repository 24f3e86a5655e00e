use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("utility undefined at c = {c}, k = {k} for gamma = {gamma} > 1")]
    UtilityDomain { c: f64, k: f64, gamma: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("finite-difference scheme is not monotone: A[{row}][{col}] = {value:e} > 0")]
    NonMonotone { row: usize, col: usize, value: f64 },

    #[error(
        "value leaves its bounds at iteration {iteration}, z = {z}: \
         {lower} <= {value} <= {upper} fails"
    )]
    BoundViolation {
        iteration: usize,
        z: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("no-trading zone: {0}")]
    Zone(String),

    #[error("scenario: {0}")]
    Config(String),

    #[error("at phi = {phi}: {source}")]
    AtLoading {
        phi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation: {0}")]
    Simulation(String),
}

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
