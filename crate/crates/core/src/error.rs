use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate point: gauge vanishes, {0} is undefined there")]
    DegeneratePoint(&'static str),

    #[error("field `{0}` is not bi-radial")]
    NonBiradial(String),

    #[error("weight {weight} is not integrable near the origin or the axis x = 0 for m = {m}, Q = {q}")]
    NonIntegrableWeight { weight: String, m: usize, q: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("H vanishes within its error budget at r = {r}")]
    DegenerateH { r: f64 },

    #[error("not enough samples for a vanishing-order fit: {got} < {needed}")]
    InsufficientRange { got: usize, needed: usize },

    #[error("linear solve missed the residual target: {residual:e} > {target:e}")]
    SolveFailure { residual: f64, target: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("query ({s}, {t}) lies outside the grid rectangle")]
    OutOfDomain { s: f64, t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
