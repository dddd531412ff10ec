use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error(
        "{0} requires an analytic model; sampled models can only be read at their table nodes"
    )]
    SampledModel(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("too few samples: got {found}, need at least {required}")]
    TooFewSamples { found: usize, required: usize },

    #[error("lambda grid is not strictly increasing at row {index}")]
    NonIncreasingGrid { index: usize },

    #[error("lambda = {lambda} is outside the path range [{min}, {max}]")]
    OutOfRange { lambda: f64, min: f64, max: f64 },

    #[error("pose #{index} at distance {distance} m from the base is unreachable")]
    Unreachable { index: usize, distance: f64 },

    #[error("tangent direction has zero length at lambda = {lambda} while the friction bound is nonzero")]
    ZeroTangent { lambda: f64 },

    #[error(
        "infeasible torque limits at lambda = {lambda}, joint {joint}: effective lower {lower} > effective upper {upper} ({count} violating node(s) in total)"
    )]
    InfeasibleLimits {
        lambda: f64,
        joint: usize,
        lower: f64,
        upper: f64,
        count: usize,
    },

    #[error("transition between two rest states cannot be traversed in finite time")]
    RestToRest,

    #[error("no feasible phase-plane path; column {column} (lambda = {lambda}) cannot be reached")]
    NoFeasiblePath { column: usize, lambda: f64 },

    #[error("grid {n_lambda}x{n_speed} exceeds the exhaustive-search limit of 12x12")]
    GridTooLarge { n_lambda: usize, n_speed: usize },

    #[error("sample period {dt} s exceeds the trajectory duration {total} s")]
    SampleStepTooLarge { dt: f64, total: f64 },

    #[error("admittance state diverged at t = {time} s (|z| = {norm} m)")]
    Diverged { time: f64, norm: f64 },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
