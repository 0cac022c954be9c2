use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Variants fall into two classes: input errors (malformed or out-of-range
/// arguments) and resource errors (an exact engine would exceed its budget).
/// The command line front end maps them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} is outside the ground set of size {n}")]
    ElementOutOfRange { element: usize, n: usize },

    #[error("ground set size {n} exceeds the supported maximum of {max}")]
    GroundTooLarge { n: usize, max: usize },

    #[error("ground set must contain at least one element")]
    EmptyGround,

    #[error("ground sets differ: {left} vs {right}")]
    GroundMismatch { left: usize, right: usize },

    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),

    #[error("weight {weight} is outside [0, 1]")]
    Weight { weight: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("budget exceeded: {what} needs {count}, budget is {budget}")]
    Budget {
        what: &'static str,
        count: usize,
        budget: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for budget/resource failures, false for input failures.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}
