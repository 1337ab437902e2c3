use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected {expected} {what}, got {got}")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: state has {state} quadratures, map acts on {map}")]
    Dimension { state: usize, map: usize },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeIndex { index: usize, n_modes: usize },

    #[error("modes must be distinct, got {0} twice")]
    RepeatedMode(usize),

    #[error("{name} = {value} outside {range}")]
    Range {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unphysical: {0}")]
    Physicality(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("unstable amplifier: M = {m} must be positive (rho = {rho}, kappa = {kappa})")]
    Unstable { rho: f64, kappa: f64, m: f64 },

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{message} at element {index}")]
    Element { index: usize, message: String },
}

impl Error {
    pub(crate) fn range(name: &'static str, value: f64, range: &'static str) -> Self {
        Error::Range { name, value, range }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Arity { .. } => "arity",
            Error::Dimension { .. } => "dimension",
            Error::ModeIndex { .. } => "mode_index",
            Error::RepeatedMode(_) => "repeated_mode",
            Error::Range { .. } => "range",
            Error::Physicality(_) => "physicality",
            Error::Degenerate(_) => "degenerate",
            Error::Unstable { .. } => "unstable",
            Error::NoSolution(_) => "no_solution",
            Error::Invalid(_) => "invalid",
            Error::Syntax { .. } => "syntax",
            Error::Element { .. } => "element",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Check `lo <= value <= hi`, rejecting NaN.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<f64> {
    if value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::range(name, value, range))
    }
}
