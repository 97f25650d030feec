use thiserror::Error;

/// Errors raised by the current calculus and the checkers built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// The target complex does not tile the image of a carried source simplex.
    #[error(
        "target does not refine the image arrangement: source simplex {source_simplex}{}",
        match .target_simplex { Some(t) => format!(", target simplex {t}"), None => " (image leaves the target carrier)".to_string() }
    )]
    Refinement {
        source_simplex: usize,
        target_simplex: Option<usize>,
    },

    #[error("degenerate slicing level {level:?}: fiber passes through a lower-dimensional face")]
    DegenerateLevel { level: Vec<f64> },

    #[error("hypothesis error: {0}")]
    Hypothesis(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
