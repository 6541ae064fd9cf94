use thiserror::Error;

use crate::exprlang::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error in `{field}`: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },

    #[error("evaluation error in `{field}`: {source}")]
    Eval {
        field: String,
        #[source]
        source: EvalError,
    },

    #[error("config schema error: {0}")]
    Schema(String),

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("unknown problem `{name}`; valid names: {}", valid.join(", "))]
    UnknownProblem { name: String, valid: Vec<String> },

    #[error("delay phi{m} maps t[{index}] = {t} to {value}, outside [0, 1]")]
    DelayRange {
        m: usize,
        index: usize,
        t: f64,
        value: f64,
    },

    #[error("f failed at node {index} (t = {t}, args = {args:?}): {source}")]
    RhsEval {
        index: usize,
        t: f64,
        args: Box<[f64; 8]>,
        #[source]
        source: EvalError,
    },

    #[error("non-finite {what} at iteration {iteration}, node {index}")]
    NonFinite {
        what: &'static str,
        iteration: usize,
        index: usize,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
