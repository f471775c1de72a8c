use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("SDPA export supports only orthant and PSD blocks; block {0} is a second-order cone")]
    UnsupportedCone(String),
    #[error("SDPA parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
