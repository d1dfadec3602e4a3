use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("metric not positive definite at node {node} (x = {x:?})")]
    Degenerate { node: usize, x: [f64; 3] },
    #[error("weight construction violated {check} at {count} nodes, first at {first:?}")]
    Weights { check: String, count: usize, first: [f64; 3] },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
    #[error("defect completion failed: {0}")]
    DefectCompletion(String),
    #[error("base metric is not generic: kernel dimension {0}")]
    NonGeneric(usize),
    #[error("divergence at step {step}: residual {before:.3e} -> {after:.3e}")]
    Divergence { step: usize, before: f64, after: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DeformError>;
