use thiserror::Error;

use crate::expr::{EvalError, ParseError};

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}

/// Failures of pointwise geometric queries.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("point {} is outside the chart domain", fmt_point(.point))]
    OutOfDomain { point: Vec<f64> },
    #[error("at {}: {source}", fmt_point(.point))]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("metric is not positive definite at {} (smallest eigenvalue {min_eigenvalue:e})", fmt_point(.point))]
    NotPositiveDefinite { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate plane at {}", fmt_point(.point))]
    DegeneratePlane { point: Vec<f64> },
}

/// Failures while building a manifold definition.
#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("unknown built-in manifold `{0}`")]
    UnknownBuiltin(String),
    #[error("cannot read manifold file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifold document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("in {field}: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("metric is not symmetric: entry ({i},{j}) differs from ({j},{i})")]
    NonSymmetricMetric { i: usize, j: usize },
    #[error("metric is not positive definite at {} (smallest eigenvalue {min_eigenvalue:e})", fmt_point(.point))]
    NotPositiveDefinite { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("invalid manifold definition: {0}")]
    Invalid(String),
}
