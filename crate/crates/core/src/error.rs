use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("structure constants violate {property} (defect {defect:e})")]
    NotALieAlgebra { property: &'static str, defect: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("bilinear form is degenerate")]
    DegenerateForm,

    #[error("subspace is not closed under the bracket (defect {defect:e})")]
    NotSubalgebra { defect: f64 },

    #[error("subspaces are not complementary: dims {k_dim} + {p_dim} in an algebra of dim {dim}")]
    NotComplementary { k_dim: usize, p_dim: usize, dim: usize },

    #[error("metric on the horizontal space is not isotropic")]
    NonIsotropic,

    #[error("initial covector does not have unit speed (squared speed {speed_sq})")]
    NonUnitSpeed { speed_sq: f64 },

    #[error("{unmatched} probes unmatched at match radius {match_radius}; increase --dirs, --max-length or the match radius")]
    UnmatchedProbes { unmatched: usize, match_radius: f64 },

    #[error("spectral truncation reached the cap n = {cap} before the certificate held")]
    TruncationCap { cap: usize },

    #[error("unknown report format `{0}` (expected csv or json)")]
    UnknownFormat(String),

    #[error("at beta = {beta}: {source}")]
    AtBeta {
        beta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
