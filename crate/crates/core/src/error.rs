use thiserror::Error;

/// Errors raised by mesh construction, assembly, solves and scenario builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("objects live on different meshes")]
    MeshMismatch,

    #[error("region mismatch: {0}")]
    RegionMismatch(String),

    #[error("region `{0}` has no interior degrees of freedom")]
    EmptyRegion(String),

    #[error("coefficient bounds violated on element {element}: eigenvalues [{min}, {max}] outside [{alpha}, {beta}]")]
    Ellipticity {
        element: usize,
        min: f64,
        max: f64,
        alpha: f64,
        beta: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("resolution rule violated: {0}")]
    Aliasing(String),

    #[error("scenario infeasible: {0}")]
    Infeasible(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("set-function check precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
