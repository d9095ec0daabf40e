use crate::geometry::Vec3;
use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field evaluated at its singularity {0:?}")]
    Singular(Vec3),

    #[error("point {0:?} lies outside the sampled grid")]
    OutOfRange(Vec3),

    #[error("ill-conditioned quadrature on face {face}: singularity at distance {distance:.3e}")]
    IllConditioned { face: String, distance: f64 },

    #[error("no valid translation among {candidates} candidates (best integrality deficit {best_deficit:.3e})")]
    NoValidTranslation { candidates: usize, best_deficit: f64 },

    #[error("boundary data not exact: total flux {total:.3e} exceeds {tol:.1e}")]
    NotExact { total: f64, tol: f64 },

    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    Solver { residual: f64, iterations: usize },

    #[error("invalid certificate: {0}")]
    CertificateInvalid(String),

    #[error("L^{p} estimate diverges (increment ratio {ratio:.3})")]
    LpEstimateDivergence { p: f64, ratio: f64 },

    #[error("cube {cube}: {source}")]
    InCube {
        cube: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_cube(self, cube: usize) -> Self {
        Error::InCube {
            cube,
            source: Box::new(self),
        }
    }
}
