use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Antipodal endpoints on the sphere. The plane normal of the canonical
    /// tie-break great circle is carried so callers can still build the arc.
    #[error("degenerate geodesic: endpoints are antipodal (tie-break plane normal {normal:?})")]
    DegenerateGeodesic { normal: [f64; 3] },

    #[error("mesh quality error: {0}")]
    MeshQuality(String),

    #[error("unbalanced masses: source total {source_mass}, target total {target_mass}")]
    Unbalanced { source_mass: f64, target_mass: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("no convergence at eps = {eps} after {iterations} iterations (marginal error {residual:e})")]
    Convergence {
        eps: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("optimization did not converge after {iterations} iterations")]
    NoDescentConvergence { iterations: usize, trace: Vec<f64> },

    #[error("range error: {0}")]
    Range(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("infeasible potentials: phi[{i}] + psi[{j}] exceeds cost by {violation:e}")]
    InfeasiblePotentials { i: usize, j: usize, violation: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("unsupported for this manifold kind: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
