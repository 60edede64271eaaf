use thiserror::Error as ThisError;

/// Errors produced by mesh construction, factorization, and the VI solver.
#[derive(Debug, Clone, ThisError)]
pub enum Error {
    /// The requested domain has zero or negative extent.
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    /// A mesh invariant failed (non-positive area, hanging node, or an edge
    /// shared by more than two triangles).
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// A marked triangle id is out of range.
    #[error("marked triangle {0} is out of range")]
    UnknownTriangle(usize),

    /// The matrix handed to the Cholesky factorization is not positive
    /// definite; `col` is the first column with a non-positive pivot.
    #[error("matrix is not positive definite: pivot {pivot:.3e} in column {col}")]
    NotPositiveDefinite { col: usize, pivot: f64 },

    /// The active set iteration failed to settle within the iteration cap.
    #[error("active set iteration stalled after {max_iter} iterations (KKT residual {kkt_residual:.3e})")]
    SolverStalled { max_iter: usize, kkt_residual: f64 },
}
