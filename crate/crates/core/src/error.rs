use thiserror::Error;

/// Errors raised by the library. Numerical search failures that are not
/// errors (an empty search, an undetermined LMI) are returned as values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector length {0} is not a triangular number k(k+1)/2")]
    NonTriangularLength(usize),

    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("all-ones vector is not in the column span (residual {residual:e})")]
    OnesNotInSpan { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument outside its domain: {0}")]
    DomainError(String),

    #[error("inner body is not contained in outer body: vertex {vertex} violates inequality {facet} by {violation:e}")]
    NotNested {
        vertex: usize,
        facet: usize,
        violation: f64,
    },

    #[error("origin is not in the interior of the polytope")]
    OriginNotInterior,

    #[error("matrix rank is {found}, expected {expected}")]
    RankMismatch { expected: usize, found: usize },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("polygon is not strictly convex")]
    NotConvex,

    #[error("three consecutive vertices are collinear")]
    CollinearVertices,

    #[error("expected {expected} vertices, got {found}")]
    WrongVertexCount { expected: usize, found: usize },

    #[error("degenerate hexagon parameters (a or b is zero)")]
    DegenerateParameters,

    #[error("vertex {0} has no preimage in the lift")]
    VertexNotInLift(usize),

    #[error("no psd dual witness for inequality {0}")]
    NoDualWitness(usize),

    #[error("row counts differ: {0} vs {1}")]
    RowCountMismatch(usize, usize),

    #[error("scaling factor {0} is not strictly positive")]
    NonpositiveScalar(f64),

    #[error("factorization search failed on chunk {0}")]
    SearchFailed(usize),

    #[error("conic is not a proper ellipse (upper-left block is singular)")]
    NotStrictlyElliptic,

    #[error("certificate failed verification: {0}")]
    UnverifiedCertificate(String),

    #[error("constructed factorization failed verification (residual {0:e})")]
    VerificationFailed(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
