//! Positive semidefinite rank of nonnegative matrices and polytopes:
//! slack matrices and nested pairs, spectrahedral lifts, psd factorization
//! search and verification, the MIN PSD RANK decision, and closed-form
//! bounds.

pub mod bounds;
pub mod error;
pub mod liftkit;
pub mod lmifeas;
pub mod minrank;
pub mod polyform;
pub mod psdfact;
pub mod symcore;

pub use error::{Error, Result};
pub use liftkit::SpectraLift;
pub use lmifeas::{FeasResult, FeasStatus, LmiProblem};
pub use minrank::{BilinearCertificate, ConicCertificate, Verdict};
pub use polyform::{HPolyhedron, NestedPair, NonnegMatrix, VPolytope};
pub use psdfact::{PsdFactorization, SearchConfig};
pub use symcore::{DenseMatrix, SymMatrix};
