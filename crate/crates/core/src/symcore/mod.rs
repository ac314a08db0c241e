//! Small dense linear algebra over real symmetric matrices.
//!
//! Everything here is a pure function of its inputs. Matrices in this crate
//! are tiny (pencils of size at most a handful, rank factorizations of
//! matrices with a few dozen rows), so the kernels favour accuracy and
//! simplicity: cyclic Jacobi for eigenproblems and one-sided Jacobi for the
//! SVD.

mod eig;
mod matrix;
mod svd;
mod svec;

pub use eig::{eig_sym, min_eig, negative_part, project_psd, SymEigen, MAX_SWEEPS};
pub use matrix::{dot, norm2, DenseMatrix, SymMatrix};
pub use svd::{lstsq, matrix_rank, null_space, rank_factor, svd, RankFactorization, Svd, RANK_TOL};
pub use svec::{basis_element, offdiag_pairs, smat, svec, svec_len, triangular_root};
