//! Dense linear algebra: vectors, row-major matrices, LU, symmetric
//! eigenvalues and the real Schur form.

mod matrix;
mod schur;
mod vector;

pub use matrix::{smallest_symmetric_eigenvalue, symmetric_eigenvalues, DenseMatrix, Lu};
pub use schur::{DiagonalBlock, RealSchur};
pub use vector::{CompensatedScalar, CompensatedSum, Vector};
