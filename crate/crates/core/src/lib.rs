//! Line-search-free higher-order Mirror Prox for monotone variational
//! inequalities.

// `!(x > 0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod scalar;
pub mod solver;
pub mod subp2;

pub use error::{Error, Result};
pub use geometry::{FeasibleSet, ProxSetup};
pub use linalg::{DenseMatrix, Vector};
pub use operator::{NormKind, Operator, Smoothness};
pub use scalar::Scalar;

pub type Vector64 = Vector<f64>;
pub type Vector32 = Vector<f32>;
pub type Matrix64 = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
