//! Problem instances with known solutions or certificates.

mod game;
mod hard;
mod synthetic;

pub use game::{Equilibrium, GameOperator, MatrixGame};
pub use hard::{b_matrix, lower_bound_value, ClosedFormOptimum, HardInstance, HardParams, SaddleOperator};
pub use synthetic::{P2Params, P2Synthetic};
