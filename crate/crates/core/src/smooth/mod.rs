//! Forward-mode differentiation, smooth maps on coordinate patches, and
//! the small subspace algebra used by every other module.

mod jet;
mod linalg;
mod map;

pub use jet::{Jet, Real};
pub use linalg::{
    condition_number, inverse, min_singular_value, nullspace, restricted_inverse,
    singular_values, solve, subspace_equal, SubspaceBasis, MAX_CONDITION, RANK_TOL,
};
pub use map::{jacobian, jacobian_fd, lie_bracket, SmoothMap, VectorField, LIFT_STEP};

/// Points of a coordinate patch.
pub type Point = nalgebra::DVector<f64>;
