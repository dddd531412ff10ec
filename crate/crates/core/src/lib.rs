//! Time-optimal path parametrization for manipulators that exert bounded
//! wrenches on their environment, plus an admittance-control simulator to
//! check the resulting contact forces.

// `!(x < y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admittance_sim;
pub mod cli;
pub mod dp_planner;
pub mod error;
pub mod io;
pub mod limits;
pub mod parametrized_dynamics;
pub mod path;
pub mod robot_model;
pub mod wrench_constraints;

pub use error::{Error, Result};
