//! Kinetic-energy functionals, coordinate scaling and the free electron gas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constrained_search;
pub mod electron_gas;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod model_densities;
pub mod scaling;

pub use error::{Error, Result};
