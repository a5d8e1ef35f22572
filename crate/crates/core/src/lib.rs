#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli;
pub mod convex;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod market;
pub mod model;
pub mod verifier;

pub use error::{Error, Result};
