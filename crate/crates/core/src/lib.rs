#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and analysis of continuous parity-recovery error correction for
//! a binomial bosonic code in a cavity–transmon–reservoir circuit.

pub mod budget;
pub mod cascade;
pub mod codes;
pub mod error;
pub mod heating;
pub mod hilbert;
pub mod io;
pub mod model;
pub mod planner;
pub mod solver;
pub mod sparse;
pub mod tomography;

pub use error::{Error, Result};
