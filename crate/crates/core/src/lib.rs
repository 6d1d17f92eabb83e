//! Simulation and fitting models for a single ⁸⁸Sr⁺ ion in a miniature
//! linear Paul trap.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom_optics;
pub mod config;
pub mod constants;
pub mod experiments;
pub mod fitting;
pub mod motion_qubit;
pub mod signal;
pub mod trap_model;
