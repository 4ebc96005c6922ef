//! Rotated surface code memory experiments under circuit-level depolarizing
//! noise and coherent over-rotations.
//!
//! The pipeline is: [`layout`] builds the code, [`circuit`] compiles one
//! syndrome-extraction round into the cross-resonance gate set (parallel and
//! ancilla-reuse serialized forms), [`noise`] attaches channels, [`engine`]
//! drives either the dense [`statevector`] or the Clifford [`tableau`] backend,
//! [`decoder`] matches detection events, [`experiment`] runs Monte-Carlo
//! estimates and [`analysis`] fits and evaluates the effective models.

pub mod analysis;
pub mod circuit;
pub mod decoder;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod layout;
pub mod linalg;
pub mod matching;
pub mod noise;
pub mod pauli;
pub mod plots;
pub mod rng;
pub mod statevector;
pub mod tableau;

pub use error::{Error, Result};
