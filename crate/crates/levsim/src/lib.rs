//! Simulation and analysis toolkit for ultra-low-dissipation levitated
//! mechanical oscillators.
//!
//! The crate covers the workflow of a levitation experiment end to end:
//!
//! * closed-form instrument physics: gas damping, thermal force and
//!   acceleration noise floors, equipartition, spin-mechanics coupling
//!   figures ([`physics`]),
//! * stochastic time-domain simulation of one mode with lock-in based
//!   feedback for excitation and cold damping ([`sim`], [`lockin`]),
//! * dissipation estimators for ring-down, spectral linewidth, and energy
//!   autocorrelation records ([`estimate`], [`spectral`]),
//! * passive vibration isolation budgets ([`isolation`]),
//! * deterministic time-series serialization ([`series`]).
//!
//! # Conventions
//!
//! Damping rates `gamma` are angular (1/s) everywhere in code; reports and
//! file headers quote `gamma/2pi` in Hz. Power spectral densities are
//! one-sided. Every stochastic routine takes an explicit seed and produces
//! bit-identical output for identical inputs.

pub mod constants;
pub mod estimate;
pub mod isolation;
pub mod lockin;
pub mod physics;
pub mod presets;
pub mod series;
pub mod sim;
pub mod spectral;
