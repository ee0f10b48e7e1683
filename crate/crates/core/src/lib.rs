//! Simulation and control workbench for a vibration-driven stick-slip
//! micro-robot.
//!
//! The robot is a small triangular platform standing on three spring legs,
//! shaken by two eccentric-rotating-mass (ERM) vibration motors. The spinning
//! eccentrics produce a horizontal thrust component and a vertical component
//! that modulates the leg normal loads; alternating stiction and sliding
//! phases rectify the vibration into net planar motion.
//!
//! The crate provides:
//!
//! - the planar rigid-body dynamics and the two-mode contact model
//!   (leg springs while stuck, Coulomb kinetic friction while sliding),
//! - the static voltage-to-speed map of the vibration motors,
//! - a fixed-step RK4 integrator with per-step mode switching,
//! - a self-tuning PID controller whose six gains are produced online by a
//!   small neural network, assisted by a second network that identifies the
//!   plant and supplies its input-output Jacobian,
//! - an experiment harness: open-loop parameter sweeps, closed-loop tracking
//!   runs, CSV traces and standalone SVG plots.
//!
//! Everything is deterministic: a run is a pure function of its configuration
//! and seed, and re-running produces byte-identical output files.

// Validation uses `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also rejects
// NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod contact;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod identifier;
pub mod math;
pub mod mlp;
pub mod params;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use params::{Config, RobotParams, SimConfig};
