//! Aerodynamic force-coefficient estimation for a flywheel-launched foam
//! ball, plus everything downstream of it: a planar trajectory simulator
//! with drag and Magnus lift, brute-force coefficient fitting against
//! labeled launch outcomes, synthetic dataset generation, and a small
//! from-scratch sigmoid network that predicts 2-point / 3-point scoring
//! from a launch configuration.
//!
//! Pipeline: experimental (or pseudo-experimental) launch data feeds a grid
//! search over (C_l, C_d); the fitted simulator labels a large configuration
//! grid; a class-balanced sample of that grid augments the experimental
//! training set under a dual cross-entropy objective.

pub mod config;
pub mod datagen;
pub mod error;
pub mod estimation;
pub mod mlp;
pub mod physics;
pub mod svg;
pub mod trajectory;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use physics::{BallParams, CoefficientPair, Environment, FlywheelGeometry, LaunchConfig};
pub use trajectory::{Integrator, Outcome, SimOptions, TargetSpec, Trajectory};
