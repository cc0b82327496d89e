//! Optimal and worst-case value functions of discrete-time switched linear
//! systems.
//!
//! The crate covers three layers:
//!
//! * a generic data model ([`model`], [`jsr`], [`lipschitz`]) with trajectory
//!   simulation, brute-force joint spectral radius bounds and the Lipschitz
//!   arithmetic for value functions;
//! * a planar angular dynamic-programming solver ([`bellman`]) that exploits
//!   degree-2 homogeneity to reduce the value function to a pi-periodic
//!   profile;
//! * machinery specific to the two-mode scaled-rotation counterexample
//!   ([`construction`], [`threshold`], [`iem`], [`probe`]) that evaluates the
//!   optimal value function to machine precision, locates its switching
//!   thresholds and certifies kinks along the dense backward orbit of the
//!   induced interval exchange map.

pub mod angle;
pub mod bellman;
pub mod cli;
pub mod construction;
pub mod error;
pub mod fmt17;
pub mod iem;
pub mod jsr;
pub mod lipschitz;
pub mod model;
pub mod probe;
pub mod sysfile;
pub mod threshold;
pub mod verify;

pub use bellman::{AngularProfile, IterationReport, Objective};
pub use construction::RotationSystem;
pub use error::{Error, Result};
pub use jsr::JsrBounds;
pub use model::{Matrix, QuadraticCost, SwitchedSystem, TrajectoryRecord};
pub use threshold::ThresholdPolicy;
