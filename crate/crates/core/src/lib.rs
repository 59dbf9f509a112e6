//! Core algorithms for judging learning-from-demonstration data by the task
//! performance of the model it produces.
//!
//! The pipeline is: joint-space demonstrations are turned into Cartesian
//! state points ([`demonstrations`]), time-aligned, and used to fit a
//! task-parameterized Gaussian mixture ([`tpgmm`]). Trajectories generated
//! for demonstrated and unseen targets are converted to joint motion with
//! closed-loop inverse kinematics ([`clik`]) on a 7-DoF arm
//! ([`kinematics`]), then scored against the button box ([`taskworld`]).
//! [`assessment`] turns scores into quality labels and correlations, and
//! [`synthcohort`] fabricates demonstrator cohorts to drive the whole thing.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! parallel study execution live in the `lfdq` crate.

#![no_std]
// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assessment;
pub mod clik;
pub mod demonstrations;
mod error;
pub mod geometry;
pub mod kinematics;
pub mod quat;
pub mod synthcohort;
pub mod taskworld;
pub mod tpgmm;

pub use error::{Error, Result};
/// The linear-algebra crate all public types are built on.
pub use nalgebra;

/// Number of joints of every supported arm.
pub const DOF: usize = 7;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;
