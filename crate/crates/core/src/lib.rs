//! Particle swarm strategies for airborne drone swarms that sample a
//! synthetic aperture above an occluded target.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`] and [`rng`]: planar vectors and seeded random streams.
//! - [`swarm`]: generic PSO machinery (standard update, spherical sampling,
//!   charged repulsion) and [`reference`], a small box-constrained optimizer
//!   built from it.
//! - [`adapt`]: evolutionary factor, state classification and the two
//!   parameter-adaption schemes.
//! - [`scene`] and [`visibility`]: a procedural forest and a ray-cast
//!   visibility objective with an improve-only sample history.
//! - [`stepper`]: one time step of the drone-swarm update (default scanning
//!   line, leader-following update, Rutherford scattering).
//! - [`harness`]: experiment runs, curve averaging, histograms and file
//!   export.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod error;
pub mod geom;
pub mod harness;
pub mod reference;
pub mod rng;
pub mod scene;
pub mod stepper;
pub mod swarm;
pub mod visibility;

pub use error::{Error, Result};
pub use geom::Vec2;
