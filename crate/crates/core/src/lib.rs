//! Deterministic multi-agent simulator and control library for
//! vision-based leader-follower formation swimming with fish-inspired
//! underwater robots.
//!
//! The crate is organized around the onboard pipeline of one robot:
//!
//! - [`geometry`]: world/body frames and the camera transform.
//! - [`vision`]: synthetic LED-blob perception and the leader-pose parser.
//! - [`dynamics`]: surge-yaw-heave body model with quadratic drag.
//! - [`control`]: zonal and tanh follower controllers, depth band control,
//!   leader programs.
//! - [`scenario`]: declarative experiment configs and the built-in suite.
//! - [`engine`]: the synchronous 5 Hz perception / 100 Hz physics loop.
//! - [`log`]: per-tick trajectory records and their CSV form.
//! - [`metrics`]: distance series, settling detection, and aggregates.
//!
//! Every run is a pure function of (scenario, seed): identical inputs
//! produce byte-identical logs.

pub mod control;
pub mod dynamics;
pub mod engine;
pub mod geometry;
pub mod log;
pub mod metrics;
pub mod scenario;
pub mod vision;
