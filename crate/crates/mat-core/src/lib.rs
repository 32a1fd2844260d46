//! Core library for bearing-only multi-robot workspace triangulation.
//!
//! A fixed population of robots spreads out from a base edge and covers an
//! unknown polygonal workspace with triangles, using only quantized angle
//! measurements to neighbors plus short-range wall sensing. The triangulation
//! is stored distributedly: every triangle record lives on its owner robot,
//! and the dual graph (triangle adjacency) is realized by owner-to-owner
//! communication links. Hop counts flooded over the dual graph steer new
//! robots breadth-first to the frontier, and later serve as a routing guide.
//!
//! The crate is `no_std`-compatible (`alloc` required); all float math goes
//! through [`libm`] so results are identical with and without `std`.
//!
//! Module map:
//! - [`angle`], [`geom`]: angular predicates and planar primitives.
//! - [`env`]: polygonal workspace, line of sight, wall sensing, motion.
//! - [`msg`]: the constant-size per-round broadcast and its wire codec.
//! - [`view`]: neighbor graph construction and two-hop angle sharing.
//! - [`agent`]: the per-robot finite-state controller.
//! - [`store`]: triangle records, edge classes, checkers, dual graph.
//! - [`world`]: synchronous lockstep round scheduler.
//! - [`analysis`]: BFS routing, greedy paths, shortest-path oracle,
//!   fatness and coverage metrics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agent;
pub mod analysis;
pub mod angle;
pub mod env;
pub mod error;
pub mod geom;
pub mod msg;
pub mod store;
pub mod view;
pub mod world;

pub(crate) mod fm;

pub use angle::{Angle, InnerAngles};
pub use env::{Pose, RobotSpec, WallSense, WorkspacePolygon};
pub use error::CoreError;
pub use geom::Point;
pub use msg::{FsmState, RobotId, RoundMessage, TableCaps, TriKey, TriKind};
pub use store::{DualGraph, EdgeClass, EdgeKind, TriangleRecord};
pub use world::{World, WorldConfig};
