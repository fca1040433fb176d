//! Person following with active search.
//!
//! A deterministic 2D simulator and library covering occupancy mapping,
//! frontier-based way-point search, leg tracking with nearest-neighbor
//! association, target re-identification, SVR trajectory prediction and a
//! behavior tree that coordinates them.
//!
//! Each capability has a runnable example under `examples/`.

pub mod geometry;
pub mod world;
pub mod tracking;
pub mod identity;
pub mod search;
pub mod predict;
pub mod behavior;
pub mod control;
pub mod simkit;
