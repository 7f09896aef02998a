//! Delay-based location verification, end to end: geodesy and triangle
//! geometry, a deterministic simulated network, one-way-delay estimation
//! protocols with exact error analysis, the triangle-area verification
//! engine, the geolocation techniques it hardens against manipulation,
//! 802.11 single-hop delay models, and puzzle-based relay limiting.
//!
//! The crate is `no_std` (allocation required). All randomness flows from
//! seeded [`rng::SimRng`] streams so that any computation is reproducible
//! from its seed.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adversary;
pub mod cpv;
pub mod geo;
pub mod geoloc;
pub mod math;
pub mod owd;
pub mod pmf;
pub mod powrelay;
pub mod rng;
pub mod simnet;
pub mod stats;
pub mod wireless;
