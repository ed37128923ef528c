//! Coverage evaluation for NR reduced-capability (RedCap) devices.
//!
//! The crate turns per-channel SINR requirements into maximum isotropic loss
//! (MIL) link budgets, picks the coverage bottleneck of a reference UE and
//! reports how much coverage each RedCap channel has to recover to reach the
//! same threshold.
//!
//! Layout:
//!
//! - [`numerology`]: subcarrier spacing, slot timing and TDD patterns.
//! - [`transport`]: MCS tables, transport block sizing and data rates.
//! - [`model`]: scenarios, UE profiles, channel allocations and SINR tables.
//! - [`linkbudget`]: MIL/MCL per channel and calibration fitting.
//! - [`analysis`]: bottleneck, threshold and coverage-recovery logic.
//! - [`fading`]: Monte Carlo MRC outage margins over Rayleigh fading.
//! - [`io`]: bundle loading and report emission.

// `!(x > 0.0)` is used on purpose so NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod fading;
pub mod io;
pub mod linkbudget;
pub mod model;
pub mod numerology;
pub mod transport;

mod error;

pub use error::{Error, Result};
