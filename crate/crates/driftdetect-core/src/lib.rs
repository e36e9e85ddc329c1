//! Unsupervised behavioural drift detection over event streams.
//!
//! The pipeline turns raw timestamped events into per-interval feature rows
//! ([`events`]), summarises each interval by the centroid of its densest
//! micro-cluster group ([`clustering`]), and scans the resulting trajectory
//! with a two-window ensemble of hyperbox trackers and divergence tests
//! ([`trackers`], [`divergence`], [`detector`]). Companion modules provide a
//! seeded synthetic generator ([`datagen`]), Kolmogorov-Smirnov reference
//! detectors ([`baselines`]), and scoring plus random-search tuning
//! ([`eval`]).
//!
//! The crate is `no_std` (with `alloc`) so the algorithms can run inside
//! embedded monitoring appliances; file formats and the command-line front
//! end live in the companion `driftdetect-cli` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod baselines;
pub mod clustering;
pub mod datagen;
pub mod detector;
pub mod divergence;
pub mod eval;
pub mod events;
pub mod trackers;
