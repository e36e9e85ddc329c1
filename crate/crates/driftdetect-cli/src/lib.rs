//! Command-line companion to `driftdetect-core`: file formats, JSON run
//! configuration, and the `driftdetect` subcommands.
//!
//! The heavy lifting (feature extraction, clustering, detection, baselines,
//! tuning) lives in the core crate; this crate adds the filesystem surface:
//! CSV/JSON readers and writers ([`formats`]), layered configuration
//! ([`config`]), structured error reporting ([`errors`]), and the command
//! implementations ([`commands`]).

#![warn(missing_docs)]

pub mod commands;
pub mod config;
pub mod errors;
pub mod formats;
