//! Deterministic dumbbell-topology network emulator.
//!
//! The crate is organised as a pipeline:
//!
//! * [`config`] describes an experiment (layout file, run parameters, metadata).
//! * [`emulator`] simulates the dumbbell topology and drives the flows.
//! * [`schemes`] holds the congestion-control models that generate traffic.
//! * [`capture`] writes and reads the per-host PCAP files.
//! * [`analysis`] turns sender/receiver capture pairs into flow logs.
//! * [`reporting`] builds curves, statistics and SVG plots from flow logs.
//! * [`cli`] wires everything into the `run`, `analyze`, `plot` and `clean` commands.

pub mod analysis;
pub mod capture;
pub mod cli;
pub mod config;
pub mod emulator;
pub mod error;
pub mod rng;
pub mod reporting;
pub mod schemes;

pub use error::{Error, Result};
