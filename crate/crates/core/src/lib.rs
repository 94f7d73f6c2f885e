//! GPU fleet reliability toolkit.
//!
//! Reconstructs a full reliability-measurement pipeline for GPU clusters:
//! parsing driver error logs and scheduler job records, coalescing error
//! bursts, computing mean-time-between-errors at system/node/GPU/GB
//! granularity, mining error-propagation graphs, attributing job failures
//! to GPU errors, estimating node availability, and projecting spare
//! capacity needs for large gang-scheduled jobs via simulation.
//!
//! Stages exchange plain files (JSONL for records, CSV for tables, DOT for
//! graphs) so every intermediate is inspectable; the `fleetres` binary
//! wires the stages together. See the `examples/` directory for one
//! runnable example per capability.

pub mod coalesce;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod jobimpact;
pub mod metrics;
pub mod propagation;
pub mod report;
pub mod simulate;
pub mod synth;
pub mod taxonomy;

pub use error::{Error, Result};
