//! Co-simulation of a droop-controlled DC microgrid whose secondary
//! coordination layer is a set of per-node spiking neural networks.
//!
//! The physical layer is a linear RC network of droop-sourced converter
//! buses tied by resistive lines; the neural layer samples local voltage
//! and current event-wise, encodes them as spike trains (rate for voltage,
//! latency for current), and adapts the droop gains online from
//! spike-timing statistics.

// Validation predicates are written as !(x > 0.0) so that NaN fails them;
// the positive comparison clippy suggests would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coding;
pub mod droop;
pub mod engine;
pub mod error;
pub mod grid;
pub mod scenario;
pub mod snn;
pub mod trace_io;

pub use error::{Error, Result};
