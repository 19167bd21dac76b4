//! Speech emotion recognition with an attentive convolutional network.
//!
//! The crate covers the whole pipeline: WAV ingestion and frame-level
//! features ([`dsp`]), a small layer library with analytic gradients
//! ([`nn`]), the attentive CNN itself ([`model`]), corpus handling and a
//! synthetic corpus generator ([`data`]), Adam training with
//! leave-one-session-out cross-validation ([`train`]) and result reporting
//! ([`report`]).

pub mod cli;
pub mod data;
pub mod dsp;
pub mod error;
mod io_util;
pub mod matrix;
pub mod model;
pub mod nn;
pub mod report;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
pub use matrix::RealMatrix;
