//! Key-rate model for plug-and-play BB84 with an unknown, untrusted source.
//!
//! The crate is layered bottom-up: [`numerics`] supplies special functions,
//! [`source`] the photon-number envelopes of untagged pulses, [`channel`] the
//! detection statistics, [`rate`] the four secure-key-rate evaluators,
//! [`optimizer`] the parameter search, and [`experiments`] the distance scans
//! and threshold solvers built on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod optimizer;
pub mod params;
pub mod rate;
pub mod source;

pub use error::{Error, Result};
pub use params::{Conventions, PhysicalParams};
pub use rate::{KeyRateModel, ProtocolPoint, RateBreakdown, Scenario};
