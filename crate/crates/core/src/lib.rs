//! Adaptive optimized-displacement receivers for M-ary phase-shift-keyed
//! coherent states.
//!
//! The receiver displaces the incoming pulse so that one hypothesis (the
//! *probe*) sits just past the vacuum, counts photons with an on-off
//! detector, and changes the probe after every click. Two feedback rules
//! are provided: cyclic rotation through the alphabet and probing the
//! maximum-a-posteriori state.
//!
//! - [`signal`]: alphabet geometry and displaced photon rates.
//! - [`analytic`]: exact click statistics and the cyclic error probability.
//! - [`strategy`]: the feedback state machines.
//! - [`mc`]: seeded, parallel Monte Carlo with detector imperfections.
//! - [`bounds`]: Helstrom bound and heterodyne standard quantum limit.
//! - [`optimize`]: choice of the displacement overshoot.

// `!(x >= 0.0)` rejects NaN as well as negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bounds;
mod error;
pub mod mc;
pub mod optimize;
mod quad;
pub mod signal;
pub mod strategy;

pub use error::{Error, Result};
pub use mc::{ErrorEstimate, ImperfectionModel, ReceiverConfig, TrialOutcome};
pub use signal::{ComplexField, PskAlphabet, RateVector};
pub use strategy::{Hypothesis, PosteriorState, Strategy};
