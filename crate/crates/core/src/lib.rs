//! Software model of a 60 GHz near-gigabit single-carrier WPAN baseband.
//!
//! The transmit chain is `payload -> RS(255,239) -> additive scrambler ->
//! preamble insertion -> differential encoding -> antipodal mapping`; the
//! receive chain inverts it with a conjugate-product differential
//! demodulator and a two-bank, eight-offset preamble correlator that
//! recovers byte and frame alignment together.
//!
//! Alongside the bit-exact chain the crate carries the analytic side of the
//! design: exact binomial tails for synchronizer miss and false-alarm
//! probabilities, closed-form DBPSK/BPSK error rates, a free-space link
//! budget with blockage events, and a discrete-event model of the
//! dual-clock FIFO that adapts the 125 MHz GMII byte clock to the
//! source byte clock.
//!
//! [`harness`] ties everything into seeded, reproducible experiments.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitframe;
pub mod bits;
mod error;
pub mod fec_rs;
pub mod flowctl;
pub mod framesync;
pub mod harness;
pub mod linecode;
pub mod linkbudget;
pub mod modem;

pub use bitframe::{build_frame, parse_frame, Frame, FrameLayout, ParsedFrame, PreamblePattern};
pub use bits::PackedBits;
pub use error::{Error, Result};
pub use fec_rs::{rs_decode, rs_encode, Decoded};
pub use flowctl::{ClockPlan, FifoConfig, FifoTrace};
pub use framesync::{BankScores, SyncDecision, SyncParams};
pub use linecode::ScramblerSequence;
pub use linkbudget::{BlockageEvent, LinkParams};
pub use modem::{NoiseSpec, SymbolStream};
