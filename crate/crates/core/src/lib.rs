//! Simulation and control of a pedal-assist e-bike that shares wheel power
//! between rider and motor to limit the rider's pollution exposure.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod physics;
pub mod physio;
pub mod powersplit;
pub mod report;
pub mod route;
pub mod sim;
pub mod telemetry;
