//! Cycle-level co-simulation of an FPGA mobile-robot controller.
//!
//! An 8-bit PWM drives an L293D H-bridge, an ADC0809 samples a GP2D12 infrared
//! ranger through a START/ALE/EOC/OE handshake, a calibration table turns the
//! raw code back into centimetres, and a seven-segment digit shows the range.
//! The controller is closed against a differential-drive plant moving among
//! circular obstacles. Every run is deterministic: the same configuration
//! produces byte-identical CSV and VCD traces.

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod config;
pub mod controller;
pub mod error;
pub mod kernel;
pub mod l293;
pub mod plant;
pub mod pwm;
pub mod run;
pub mod sensor;
pub mod sevenseg;
pub mod system;
pub mod trace;

pub use error::{Result, SimError};
