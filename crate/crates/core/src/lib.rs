//! Multilevel SPWM motor-drive simulator.
//!
//! The crate models a complete desk-scale drive: a family of level-shifted
//! carrier modulators (four dispositions, four sampling strategies including
//! a crossing-time-corrected one), an ideal m-level inverter, a DC series
//! motor plant integrated with a fixed-step 4th-order scheme, a single-sensor
//! current loop, a neuro-fuzzy speed controller (Takagi-Sugeno inference plus
//! two small feedforward networks trained by backprop), and the synchronous
//! harmonic analysis used to compare the modulation methods.

pub mod analysis;
pub mod control;
pub mod current_loop;
pub mod error;
pub mod inverter;
pub mod modulation;
pub mod plant;
pub mod scenario;
pub mod sim;
