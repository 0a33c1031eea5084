//! DC series-motor dynamics under the inverter's applied voltage.
//!
//! The machine is the classical series pair
//!
//! ```text
//! l·di/dt = v − r·i − k_m·i·ω
//! j·dω/dt = T_e − b·ω − t_load
//! ```
//!
//! with two torque laws: `SeriesQuadratic` (T_e = k_m·i², the series-field
//! machine — torque is non-negative for either current polarity, which is
//! why such a machine runs happily from an AC-shaped supply) and
//! `AmplitudeLinear` (T_e = k_t_amp·i, where the current state is read as a
//! regulated phase-current amplitude).
//!
//! Integration is fixed-step classical 4th order; the step must resolve the
//! switching waveform (dt ≤ 1/(20·f_c) in PWM scenarios) because the raw
//! level voltage drives the plant and the inductance does the filtering.
//!
//! # Example
//!
//! ```
//! use mldrive::plant::{step_motor, MotorParams, MotorState};
//!
//! let p = MotorParams::default();
//! let mut s = MotorState { omega: 0.0, i: 0.0, t: 0.0 };
//! s = step_motor(&s, 24.0, 0.0, &p, 1e-4).unwrap();
//! assert!(s.i > 0.0 && s.t == 1e-4);
//! ```

use crate::error::{DriveError, Result};

/// Which electromagnetic torque law the machine follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorqueModel {
    /// T_e = k_m·i² (series field: torque insensitive to current polarity).
    SeriesQuadratic,
    /// T_e = k_t_amp·i (current state read as a phase-current amplitude).
    AmplitudeLinear,
}

/// Electrical and mechanical constants of the machine.
///
/// The defaults are desk-scale bench values, not measurements of any
/// particular machine.
#[derive(Debug, Clone)]
pub struct MotorParams {
    /// Total series resistance (armature + field) in ohms.
    pub r_total: f64,
    /// Total series inductance in henries.
    pub l_total: f64,
    /// Machine constant in V·s/(A·rad); doubles as N·m/A² in series mode.
    pub k_m: f64,
    /// Amplitude torque constant in N·m/A for `AmplitudeLinear`.
    pub k_t_amp: f64,
    /// Rotor inertia in kg·m².
    pub j_inertia: f64,
    /// Viscous friction in N·m·s/rad.
    pub b_friction: f64,
    /// Active torque law.
    pub torque_model: TorqueModel,
}

impl Default for MotorParams {
    fn default() -> Self {
        MotorParams {
            r_total: 2.0,
            l_total: 0.05,
            k_m: 0.05,
            k_t_amp: 0.8,
            j_inertia: 0.01,
            b_friction: 0.001,
            torque_model: TorqueModel::SeriesQuadratic,
        }
    }
}

impl MotorParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            self.r_total,
            self.l_total,
            self.k_m,
            self.k_t_amp,
            self.j_inertia,
            self.b_friction,
        ];
        if positive.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(DriveError::Config {
                line: 0,
                message: format!("motor parameters must all be strictly positive: {self:?}"),
            });
        }
        Ok(())
    }

    /// Electromagnetic torque for current `i` under the active law.
    pub fn torque(&self, i: f64) -> f64 {
        match self.torque_model {
            TorqueModel::SeriesQuadratic => self.k_m * i * i,
            TorqueModel::AmplitudeLinear => self.k_t_amp * i,
        }
    }
}

/// Continuous state of the machine.
#[derive(Debug, Clone, Copy)]
pub struct MotorState {
    /// Shaft angular speed in rad/s.
    pub omega: f64,
    /// Machine current in A.
    pub i: f64,
    /// Simulation time in s.
    pub t: f64,
}

/// Right-hand side of the motor ODEs: returns (di/dt, dω/dt).
pub fn derivatives(
    state: &MotorState,
    v_applied: f64,
    t_load: f64,
    p: &MotorParams,
) -> Result<(f64, f64)> {
    p.validate()?;
    if !(state.omega.is_finite() && state.i.is_finite() && state.t.is_finite())
        || !v_applied.is_finite()
        || !t_load.is_finite()
    {
        return Err(DriveError::StateCorruption(format!(
            "non-finite plant input: state={state:?}, v={v_applied}, t_load={t_load}"
        )));
    }
    let di_dt = (v_applied - p.r_total * state.i - p.k_m * state.i * state.omega) / p.l_total;
    let domega_dt = (p.torque(state.i) - p.b_friction * state.omega - t_load) / p.j_inertia;
    Ok((di_dt, domega_dt))
}

/// Advances the machine one classical 4th-order step of size `dt` under a
/// voltage and load torque held constant over the step.
pub fn step_motor(
    state: &MotorState,
    v_applied: f64,
    t_load: f64,
    p: &MotorParams,
    dt: f64,
) -> Result<MotorState> {
    if !(dt > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!("integration step must be positive, got {dt}"),
        });
    }
    let eval = |omega: f64, i: f64| -> Result<(f64, f64)> {
        derivatives(
            &MotorState { omega, i, t: state.t },
            v_applied,
            t_load,
            p,
        )
    };
    let (ki1, kw1) = eval(state.omega, state.i)?;
    let (ki2, kw2) = eval(
        state.omega + 0.5 * dt * kw1,
        state.i + 0.5 * dt * ki1,
    )?;
    let (ki3, kw3) = eval(
        state.omega + 0.5 * dt * kw2,
        state.i + 0.5 * dt * ki2,
    )?;
    let (ki4, kw4) = eval(state.omega + dt * kw3, state.i + dt * ki3)?;
    Ok(MotorState {
        omega: state.omega + dt / 6.0 * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4),
        i: state.i + dt / 6.0 * (ki1 + 2.0 * ki2 + 2.0 * ki3 + ki4),
        t: state.t + dt,
    })
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
