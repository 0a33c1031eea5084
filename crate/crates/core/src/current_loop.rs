//! Single-sensor current loop: rectify three phase currents, low-pass the
//! result into an amplitude estimate, and regulate that amplitude with one
//! proportional-integral controller.
//!
//! The machine model is a single electrical circuit, so the three phase
//! currents are synthesized from its one current by an ideal 120°-conduction
//! quasi-square template. Rectifying those (max of absolute values) gives a
//! signal whose flat top *is* the amplitude, which a first-order low-pass
//! turns into a clean DC estimate — one sensor and one controller replace a
//! per-phase current scheme.
//!
//! # Example
//!
//! ```
//! use mldrive::current_loop::{extract_imax, quasi_square_currents, CurrentLoopState};
//!
//! let mut state = CurrentLoopState::new(5.0).unwrap();
//! let phases = quasi_square_currents(5.0, 0.3);
//! extract_imax(&phases, &mut state, 0.2, 1e-4).unwrap();
//! assert!((state.i_max_est - 5.0).abs() < 1e-12);
//! ```

use crate::error::{DriveError, Result};
use std::f64::consts::PI;

/// Instantaneous currents of the three phases (A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCurrents {
    pub i_a: f64,
    pub i_b: f64,
    pub i_c: f64,
}

/// Gains and filter time constant of the amplitude loop.
#[derive(Debug, Clone, Copy)]
pub struct CurrentLoopConfig {
    /// Proportional gain on the amplitude error (1/A).
    pub kp_i: f64,
    /// Integral gain on the amplitude error (1/(A·s)).
    pub ki_i: f64,
    /// Time constant of the amplitude-extraction low-pass (s).
    pub tau_imax: f64,
}

impl Default for CurrentLoopConfig {
    fn default() -> CurrentLoopConfig {
        CurrentLoopConfig {
            kp_i: 0.05,
            ki_i: 0.5,
            // Ten fundamental periods at the 50 Hz default.
            tau_imax: 0.2,
        }
    }
}

impl CurrentLoopConfig {
    /// Checks that all gains and the filter time constant are positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.kp_i > 0.0) || !(self.ki_i > 0.0) || !(self.tau_imax > 0.0) {
            return Err(DriveError::Config {
                line: 0,
                message: format!(
                    "current-loop gains must be positive: kp_i={}, ki_i={}, tau_imax={}",
                    self.kp_i, self.ki_i, self.tau_imax
                ),
            });
        }
        Ok(())
    }
}

/// Mutable state of the amplitude loop, owned by the simulation.
#[derive(Debug, Clone, Copy)]
pub struct CurrentLoopState {
    /// Extracted current amplitude (A), always ≥ 0.
    pub i_max_est: f64,
    /// Low-pass filter memory behind the estimate.
    pub filter_state: f64,
    /// Integrator of the proportional-integral law.
    pub integrator: f64,
    /// Commanded amplitude (A), ≥ 0.
    pub i_ref: f64,
    /// False until the first sample seeds the filter.
    pub primed: bool,
}

impl CurrentLoopState {
    /// Fresh loop state for a commanded amplitude.
    pub fn new(i_ref: f64) -> Result<CurrentLoopState> {
        if !(i_ref >= 0.0) || !i_ref.is_finite() {
            return Err(DriveError::Config {
                line: 0,
                message: format!("commanded amplitude must be finite and >= 0, got {i_ref}"),
            });
        }
        Ok(CurrentLoopState {
            i_max_est: 0.0,
            filter_state: 0.0,
            integrator: 0.0,
            i_ref,
            primed: false,
        })
    }
}

/// Ideal 120°-conduction quasi-square template at electrical angle `theta`
/// (rad): each phase carries +amplitude for a third of the cycle, −amplitude
/// for another third, and rests for the two 60° gaps between; phases are
/// shifted by 120°. At every angle exactly one phase is positive and one
/// negative, so the currents sum to zero and the rectified maximum equals
/// the amplitude.
pub fn quasi_square_currents(amplitude: f64, theta: f64) -> PhaseCurrents {
    let template = |angle: f64| -> f64 {
        let a = angle.rem_euclid(2.0 * PI);
        if a < 2.0 * PI / 3.0 {
            1.0
        } else if a < PI {
            0.0
        } else if a < 5.0 * PI / 3.0 {
            -1.0
        } else {
            0.0
        }
    };
    PhaseCurrents {
        i_a: amplitude * template(theta),
        i_b: amplitude * template(theta - 2.0 * PI / 3.0),
        i_c: amplitude * template(theta - 4.0 * PI / 3.0),
    }
}

/// Updates the amplitude estimate from one sample of the three phase
/// currents: rectification (max of absolute values) followed by an exact
/// first-order low-pass of time constant `tau`. The first sample seeds the
/// filter directly, so a constant rectified input is tracked with no
/// start-up transient. Returns the new estimate.
pub fn extract_imax(
    currents: &PhaseCurrents,
    state: &mut CurrentLoopState,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) || !(tau > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!("filter needs dt > 0 and tau > 0, got dt={dt}, tau={tau}"),
        });
    }
    if ![currents.i_a, currents.i_b, currents.i_c]
        .iter()
        .all(|i| i.is_finite())
    {
        return Err(DriveError::StateCorruption(format!(
            "non-finite phase currents: {currents:?}"
        )));
    }
    let rectified = currents.i_a.abs().max(currents.i_b.abs()).max(currents.i_c.abs());
    if state.primed {
        // Exact discretization of tau·dy/dt = u − y over one step.
        let decay = (-dt / tau).exp();
        state.filter_state = rectified + (state.filter_state - rectified) * decay;
    } else {
        state.filter_state = rectified;
        state.primed = true;
    }
    state.i_max_est = state.filter_state;
    Ok(state.i_max_est)
}

/// One tick of the proportional-integral amplitude regulator. The output is
/// a dimensionless command clamped to [0, 1]; while the clamp is active the
/// integrator is frozen (conditional integration) so it cannot wind up.
pub fn current_controller(
    i_ref: f64,
    i_max_est: f64,
    cfg: &CurrentLoopConfig,
    integrator: &mut f64,
    dt: f64,
) -> Result<f64> {
    cfg.validate()?;
    if !(dt > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!("controller needs dt > 0, got {dt}"),
        });
    }
    let error = i_ref - i_max_est;
    let candidate = *integrator + cfg.ki_i * error * dt;
    let raw = cfg.kp_i * error + candidate;
    let command = raw.clamp(0.0, 1.0);
    if raw == command {
        *integrator = candidate;
    }
    Ok(command)
}

/// Electromagnetic torque of the amplitude-linear machine model:
/// T = k_t_amp · i_max.
pub fn electromagnetic_torque(i_max: f64, k_t_amp: f64) -> Result<f64> {
    if i_max < 0.0 || !i_max.is_finite() {
        return Err(DriveError::Domain(format!(
            "current amplitude must be finite and >= 0, got {i_max}"
        )));
    }
    Ok(k_t_amp * i_max)
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
