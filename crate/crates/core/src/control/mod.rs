//! Neuro-fuzzy speed controller: two small neural networks in series with
//! an optional Takagi–Sugeno supervisory stage.
//!
//! The first network estimates rotor speed from electrical measurements
//! (reference speed, previous terminal voltage, previous armature current),
//! standing in for a mechanical sensor. The second network consumes those
//! same measurements plus the speed estimate and emits the duty command
//! `alpha`, which the drive interprets as the modulation-index request for
//! the inverter. Alpha is always clamped to [0, 1].
//!
//! # Example
//!
//! ```
//! use mldrive::control::{controller_step, ControllerSample};
//! use mldrive::control::mlp::Mlp;
//!
//! let ann1 = Mlp::zeroed(&[3, 8, 1]);
//! let ann2 = Mlp::zeroed(&[4, 10, 1]);
//! let mut sample = ControllerSample::new(100.0, 220.0, 3.0);
//! let alpha = controller_step(&ann1, &ann2, &mut sample).unwrap();
//! assert_eq!(alpha, 0.0);
//! assert_eq!(sample.w_est_k, 0.0);
//! ```

pub mod fuzzy;
pub mod mlp;

pub use fuzzy::{ts_infer, TSModel};
pub use mlp::{mlp_forward, Mlp};

use crate::error::{DriveError, Result};

/// One controller tick's worth of signals: the three measurements the
/// networks see, plus the two values the step computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSample {
    /// Reference speed ω_r(k) (rad/s).
    pub w_ref_k: f64,
    /// Terminal voltage from the previous tick, V_t(k−1) (V).
    pub v_t_prev: f64,
    /// Armature current from the previous tick, i_a(k−1) (A).
    pub i_a_prev: f64,
    /// Estimated speed ω̂(k) (rad/s), written by [`controller_step`].
    pub w_est_k: f64,
    /// Duty command in [0, 1], written by [`controller_step`].
    pub alpha_k: f64,
}

impl ControllerSample {
    /// Builds a sample from the three measured inputs; the computed fields
    /// start at zero until [`controller_step`] fills them in.
    pub fn new(w_ref_k: f64, v_t_prev: f64, i_a_prev: f64) -> ControllerSample {
        ControllerSample {
            w_ref_k,
            v_t_prev,
            i_a_prev,
            w_est_k: 0.0,
            alpha_k: 0.0,
        }
    }
}

/// Runs one tick of the two-network pipeline: the estimator maps
/// (ω_r, V_t(k−1), i_a(k−1)) to ω̂, then the commander maps those three plus
/// ω̂ to a duty command clamped to [0, 1]. Both results are recorded in the
/// sample and alpha is returned.
pub fn controller_step(
    estimator: &Mlp,
    commander: &Mlp,
    sample: &mut ControllerSample,
) -> Result<f64> {
    if estimator.input_dim() != 3 || estimator.output_dim() != 1 {
        return Err(DriveError::ShapeMismatch(format!(
            "speed estimator must map 3 inputs to 1 output, got {}->{}",
            estimator.input_dim(),
            estimator.output_dim()
        )));
    }
    if commander.input_dim() != 4 || commander.output_dim() != 1 {
        return Err(DriveError::ShapeMismatch(format!(
            "duty commander must map 4 inputs to 1 output, got {}->{}",
            commander.input_dim(),
            commander.output_dim()
        )));
    }
    let w_est = estimator.forward(&[sample.w_ref_k, sample.v_t_prev, sample.i_a_prev])?[0];
    let raw =
        commander.forward(&[sample.w_ref_k, sample.v_t_prev, sample.i_a_prev, w_est])?[0];
    sample.w_est_k = w_est;
    sample.alpha_k = raw.clamp(0.0, 1.0);
    Ok(sample.alpha_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroed_networks_give_zero_estimate_and_zero_alpha() {
        let ann1 = Mlp::zeroed(&[3, 8, 1]);
        let ann2 = Mlp::zeroed(&[4, 10, 1]);
        let mut sample = ControllerSample::new(150.0, 180.0, 4.2);
        let alpha = controller_step(&ann1, &ann2, &mut sample).unwrap();
        assert_eq!(alpha, 0.0);
        assert_eq!(sample.w_est_k, 0.0);
        assert_eq!(sample.alpha_k, 0.0);
    }

    #[test]
    fn alpha_above_one_clamps_to_one() {
        let ann1 = Mlp::zeroed(&[3, 8, 1]);
        // A zeroed commander with its output bias forced to 1.7 emits 1.7
        // before the clamp.
        let mut ann2 = Mlp::zeroed(&[4, 10, 1]);
        ann2.layers.last_mut().unwrap().b[0] = 1.7;
        let mut sample = ControllerSample::new(100.0, 200.0, 3.0);
        let alpha = controller_step(&ann1, &ann2, &mut sample).unwrap();
        assert_eq!(alpha, 1.0);
        assert_eq!(sample.alpha_k, 1.0);
    }

    #[test]
    fn negative_alpha_clamps_to_zero() {
        let ann1 = Mlp::zeroed(&[3, 8, 1]);
        let mut ann2 = Mlp::zeroed(&[4, 10, 1]);
        ann2.layers.last_mut().unwrap().b[0] = -0.3;
        let mut sample = ControllerSample::new(100.0, 200.0, 3.0);
        assert_eq!(controller_step(&ann1, &ann2, &mut sample).unwrap(), 0.0);
    }

    #[test]
    fn estimate_feeds_the_commander() {
        // Estimator emits a constant 2.0 (bias); commander passes its fourth
        // input straight through. Alpha must then clamp 2.0 to 1.0 and the
        // recorded estimate must be 2.0.
        let mut ann1 = Mlp::zeroed(&[3, 8, 1]);
        ann1.layers.last_mut().unwrap().b[0] = 2.0;
        let mut ann2 = Mlp::zeroed(&[4, 10, 1]);
        {
            let hidden = &mut ann2.layers[0];
            hidden.w[0][3] = 0.1; // small enough to stay in tanh's linear-ish zone
        }
        ann2.layers[1].w[0][0] = 1.0;
        let mut sample = ControllerSample::new(0.0, 0.0, 0.0);
        let alpha = controller_step(&ann1, &ann2, &mut sample).unwrap();
        assert_eq!(sample.w_est_k, 2.0);
        let expected = (0.1f64 * 2.0).tanh();
        assert!((alpha - expected).abs() < 1e-15);
    }

    #[test]
    fn wrong_network_shapes_are_rejected() {
        let square = Mlp::zeroed(&[4, 4, 1]);
        let ann2 = Mlp::zeroed(&[4, 10, 1]);
        let mut sample = ControllerSample::new(1.0, 1.0, 1.0);
        assert!(matches!(
            controller_step(&square, &ann2, &mut sample),
            Err(DriveError::ShapeMismatch(_))
        ));
        let ann1 = Mlp::zeroed(&[3, 8, 1]);
        let narrow = Mlp::zeroed(&[3, 10, 1]);
        assert!(matches!(
            controller_step(&ann1, &narrow, &mut sample),
            Err(DriveError::ShapeMismatch(_))
        ));
    }
}
