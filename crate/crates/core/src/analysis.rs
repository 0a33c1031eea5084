//! Spectral analysis: harmonic extraction, THD, and fundamental phase-lag
//! measurement.
//!
//! Harmonics are computed by synchronous Fourier projection at exact integer
//! multiples of the fundamental, not by a generic power-of-two transform.
//! Because the analysis window is required to span a whole number of
//! fundamental periods, the projections are leakage-free and inter-harmonics
//! are absent by construction.
//!
//! # Example
//!
//! ```
//! use mldrive::analysis::{spectrum_of, Waveform};
//!
//! let f = 50.0;
//! let dt = 1e-4;
//! let n = 400; // two periods
//! let samples: Vec<f64> = (0..n)
//!     .map(|i| (2.0 * std::f64::consts::PI * f * (i as f64) * dt).sin())
//!     .collect();
//! let w = Waveform { dt, samples };
//! let spec = spectrum_of(&w, f, 10).unwrap();
//! assert!((spec.magnitudes[0] - 1.0).abs() < 1e-9);
//! assert!(spec.thd_pct < 0.1);
//! ```

use crate::error::{DriveError, Result};

// ──────────────────────────────────────────────────────────────────────────
// Types
// ──────────────────────────────────────────────────────────────────────────

/// Uniformly sampled real signal. `samples[i]` is the value at `i * dt`.
#[derive(Debug, Clone)]
pub struct Waveform {
    /// Sample spacing in seconds.
    pub dt: f64,
    /// Sample values.
    pub samples: Vec<f64>,
}

impl Waveform {
    /// Total time spanned by the samples, in seconds.
    pub fn span(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

/// Harmonic content of a waveform relative to a fundamental frequency.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Fundamental frequency in Hz.
    pub f_fund: f64,
    /// Peak magnitude of harmonic n at index n-1, for n = 1..=N_h.
    pub magnitudes: Vec<f64>,
    /// Phase of the fundamental in radians, for `A*sin(w*t + phase)`.
    pub phase_fund: f64,
    /// Total harmonic distortion in percent: 100*sqrt(sum V_n^2, n>=2)/V_1.
    pub thd_pct: f64,
}

// ──────────────────────────────────────────────────────────────────────────
// Operations
// ──────────────────────────────────────────────────────────────────────────

/// Checks that `w` spans an integer number of periods of `f_fund` and returns
/// that count.
fn integer_period_count(w: &Waveform, f_fund: f64) -> Result<usize> {
    if !(f_fund > 0.0) || !(w.dt > 0.0) || w.samples.is_empty() {
        return Err(DriveError::AnalysisWindow(format!(
            "need positive f_fund, dt and a non-empty waveform (f_fund={f_fund}, dt={}, len={})",
            w.dt,
            w.samples.len()
        )));
    }
    let periods = w.span() * f_fund;
    let rounded = periods.round();
    if rounded < 1.0 || (periods - rounded).abs() > 1e-6 {
        return Err(DriveError::AnalysisWindow(format!(
            "waveform spans {periods:.9} periods of {f_fund} Hz; an integer count is required"
        )));
    }
    Ok(rounded as usize)
}

/// Fourier projection of `w` onto sin/cos at frequency `f`. Returns the
/// `(sin, cos)` coefficient pair of `w ~ s*sin(2*pi*f*t) + c*cos(2*pi*f*t)`.
fn project(w: &Waveform, f: f64) -> (f64, f64) {
    let omega = 2.0 * std::f64::consts::PI * f;
    let mut acc_s = 0.0;
    let mut acc_c = 0.0;
    for (i, &v) in w.samples.iter().enumerate() {
        let ang = omega * (i as f64) * w.dt;
        acc_s += v * ang.sin();
        acc_c += v * ang.cos();
    }
    let n = w.samples.len() as f64;
    (2.0 * acc_s / n, 2.0 * acc_c / n)
}

/// Computes harmonic magnitudes 1..=`n_harmonics` of `w` with respect to
/// `f_fund`, plus fundamental phase and THD.
///
/// The waveform must span an integer number of fundamental periods; THD is
/// undefined when the fundamental magnitude is zero.
pub fn spectrum_of(w: &Waveform, f_fund: f64, n_harmonics: usize) -> Result<Spectrum> {
    integer_period_count(w, f_fund)?;
    if n_harmonics == 0 {
        return Err(DriveError::AnalysisWindow(
            "need at least the fundamental harmonic".into(),
        ));
    }
    let mut magnitudes = Vec::with_capacity(n_harmonics);
    let mut phase_fund = 0.0;
    for n in 1..=n_harmonics {
        let (s, c) = project(w, f_fund * n as f64);
        magnitudes.push(s.hypot(c));
        if n == 1 {
            // w ~ V1*sin(wt + phase): sin coefficient = V1*cos(phase),
            // cos coefficient = V1*sin(phase).
            phase_fund = c.atan2(s);
        }
    }
    let v1 = magnitudes[0];
    // The projection of a fundamental-free signal is roundoff, not exactly
    // zero; treat anything below 1e-9 of the waveform peak as absent.
    let peak = w.samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if v1 <= 1e-9 * peak {
        return Err(DriveError::UndefinedThd);
    }
    let harm_sq: f64 = magnitudes[1..].iter().map(|m| m * m).sum();
    Ok(Spectrum {
        f_fund,
        magnitudes,
        phase_fund,
        thd_pct: 100.0 * harm_sq.sqrt() / v1,
    })
}

/// Phase of the output fundamental minus phase of the reference fundamental
/// at `f_fund`, wrapped to (-pi, pi]. A delayed output yields a negative
/// value; a delayed reference yields a positive one.
pub fn fundamental_phase_lag(output: &Waveform, reference: &Waveform, f_fund: f64) -> Result<f64> {
    if output.samples.len() != reference.samples.len() || output.dt != reference.dt {
        return Err(DriveError::ShapeMismatch(format!(
            "waveforms must share dt and length ({} x {} vs {} x {})",
            output.samples.len(),
            output.dt,
            reference.samples.len(),
            reference.dt
        )));
    }
    integer_period_count(output, f_fund)?;
    let (s_o, c_o) = project(output, f_fund);
    let (s_r, c_r) = project(reference, f_fund);
    let peak_o = output.samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let peak_r = reference.samples.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if s_o.hypot(c_o) <= 1e-9 * peak_o || s_r.hypot(c_r) <= 1e-9 * peak_r {
        return Err(DriveError::UndefinedPhase);
    }
    let mut lag = c_o.atan2(s_o) - c_r.atan2(s_r);
    // Wrap to (-pi, pi].
    while lag <= -std::f64::consts::PI {
        lag += 2.0 * std::f64::consts::PI;
    }
    while lag > std::f64::consts::PI {
        lag -= 2.0 * std::f64::consts::PI;
    }
    Ok(lag)
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
