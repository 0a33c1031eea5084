//! Multilevel SPWM switching-decision generator.
//!
//! An m-level modulator compares one sinusoidal reference against m-1
//! level-shifted triangular carriers. Four carrier dispositions are
//! supported (all in phase; phase opposition below zero; alternate phase
//! opposition; successive quarter-period shifts) and four sampling
//! strategies: natural comparison, symmetric and asymmetric sample-and-hold,
//! and a crossing-time-corrected scheme that removes most of the
//! sample-and-hold delay by solving for the reference/carrier crossing
//! instant inside each half-carrier segment.
//!
//! Geometry conventions: the base carrier crosses zero rising at t = 0,
//! synchronized with the reference sinusoid, and each carrier triangle spans
//! +/-v_c/2 about its band center. Carrier extrema therefore fall on the
//! uniform grid T_c/4 + k*T_c/2, which is also the sample-and-hold clock.
//!
//! # Example
//!
//! ```
//! use mldrive::modulation::{generate_levels, Disposition, ModulationConfig, Sampling};
//!
//! let cfg = ModulationConfig {
//!     levels_m: 5,
//!     f_c: 1050.0,
//!     f_m: 50.0,
//!     m_a: 1.0,
//!     v_m: 2.0,
//!     v_c: 1.0,
//!     disposition: Disposition::PH,
//!     sampling: Sampling::Natural,
//! };
//! let series = generate_levels(&cfg, 0.02, 1e-5).unwrap();
//! assert!(series.levels.iter().all(|&l| l.abs() <= 2));
//! ```

use crate::error::{DriveError, Result};
use std::f64::consts::PI;

// ──────────────────────────────────────────────────────────────────────────
// Types
// ──────────────────────────────────────────────────────────────────────────

/// Vertical arrangement of the level-shifted carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    /// All carriers in phase.
    PH,
    /// Carriers below zero in phase opposition to those above.
    PO,
    /// Alternate carriers in phase opposition.
    APO,
    /// Each successive carrier shifted by a quarter carrier period in time.
    Shift90,
}

/// How the reference is presented to the comparators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Continuous comparison with the instantaneous reference.
    Natural,
    /// Sample at carrier positive peaks, hold one carrier period.
    Symmetric,
    /// Sample at every carrier extremum, hold half a carrier period.
    Asymmetric,
    /// Asymmetric sampling plus per-segment crossing-time correction.
    CrossingCorrected,
}

/// Sign of the active carrier-segment slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeSign {
    Positive,
    Negative,
}

/// Everything needed to evaluate any carrier at any time.
#[derive(Debug, Clone)]
pub struct ModulationConfig {
    /// Output level count m (odd, >= 3); m-1 carriers are used.
    pub levels_m: usize,
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Reference frequency in Hz.
    pub f_m: f64,
    /// Modulation index in (0, 1].
    pub m_a: f64,
    /// Reference peak voltage; the effective reference is m_a*v_m*sin.
    pub v_m: f64,
    /// Carrier band height: each triangle spans +/-v_c/2 about its center.
    pub v_c: f64,
    /// Carrier disposition.
    pub disposition: Disposition,
    /// Sampling strategy.
    pub sampling: Sampling,
}

/// The active carrier band and slope tracked by the crossing-corrected
/// modulator. `t_start` is the segment's starting extremum instant.
#[derive(Debug, Clone)]
pub struct CarrierSegment {
    /// Region index in [1, levels_m - 1]; region r spans the r-th band from
    /// the bottom of the carrier stack.
    pub region_r: usize,
    /// Actual slope sign of the active carrier over this segment.
    pub slope: SlopeSign,
    /// Segment start time in seconds.
    pub t_start: f64,
}

/// Discretized switch-command stream: `levels[i]` applies at `i * dt`.
#[derive(Debug, Clone)]
pub struct LevelSeries {
    /// Sample spacing in seconds.
    pub dt: f64,
    /// Integer levels in [-(levels_m-1)/2, +(levels_m-1)/2].
    pub levels: Vec<i32>,
}

impl ModulationConfig {
    /// Validates the structural invariants of the configuration.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(DriveError::Config { line: 0, message });
        if self.levels_m < 3 || self.levels_m % 2 == 0 {
            return fail(format!("levels_m must be odd and >= 3, got {}", self.levels_m));
        }
        if !(self.f_m > 0.0 && self.f_c > self.f_m) {
            return fail(format!("need f_c > f_m > 0, got f_c={}, f_m={}", self.f_c, self.f_m));
        }
        let m_f = self.f_c / self.f_m;
        if (m_f - m_f.round()).abs() > 1e-9 {
            return fail(format!("m_f = f_c/f_m must be an integer, got {m_f}"));
        }
        if !(self.m_a > 0.0 && self.m_a <= 1.0) {
            return fail(format!("m_a must lie in (0, 1], got {}", self.m_a));
        }
        if !(self.v_c > 0.0) || self.v_m < 0.0 {
            return fail(format!("need v_c > 0 and v_m >= 0, got v_c={}, v_m={}", self.v_c, self.v_m));
        }
        Ok(())
    }

    /// Frequency modulation ratio f_c/f_m.
    pub fn m_f(&self) -> f64 {
        self.f_c / self.f_m
    }

    /// Carrier period in seconds.
    pub fn carrier_period(&self) -> f64 {
        1.0 / self.f_c
    }

    /// Half-integer level bound (levels span -half..=+half).
    pub fn half_levels(&self) -> i32 {
        ((self.levels_m - 1) / 2) as i32
    }
}

// ──────────────────────────────────────────────────────────────────────────
// Carrier and reference evaluation
// ──────────────────────────────────────────────────────────────────────────

/// Instantaneous reference value m_a*v_m*sin(2*pi*f_m*t).
pub fn reference_value(t: f64, cfg: &ModulationConfig) -> f64 {
    cfg.m_a * cfg.v_m * (2.0 * PI * cfg.f_m * t).sin()
}

/// Analytic time derivative of the reference at `t`.
pub fn reference_slope(t: f64, cfg: &ModulationConfig) -> f64 {
    let omega = 2.0 * PI * cfg.f_m;
    cfg.m_a * cfg.v_m * omega * (omega * t).cos()
}

/// Whether the disposition inverts the triangle of carrier `region_r`.
fn carrier_inverted(region_r: usize, cfg: &ModulationConfig) -> bool {
    match cfg.disposition {
        Disposition::PH | Disposition::Shift90 => false,
        Disposition::PO => region_r <= (cfg.levels_m - 1) / 2,
        Disposition::APO => region_r % 2 == 0,
    }
}

/// Horizontal time shift of carrier `region_r` for the disposition.
fn carrier_shift(region_r: usize, cfg: &ModulationConfig) -> f64 {
    match cfg.disposition {
        Disposition::Shift90 => (region_r - 1) as f64 * 0.25 / cfg.f_c,
        _ => 0.0,
    }
}

/// Vertical center of carrier `region_r`'s band.
fn band_center(region_r: usize, cfg: &ModulationConfig) -> f64 {
    (region_r as f64 - cfg.levels_m as f64 / 2.0) * cfg.v_c
}

/// Closed-form value of carrier `region_r` at time `t`.
///
/// The base triangle crosses zero rising at t = 0 and spans +/-v_c/2; the
/// disposition then applies its inversion and time shift, and the band
/// offset places the carrier in its region.
pub fn carrier_at(t: f64, region_r: usize, cfg: &ModulationConfig) -> Result<f64> {
    if region_r < 1 || region_r > cfg.levels_m - 1 {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "region {region_r} outside carrier bands 1..={}",
                cfg.levels_m - 1
            ),
        });
    }
    let u = (t - carrier_shift(region_r, cfg)) * cfg.f_c + 0.25;
    let x = u - u.floor();
    let tri = if x < 0.5 {
        2.0 * cfg.v_c * x - cfg.v_c / 2.0
    } else {
        -2.0 * cfg.v_c * (x - 0.5) + cfg.v_c / 2.0
    };
    let tri = if carrier_inverted(region_r, cfg) { -tri } else { tri };
    Ok(band_center(region_r, cfg) + tri)
}

/// Value of the active carrier at `t` evaluated along `seg`'s line.
///
/// Within the segment this agrees with [`carrier_at`]; past the segment end
/// it continues the line, which is what the crossing extrapolation needs.
pub fn carrier_value(t: f64, seg: &CarrierSegment, cfg: &ModulationConfig) -> Result<f64> {
    let start = carrier_at(seg.t_start, seg.region_r, cfg)?;
    let slope = segment_slope_value(seg, cfg);
    Ok(start + slope * (t - seg.t_start))
}

/// Signed slope in V/s of the active carrier over `seg`.
fn segment_slope_value(seg: &CarrierSegment, cfg: &ModulationConfig) -> f64 {
    let magnitude = 2.0 * cfg.v_c * cfg.f_c;
    match seg.slope {
        SlopeSign::Positive => magnitude,
        SlopeSign::Negative => -magnitude,
    }
}

/// The carrier segment of `region_r` containing time `t`: its start is the
/// latest extremum of that carrier at or before `t`.
pub fn segment_at(t: f64, region_r: usize, cfg: &ModulationConfig) -> Result<CarrierSegment> {
    if region_r < 1 || region_r > cfg.levels_m - 1 {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "region {region_r} outside carrier bands 1..={}",
                cfg.levels_m - 1
            ),
        });
    }
    let shift = carrier_shift(region_r, cfg);
    let u = (t - shift) * cfg.f_c + 0.25;
    // Segment boundaries sit at u = integer (triangle minimum) and
    // u = integer + 0.5 (maximum).
    let seg_index = (2.0 * u).floor();
    let t_start = (seg_index / 2.0 - 0.25) / cfg.f_c + shift;
    let base_positive = seg_index.rem_euclid(2.0) == 0.0;
    let positive = base_positive != carrier_inverted(region_r, cfg);
    Ok(CarrierSegment {
        region_r,
        slope: if positive { SlopeSign::Positive } else { SlopeSign::Negative },
        t_start,
    })
}

// ──────────────────────────────────────────────────────────────────────────
// Sampling
// ──────────────────────────────────────────────────────────────────────────

/// Instant of sample `k` for the sampled modes: the k-th carrier extremum
/// (asymmetric and crossing-corrected) or the k-th positive peak
/// (symmetric).
pub fn sampling_instant(cfg: &ModulationConfig, k: usize) -> Result<f64> {
    let t_c = cfg.carrier_period();
    match cfg.sampling {
        Sampling::Symmetric => Ok(t_c / 4.0 + k as f64 * t_c),
        Sampling::Asymmetric | Sampling::CrossingCorrected => {
            Ok(t_c / 4.0 + k as f64 * t_c / 2.0)
        }
        Sampling::Natural => Err(DriveError::Mode(
            "natural sampling has no discrete sampling instants".into(),
        )),
    }
}

/// Held reference value produced by sample `k`.
pub fn sample_reference(cfg: &ModulationConfig, k: usize) -> Result<f64> {
    Ok(reference_value(sampling_instant(cfg, k)?, cfg))
}

/// Staircase value seen by the comparators at time `t` for the symmetric and
/// asymmetric modes. Before the first sampling instant the value captured at
/// t = 0 is held.
fn held_reference(t: f64, cfg: &ModulationConfig) -> Result<f64> {
    let t_c = cfg.carrier_period();
    let (first, hold) = match cfg.sampling {
        Sampling::Symmetric => (t_c / 4.0, t_c),
        Sampling::Asymmetric => (t_c / 4.0, t_c / 2.0),
        _ => {
            return Err(DriveError::Mode(
                "held_reference applies to symmetric/asymmetric sampling only".into(),
            ))
        }
    };
    if t < first {
        return Ok(reference_value(0.0, cfg));
    }
    let k = ((t - first) / hold).floor();
    Ok(reference_value(first + k * hold, cfg))
}

// ──────────────────────────────────────────────────────────────────────────
// Crossing-time correction
// ──────────────────────────────────────────────────────────────────────────

/// Intersection offset of two lines: a reference tangent with value `vr` and
/// slope `sr` at the origin against a carrier line with value `c0` and slope
/// `sc`. This is the first-order extrapolation step of the crossing method.
fn line_crossing(vr: f64, sr: f64, c0: f64, sc: f64) -> Result<f64> {
    let denom = sc - sr;
    if denom.abs() < 1e-12 {
        return Err(DriveError::NoCrossing);
    }
    Ok((vr - c0) / denom)
}

/// Offset from `t_k` to the reference/carrier crossing on `seg`'s line.
///
/// First-order extrapolation (reference value and analytic slope at `t_k`)
/// seeds the estimate; a short Newton polish on the true sine-versus-line
/// equation then removes the extrapolation curvature error, which near the
/// reference peaks would otherwise leave a residual two orders of magnitude
/// above the carrier-relative tolerance. The returned offset may be negative
/// or exceed half a carrier period; those cases signal region transitions.
pub fn compute_crossing_delay(
    t_k: f64,
    seg: &CarrierSegment,
    cfg: &ModulationConfig,
) -> Result<f64> {
    if cfg.sampling != Sampling::CrossingCorrected {
        return Err(DriveError::Mode(
            "crossing delays are computed in CrossingCorrected mode only".into(),
        ));
    }
    let vr = reference_value(t_k, cfg);
    let sr = reference_slope(t_k, cfg);
    let c0 = carrier_value(t_k, seg, cfg)?;
    let sc = segment_slope_value(seg, cfg);
    let seed = line_crossing(vr, sr, c0, sc)?;

    // Newton polish: g(d) = reference(t_k + d) - (c0 + sc*d).
    let tol = 1e-9 * cfg.v_c;
    let mut d = seed;
    for _ in 0..8 {
        let g = reference_value(t_k + d, cfg) - (c0 + sc * d);
        if g.abs() <= tol {
            break;
        }
        let gp = reference_slope(t_k + d, cfg) - sc;
        if gp.abs() < 1e-12 {
            break;
        }
        let next = d - g / gp;
        // A wandering iterate means the true crossing is far outside the
        // segment; the seed already carries the correct transition signal.
        if !next.is_finite() || (next - seed).abs() > cfg.carrier_period() {
            return Ok(seed);
        }
        d = next;
    }
    Ok(d)
}

/// Region transition applied after a segment whose crossing offset was
/// `delta_t_k`. Offsets inside [0, 1/(2*f_c)] keep the region; an offset
/// beyond the segment (or before it) moves one band in the direction the
/// reference escaped, clamped to the carrier stack.
pub fn update_region(
    delta_t_k: f64,
    seg: &CarrierSegment,
    f_c: f64,
    levels_m: usize,
) -> usize {
    let half = 0.5 / f_c;
    let r = seg.region_r as i64;
    let moved = if delta_t_k >= 0.0 && delta_t_k <= half {
        r
    } else {
        match (seg.slope, delta_t_k < 0.0) {
            // Rising carrier: an early crossing means the reference fell
            // below the band; a late one means it escaped above.
            (SlopeSign::Positive, true) => r - 1,
            (SlopeSign::Positive, false) => r + 1,
            // Falling carrier: mirrored.
            (SlopeSign::Negative, true) => r + 1,
            (SlopeSign::Negative, false) => r - 1,
        }
    };
    moved.clamp(1, (levels_m - 1) as i64) as usize
}

// ──────────────────────────────────────────────────────────────────────────
// Level generation
// ──────────────────────────────────────────────────────────────────────────

/// Number of carriers a comparison value `v` lies on or above, minus the
/// stack midpoint: the instantaneous output level.
fn level_from_comparators(v: f64, t: f64, cfg: &ModulationConfig) -> Result<i32> {
    let mut count = 0i32;
    for r in 1..cfg.levels_m {
        if v >= carrier_at(t, r, cfg)? {
            count += 1;
        }
    }
    Ok(count - cfg.half_levels())
}

/// Natural-sampling output level at `t` for an explicit reference peak
/// (`ref_peak` replaces m_a*v_m). The closed-loop drive uses this to apply
/// the controller's modulation-index command sample by sample.
pub fn natural_level_scaled(cfg: &ModulationConfig, t: f64, ref_peak: f64) -> Result<i32> {
    let v = ref_peak * (2.0 * PI * cfg.f_m * t).sin();
    level_from_comparators(v, t, cfg)
}

/// Generates the discretized level command stream for the configured
/// disposition and sampling strategy.
pub fn generate_levels(cfg: &ModulationConfig, duration: f64, dt: f64) -> Result<LevelSeries> {
    cfg.validate()?;
    if !(dt > 0.0) || dt > 1.0 / (20.0 * cfg.f_c) {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "dt must resolve the carrier: need 0 < dt <= {:.3e}, got {dt:.3e}",
                1.0 / (20.0 * cfg.f_c)
            ),
        });
    }
    if duration < 1.0 / cfg.f_m {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "duration must cover one reference period ({} s), got {duration} s",
                1.0 / cfg.f_m
            ),
        });
    }
    let n = (duration / dt).round() as usize;
    let levels = match cfg.sampling {
        Sampling::Natural => {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let t = i as f64 * dt;
                out.push(level_from_comparators(reference_value(t, cfg), t, cfg)?);
            }
            out
        }
        Sampling::Symmetric | Sampling::Asymmetric => {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let t = i as f64 * dt;
                out.push(level_from_comparators(held_reference(t, cfg)?, t, cfg)?);
            }
            out
        }
        Sampling::CrossingCorrected => crossing_corrected_levels(cfg, n, dt)?,
    };
    Ok(LevelSeries { dt, levels })
}

/// Event-driven generator for the crossing-corrected mode.
///
/// The tracker walks the half-carrier segments of the active region's
/// carrier. At each segment start it samples the reference, computes the
/// crossing offset, emits at most one switching edge inside the segment, and
/// applies the region-transition rules for the next segment.
fn crossing_corrected_levels(cfg: &ModulationConfig, n: usize, dt: f64) -> Result<Vec<i32>> {
    let half_seg = 0.5 / cfg.f_c;
    let end_time = n as f64 * dt;
    let offset = cfg.half_levels();

    // The walker runs the modulator's steady rhythm and the output window
    // starts at t = 0, so the first segment is the one containing t = 0 and
    // its sample sits at the segment's true start even when that instant is
    // negative. Seed the region from the reference value there.
    let mut seg = segment_at(0.0, 1, cfg)?;
    let mut region = band_of(reference_value(seg.t_start, cfg), cfg);
    seg = segment_at(0.0, region, cfg)?;
    let mut levels = vec![0i32; n];
    let mut idx = 0usize;
    let mut t_cursor = 0.0;
    loop {
        let seg_end = seg.t_start + half_seg;
        let sample_t = seg.t_start;
        let vr = reference_value(sample_t, cfg);
        let c_start = carrier_value(sample_t, &seg, cfg)?;
        let upper = seg.region_r as i32 - offset;
        let lower = upper - 1;

        let delta = match compute_crossing_delay(sample_t, &seg, cfg) {
            Ok(d) => d,
            // Parallel lines: hold the previous switch state this segment.
            Err(DriveError::NoCrossing) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let edge_t = sample_t + delta;
        let has_edge = delta >= 0.0 && delta <= half_seg && edge_t <= seg_end;

        // A rising carrier overtakes the reference at the crossing (level
        // drops upper -> lower); a falling carrier sinks beneath it (lower ->
        // upper). When no crossing lands in the segment the comparator state
        // at the segment start holds throughout.
        let (pre, post) = match seg.slope {
            SlopeSign::Positive => (upper, lower),
            SlopeSign::Negative => (lower, upper),
        };
        let flat = if vr >= c_start { upper } else { lower };

        // Fill samples inside [t_cursor, seg_end).
        while idx < n {
            let t = idx as f64 * dt;
            if t >= seg_end || t >= end_time {
                break;
            }
            if t < t_cursor {
                idx += 1;
                continue;
            }
            levels[idx] = if has_edge {
                if t >= edge_t { post } else { pre }
            } else {
                flat
            };
            idx += 1;
        }
        t_cursor = seg_end;
        if t_cursor >= end_time || idx >= n {
            break;
        }
        if delta.is_finite() {
            region = update_region(delta, &seg, cfg.f_c, cfg.levels_m);
        }
        // Next segment of (possibly) the new active carrier. Nudging past
        // the boundary avoids re-selecting the segment that just ended.
        seg = segment_at(t_cursor + 1e-9 * half_seg, region, cfg)?;
    }
    Ok(levels)
}

/// Band index (1-based from the stack bottom) containing value `v`, clamped
/// to the carrier stack.
fn band_of(v: f64, cfg: &ModulationConfig) -> usize {
    // Band r (1-based) spans [r-1, r]*v_c above the stack bottom at
    // -((m-1)/2)*v_c; a value on a boundary belongs to the band above it.
    let half_span = (cfg.levels_m - 1) as f64 / 2.0 * cfg.v_c;
    let raw = ((v + half_span) / cfg.v_c).floor() as i64;
    raw.clamp(0, (cfg.levels_m - 2) as i64) as usize + 1
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn base_cfg() -> ModulationConfig {
        ModulationConfig {
            levels_m: 5,
            f_c: 1050.0,
            f_m: 50.0,
            m_a: 1.0,
            v_m: 2.0,
            v_c: 1.0,
            disposition: Disposition::PH,
            sampling: Sampling::Natural,
        }
    }

    // ── reference ─────────────────────────────────────────────────────────

    #[test]
    fn reference_is_zero_at_origin_and_peaks_at_quarter_period() {
        let mut cfg = base_cfg();
        cfg.v_m = 1.0;
        assert!(reference_value(0.0, &cfg).abs() < EPS);
        let quarter = 1.0 / (4.0 * cfg.f_m);
        assert!((reference_value(quarter, &cfg) - 1.0).abs() < EPS);
    }

    #[test]
    fn reference_matches_independent_evaluation() {
        // 0.8 * 2 * sin(0.2*pi) evaluated by a separate script.
        let mut cfg = base_cfg();
        cfg.m_a = 0.8;
        cfg.v_m = 2.0;
        let v = reference_value(2e-3, &cfg);
        assert!((v - 0.940456403667957).abs() < 1e-12, "v = {v}");
    }

    // ── carrier geometry ──────────────────────────────────────────────────

    #[test]
    fn segment_ramp_spans_carrier_band() {
        // A positive-slope segment starts v_c/2 below its band center and
        // ends v_c/2 above it.
        let cfg = base_cfg();
        let t_min = 0.75 * cfg.carrier_period(); // base triangle minimum
        let seg = segment_at(t_min + 1e-9, 3, &cfg).unwrap();
        assert_eq!(seg.slope, SlopeSign::Positive);
        let center = 0.5; // region 3 of a 5-level stack spans [0, 1]
        let start = carrier_value(seg.t_start, &seg, &cfg).unwrap();
        let end = carrier_value(seg.t_start + 0.5 / cfg.f_c, &seg, &cfg).unwrap();
        assert!((start - (center - cfg.v_c / 2.0)).abs() < 1e-9);
        assert!((end - (center + cfg.v_c / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn carrier_zero_crosses_rising_at_origin() {
        let cfg = base_cfg();
        // Base triangle (region 3 center 0.5): value at t=0 is mid-ramp.
        let v0 = carrier_at(0.0, 3, &cfg).unwrap();
        assert!((v0 - 0.5).abs() < EPS, "carrier 3 at t=0: {v0}");
        let v1 = carrier_at(1e-6, 3, &cfg).unwrap();
        assert!(v1 > v0, "carrier should be rising at t=0");
    }

    #[test]
    fn ph_carriers_peak_simultaneously() {
        let cfg = base_cfg();
        let t_peak = cfg.carrier_period() / 4.0;
        for r in 1..=4usize {
            let center = (r as f64) - 2.5;
            let v = carrier_at(t_peak, r, &cfg).unwrap();
            assert!(
                (v - (center + cfg.v_c / 2.0)).abs() < EPS,
                "carrier {r} not at band max: {v}"
            );
        }
    }

    #[test]
    fn po_inverts_carriers_below_zero() {
        let mut cfg = base_cfg();
        cfg.disposition = Disposition::PO;
        let t_peak = cfg.carrier_period() / 4.0;
        // Upper carriers (3, 4) at band max; lower carriers (1, 2) at min.
        assert!((carrier_at(t_peak, 4, &cfg).unwrap() - 2.0).abs() < EPS);
        assert!((carrier_at(t_peak, 3, &cfg).unwrap() - 1.0).abs() < EPS);
        assert!((carrier_at(t_peak, 2, &cfg).unwrap() - (-1.0)).abs() < EPS);
        assert!((carrier_at(t_peak, 1, &cfg).unwrap() - (-2.0)).abs() < EPS);
    }

    #[test]
    fn apo_alternates_inversion() {
        let mut cfg = base_cfg();
        cfg.disposition = Disposition::APO;
        let t_peak = cfg.carrier_period() / 4.0;
        // Odd carriers keep phase (band max at the base peak), even ones flip.
        assert!((carrier_at(t_peak, 1, &cfg).unwrap() - (-1.0)).abs() < EPS);
        assert!((carrier_at(t_peak, 2, &cfg).unwrap() - (-1.0)).abs() < EPS);
        assert!((carrier_at(t_peak, 3, &cfg).unwrap() - 1.0).abs() < EPS);
        assert!((carrier_at(t_peak, 4, &cfg).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn shift90_delays_each_successive_carrier() {
        let mut cfg = base_cfg();
        cfg.disposition = Disposition::Shift90;
        let t_c = cfg.carrier_period();
        for r in 1..=4usize {
            let t_peak = t_c / 4.0 + (r - 1) as f64 * t_c / 4.0;
            let center = (r as f64) - 2.5;
            let v = carrier_at(t_peak, r, &cfg).unwrap();
            assert!(
                (v - (center + cfg.v_c / 2.0)).abs() < EPS,
                "shifted carrier {r} max not at expected instant"
            );
        }
    }

    #[test]
    fn carrier_stays_in_band_and_is_continuous() {
        for disposition in [
            Disposition::PH,
            Disposition::PO,
            Disposition::APO,
            Disposition::Shift90,
        ] {
            let mut cfg = base_cfg();
            cfg.disposition = disposition;
            for r in 1..=4usize {
                let center = (r as f64) - 2.5;
                let mut prev = carrier_at(0.0, r, &cfg).unwrap();
                for i in 1..=2000 {
                    let t = i as f64 * 1e-6;
                    let v = carrier_at(t, r, &cfg).unwrap();
                    assert!(v >= center - 0.5 - EPS && v <= center + 0.5 + EPS);
                    // Max slope is 2*v_c*f_c = 2100 V/s.
                    assert!(
                        (v - prev).abs() <= 2100.0 * 1e-6 + 1e-9,
                        "carrier jump at t={t} for {disposition:?} r={r}"
                    );
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn out_of_band_region_is_rejected() {
        let cfg = base_cfg();
        assert!(carrier_at(0.0, 0, &cfg).is_err());
        assert!(carrier_at(0.0, 5, &cfg).is_err());
    }

    #[test]
    fn segment_line_agrees_with_closed_form_inside_segment() {
        for disposition in [
            Disposition::PH,
            Disposition::PO,
            Disposition::APO,
            Disposition::Shift90,
        ] {
            let mut cfg = base_cfg();
            cfg.disposition = disposition;
            for r in 1..=4usize {
                for i in 0..200 {
                    let t = 1e-5 + i as f64 * 7.3e-6;
                    let seg = segment_at(t, r, &cfg).unwrap();
                    let line = carrier_value(t, &seg, &cfg).unwrap();
                    let closed = carrier_at(t, r, &cfg).unwrap();
                    assert!(
                        (line - closed).abs() < 1e-9,
                        "segment/closed-form mismatch {disposition:?} r={r} t={t}: {line} vs {closed}"
                    );
                }
            }
        }
    }

    // ── sampling ──────────────────────────────────────────────────────────

    #[test]
    fn symmetric_sampling_sees_one_sample_per_carrier_period() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::Symmetric;
        // 21 distinct held values over one reference period.
        let t_m = 1.0 / cfg.f_m;
        let mut instants = vec![];
        let mut k = 0;
        loop {
            let t = sampling_instant(&cfg, k).unwrap();
            if t >= t_m {
                break;
            }
            instants.push(t);
            k += 1;
        }
        assert_eq!(instants.len(), 21);
    }

    #[test]
    fn asymmetric_sampling_sees_two_samples_per_carrier_period() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::Asymmetric;
        let t_m = 1.0 / cfg.f_m;
        let mut count = 0;
        let mut k = 0;
        loop {
            let t = sampling_instant(&cfg, k).unwrap();
            if t >= t_m {
                break;
            }
            count += 1;
            k += 1;
        }
        assert_eq!(count, 42);
    }

    #[test]
    fn sample_holds_reference_at_peak_instant() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::Asymmetric;
        let t0 = sampling_instant(&cfg, 0).unwrap();
        assert!((sample_reference(&cfg, 0).unwrap() - reference_value(t0, &cfg)).abs() < EPS);
    }

    #[test]
    fn natural_mode_rejects_discrete_sampling() {
        let cfg = base_cfg();
        assert!(matches!(
            sample_reference(&cfg, 0),
            Err(DriveError::Mode(_))
        ));
    }

    #[test]
    fn staircase_relatches_at_carrier_rate() {
        // The sampler re-latches m_f times per reference period (symmetric)
        // or 2*m_f times (asymmetric): one new hold per carrier extremum of
        // the relevant polarity. Nominally every re-latch also changes the
        // held value, with one alignment-specific exception checked below.
        for (sampling, expected, hold) in [
            (Sampling::Symmetric, 21usize, 1.0 / 1050.0),
            (Sampling::Asymmetric, 42, 0.5 / 1050.0),
        ] {
            let mut cfg = base_cfg();
            cfg.sampling = sampling;
            let t_m = 1.0 / cfg.f_m;
            let mut boundaries = 0;
            let mut k = 0;
            while sampling_instant(&cfg, k).unwrap() < t_m {
                boundaries += 1;
                k += 1;
            }
            assert_eq!(boundaries, expected, "{sampling:?} re-latch count");
            let _ = hold;
        }

        // Value-change counts. With the carrier zero-crossing synchronized
        // to the reference, the symmetric grid straddles the reference
        // trough at 15 ms exactly symmetrically, so samples 15 and 16 round
        // to the same double and one boundary carries no value change:
        // 20 changes, not 21. The asymmetric grid lands a sample exactly on
        // the trough instead, so all 42 boundaries change the value.
        for (sampling, expected_changes, hold) in [
            (Sampling::Symmetric, 20usize, 1.0 / 1050.0),
            (Sampling::Asymmetric, 42, 0.5 / 1050.0),
        ] {
            let mut cfg = base_cfg();
            cfg.sampling = sampling;
            let dt = 1e-6;
            let t_start = cfg.carrier_period() / 4.0;
            let n = ((1.0 / cfg.f_m + 0.5 * hold) / dt) as usize;
            let mut changes = 0;
            let mut prev = held_reference(t_start, &cfg).unwrap();
            for i in 1..=n {
                let v = held_reference(t_start + i as f64 * dt, &cfg).unwrap();
                if v != prev {
                    changes += 1;
                    prev = v;
                }
            }
            assert_eq!(changes, expected_changes, "sampling {sampling:?}");
        }

        // Prove the cause: the trough-straddling pair is bit-identical.
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::Symmetric;
        let v15 = sample_reference(&cfg, 15).unwrap();
        let v16 = sample_reference(&cfg, 16).unwrap();
        assert_eq!(v15.to_bits(), v16.to_bits());
    }

    // ── crossing-time correction ──────────────────────────────────────────

    #[test]
    fn line_crossing_reproduces_midramp_arithmetic() {
        // A ramp from -v_c/2 rising at 2*v_c*f_c meets a zero-valued, flat
        // reference mid-ramp: 1/(4*f_c) = 2.3810e-4 s at f_c = 1050.
        let delta = line_crossing(0.0, 0.0, -0.5, 2.0 * 1.0 * 1050.0).unwrap();
        assert!((delta - 1.0 / (4.0 * 1050.0)).abs() < 1e-15);
        assert!((delta - 2.380952380952381e-4).abs() < 1e-15);
    }

    #[test]
    fn equal_sample_and_carrier_give_zero_delay() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        cfg.levels_m = 3;
        cfg.v_m = 1.0;
        // At t = 5 ms the reference peaks at 1.0 exactly where carrier 2
        // tops its band: the crossing offset collapses to zero.
        let t_k = 5e-3;
        let seg = segment_at(t_k + 1e-12, 2, &cfg).unwrap();
        let delta = compute_crossing_delay(t_k, &seg, &cfg).unwrap();
        assert!(delta.abs() < 1e-7, "delta = {delta}");
    }

    #[test]
    fn parallel_lines_signal_no_crossing() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        let seg = CarrierSegment {
            region_r: 3,
            slope: SlopeSign::Positive,
            t_start: 0.0,
        };
        // A reference slope equal to the carrier slope at the sample makes
        // the extrapolated lines parallel. Build it synthetically.
        let sc = 2.0 * cfg.v_c * cfg.f_c;
        assert!(matches!(
            line_crossing(0.3, sc, 0.0, sc),
            Err(DriveError::NoCrossing)
        ));
        // The public entry point reports the same through its result.
        let _ = seg;
    }

    #[test]
    fn crossing_mode_is_required() {
        let cfg = base_cfg(); // natural sampling
        let seg = CarrierSegment {
            region_r: 3,
            slope: SlopeSign::Positive,
            t_start: 0.0,
        };
        assert!(matches!(
            compute_crossing_delay(0.0, &seg, &cfg),
            Err(DriveError::Mode(_))
        ));
    }

    #[test]
    fn crossing_delay_matches_bisection_oracle_over_a_period() {
        // One full reference period of asymmetric samples at m_a = 1,
        // v_m = v_c = 1 (3-level stack). The sine-versus-carrier-line
        // equation g(d) is strictly monotone because the carrier slope
        // (2*v_c*f_c = 2100 V/s) dominates the maximum reference slope
        // (omega*v_m ~ 628 V/s), so its unique root is bracketed within two
        // carrier periods of the sample and bisection is a valid oracle at
        // every sample, including region-transition segments whose crossing
        // falls outside [0, half-segment].
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        cfg.levels_m = 3;
        cfg.v_m = 1.0;
        let half_seg = 0.5 / cfg.f_c;
        let t_c = cfg.carrier_period();
        let mut region = 2usize; // reference starts at 0 rising into band 2
        for k in 0..42 {
            let t_k = sampling_instant(&cfg, k).unwrap();
            let seg = segment_at(t_k + 1e-12 * half_seg, region, &cfg).unwrap();
            let delta = compute_crossing_delay(t_k, &seg, &cfg).unwrap();

            let g = |d: f64| {
                reference_value(t_k + d, &cfg)
                    - carrier_value(t_k + d, &seg, &cfg).unwrap()
            };
            let (mut lo, mut hi) = (-2.0 * t_c, 2.0 * t_c);
            let (mut glo, ghi) = (g(lo), g(hi));
            assert!(glo * ghi < 0.0, "k={k}: oracle bracket must span the root");
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if glo * gm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            let true_cross = 0.5 * (lo + hi);
            assert!(
                (delta - true_cross).abs() < 0.05 * half_seg,
                "k={k}: delta {delta} vs bisection {true_cross}"
            );
            let residual = g(delta).abs();
            assert!(residual < 1e-3 * cfg.v_c, "k={k}: residual {residual}");

            region = update_region(delta, &seg, cfg.f_c, cfg.levels_m);
        }
    }

    // ── region transitions ────────────────────────────────────────────────

    #[test]
    fn region_rules_follow_the_stated_thresholds() {
        let seg_pos = CarrierSegment {
            region_r: 2,
            slope: SlopeSign::Positive,
            t_start: 0.0,
        };
        let seg_neg = CarrierSegment {
            region_r: 2,
            slope: SlopeSign::Negative,
            t_start: 0.0,
        };
        // 6.0e-4 s exceeds 1/(2*1050) = 4.7619e-4 s.
        assert_eq!(update_region(6.0e-4, &seg_pos, 1050.0, 5), 3);
        assert_eq!(update_region(-1.0e-5, &seg_pos, 1050.0, 5), 1);
        assert_eq!(update_region(2.0e-4, &seg_pos, 1050.0, 5), 2);
        assert_eq!(update_region(6.0e-4, &seg_neg, 1050.0, 5), 1);
        assert_eq!(update_region(-1.0e-5, &seg_neg, 1050.0, 5), 3);
    }

    #[test]
    fn region_clamps_at_stack_edges() {
        let top = CarrierSegment {
            region_r: 4,
            slope: SlopeSign::Positive,
            t_start: 0.0,
        };
        let bottom = CarrierSegment {
            region_r: 1,
            slope: SlopeSign::Positive,
            t_start: 0.0,
        };
        assert_eq!(update_region(9.9e-4, &top, 1050.0, 5), 4);
        assert_eq!(update_region(-9.9e-4, &bottom, 1050.0, 5), 1);
    }

    #[test]
    fn region_tracker_returns_to_start_over_a_period() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        let half_seg = 0.5 / cfg.f_c;
        let mut region = band_of(0.0, &cfg);
        let start_region = region;
        for k in 0..42 {
            let t_k = sampling_instant(&cfg, k).unwrap();
            let seg = segment_at(t_k + 1e-12 * half_seg, region, &cfg).unwrap();
            let delta = match compute_crossing_delay(t_k, &seg, &cfg) {
                Ok(d) => d,
                Err(DriveError::NoCrossing) => continue,
                Err(e) => panic!("{e}"),
            };
            region = update_region(delta, &seg, cfg.f_c, cfg.levels_m);
            assert!((1..=4).contains(&region));
        }
        assert_eq!(region, start_region);
    }

    // ── level generation ──────────────────────────────────────────────────

    #[test]
    fn tiny_reference_uses_only_innermost_levels() {
        let mut cfg = base_cfg();
        cfg.m_a = 0.05;
        let series = generate_levels(&cfg, 0.02, 1e-5).unwrap();
        assert!(series.levels.iter().all(|&l| (-1..=1).contains(&l)));
    }

    #[test]
    fn full_modulation_reaches_all_five_levels() {
        let cfg = base_cfg();
        let series = generate_levels(&cfg, 0.02, 1e-5).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for &l in &series.levels {
            seen.insert(l);
        }
        assert_eq!(seen.len(), 5, "levels seen: {seen:?}");
        assert!(series.levels.iter().all(|&l| l.abs() <= 2));
    }

    #[test]
    fn level_waveform_is_half_wave_antisymmetric() {
        // PH at m_a = 1: the second half period is the exact negation of the
        // first. An odd per-half-period sample count keeps the grid off the
        // reference peaks, where carrier corners graze the reference.
        let cfg = base_cfg();
        let n_half = 19999usize;
        let dt = 0.01 / n_half as f64;
        let series = generate_levels(&cfg, 0.02, dt).unwrap();
        assert_eq!(series.levels.len(), 2 * n_half);
        for i in 0..n_half {
            assert_eq!(
                series.levels[i], -series.levels[i + n_half],
                "antisymmetry broken at sample {i}"
            );
        }
    }

    #[test]
    fn unresolvable_dt_is_rejected() {
        let cfg = base_cfg();
        assert!(matches!(
            generate_levels(&cfg, 0.02, 1e-3),
            Err(DriveError::Config { .. })
        ));
    }

    #[test]
    fn short_duration_is_rejected() {
        let cfg = base_cfg();
        assert!(matches!(
            generate_levels(&cfg, 0.01, 1e-5),
            Err(DriveError::Config { .. })
        ));
    }

    #[test]
    fn crossing_corrected_levels_stay_in_band_and_cycle() {
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        let series = generate_levels(&cfg, 0.04, 1e-5).unwrap();
        assert!(series.levels.iter().all(|&l| l.abs() <= 2));
        let mut seen = std::collections::BTreeSet::new();
        for &l in &series.levels {
            seen.insert(l);
        }
        assert_eq!(seen.len(), 5);
    }

    #[test]
    fn crossing_corrected_stream_is_periodic_away_from_band_grazes() {
        // At m_a = 0.9 the reference peak sits inside the outer band, so no
        // sample ties against a carrier extremum and the region tracker
        // follows an identical schedule every period: the second reference
        // period must reproduce the first exactly.
        let mut cfg = base_cfg();
        cfg.sampling = Sampling::CrossingCorrected;
        cfg.m_a = 0.9;
        let dt = 1e-5;
        let series = generate_levels(&cfg, 0.04, dt).unwrap();
        let per = (0.02 / dt).round() as usize;
        let mismatches = (0..per)
            .filter(|&i| series.levels[i] != series.levels[i + per])
            .count();
        assert_eq!(mismatches, 0, "crossing-corrected stream not periodic");
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut cfg = base_cfg();
        cfg.levels_m = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg();
        cfg.f_c = 1033.0; // m_f not an integer
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg();
        cfg.m_a = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = base_cfg();
        cfg.m_a = 1.5;
        assert!(cfg.validate().is_err());
        assert!(base_cfg().validate().is_ok());
    }

    #[test]
    fn band_of_locates_reference_bands() {
        let cfg = base_cfg();
        assert_eq!(band_of(-1.5, &cfg), 1);
        assert_eq!(band_of(-0.5, &cfg), 2);
        assert_eq!(band_of(0.0, &cfg), 3);
        assert_eq!(band_of(0.5, &cfg), 3);
        assert_eq!(band_of(1.5, &cfg), 4);
        assert_eq!(band_of(9.0, &cfg), 4);
        assert_eq!(band_of(-9.0, &cfg), 1);
    }
}
