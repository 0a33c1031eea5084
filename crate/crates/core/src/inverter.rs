//! Ideal m-level inverter: level commands to output voltage.
//!
//! Switching is lossless and instantaneous, so the inverter reduces to a
//! linear map: level `l` (an integer in the symmetric band around zero)
//! produces `l * v_dc_total / (levels_m - 1)` volts. No particular topology
//! is modeled — only the level abstraction matters here.
//!
//! # Example
//!
//! ```
//! use mldrive::inverter::{synthesize_voltage, InverterConfig};
//! use mldrive::modulation::LevelSeries;
//!
//! let inv = InverterConfig { v_dc_total: 400.0, levels_m: 5 };
//! let series = LevelSeries { dt: 1e-5, levels: vec![0, 2, -1] };
//! let wave = synthesize_voltage(&series, &inv).unwrap();
//! assert_eq!(wave.samples, vec![0.0, 200.0, -100.0]);
//! ```

use crate::analysis::Waveform;
use crate::error::{DriveError, Result};
use crate::modulation::LevelSeries;

/// DC-link description of the ideal inverter.
#[derive(Debug, Clone)]
pub struct InverterConfig {
    /// Total DC link voltage in volts.
    pub v_dc_total: f64,
    /// Output level count; must mirror the modulator's.
    pub levels_m: usize,
}

impl InverterConfig {
    /// Voltage step between adjacent levels.
    pub fn level_step(&self) -> f64 {
        self.v_dc_total / (self.levels_m - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.v_dc_total > 0.0) || self.levels_m < 3 || self.levels_m % 2 == 0 {
            return Err(DriveError::Config {
                line: 0,
                message: format!(
                    "inverter needs v_dc_total > 0 and odd levels_m >= 3, got {} V, {} levels",
                    self.v_dc_total, self.levels_m
                ),
            });
        }
        Ok(())
    }
}

/// Maps a level-command stream to the inverter output voltage waveform.
pub fn synthesize_voltage(series: &LevelSeries, inv: &InverterConfig) -> Result<Waveform> {
    inv.validate()?;
    let half = ((inv.levels_m - 1) / 2) as i32;
    let step = inv.level_step();
    let mut samples = Vec::with_capacity(series.levels.len());
    for (i, &level) in series.levels.iter().enumerate() {
        if level.abs() > half {
            return Err(DriveError::Integrity(format!(
                "level {level} at sample {i} outside band +/-{half} for {} levels",
                inv.levels_m
            )));
        }
        samples.push(level as f64 * step);
    }
    Ok(Waveform {
        dt: series.dt,
        samples,
    })
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{generate_levels, Disposition, ModulationConfig, Sampling};

    fn inv5() -> InverterConfig {
        InverterConfig {
            v_dc_total: 400.0,
            levels_m: 5,
        }
    }

    #[test]
    fn zero_level_gives_zero_volts() {
        let series = LevelSeries { dt: 1e-5, levels: vec![0] };
        let wave = synthesize_voltage(&series, &inv5()).unwrap();
        assert_eq!(wave.samples, vec![0.0]);
    }

    #[test]
    fn linear_map_scales_levels() {
        let series = LevelSeries { dt: 1e-5, levels: vec![2, -1, 1, -2] };
        let wave = synthesize_voltage(&series, &inv5()).unwrap();
        assert_eq!(wave.samples, vec![200.0, -100.0, 100.0, -200.0]);
    }

    #[test]
    fn adjacent_levels_differ_by_constant_step() {
        let inv = inv5();
        let series = LevelSeries { dt: 1e-5, levels: (-2..=2).collect() };
        let wave = synthesize_voltage(&series, &inv).unwrap();
        for pair in wave.samples.windows(2) {
            assert!((pair[1] - pair[0] - inv.level_step()).abs() < 1e-12);
        }
        assert!((inv.level_step() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_band_level_is_integrity_error() {
        let series = LevelSeries { dt: 1e-5, levels: vec![0, 3] };
        assert!(matches!(
            synthesize_voltage(&series, &inv5()),
            Err(DriveError::Integrity(_))
        ));
    }

    #[test]
    fn preserves_sample_spacing_and_length() {
        let series = LevelSeries { dt: 2.5e-6, levels: vec![1; 777] };
        let wave = synthesize_voltage(&series, &inv5()).unwrap();
        assert_eq!(wave.dt, 2.5e-6);
        assert_eq!(wave.samples.len(), 777);
    }

    #[test]
    fn full_period_attains_exactly_five_voltages() {
        let cfg = ModulationConfig {
            levels_m: 5,
            f_c: 1050.0,
            f_m: 50.0,
            m_a: 1.0,
            v_m: 2.0,
            v_c: 1.0,
            disposition: Disposition::PH,
            sampling: Sampling::Natural,
        };
        let series = generate_levels(&cfg, 0.02, 1e-5).unwrap();
        let wave = synthesize_voltage(&series, &inv5()).unwrap();
        let mut distinct: Vec<f64> = wave.samples.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        assert_eq!(distinct, vec![-200.0, -100.0, 0.0, 100.0, 200.0]);
    }

    #[test]
    fn symmetric_modulation_has_zero_mean_output() {
        // Natural in-phase modulation is half-wave antisymmetric; an odd
        // per-half-period sample count keeps the grid off the instants where
        // the reference grazes a carrier corner exactly.
        let cfg = ModulationConfig {
            levels_m: 5,
            f_c: 1050.0,
            f_m: 50.0,
            m_a: 1.0,
            v_m: 2.0,
            v_c: 1.0,
            disposition: Disposition::PH,
            sampling: Sampling::Natural,
        };
        let n_half = 19999usize;
        let dt = 0.01 / n_half as f64;
        let series = generate_levels(&cfg, 0.02, dt).unwrap();
        let inv = inv5();
        let wave = synthesize_voltage(&series, &inv).unwrap();
        let mean = wave.samples.iter().sum::<f64>() / wave.samples.len() as f64;
        assert!(
            mean.abs() < 1e-9 * inv.v_dc_total,
            "mean = {mean} V over {} samples",
            wave.samples.len()
        );
    }

    #[test]
    fn bad_config_is_rejected() {
        let series = LevelSeries { dt: 1e-5, levels: vec![0] };
        for inv in [
            InverterConfig { v_dc_total: 0.0, levels_m: 5 },
            InverterConfig { v_dc_total: -10.0, levels_m: 5 },
            InverterConfig { v_dc_total: 400.0, levels_m: 4 },
        ] {
            assert!(synthesize_voltage(&series, &inv).is_err(), "{inv:?}");
        }
    }
}
