//! Scenario runner: parses the line-oriented config format, orchestrates the
//! four study modes, and writes plain comma-separated artifacts plus a run
//! manifest.
//!
//! Config files are `key = value` lines grouped under `[section]` headers,
//! with `#` comments. Parsing is strict: unknown sections or keys, malformed
//! values, and mode-inconsistent combinations are reported with their line
//! number and fail the run with exit code 2. Every mode writes a
//! `manifest.txt` listing the engine version, a hash of the effective
//! scenario parameters, and each produced file, so a rerun can be checked
//! for bit-identical reproduction.
//!
//! # Example
//!
//! ```
//! use mldrive::scenario::parse_scenario;
//!
//! let cfg = parse_scenario("
//! [scenario]
//! mode = open_loop
//! output_dir = /tmp/demo
//! ").unwrap();
//! assert_eq!(cfg.seed, 42);
//! ```

use crate::analysis::{fundamental_phase_lag, spectrum_of, Spectrum, Waveform};
use crate::control::fuzzy::{load_ts, save_ts, TSModel};
use crate::control::mlp::{load_mlp, save_mlp};
use crate::error::{DriveError, Result};
use crate::inverter::{synthesize_voltage, InverterConfig};
use crate::modulation::{Disposition, ModulationConfig, Sampling};
use crate::plant::{MotorParams, TorqueModel};
use crate::sim::{
    integral_absolute_error, simulate_student, simulate_teacher, steady_state_error_pct,
    train_drive_controller, DriveParams, DriveTrace, Schedule, TrainingConfig,
};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// What a run should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Modulate, synthesize, and analyze one open-loop waveform.
    OpenLoopSPWM,
    /// Speed-step drive simulation with tracking metrics.
    ClosedLoopDrive,
    /// Harvest, train, and save the controller networks.
    TrainController,
    /// THD comparison of all four dispositions at the reference operating
    /// point (5 levels, 1050 Hz carrier, 50 Hz reference).
    Table1Sweep,
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub modulation: ModulationConfig,
    pub inverter: InverterConfig,
    pub drive: DriveParams,
    pub training: TrainingConfig,
    pub n_harmonics: usize,
    /// Speed command of a closed-loop run (rad/s).
    pub w_ref: f64,
    /// Pretrained model files for the closed-loop student; without them the
    /// run reports the baseline regulator only.
    pub estimator_path: Option<PathBuf>,
    pub commander_path: Option<PathBuf>,
    pub supervisor_path: Option<PathBuf>,
}

/// Result of a run: files written (in order) and human-readable summary
/// lines for the caller to print.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

// ──────────────────────────────────────────────────────────────────────────
// Raw config text
// ──────────────────────────────────────────────────────────────────────────

/// Section name → key → (line number, raw value). BTreeMap keeps every
/// diagnostic and output deterministic.
type RawSections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn parse_raw(text: &str) -> Result<RawSections> {
    let mut sections: RawSections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| DriveError::Config {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            current = Some(name.trim().to_string());
            sections.entry(name.trim().to_string()).or_default();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| DriveError::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let section = current.clone().ok_or_else(|| DriveError::Config {
            line: line_no,
            message: format!("key `{}` appears before any [section] header", key.trim()),
        })?;
        let previous = sections
            .get_mut(&section)
            .unwrap()
            .insert(key.trim().to_string(), (line_no, value.trim().to_string()));
        if let Some((first_line, _)) = previous {
            return Err(DriveError::Config {
                line: line_no,
                message: format!(
                    "duplicate key `{}` in [{section}] (first set on line {first_line})",
                    key.trim()
                ),
            });
        }
    }
    Ok(sections)
}

/// Typed, consuming view over one section; leftover keys are reported as
/// unknown when the section is closed.
struct SectionView {
    name: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl SectionView {
    fn take(sections: &mut RawSections, name: &str) -> SectionView {
        SectionView {
            name: name.to_string(),
            entries: sections.remove(name).unwrap_or_default(),
        }
    }

    fn value(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.value(key) {
            None => Ok(default),
            Some((line, raw)) => raw.parse().map_err(|_| DriveError::Config {
                line,
                message: format!(
                    "[{}] {key}: cannot parse `{raw}` as {}",
                    self.name,
                    std::any::type_name::<T>()
                ),
            }),
        }
    }

    fn path(&mut self, key: &str) -> Option<PathBuf> {
        self.value(key).map(|(_, raw)| PathBuf::from(raw))
    }

    /// Fails on any key that no getter consumed.
    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(DriveError::Config {
                line,
                message: format!("unknown key `{key}` in [{}]", self.name),
            });
        }
        Ok(())
    }
}

fn parse_enum<T: Copy>(
    view: &mut SectionView,
    key: &str,
    default: T,
    table: &[(&str, T)],
) -> Result<T> {
    match view.value(key) {
        None => Ok(default),
        Some((line, raw)) => {
            let lowered = raw.to_lowercase();
            table
                .iter()
                .find(|(name, _)| *name == lowered)
                .map(|&(_, v)| v)
                .ok_or_else(|| DriveError::Config {
                    line,
                    message: format!(
                        "[{}] {key}: `{raw}` is not one of {}",
                        view.name,
                        table.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                    ),
                })
        }
    }
}

/// `0.2:1000,0.05:1000` → [(0.2, 1000), (0.05, 1000)].
fn parse_stages(view: &mut SectionView, default: Vec<(f64, usize)>) -> Result<Vec<(f64, usize)>> {
    let Some((line, raw)) = view.value("stages") else {
        return Ok(default);
    };
    let bad = |msg: String| DriveError::Config { line, message: msg };
    let mut stages = Vec::new();
    for part in raw.split(',') {
        let (lr, epochs) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| bad(format!("stage `{part}` is not `rate:epochs`")))?;
        stages.push((
            lr.trim()
                .parse()
                .map_err(|_| bad(format!("invalid learning rate `{lr}`")))?,
            epochs
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid epoch count `{epochs}`")))?,
        ));
    }
    if stages.is_empty() {
        return Err(bad("stages must not be empty".into()));
    }
    Ok(stages)
}

/// `90:1.2,150:1.8 ; 150:3.0` → two schedules of (command, hold) pairs.
fn parse_schedules(view: &mut SectionView, default: Vec<Schedule>) -> Result<Vec<Schedule>> {
    let Some((line, raw)) = view.value("schedules") else {
        return Ok(default);
    };
    let bad = |msg: String| DriveError::Config { line, message: msg };
    let mut schedules = Vec::new();
    for run in raw.split(';') {
        let mut schedule = Vec::new();
        for part in run.split(',') {
            let (w, hold) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| bad(format!("segment `{part}` is not `speed:hold`")))?;
            schedule.push((
                w.trim()
                    .parse()
                    .map_err(|_| bad(format!("invalid speed `{w}`")))?,
                hold.trim()
                    .parse()
                    .map_err(|_| bad(format!("invalid hold time `{hold}`")))?,
            ));
        }
        if schedule.is_empty() {
            return Err(bad("empty schedule".into()));
        }
        schedules.push(schedule);
    }
    Ok(schedules)
}

/// Parses and validates a complete scenario from config text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let mut sections = parse_raw(text)?;

    let mut scenario = SectionView::take(&mut sections, "scenario");
    let mode = match scenario.value("mode") {
        None => {
            return Err(DriveError::Config {
                line: 0,
                message: "[scenario] mode is required (open_loop, closed_loop, train, table1)"
                    .into(),
            })
        }
        Some((line, raw)) => match raw.to_lowercase().as_str() {
            "open_loop" => Mode::OpenLoopSPWM,
            "closed_loop" => Mode::ClosedLoopDrive,
            "train" => Mode::TrainController,
            "table1" => Mode::Table1Sweep,
            other => {
                return Err(DriveError::Config {
                    line,
                    message: format!(
                        "[scenario] mode: `{other}` is not one of open_loop, closed_loop, train, table1"
                    ),
                })
            }
        },
    };
    let (default_duration, default_dt) = match mode {
        Mode::OpenLoopSPWM => (0.04, 1e-5),
        Mode::ClosedLoopDrive => (3.0, 1e-4),
        Mode::TrainController => (3.0, 1e-4),
        Mode::Table1Sweep => (0.02, 5e-7),
    };
    let duration = scenario.parse("duration", default_duration)?;
    let dt = scenario.parse("dt", default_dt)?;
    let seed = scenario.parse("seed", 42u64)?;
    let output_dir = scenario.path("output_dir").unwrap_or_else(|| PathBuf::from("out"));
    scenario.finish()?;

    let mut modulation = SectionView::take(&mut sections, "modulation");
    let disposition = parse_enum(
        &mut modulation,
        "disposition",
        Disposition::PH,
        &[
            ("ph", Disposition::PH),
            ("po", Disposition::PO),
            ("apo", Disposition::APO),
            ("shift90", Disposition::Shift90),
        ],
    )?;
    let sampling = parse_enum(
        &mut modulation,
        "sampling",
        Sampling::Natural,
        &[
            ("natural", Sampling::Natural),
            ("symmetric", Sampling::Symmetric),
            ("asymmetric", Sampling::Asymmetric),
            ("crossing", Sampling::CrossingCorrected),
        ],
    )?;
    let levels_m = modulation.parse("levels", 5usize)?;
    let mod_cfg = ModulationConfig {
        levels_m,
        f_c: modulation.parse("f_c", 1050.0)?,
        f_m: modulation.parse("f_m", 50.0)?,
        m_a: modulation.parse("m_a", 1.0)?,
        v_m: modulation.parse("v_m", 2.0)?,
        v_c: modulation.parse("v_c", 1.0)?,
        disposition,
        sampling,
    };
    modulation.finish()?;

    let mut inverter = SectionView::take(&mut sections, "inverter");
    let inv_cfg = InverterConfig {
        v_dc_total: inverter.parse("v_dc_total", 400.0)?,
        levels_m,
    };
    inverter.finish()?;

    let mut plant = SectionView::take(&mut sections, "plant");
    let defaults = MotorParams::default();
    let motor = MotorParams {
        r_total: plant.parse("r", defaults.r_total)?,
        l_total: plant.parse("l", defaults.l_total)?,
        k_m: plant.parse("k_m", defaults.k_m)?,
        k_t_amp: plant.parse("k_t_amp", defaults.k_t_amp)?,
        j_inertia: plant.parse("j", defaults.j_inertia)?,
        b_friction: plant.parse("b", defaults.b_friction)?,
        torque_model: parse_enum(
            &mut plant,
            "torque_model",
            TorqueModel::SeriesQuadratic,
            &[
                ("series", TorqueModel::SeriesQuadratic),
                ("amplitude", TorqueModel::AmplitudeLinear),
            ],
        )?,
    };
    plant.finish()?;

    let mut control = SectionView::take(&mut sections, "control");
    let drive_defaults = DriveParams::default();
    let drive = DriveParams {
        motor,
        v_dc_total: inv_cfg.v_dc_total,
        t_load: control.parse("t_load", drive_defaults.t_load)?,
        w_rated: control.parse("w_rated", drive_defaults.w_rated)?,
        dt,
        teacher_kp: control.parse("teacher_kp", drive_defaults.teacher_kp)?,
        teacher_ki: control.parse("teacher_ki", drive_defaults.teacher_ki)?,
        blend_gain: control.parse("blend_gain", drive_defaults.blend_gain)?,
        fuzzy_e_max: control.parse("fuzzy_e_max", drive_defaults.fuzzy_e_max)?,
        fuzzy_de_max: control.parse("fuzzy_de_max", drive_defaults.fuzzy_de_max)?,
        fuzzy_trim_span: control.parse("fuzzy_trim_span", drive_defaults.fuzzy_trim_span)?,
        slew_rate: control.parse("slew_rate", drive_defaults.slew_rate)?,
    };
    let w_ref = control.parse("w_ref", drive.w_rated)?;
    let training_defaults = TrainingConfig::default();
    let training = TrainingConfig {
        seed,
        hidden1: control.parse("hidden1", training_defaults.hidden1)?,
        hidden2: control.parse("hidden2", training_defaults.hidden2)?,
        stages: parse_stages(&mut control, training_defaults.stages)?,
        schedules: parse_schedules(&mut control, training_defaults.schedules)?,
        stride: control.parse("stride", training_defaults.stride)?,
        dither_amplitude: control
            .parse("dither_amplitude", training_defaults.dither_amplitude)?,
        dither_period: control.parse("dither_period", training_defaults.dither_period)?,
    };
    let estimator_path = control.path("estimator_model");
    let commander_path = control.path("commander_model");
    let supervisor_path = control.path("supervisor_model");
    control.finish()?;

    // The amplitude-loop keys are accepted and validated here so one config
    // file can describe the whole machine, even though the four scenario
    // modes exercise the speed loop.
    let mut current = SectionView::take(&mut sections, "current_loop");
    let loop_defaults = crate::current_loop::CurrentLoopConfig::default();
    let loop_cfg = crate::current_loop::CurrentLoopConfig {
        kp_i: current.parse("kp_i", loop_defaults.kp_i)?,
        ki_i: current.parse("ki_i", loop_defaults.ki_i)?,
        tau_imax: current.parse("tau_imax", loop_defaults.tau_imax)?,
    };
    loop_cfg.validate()?;
    current.finish()?;

    let mut analysis = SectionView::take(&mut sections, "analysis");
    let n_harmonics = analysis.parse("n_harmonics", 100usize)?;
    analysis.finish()?;

    if let Some((name, inner)) = sections.into_iter().next() {
        let line = inner.values().map(|&(l, _)| l).min().unwrap_or(0);
        return Err(DriveError::Config {
            line,
            message: format!("unknown section [{name}]"),
        });
    }

    if estimator_path.is_some() != commander_path.is_some() {
        return Err(DriveError::Config {
            line: 0,
            message: "estimator_model and commander_model must be given together".into(),
        });
    }

    let cfg = ScenarioConfig {
        mode,
        duration,
        dt,
        seed,
        output_dir,
        modulation: mod_cfg,
        inverter: inv_cfg,
        drive,
        training,
        n_harmonics,
        w_ref,
        estimator_path,
        commander_path,
        supervisor_path,
    };
    validate_scenario(&cfg)?;
    Ok(cfg)
}

fn validate_scenario(cfg: &ScenarioConfig) -> Result<()> {
    if !(cfg.duration > 0.0) || !(cfg.dt > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "duration and dt must be positive, got {} and {}",
                cfg.duration, cfg.dt
            ),
        });
    }
    match cfg.mode {
        Mode::OpenLoopSPWM | Mode::Table1Sweep => {
            cfg.modulation.validate()?;
            if cfg.n_harmonics == 0 {
                return Err(DriveError::Config {
                    line: 0,
                    message: "n_harmonics must be at least 1".into(),
                });
            }
        }
        Mode::ClosedLoopDrive | Mode::TrainController => {
            cfg.drive.validate()?;
        }
    }
    Ok(())
}

// ──────────────────────────────────────────────────────────────────────────
// Artifact emission
// ──────────────────────────────────────────────────────────────────────────

/// 64-bit FNV-1a over the effective scenario parameters; identical
/// parameters hash identically, so the manifest pins what actually ran.
/// The output directory is excluded — it decides where artifacts land,
/// never what they contain, and reruns into different directories must
/// still be recognizably the same run.
fn config_hash(cfg: &ScenarioConfig) -> u64 {
    let mut shadow = cfg.clone();
    shadow.output_dir = PathBuf::new();
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in format!("{shadow:?}").bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Collects artifact files and writes them plus the manifest at the end.
struct ArtifactSet<'a> {
    cfg: &'a ScenarioConfig,
    files: Vec<PathBuf>,
}

impl<'a> ArtifactSet<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<ArtifactSet<'a>> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(ArtifactSet { cfg, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.cfg.output_dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        let mut manifest = String::new();
        let _ = writeln!(manifest, "engine = mldrive {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(manifest, "config_hash = {:016x}", config_hash(self.cfg));
        let _ = writeln!(manifest, "mode = {:?}", self.cfg.mode);
        let _ = writeln!(manifest, "seed = {}", self.cfg.seed);
        for file in &self.files {
            let _ = writeln!(
                manifest,
                "file = {}",
                file.file_name().unwrap_or_default().to_string_lossy()
            );
        }
        self.write("manifest.txt", &manifest.clone())?;
        Ok(self.files)
    }
}

fn trace_csv(trace: &DriveTrace) -> String {
    let mut out = String::from("t,w_ref,omega,i,v_applied,alpha,torque\n");
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.t, r.w_ref, r.omega, r.i, r.v_applied, r.alpha, r.torque
        );
    }
    out
}

fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("n,f_hz,magnitude\n");
    for (idx, magnitude) in spectrum.magnitudes.iter().enumerate() {
        let n = idx + 1;
        let _ = writeln!(out, "{n},{:?},{magnitude:?}", n as f64 * spectrum.f_fund);
    }
    out
}

// ──────────────────────────────────────────────────────────────────────────
// Modes
// ──────────────────────────────────────────────────────────────────────────

fn disposition_name(d: Disposition) -> &'static str {
    match d {
        Disposition::PH => "PH",
        Disposition::PO => "PO",
        Disposition::APO => "APO",
        Disposition::Shift90 => "Shift90",
    }
}

fn run_open_loop(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut artifacts = ArtifactSet::new(cfg)?;
    let series = crate::modulation::generate_levels(&cfg.modulation, cfg.duration, cfg.dt)?;

    let mut levels = String::from("t,level\n");
    for (k, level) in series.levels.iter().enumerate() {
        let _ = writeln!(levels, "{:?},{level}", k as f64 * series.dt);
    }
    artifacts.write("levels.csv", &levels)?;

    let voltage = synthesize_voltage(&series, &cfg.inverter)?;
    let mut voltage_csv = String::from("t,v\n");
    for (k, v) in voltage.samples.iter().enumerate() {
        let _ = writeln!(voltage_csv, "{:?},{v:?}", k as f64 * voltage.dt);
    }
    artifacts.write("voltage.csv", &voltage_csv)?;

    let spectrum = spectrum_of(&voltage, cfg.modulation.f_m, cfg.n_harmonics)?;
    artifacts.write("spectrum.csv", &spectrum_csv(&spectrum))?;

    // Phase reference: the ideal modulating sinusoid at the inverter scale.
    let reference = Waveform {
        dt: voltage.dt,
        samples: (0..voltage.samples.len())
            .map(|k| {
                cfg.modulation.m_a
                    * (cfg.inverter.v_dc_total / 2.0)
                    * (2.0 * PI * cfg.modulation.f_m * k as f64 * voltage.dt).sin()
            })
            .collect(),
    };
    let lag = fundamental_phase_lag(&voltage, &reference, cfg.modulation.f_m)?;

    let mut summary = String::from("disposition,sampling,thd_pct,phase_lag_rad\n");
    let _ = writeln!(
        summary,
        "{},{:?},{:?},{lag:?}",
        disposition_name(cfg.modulation.disposition),
        cfg.modulation.sampling,
        spectrum.thd_pct
    );
    artifacts.write("summary.csv", &summary)?;

    Ok(RunReport {
        summary: vec![format!(
            "{} / {:?}: THD {:.4}%, fundamental lag {:.6} rad",
            disposition_name(cfg.modulation.disposition),
            cfg.modulation.sampling,
            spectrum.thd_pct,
            lag
        )],
        files: artifacts.finish()?,
    })
}

fn run_table1(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut artifacts = ArtifactSet::new(cfg)?;
    let mut table = String::from("disposition,thd_pct\n");
    let mut summary = Vec::new();
    for disposition in [
        Disposition::PH,
        Disposition::PO,
        Disposition::APO,
        Disposition::Shift90,
    ] {
        let mod_cfg = ModulationConfig {
            levels_m: 5,
            f_c: 1050.0,
            f_m: 50.0,
            disposition,
            sampling: Sampling::Natural,
            ..cfg.modulation.clone()
        };
        let series = crate::modulation::generate_levels(&mod_cfg, cfg.duration, cfg.dt)?;
        let inv = InverterConfig { v_dc_total: cfg.inverter.v_dc_total, levels_m: 5 };
        let voltage = synthesize_voltage(&series, &inv)?;
        let spectrum = spectrum_of(&voltage, mod_cfg.f_m, cfg.n_harmonics)?;
        let _ = writeln!(table, "{},{:?}", disposition_name(disposition), spectrum.thd_pct);
        summary.push(format!(
            "{}: THD {:.4}%",
            disposition_name(disposition),
            spectrum.thd_pct
        ));
    }
    artifacts.write("thd_table.csv", &table)?;
    Ok(RunReport { summary, files: artifacts.finish()? })
}

fn run_closed_loop(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut artifacts = ArtifactSet::new(cfg)?;
    let teacher = simulate_teacher(&cfg.drive, cfg.w_ref, cfg.duration)?;
    artifacts.write("trajectory_teacher.csv", &trace_csv(&teacher))?;

    let mut metrics = String::from("controller,iae_rad,steady_state_error_pct\n");
    let teacher_iae = integral_absolute_error(&teacher);
    let mut summary = Vec::new();
    if cfg.w_ref != 0.0 {
        let sse = steady_state_error_pct(&teacher, 0.1)?;
        let _ = writeln!(metrics, "teacher_pi,{teacher_iae:?},{sse:?}");
        summary.push(format!("teacher PI: IAE {teacher_iae:.4} rad, steady error {sse:.4}%"));
    } else {
        let _ = writeln!(metrics, "teacher_pi,{teacher_iae:?},");
        summary.push(format!("teacher PI: IAE {teacher_iae:.4} rad"));
    }

    if let (Some(est_path), Some(cmd_path)) = (&cfg.estimator_path, &cfg.commander_path) {
        let estimator = load_model(est_path, load_mlp)?;
        let commander = load_model(cmd_path, load_mlp)?;
        let supervisor: Option<TSModel> = match &cfg.supervisor_path {
            Some(path) => Some(load_model(path, load_ts)?),
            None => None,
        };
        let student = simulate_student(
            &cfg.drive,
            &estimator,
            &commander,
            supervisor.as_ref(),
            cfg.w_ref,
            cfg.duration,
        )?;
        artifacts.write("trajectory_student.csv", &trace_csv(&student))?;
        let student_iae = integral_absolute_error(&student);
        if cfg.w_ref != 0.0 {
            let sse = steady_state_error_pct(&student, 0.1)?;
            let _ = writeln!(metrics, "neuro_fuzzy,{student_iae:?},{sse:?}");
            summary.push(format!(
                "neuro-fuzzy: IAE {student_iae:.4} rad ({:.3}x teacher), steady error {sse:.4}%",
                student_iae / teacher_iae
            ));
        } else {
            let _ = writeln!(metrics, "neuro_fuzzy,{student_iae:?},");
            summary.push(format!("neuro-fuzzy: IAE {student_iae:.4} rad"));
        }
    }
    artifacts.write("metrics.csv", &metrics)?;
    Ok(RunReport { summary, files: artifacts.finish()? })
}

fn load_model<T>(path: &Path, loader: fn(&str) -> Result<T>) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| DriveError::Config {
        line: 0,
        message: format!("cannot read model file {}: {e}", path.display()),
    })?;
    loader(&text)
}

fn run_train(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut artifacts = ArtifactSet::new(cfg)?;
    let trained = train_drive_controller(&cfg.drive, &cfg.training)?;
    artifacts.write("estimator.txt", &save_mlp(&trained.estimator))?;
    artifacts.write("commander.txt", &save_mlp(&trained.commander))?;
    artifacts.write("supervisor.txt", &save_ts(&trained.supervisor)?)?;

    let mut loss = String::from("epoch,loss_estimator,loss_commander\n");
    for (epoch, (le, lc)) in trained
        .loss_estimator
        .iter()
        .zip(&trained.loss_commander)
        .enumerate()
    {
        let _ = writeln!(loss, "{epoch},{le:?},{lc:?}");
    }
    artifacts.write("loss.csv", &loss)?;

    Ok(RunReport {
        summary: vec![format!(
            "trained estimator (final loss {:.3e}) and commander (final loss {:.3e})",
            trained.loss_estimator.last().unwrap(),
            trained.loss_commander.last().unwrap()
        )],
        files: artifacts.finish()?,
    })
}

/// Runs one scenario to completion, returning the files written and summary
/// lines for the caller to print.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    match cfg.mode {
        Mode::OpenLoopSPWM => run_open_loop(cfg),
        Mode::Table1Sweep => run_table1(cfg),
        Mode::ClosedLoopDrive => run_closed_loop(cfg),
        Mode::TrainController => run_train(cfg),
    }
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
