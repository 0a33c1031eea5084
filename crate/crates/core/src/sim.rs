//! Closed-loop drive engine: speed-step simulations of the series motor
//! behind an average-value converter, a proportional-integral teacher, an
//! imitation-training pipeline for the two controller networks, and the
//! blended neuro-fuzzy student loop.
//!
//! The converter model is the average of the modulated level stack over one
//! control tick: a duty command `alpha` in [0, 1] applies
//! `alpha · v_dc_total / 2` volts. The teacher regulates speed with an
//! anti-windup PI. The trainer replays teacher runs under two deliberate
//! perturbations — a deterministic exploration dither on the applied duty,
//! and mid-run reference steps — while labeling every tick with the *clean*
//! expert duty. Without them the networks would shortcut: the commander
//! could copy the previous duty out of the voltage feedback and the
//! estimator could echo the reference instead of reading the electrical
//! measurements. Training runs on normalized data; the normalization is
//! then folded into the weights so the deployed networks consume physical
//! units directly.
//!
//! # Example
//!
//! ```
//! use mldrive::sim::{simulate_teacher, DriveParams};
//!
//! let params = DriveParams { dt: 1e-3, ..DriveParams::default() };
//! // Half a second is enough for the soft-start ramp to bite and the
//! // motor to pull away from the constant-torque load.
//! let trace = simulate_teacher(&params, 100.0, 0.5).unwrap();
//! assert_eq!(trace.rows.len(), 500);
//! assert!(trace.rows.last().unwrap().omega > 0.0);
//! ```

use crate::control::fuzzy::{default_speed_supervisor, ts_infer, TSModel};
use crate::control::mlp::{train_backprop, Mlp};
use crate::control::{controller_step, ControllerSample};
use crate::error::{DriveError, Result};
use crate::plant::{step_motor, MotorParams, MotorState};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed parameters of a closed-loop drive scenario.
#[derive(Debug, Clone)]
pub struct DriveParams {
    pub motor: MotorParams,
    /// Total DC bus voltage (V); a duty of 1 applies half of it.
    pub v_dc_total: f64,
    /// Constant load torque (N·m).
    pub t_load: f64,
    /// Rated speed used as the normalization scale (rad/s).
    pub w_rated: f64,
    /// Control tick = integration step (s).
    pub dt: f64,
    /// Teacher proportional gain (per rad/s).
    pub teacher_kp: f64,
    /// Teacher integral gain (per rad).
    pub teacher_ki: f64,
    /// Gain on the supervisory fuzzy correction added to the network duty.
    pub blend_gain: f64,
    /// Speed-error universe half-width of the fuzzy supervisor (rad/s).
    pub fuzzy_e_max: f64,
    /// Error-derivative universe half-width (rad/s²).
    pub fuzzy_de_max: f64,
    /// Saturation of the supervisory trim surface, in duty units. Kept a
    /// small fraction of full duty so the trim corrects residuals without
    /// ever overpowering the network command.
    pub fuzzy_trim_span: f64,
    /// Soft-start slew limit of the converter duty (duty fraction per
    /// second). The actuated duty moves toward the commanded duty at most
    /// this fast, which caps the inrush current on a cold start and keeps
    /// the electrical state near its quasi-steady sheet — where the
    /// (voltage, current) pair determines the speed uniquely.
    pub slew_rate: f64,
}

impl Default for DriveParams {
    fn default() -> DriveParams {
        DriveParams {
            motor: MotorParams::default(),
            v_dc_total: 400.0,
            t_load: 1.0,
            w_rated: 150.0,
            dt: 1e-4,
            teacher_kp: 0.02,
            teacher_ki: 0.08,
            blend_gain: 0.5,
            fuzzy_e_max: 40.0,
            fuzzy_de_max: 2000.0,
            fuzzy_trim_span: 0.1,
            slew_rate: 2.0,
        }
    }
}

impl DriveParams {
    /// Checks the scenario-level preconditions.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_dc_total", self.v_dc_total),
            ("w_rated", self.w_rated),
            ("dt", self.dt),
            ("teacher_kp", self.teacher_kp),
            ("teacher_ki", self.teacher_ki),
            ("fuzzy_e_max", self.fuzzy_e_max),
            ("fuzzy_de_max", self.fuzzy_de_max),
            ("slew_rate", self.slew_rate),
        ];
        if !(0.0..=1.0).contains(&self.fuzzy_trim_span) {
            return Err(DriveError::Config {
                line: 0,
                message: format!(
                    "fuzzy_trim_span must lie in [0, 1], got {}",
                    self.fuzzy_trim_span
                ),
            });
        }
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(DriveError::Config {
                    line: 0,
                    message: format!("{name} must be positive and finite, got {value}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.blend_gain) {
            return Err(DriveError::Config {
                line: 0,
                message: format!("blend_gain must lie in [0, 1], got {}", self.blend_gain),
            });
        }
        if self.t_load < 0.0 || !self.t_load.is_finite() {
            return Err(DriveError::Config {
                line: 0,
                message: format!("t_load must be finite and >= 0, got {}", self.t_load),
            });
        }
        Ok(())
    }

    /// Voltage applied for a unit duty command.
    fn v_full(&self) -> f64 {
        self.v_dc_total / 2.0
    }
}

/// One recorded control tick. `alpha` is the duty actually applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub w_ref: f64,
    pub omega: f64,
    pub i: f64,
    pub v_applied: f64,
    pub alpha: f64,
    pub torque: f64,
}

/// A completed run, tick by tick.
#[derive(Debug, Clone)]
pub struct DriveTrace {
    pub dt: f64,
    pub rows: Vec<TraceRow>,
}

/// Integral of |ω_ref − ω| over the run (rad).
pub fn integral_absolute_error(trace: &DriveTrace) -> f64 {
    trace
        .rows
        .iter()
        .map(|r| (r.w_ref - r.omega).abs() * trace.dt)
        .sum()
}

/// Mean |ω_ref − ω| over the last `tail_fraction` of the run, relative to
/// the command there, in percent.
pub fn steady_state_error_pct(trace: &DriveTrace, tail_fraction: f64) -> Result<f64> {
    if !(0.0 < tail_fraction && tail_fraction <= 1.0) || trace.rows.is_empty() {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "need 0 < tail_fraction <= 1 and a non-empty trace, got {tail_fraction}"
            ),
        });
    }
    let start = trace.rows.len() - (trace.rows.len() as f64 * tail_fraction).ceil() as usize;
    let tail = &trace.rows[start..];
    let w_ref = tail.last().unwrap().w_ref;
    if w_ref == 0.0 {
        return Err(DriveError::Domain(
            "steady-state error is relative to a nonzero speed command".into(),
        ));
    }
    let mean: f64 =
        tail.iter().map(|r| (r.w_ref - r.omega).abs()).sum::<f64>() / tail.len() as f64;
    Ok(100.0 * mean / w_ref.abs())
}

/// Shared closed-loop stepper. `profile` maps time to the speed command;
/// `policy` maps (tick, command, previous applied voltage, previous current,
/// state) to a duty in [0, 1].
fn run_loop<P, F>(params: &DriveParams, duration: f64, profile: P, mut policy: F) -> Result<DriveTrace>
where
    P: Fn(f64) -> f64,
    F: FnMut(usize, f64, f64, f64, &MotorState) -> Result<f64>,
{
    params.validate()?;
    if !(duration > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!("duration must be positive, got {duration}"),
        });
    }
    let n = (duration / params.dt).round() as usize;
    let mut state = MotorState { omega: 0.0, i: 0.0, t: 0.0 };
    let mut rows = Vec::with_capacity(n);
    let mut v_prev = 0.0;
    let mut i_prev = 0.0;
    let mut alpha_act = 0.0;
    let max_step = params.slew_rate * params.dt;
    for k in 0..n {
        let w_ref = profile(state.t);
        let alpha = policy(k, w_ref, v_prev, i_prev, &state)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(DriveError::StateCorruption(format!(
                "policy emitted duty {alpha} outside [0, 1] at tick {k}"
            )));
        }
        // The converter's soft start: the actuated duty slews toward the
        // command instead of jumping, for the teacher and the student alike.
        alpha_act += (alpha - alpha_act).clamp(-max_step, max_step);
        let v = alpha_act * params.v_full();
        rows.push(TraceRow {
            t: state.t,
            w_ref,
            omega: state.omega,
            i: state.i,
            v_applied: v,
            alpha: alpha_act,
            torque: params.motor.torque(state.i),
        });
        let i_now = state.i;
        state = step_motor(&state, v, params.t_load, &params.motor, params.dt)?;
        v_prev = v;
        i_prev = i_now;
    }
    Ok(DriveTrace { dt: params.dt, rows })
}

/// Anti-windup PI speed regulator used as the imitation teacher and the
/// comparison baseline.
fn teacher_policy(params: &DriveParams) -> impl FnMut(f64, f64) -> f64 + '_ {
    let mut integrator = 0.0;
    move |w_ref: f64, omega: f64| -> f64 {
        let e = w_ref - omega;
        let candidate = integrator + params.teacher_ki * e * params.dt;
        let raw = params.teacher_kp * e + candidate;
        let alpha = raw.clamp(0.0, 1.0);
        if raw == alpha {
            integrator = candidate;
        }
        alpha
    }
}

/// Runs the clean PI teacher against a constant speed command from rest.
pub fn simulate_teacher(params: &DriveParams, w_ref: f64, duration: f64) -> Result<DriveTrace> {
    let mut pi = teacher_policy(params);
    run_loop(params, duration, |_| w_ref, |_, w, _, _, s| Ok(pi(w, s.omega)))
}

/// A piecewise-constant speed-command schedule: (command, hold time) pairs.
pub type Schedule = Vec<(f64, f64)>;

fn schedule_duration(schedule: &[(f64, f64)]) -> f64 {
    schedule.iter().map(|&(_, hold)| hold).sum()
}

fn schedule_value(schedule: &[(f64, f64)], t: f64) -> f64 {
    let mut elapsed = 0.0;
    for &(w_ref, hold) in schedule {
        elapsed += hold;
        if t < elapsed {
            return w_ref;
        }
    }
    schedule.last().map(|&(w, _)| w).unwrap_or(0.0)
}

/// Runs the PI teacher through a reference schedule with a deterministic
/// exploration dither added to the *applied* duty: a fresh uniform offset in
/// ±`amplitude` is drawn every `period` seconds from a seeded generator.
/// Returns the trace (whose duties include the dither, as the plant saw
/// them) together with the clean expert duty per tick — the imitation
/// target. Relabeling with the clean duty removes the dither noise from the
/// targets while the perturbed feedback decorrelates the inputs.
pub fn simulate_teacher_schedule(
    params: &DriveParams,
    schedule: &[(f64, f64)],
    amplitude: f64,
    period: f64,
    seed: u64,
) -> Result<(DriveTrace, Vec<f64>)> {
    if schedule.is_empty() {
        return Err(DriveError::Config {
            line: 0,
            message: "reference schedule must have at least one segment".into(),
        });
    }
    if !(amplitude >= 0.0) || !(period > 0.0) {
        return Err(DriveError::Config {
            line: 0,
            message: format!(
                "dither needs amplitude >= 0 and period > 0, got {amplitude}, {period}"
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ticks_per_draw = (period / params.dt).round().max(1.0) as usize;
    let mut offset = 0.0;
    let mut pi = teacher_policy(params);
    let mut expert = Vec::new();
    let trace = run_loop(
        params,
        schedule_duration(schedule),
        |t| schedule_value(schedule, t),
        |k, w_ref, _, _, s| {
            if k % ticks_per_draw == 0 {
                offset = if amplitude > 0.0 {
                    rng.gen_range(-amplitude..amplitude)
                } else {
                    0.0
                };
            }
            let clean = pi(w_ref, s.omega);
            expert.push(clean);
            Ok((clean + offset).clamp(0.0, 1.0))
        },
    )?;
    Ok((trace, expert))
}

/// Runs the trained neuro-fuzzy student against a constant speed command:
/// the estimator/commander pair from [`train_drive_controller`] plus the
/// supervisory fuzzy correction scaled by `blend_gain`. Inputs to the
/// supervisor are saturated to its universe; an uncovered input falls back
/// to the previous correction.
pub fn simulate_student(
    params: &DriveParams,
    estimator: &Mlp,
    commander: &Mlp,
    supervisor: Option<&TSModel>,
    w_ref: f64,
    duration: f64,
) -> Result<DriveTrace> {
    let mut e_prev: Option<f64> = None;
    let mut trim_prev = 0.0;
    run_loop(
        params,
        duration,
        |_| w_ref,
        move |_, w, v_prev, i_prev, _| {
            let mut sample = ControllerSample::new(w, v_prev, i_prev);
            let alpha_nn = controller_step(estimator, commander, &mut sample)?;
            let trim = match supervisor {
                None => 0.0,
                Some(model) => {
                    let e = (w - sample.w_est_k).clamp(-params.fuzzy_e_max, params.fuzzy_e_max);
                    let de = ((e - e_prev.unwrap_or(e)) / params.dt)
                        .clamp(-params.fuzzy_de_max, params.fuzzy_de_max);
                    e_prev = Some(e);
                    match ts_infer(model, &[e, de]) {
                        Ok(y) => {
                            trim_prev = y;
                            y
                        }
                        Err(DriveError::UncoveredInput) => trim_prev,
                        Err(other) => return Err(other),
                    }
                }
            };
            Ok((alpha_nn + params.blend_gain * trim).clamp(0.0, 1.0))
        },
    )
}

// ──────────────────────────────────────────────────────────────────────────
// Imitation training
// ──────────────────────────────────────────────────────────────────────────

/// Knobs of the imitation-training pipeline.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub seed: u64,
    /// Hidden width of the speed estimator (3-hidden-1).
    pub hidden1: usize,
    /// Hidden width of the duty commander (4-hidden-1).
    pub hidden2: usize,
    /// Learning-rate schedule: (rate, epochs) stages run in order, so
    /// training can start fast and anneal for the final fit.
    pub stages: Vec<(f64, usize)>,
    /// Harvest runs: each is a piecewise-constant reference schedule.
    pub schedules: Vec<Schedule>,
    /// Keep every `stride`-th tick as a training sample.
    pub stride: usize,
    /// Exploration dither amplitude (duty units) and redraw period (s).
    pub dither_amplitude: f64,
    pub dither_period: f64,
}

impl Default for TrainingConfig {
    fn default() -> TrainingConfig {
        TrainingConfig {
            seed: 42,
            hidden1: 8,
            hidden2: 10,
            stages: vec![(0.2, 2000), (0.08, 2000), (0.03, 2000)],
            schedules: vec![
                vec![(90.0, 1.5), (150.0, 1.5)],
                vec![(150.0, 1.5), (90.0, 1.5)],
                vec![(120.0, 1.5), (150.0, 1.5)],
                vec![(150.0, 3.0)],
                vec![(120.0, 3.0)],
            ],
            stride: 50,
            dither_amplitude: 0.1,
            dither_period: 0.15,
        }
    }
}

/// The trained controller pair with the supervisor and loss histories.
#[derive(Debug, Clone)]
pub struct TrainedController {
    pub estimator: Mlp,
    pub commander: Mlp,
    pub supervisor: TSModel,
    pub loss_estimator: Vec<f64>,
    pub loss_commander: Vec<f64>,
}

/// Per-column mean and population standard deviation of a sample set's
/// inputs, plus the same for its scalar targets. A constant column gets a
/// unit deviation so standardizing it is a pure shift.
#[allow(clippy::type_complexity)]
fn sample_stats(pairs: &[(Vec<f64>, Vec<f64>)]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let n = pairs.len() as f64;
    let dim = pairs[0].0.len();
    let mut x_mean = vec![0.0; dim];
    let mut y_mean = 0.0;
    for (x, y) in pairs {
        for (m, v) in x_mean.iter_mut().zip(x) {
            *m += v;
        }
        y_mean += y[0];
    }
    x_mean.iter_mut().for_each(|m| *m /= n);
    y_mean /= n;
    let mut x_var = vec![0.0; dim];
    let mut y_var = 0.0;
    for (x, y) in pairs {
        for ((v2, v), m) in x_var.iter_mut().zip(x).zip(&x_mean) {
            *v2 += (v - m) * (v - m);
        }
        y_var += (y[0] - y_mean) * (y[0] - y_mean);
    }
    let finish = |v2: f64| {
        let sd = (v2 / n).sqrt();
        if sd > 1e-12 {
            sd
        } else {
            1.0
        }
    };
    let x_std: Vec<f64> = x_var.into_iter().map(finish).collect();
    (x_mean, x_std, y_mean, finish(y_var))
}

/// Maps physical-unit pairs to z-scores for well-conditioned training: every
/// feature and the target get zero mean and unit variance, so comparable
/// first-layer weights carry comparable influence regardless of units.
fn standardize(
    pairs: &[(Vec<f64>, Vec<f64>)],
    x_mean: &[f64],
    x_std: &[f64],
    y_mean: f64,
    y_std: f64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    pairs
        .iter()
        .map(|(x, y)| {
            let z = x
                .iter()
                .zip(x_mean)
                .zip(x_std)
                .map(|((v, m), s)| (v - m) / s)
                .collect();
            (z, vec![(y[0] - y_mean) / y_std])
        })
        .collect()
}

/// Rewrites a network trained on standardized data so it consumes and emits
/// physical units: the input shift/scale folds into the first layer and the
/// target de-standardization into the identity output layer. Exact, because
/// both are affine maps absorbed by affine layers.
fn fold_standardization(net: &mut Mlp, x_mean: &[f64], x_std: &[f64], y_mean: f64, y_std: f64) {
    let first = &mut net.layers[0];
    for (row, b) in first.w.iter_mut().zip(first.b.iter_mut()) {
        for ((w, m), s) in row.iter_mut().zip(x_mean).zip(x_std) {
            *b -= *w * m / s;
            *w /= s;
        }
    }
    let last = net.layers.last_mut().unwrap();
    for row in &mut last.w {
        row.iter_mut().for_each(|w| *w *= y_std);
    }
    last.b.iter_mut().for_each(|b| *b = y_std * *b + y_mean);
}

/// Seconds of each run harvested at the dense stride. The launch window
/// covers the inrush current spike and the saturated acceleration ramp,
/// where the speed/current relation changes fastest and where a sparse
/// stride would leave the (electrically unobservable) rest state almost
/// absent from the data.
const LAUNCH_WINDOW_S: f64 = 0.2;

/// Harvests physical-unit (input, target) pairs for both networks from a
/// labeled trace: the estimator learns measured speed from
/// (ω_ref(k), V_t(k−1), i_a(k−1)); the commander learns the clean expert
/// duty from those three plus the measured speed (teacher forcing).
/// The launch window is sampled ten times denser than the rest of the
/// run so the startup transient carries real weight in the loss.
#[allow(clippy::type_complexity)]
fn harvest_pairs(
    trace: &DriveTrace,
    expert: &[f64],
    stride: usize,
) -> (Vec<(Vec<f64>, Vec<f64>)>, Vec<(Vec<f64>, Vec<f64>)>) {
    let mut estimator_pairs = Vec::new();
    let mut commander_pairs = Vec::new();
    let launch_ticks = (LAUNCH_WINDOW_S / trace.dt) as usize;
    let launch_stride = (stride / 10).max(1);
    let mut k = 0;
    while k < trace.rows.len() {
        // Tick 0 sees the zero initial feedback the loop itself starts
        // from; keeping it anchors the (otherwise electrically
        // unobservable) rest state to a zero speed estimate.
        let (v_prev, i_prev) = match k {
            0 => (0.0, 0.0),
            _ => (trace.rows[k - 1].v_applied, trace.rows[k - 1].i),
        };
        let row = &trace.rows[k];
        let x = vec![row.w_ref, v_prev, i_prev];
        estimator_pairs.push((x.clone(), vec![row.omega]));
        let mut x2 = x;
        x2.push(row.omega);
        commander_pairs.push((x2, vec![expert[k]]));
        k += if k < launch_ticks { launch_stride } else { stride };
    }
    (estimator_pairs, commander_pairs)
}

/// Full imitation pipeline: dithered teacher runs over every schedule,
/// standardized training of both networks on clean expert labels, exact
/// folding back to physical units, and the default fuzzy supervisor sized
/// to the drive.
pub fn train_drive_controller(
    params: &DriveParams,
    cfg: &TrainingConfig,
) -> Result<TrainedController> {
    if cfg.schedules.is_empty() || cfg.stride == 0 || cfg.stages.is_empty() {
        return Err(DriveError::Config {
            line: 0,
            message: "training needs schedules, stages, and stride >= 1".into(),
        });
    }
    let mut estimator_pairs = Vec::new();
    let mut commander_pairs = Vec::new();
    for (run, schedule) in cfg.schedules.iter().enumerate() {
        let (trace, expert) = simulate_teacher_schedule(
            params,
            schedule,
            cfg.dither_amplitude,
            cfg.dither_period,
            cfg.seed.wrapping_add(run as u64),
        )?;
        let (e_pairs, c_pairs) = harvest_pairs(&trace, &expert, cfg.stride);
        estimator_pairs.extend(e_pairs);
        commander_pairs.extend(c_pairs);
    }

    let (ex_mean, ex_std, ey_mean, ey_std) = sample_stats(&estimator_pairs);
    let (cx_mean, cx_std, cy_mean, cy_std) = sample_stats(&commander_pairs);
    let est_set = standardize(&estimator_pairs, &ex_mean, &ex_std, ey_mean, ey_std);
    let cmd_set = standardize(&commander_pairs, &cx_mean, &cx_std, cy_mean, cy_std);

    let mut estimator = Mlp::new_seeded(&[3, cfg.hidden1, 1], cfg.seed);
    let mut commander = Mlp::new_seeded(&[4, cfg.hidden2, 1], cfg.seed.wrapping_add(1));
    let mut loss_estimator = Vec::new();
    let mut loss_commander = Vec::new();
    for &(lr, epochs) in &cfg.stages {
        loss_estimator.extend(train_backprop(&mut estimator, &est_set, lr, epochs)?);
        loss_commander.extend(train_backprop(&mut commander, &cmd_set, lr, epochs)?);
    }

    fold_standardization(&mut estimator, &ex_mean, &ex_std, ey_mean, ey_std);
    fold_standardization(&mut commander, &cx_mean, &cx_std, cy_mean, cy_std);

    Ok(TrainedController {
        estimator,
        commander,
        supervisor: default_speed_supervisor(
            params.fuzzy_e_max,
            params.fuzzy_de_max,
            params.fuzzy_trim_span,
        ),
        loss_estimator,
        loss_commander,
    })
}

// ──────────────────────────────────────────────────────────────────────────
// Tests
// ──────────────────────────────────────────────────────────────────────────
