//! Experiment harness: open-loop parameter sweeps, closed-loop tracking
//! runs, and file emission (CSV traces, SVG plots, metadata).

pub mod csv;
pub mod svg;

use crate::actuator::{rotor_rates, Drive};
use crate::controller::{channel_errors, Controller};
use crate::dynamics::RobotState;
use crate::error::{Error, Result};
use crate::params::{serialize_config, Config};
use crate::sim::{sample, step, SimTrace};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Which physical parameter an open-loop sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    SpringK,
    Mu,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::SpringK => "k",
            SweepParam::Mu => "mu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(SweepParam::SpringK),
            "mu" => Ok(SweepParam::Mu),
            other => Err(Error::BadSpec(format!(
                "unknown sweep parameter `{other}` (expected `k` or `mu`)"
            ))),
        }
    }
}

/// An open-loop sweep: one run per value, everything else at the base
/// configuration, rotors driven at a fixed speed.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Common rotor speed, rad/s (both rotors, anti-phase start).
    pub drive_speed: f64,
    pub duration: f64,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Self {
        SweepSpec {
            param,
            values,
            drive_speed: 455.6,
            duration: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::BadSpec("sweep needs at least one value".into()));
        }
        for w in self.values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::BadSpec(
                    "sweep values must be strictly increasing".into(),
                ));
            }
        }
        let min_allowed = match self.param {
            SweepParam::SpringK => f64::MIN_POSITIVE,
            SweepParam::Mu => 0.0,
        };
        if self.values[0] < min_allowed {
            return Err(Error::BadSpec(format!(
                "sweep values for `{}` must be {}",
                self.param.key(),
                if min_allowed == 0.0 {
                    "non-negative"
                } else {
                    "positive"
                }
            )));
        }
        if !(self.duration > 0.0) {
            return Err(Error::BadSpec("sweep duration must be positive".into()));
        }
        Ok(())
    }
}

/// Endpoint summary of one open-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_x: f64,
    pub final_abs_y: f64,
    pub final_abs_phi: f64,
}

impl RunSummary {
    /// Recompute from a trace; pure function of the samples.
    pub fn from_trace(trace: &SimTrace) -> Self {
        let last = trace.samples.last().expect("trace is never empty");
        RunSummary {
            final_x: last.x,
            final_abs_y: last.y.abs(),
            final_abs_phi: last.phi.abs(),
        }
    }
}

/// One sweep entry: the parameter value and the run outcome. A failed run
/// (e.g. integrator blowup for an extreme parameter) is reported in place
/// without aborting the sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub value: f64,
    pub outcome: Result<(SimTrace, RunSummary)>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub param: SweepParam,
    pub runs: Vec<SweepRun>,
}

fn config_with(base: &Config, param: SweepParam, value: f64) -> Config {
    let mut cfg = base.clone();
    match param {
        SweepParam::SpringK => cfg.robot.spring_k = value,
        SweepParam::Mu => cfg.robot.mu = value,
    }
    cfg
}

/// Run an open-loop sweep. Runs execute on a bounded worker pool; results
/// are merged in parameter order so the output is deterministic regardless
/// of scheduling.
pub fn run_sweep(spec: &SweepSpec, base: &Config) -> Result<SweepResult> {
    spec.validate()?;
    base.validate()?;

    let n = spec.values.len();
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n)
        .max(1);

    let drive = Drive::Speeds {
        omega_e: spec.drive_speed,
        omega_d: spec.drive_speed,
    };

    let slots: Mutex<Vec<Option<SweepRun>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    let work = |idx: usize| -> SweepRun {
        let value = spec.values[idx];
        let cfg = config_with(base, spec.param, value);
        let outcome = cfg
            .validate()
            .and_then(|_| crate::sim::run_open_loop(&cfg, drive, Some(spec.duration)))
            .map(|trace| {
                let summary = RunSummary::from_trace(&trace);
                (trace, summary)
            });
        SweepRun { value, outcome }
    };

    if workers <= 1 {
        let mut slots = slots.into_inner().unwrap();
        for (idx, slot) in slots.iter_mut().enumerate() {
            *slot = Some(work(idx));
        }
        return Ok(SweepResult {
            param: spec.param,
            runs: slots.into_iter().map(|s| s.unwrap()).collect(),
        });
    }

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= n {
                    break;
                }
                let run = work(idx);
                slots.lock().unwrap()[idx] = Some(run);
            });
        }
    });

    Ok(SweepResult {
        param: spec.param,
        runs: slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|s| s.unwrap())
            .collect(),
    })
}

/// Text table of a sweep result, sorted by parameter value.
pub fn sweep_summary_table(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>14}  {:>14}  {:>14}  {:>14}",
        result.param.key(),
        "final_X_m",
        "final_|Y|_m",
        "final_|phi|_rad"
    );
    for run in &result.runs {
        match &run.outcome {
            Ok((_, s)) => {
                let _ = writeln!(
                    out,
                    "{:>14.6e}  {:>14.6e}  {:>14.6e}  {:>14.6e}",
                    run.value, s.final_x, s.final_abs_y, s.final_abs_phi
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:>14.6e}  failed: {e}", run.value);
            }
        }
    }
    out
}

/// A closed-loop tracking experiment: step references held for the whole run.
#[derive(Debug, Clone, Copy)]
pub struct TrackSpec {
    pub x_d: f64,
    pub phi_d: f64,
    pub duration: f64,
}

impl TrackSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::BadSpec("tracking duration must be positive".into()));
        }
        if !(self.x_d.is_finite() && self.phi_d.is_finite()) {
            return Err(Error::BadSpec("references must be finite".into()));
        }
        Ok(())
    }
}

/// Steady-state and settling summary of a tracking run. Steady-state error
/// is the worst error over the final tenth of the run; settling time is the
/// first time the error enters its band and stays inside until the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSummary {
    pub steady_err_t: f64,
    pub steady_err_r: f64,
    pub settle_time_t: Option<f64>,
    pub settle_time_r: Option<f64>,
}

impl TrackSummary {
    pub fn from_trace(trace: &SimTrace, band_t: f64, band_r: f64) -> Self {
        let samples = &trace.samples;
        let t_end = samples.last().map(|s| s.t).unwrap_or(0.0);
        let window_start = t_end * 0.9;
        let mut steady_t = 0.0_f64;
        let mut steady_r = 0.0_f64;
        for s in samples.iter().filter(|s| s.t >= window_start) {
            steady_t = steady_t.max(s.e_t.abs());
            steady_r = steady_r.max(s.e_r.abs());
        }
        let settle = |band: f64, pick: fn(&crate::sim::TraceSample) -> f64| -> Option<f64> {
            let mut settled_at: Option<f64> = None;
            for s in samples {
                if pick(s).abs() <= band {
                    settled_at.get_or_insert(s.t);
                } else {
                    settled_at = None;
                }
            }
            settled_at
        };
        TrackSummary {
            steady_err_t: steady_t,
            steady_err_r: steady_r,
            settle_time_t: settle(band_t, |s| s.e_t),
            settle_time_r: settle(band_r, |s| s.e_r),
        }
    }
}

pub fn track_summary_text(summary: &TrackSummary) -> String {
    let fmt_opt = |o: Option<f64>| match o {
        Some(t) => format!("{t:.4} s"),
        None => "not settled".to_string(),
    };
    format!(
        "steady_state_|e_t| = {:.6e} m\nsteady_state_|e_r| = {:.6e} rad\nsettling_time_t = {}\nsettling_time_r = {}\n",
        summary.steady_err_t,
        summary.steady_err_r,
        fmt_opt(summary.settle_time_t),
        fmt_opt(summary.settle_time_r),
    )
}

/// Run the closed loop: both adaptive channels active, rotor speeds set from
/// the mixed voltages each control tick. Deterministic given the seed.
pub fn run_tracking(spec: &TrackSpec, base: &Config) -> Result<(SimTrace, TrackSummary)> {
    spec.validate()?;
    base.validate()?;
    let params = &base.robot;
    let sim_cfg = &base.sim;

    let mut state = RobotState::at_rest(params, sim_cfg.theta_e0, sim_cfg.theta_d0);
    let mut controller = Controller::new(sim_cfg, spec.x_d, spec.phi_d)?;

    let dt = sim_cfg.physics_dt;
    let steps_per_tick = sim_cfg.steps_per_tick();
    let n_ticks = (spec.duration / sim_cfg.control_dt).round() as usize;

    let mut samples = Vec::with_capacity(n_ticks + 1);
    let mut last_out = None;
    for tick in 0..n_ticks {
        let t = tick as f64 * sim_cfg.control_dt;
        let out = controller.control_step(&state, spec.x_d, spec.phi_d)?;
        let (rate_e, rate_d) = rotor_rates(out.v_e, out.v_d);
        state.rotor.omega_e = rate_e;
        state.rotor.omega_d = rate_d;
        samples.push(sample(
            t,
            &state,
            params,
            out.v_e,
            out.v_d,
            out.gains_t,
            out.gains_r,
            out.e_t,
            out.e_r,
        ));
        for i in 0..steps_per_tick {
            let ts = t + i as f64 * dt;
            step(&mut state, params, sim_cfg.eps_v, dt, ts)?;
            if sim_cfg.record_full_rate && i + 1 < steps_per_tick {
                samples.push(sample(
                    ts + dt,
                    &state,
                    params,
                    out.v_e,
                    out.v_d,
                    out.gains_t,
                    out.gains_r,
                    out.e_t,
                    out.e_r,
                ));
            }
        }
        last_out = Some(out);
    }

    // Final sample with errors recomputed at the end state.
    let (e_t, e_r) = channel_errors(&state, spec.x_d, spec.phi_d);
    let (v_e, v_d, gt, gr) = match last_out {
        Some(o) => (o.v_e, o.v_d, o.gains_t, o.gains_r),
        None => (0.0, 0.0, [0.0; 3], [0.0; 3]),
    };
    samples.push(sample(
        spec.duration,
        &state,
        params,
        v_e,
        v_d,
        gt,
        gr,
        e_t,
        e_r,
    ));

    let trace = SimTrace {
        samples,
        config_echo: serialize_config(base),
        seed: sim_cfg.rng_seed,
    };
    let summary = TrackSummary::from_trace(&trace, sim_cfg.settle_band_t, sim_cfg.settle_band_r);
    Ok((trace, summary))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::OutputIo {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::OutputIo {
        path: dir.display().to_string(),
        source,
    })
}

fn metadata_text(trace: &SimTrace) -> String {
    format!(
        "# run metadata\nseed = {}\n\n# full configuration echo\n{}",
        trace.seed, trace.config_echo
    )
}

fn standard_plots(trace: &SimTrace) -> Vec<(&'static str, String)> {
    let pts = |pick: fn(&crate::sim::TraceSample) -> f64| -> Vec<(f64, f64)> {
        trace.samples.iter().map(|s| (s.t, pick(s))).collect()
    };
    vec![
        (
            "x_vs_t.svg",
            svg::line_plot(
                "COM position X vs time",
                "t (s)",
                "X (m)",
                &[svg::Series {
                    label: "X",
                    points: pts(|s| s.x),
                }],
            ),
        ),
        (
            "y_vs_t.svg",
            svg::line_plot(
                "COM position Y vs time",
                "t (s)",
                "Y (m)",
                &[svg::Series {
                    label: "Y",
                    points: pts(|s| s.y),
                }],
            ),
        ),
        (
            "phi_vs_t.svg",
            svg::line_plot(
                "yaw angle vs time",
                "t (s)",
                "phi (rad)",
                &[svg::Series {
                    label: "phi",
                    points: pts(|s| s.phi),
                }],
            ),
        ),
        (
            "errors_vs_t.svg",
            svg::line_plot(
                "tracking errors vs time",
                "t (s)",
                "error",
                &[
                    svg::Series {
                        label: "e_t (m)",
                        points: pts(|s| s.e_t),
                    },
                    svg::Series {
                        label: "e_r (rad)",
                        points: pts(|s| s.e_r),
                    },
                ],
            ),
        ),
        (
            "gains_vs_t.svg",
            svg::line_plot(
                "published PID gains vs time",
                "t (s)",
                "gain",
                &[
                    svg::Series {
                        label: "Kp_t",
                        points: pts(|s| s.gains_t[0]),
                    },
                    svg::Series {
                        label: "Ki_t",
                        points: pts(|s| s.gains_t[1]),
                    },
                    svg::Series {
                        label: "Kd_t",
                        points: pts(|s| s.gains_t[2]),
                    },
                    svg::Series {
                        label: "Kp_r",
                        points: pts(|s| s.gains_r[0]),
                    },
                    svg::Series {
                        label: "Ki_r",
                        points: pts(|s| s.gains_r[1]),
                    },
                    svg::Series {
                        label: "Kd_r",
                        points: pts(|s| s.gains_r[2]),
                    },
                ],
            ),
        ),
    ]
}

/// Write a single run to `out_dir`: trace.csv, the standard plots,
/// metadata.txt, and optionally a summary.txt.
pub fn emit_run(trace: &SimTrace, summary: Option<&str>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    written.push(write_file(out_dir, "trace.csv", &csv::trace_to_csv(trace))?);
    for (name, contents) in standard_plots(trace) {
        written.push(write_file(out_dir, name, &contents)?);
    }
    written.push(write_file(out_dir, "metadata.txt", &metadata_text(trace))?);
    if let Some(text) = summary {
        written.push(write_file(out_dir, "summary.txt", text)?);
    }
    Ok(written)
}

/// Write a sweep to `out_dir`: one CSV per value, combined overlay plots,
/// the summary table and metadata.
pub fn emit_sweep(result: &SweepResult, base: &Config, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = Vec::new();
    let key = result.param.key();

    for run in &result.runs {
        if let Ok((trace, _)) = &run.outcome {
            let name = format!("{key}_{}.csv", run.value);
            written.push(write_file(out_dir, &name, &csv::trace_to_csv(trace))?);
        }
    }

    let labels: Vec<String> = result
        .runs
        .iter()
        .map(|r| format!("{key} = {}", r.value))
        .collect();
    let overlay = |pick: fn(&crate::sim::TraceSample) -> f64| -> Vec<svg::Series<'_>> {
        result
            .runs
            .iter()
            .zip(&labels)
            .filter_map(|(run, label)| {
                run.outcome.as_ref().ok().map(|(trace, _)| svg::Series {
                    label,
                    points: trace.samples.iter().map(|s| (s.t, pick(s))).collect(),
                })
            })
            .collect()
    };
    for (name, title, ylab, pick) in [
        (
            "x_vs_t.svg",
            "COM position X vs time",
            "X (m)",
            (|s| s.x) as fn(&crate::sim::TraceSample) -> f64,
        ),
        ("y_vs_t.svg", "COM position Y vs time", "Y (m)", |s| s.y),
        ("phi_vs_t.svg", "yaw angle vs time", "phi (rad)", |s| s.phi),
    ] {
        let series = overlay(pick);
        written.push(write_file(
            out_dir,
            name,
            &svg::line_plot(title, "t (s)", ylab, &series),
        )?);
    }

    written.push(write_file(
        out_dir,
        "summary.txt",
        &sweep_summary_table(result),
    )?);
    let meta = format!(
        "# sweep metadata\nparam = {key}\nseed = {}\n\n# base configuration echo\n{}",
        base.sim.rng_seed,
        serialize_config(base)
    );
    written.push(write_file(out_dir, "metadata.txt", &meta)?);
    Ok(written)
}
