//! Browser bindings: three interactive views over the core crate.
//!
//! 1. [`motor_curve`] — the motor voltage-to-speed map.
//! 2. [`OpenLoopRun`] — open-loop trajectories under chosen spring
//!    stiffness, friction coefficient and rotor speed.
//! 3. [`TrackingRun`] — the closed loop: self-tuned gains, errors and motor
//!    voltages while tracking step references.
//!
//! Columns are returned as flat `Vec<f64>` so the page can feed them
//! straight into canvas plots. Everything is deterministic for a given seed.

use slipstick::actuator::{motor_speed, Drive};
use slipstick::harness::{run_tracking, TrackSpec};
use slipstick::params::Config;
use slipstick::sim::{run_open_loop, SimTrace};
use wasm_bindgen::prelude::*;

fn err_to_js(e: slipstick::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Sample the motor map over [v_min, v_max]; returns interleaved
/// (voltage, speed) pairs, 2*n values.
#[wasm_bindgen]
pub fn motor_curve(v_min: f64, v_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let v = v_min + (v_max - v_min) * i as f64 / (n - 1) as f64;
        out.push(v);
        out.push(motor_speed(v));
    }
    out
}

/// Speed of one motor at a given voltage, rad/s.
#[wasm_bindgen]
pub fn motor_speed_at(v: f64) -> f64 {
    motor_speed(v)
}

fn column(trace: &SimTrace, pick: fn(&slipstick::sim::TraceSample) -> f64) -> Vec<f64> {
    trace.samples.iter().map(pick).collect()
}

/// An open-loop run: both motors at the same speed, counter-rotating.
#[wasm_bindgen]
pub struct OpenLoopRun {
    trace: SimTrace,
}

impl OpenLoopRun {
    fn build(spring_k: f64, mu: f64, speed: f64, duration: f64) -> slipstick::Result<OpenLoopRun> {
        let mut config = Config::default();
        config.robot.spring_k = spring_k;
        config.robot.mu = mu;
        config.sim.control_dt = 0.005; // dense sampling for smooth curves
        let drive = Drive::Speeds {
            omega_e: speed,
            omega_d: speed,
        };
        let trace = run_open_loop(&config, drive, Some(duration))?;
        Ok(OpenLoopRun { trace })
    }
}

#[wasm_bindgen]
impl OpenLoopRun {
    /// Simulate from rest. `spring_k` in N/m, `mu` dimensionless,
    /// `speed` in rad/s, `duration` in s.
    #[wasm_bindgen(constructor)]
    pub fn new(spring_k: f64, mu: f64, speed: f64, duration: f64) -> Result<OpenLoopRun, JsValue> {
        Self::build(spring_k, mu, speed, duration).map_err(err_to_js)
    }

    pub fn t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.t)
    }

    pub fn x(&self) -> Vec<f64> {
        column(&self.trace, |s| s.x)
    }

    pub fn y(&self) -> Vec<f64> {
        column(&self.trace, |s| s.y)
    }

    pub fn phi(&self) -> Vec<f64> {
        column(&self.trace, |s| s.phi)
    }

    /// Fraction of samples spent stuck.
    pub fn stuck_fraction(&self) -> f64 {
        let stuck = self.trace.samples.iter().filter(|s| s.stuck).count();
        stuck as f64 / self.trace.samples.len() as f64
    }

    pub fn final_x(&self) -> f64 {
        self.trace.samples.last().map(|s| s.x).unwrap_or(0.0)
    }
}

/// A closed-loop tracking run with the two self-tuning PID channels.
#[wasm_bindgen]
pub struct TrackingRun {
    trace: SimTrace,
    steady_err_t: f64,
    steady_err_r: f64,
}

impl TrackingRun {
    fn build(x_d: f64, phi_d: f64, duration: f64, seed: u64) -> slipstick::Result<TrackingRun> {
        let mut config = Config::default();
        config.sim.rng_seed = seed;
        let spec = TrackSpec {
            x_d,
            phi_d,
            duration,
        };
        let (trace, summary) = run_tracking(&spec, &config)?;
        Ok(TrackingRun {
            trace,
            steady_err_t: summary.steady_err_t,
            steady_err_r: summary.steady_err_r,
        })
    }
}

#[wasm_bindgen]
impl TrackingRun {
    /// Track step references `x_d` (m) and `phi_d` (rad) for `duration`
    /// seconds with the given weight-init seed.
    #[wasm_bindgen(constructor)]
    pub fn new(x_d: f64, phi_d: f64, duration: f64, seed: u64) -> Result<TrackingRun, JsValue> {
        Self::build(x_d, phi_d, duration, seed).map_err(err_to_js)
    }

    pub fn t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.t)
    }

    /// Displacement along the body axis (the translation channel's output).
    pub fn x_body(&self) -> Vec<f64> {
        column(&self.trace, |s| s.x_body)
    }

    pub fn phi(&self) -> Vec<f64> {
        column(&self.trace, |s| s.phi)
    }

    pub fn e_t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.e_t)
    }

    pub fn e_r(&self) -> Vec<f64> {
        column(&self.trace, |s| s.e_r)
    }

    pub fn v_e(&self) -> Vec<f64> {
        column(&self.trace, |s| s.v_e)
    }

    pub fn v_d(&self) -> Vec<f64> {
        column(&self.trace, |s| s.v_d)
    }

    pub fn kp_t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_t[0])
    }

    pub fn ki_t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_t[1])
    }

    pub fn kd_t(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_t[2])
    }

    pub fn kp_r(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_r[0])
    }

    pub fn ki_r(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_r[1])
    }

    pub fn kd_r(&self) -> Vec<f64> {
        column(&self.trace, |s| s.gains_r[2])
    }

    pub fn steady_err_t(&self) -> f64 {
        self.steady_err_t
    }

    pub fn steady_err_r(&self) -> f64 {
        self.steady_err_r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motor_curve_covers_range() {
        let pts = motor_curve(-3.0, 3.0, 101);
        assert_eq!(pts.len(), 202);
        assert_eq!(pts[0], -3.0);
        assert_eq!(pts[200], 3.0);
        // dead zone sample
        let mid = &pts[100..102];
        assert!(mid[0].abs() < 0.05);
        assert_eq!(mid[1], 0.0);
    }

    #[test]
    fn open_loop_run_exposes_columns() {
        let run = OpenLoopRun::build(72509.185, 0.36, 455.6, 0.2).unwrap();
        let t = run.t();
        assert_eq!(t.len(), run.x().len());
        assert!(run.final_x() > 0.0);
        assert!((0.0..=1.0).contains(&run.stuck_fraction()));
    }

    #[test]
    fn tracking_run_exposes_columns() {
        let run = TrackingRun::build(0.01, 0.0, 1.0, 42).unwrap();
        assert_eq!(run.t().len(), run.e_t().len());
        assert_eq!(run.kp_t().len(), run.v_e().len());
        assert!(run.steady_err_t() >= 0.0);
    }

    #[test]
    fn invalid_duration_is_an_error() {
        assert!(OpenLoopRun::build(72509.185, 0.36, 455.6, -1.0).is_err());
    }
}
