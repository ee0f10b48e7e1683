//! Physical constants, run configuration, and derived geometry.
//!
//! All values are SI. Configuration files are flat `key = value` text with
//! `#` comments; every key is optional and falls back to the documented
//! default. The full key list lives in the README.

use crate::error::{Error, Result};
use crate::math::Vec2;
use std::fmt::Write as _;
use std::path::Path;

/// Physical constants of the robot.
///
/// `body_height`, `motor_resistance` and `motor_inductance` are recorded and
/// echoed into run metadata but drive no equation: the planar model has no
/// vertical translational dynamics and the motor speed is an algebraic
/// function of voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// Total robot mass, kg.
    pub mass: f64,
    /// Eccentric mass of motor e, kg.
    pub m_e: f64,
    /// Eccentric mass of motor d, kg.
    pub m_d: f64,
    /// Eccentric radius of motor e, m.
    pub r_e: f64,
    /// Eccentric radius of motor d, m.
    pub r_d: f64,
    /// Yaw moment of inertia, kg·m².
    pub inertia_zz: f64,
    /// Side length of the equilateral leg triangle, m.
    pub leg_side: f64,
    /// Motor mount offset from the body center along body-y, m.
    pub motor_offset: f64,
    /// Body height, m (recorded, unused).
    pub body_height: f64,
    /// Leg spring stiffness, N/m.
    pub spring_k: f64,
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Motor winding resistance, Ω (recorded, unused).
    pub motor_resistance: f64,
    /// Motor winding inductance, H (recorded, unused).
    pub motor_inductance: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            mass: 7.2e-3,
            m_e: 9e-4,
            m_d: 9e-4,
            r_e: 1.061e-3,
            r_d: 1.061e-3,
            inertia_zz: 9.2e-7,
            leg_side: 0.04,
            motor_offset: 0.01,
            body_height: 5.7e-3,
            spring_k: 72_509.185,
            mu: 0.36,
            gravity: 9.807,
            motor_resistance: 11.2,
            motor_inductance: 0.102e-3,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("M", self.mass),
            ("m_e", self.m_e),
            ("m_d", self.m_d),
            ("r_e", self.r_e),
            ("r_d", self.r_d),
            ("I_zz", self.inertia_zz),
            ("l", self.leg_side),
            ("d1", self.motor_offset),
            ("h", self.body_height),
            ("k", self.spring_k),
            ("g", self.gravity),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam {
                    key: key.into(),
                    message: format!("must be strictly positive, got {v}"),
                });
            }
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParam {
                key: "mu".into(),
                message: format!("must be >= 0, got {}", self.mu),
            });
        }
        Ok(())
    }
}

/// Body-frame coordinates of the three legs.
///
/// Leg a sits front-left, leg b rear-center, leg c front-right (x forward,
/// y left). These are the unique coordinates of an equilateral triangle,
/// centered on the body origin with one vertex aft, whose per-leg torque
/// contributions `x_i*f_iy - y_i*f_ix` reproduce the yaw equation's
/// friction-moment coefficients.
pub fn leg_positions(params: &RobotParams) -> [Vec2; 3] {
    let l = params.leg_side;
    let s3 = 3.0_f64.sqrt();
    [
        Vec2::new(s3 * l / 6.0, l / 2.0),
        Vec2::new(-s3 * l / 3.0, 0.0),
        Vec2::new(s3 * l / 6.0, -l / 2.0),
    ]
}

/// Numerical and controller configuration for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Integrator step, s.
    pub physics_dt: f64,
    /// Controller sample time, s. Must be an integer multiple of
    /// `physics_dt`, and should cover at least one rotor revolution at
    /// operating speed: sampled faster, the measurements are dominated by
    /// the within-cycle vibration rather than the net motion and the
    /// identified Jacobian turns into sign noise.
    pub control_dt: f64,
    /// Simulated duration, s.
    pub duration: f64,
    /// Seed for network weight initialization.
    pub rng_seed: u64,
    /// Initial phase of rotor e, rad.
    pub theta_e0: f64,
    /// Initial phase of rotor d, rad.
    pub theta_d0: f64,
    /// Karnopp velocity threshold treated as "zero COM speed", m/s. Must
    /// exceed the per-step velocity quantum (max deceleration times
    /// physics_dt, ~3.5e-5 m/s at the default friction), or the stick
    /// machine never captures the velocity reversals and the sliding
    /// friction flips sign mid-step.
    pub eps_v: f64,
    /// Hidden-layer width of both networks.
    pub hidden_width: usize,
    /// Learning rate of the gain-tuning network.
    pub eta_tuner: f64,
    /// Learning rate of the identifier network.
    pub eta_ident: f64,
    /// Gain upper bounds (Kp, Ki, Kd) per channel. Sized to the plant's
    /// stiction threshold: roughly 1.5 V of drive is needed before anything
    /// moves, so the proportional term must reach the volt scale within the
    /// settling band (mid-range Kp times 1 mm ≈ 3 V).
    pub gain_max: [f64; 3],
    /// Motor voltage limit, V.
    pub v_max: f64,
    /// Record every physics step instead of every control tick.
    pub record_full_rate: bool,
    /// Lower bound applied to |J| by the Jacobian sign-guard.
    pub jacobian_floor: f64,
    /// Enable the Jacobian sign-guard.
    pub sign_guard: bool,
    /// Bare tuner mode: publish the raw bipolar outputs as gains (negative
    /// gains possible) and update with unit control sensitivity and no
    /// Jacobian guard. For comparison runs; off by default.
    pub raw_tuner: bool,
    /// Translation output scale for network conditioning, m. 0 = auto
    /// (|x_d| of the run, falling back to 0.02).
    pub y_scale_t: f64,
    /// Rotation output scale, rad. 0 = auto (|phi_d|, falling back to 0.2).
    pub y_scale_r: f64,
    /// Settling band for the translation channel, m.
    pub settle_band_t: f64,
    /// Settling band for the rotation channel, rad.
    pub settle_band_r: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            physics_dt: 1e-5,
            control_dt: 0.05,
            duration: 10.0,
            rng_seed: 42,
            theta_e0: 0.0,
            theta_d0: 0.0,
            eps_v: 1e-4,
            hidden_width: 8,
            eta_tuner: 0.01,
            eta_ident: 0.01,
            gain_max: [6000.0, 400.0, 50.0],
            v_max: 3.0,
            record_full_rate: false,
            jacobian_floor: 1e-5,
            sign_guard: true,
            raw_tuner: false,
            y_scale_t: 0.0,
            y_scale_r: 0.0,
            settle_band_t: 1e-3,
            settle_band_r: 1e-2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.physics_dt > 0.0) {
            return Err(Error::InvalidParam {
                key: "physics_dt".into(),
                message: "must be strictly positive".into(),
            });
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidParam {
                key: "duration".into(),
                message: "must be strictly positive".into(),
            });
        }
        let ratio = self.control_dt / self.physics_dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio {
            return Err(Error::InvalidParam {
                key: "control_dt".into(),
                message: format!("must be an integer multiple of physics_dt (got ratio {ratio})"),
            });
        }
        if !(self.eps_v > 0.0) {
            return Err(Error::InvalidParam {
                key: "eps_v".into(),
                message: "must be strictly positive".into(),
            });
        }
        if self.hidden_width == 0 {
            return Err(Error::InvalidParam {
                key: "hidden".into(),
                message: "must be at least 1".into(),
            });
        }
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidParam {
                key: "v_max".into(),
                message: "must be strictly positive".into(),
            });
        }
        for (i, g) in self.gain_max.iter().enumerate() {
            if !(*g > 0.0) {
                let key = ["gmax_kp", "gmax_ki", "gmax_kd"][i];
                return Err(Error::InvalidParam {
                    key: key.into(),
                    message: "must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Physics steps per control tick.
    pub fn steps_per_tick(&self) -> usize {
        (self.control_dt / self.physics_dt).round() as usize
    }
}

/// A complete run configuration: physics plus numerics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub robot: RobotParams,
    pub sim: SimConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.sim.validate()
    }
}

/// Load a configuration file, filling omitted keys with defaults.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::ConfigIo {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parse configuration text. See [`load_config`].
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, key, value).map_err(|e| match e {
            Error::InvalidParam { key, message } => Error::ConfigParse {
                line: line_no,
                message: format!("key `{key}`: {message}"),
            },
            other => other,
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::InvalidParam {
        key: key.into(),
        message: format!("not a number: `{value}`"),
    })
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| Error::InvalidParam {
        key: key.into(),
        message: format!("not a non-negative integer: `{value}`"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::InvalidParam {
            key: key.into(),
            message: format!("not a boolean (true/false/1/0): `{value}`"),
        }),
    }
}

fn apply_key(cfg: &mut Config, key: &str, value: &str) -> Result<()> {
    let r = &mut cfg.robot;
    let s = &mut cfg.sim;
    match key {
        "M" => r.mass = parse_f64(key, value)?,
        "m_e" => r.m_e = parse_f64(key, value)?,
        "m_d" => r.m_d = parse_f64(key, value)?,
        "r_e" => r.r_e = parse_f64(key, value)?,
        "r_d" => r.r_d = parse_f64(key, value)?,
        "I_zz" => r.inertia_zz = parse_f64(key, value)?,
        "l" => r.leg_side = parse_f64(key, value)?,
        "d1" => r.motor_offset = parse_f64(key, value)?,
        "h" => r.body_height = parse_f64(key, value)?,
        "k" => r.spring_k = parse_f64(key, value)?,
        "mu" => r.mu = parse_f64(key, value)?,
        "g" => r.gravity = parse_f64(key, value)?,
        "R" => r.motor_resistance = parse_f64(key, value)?,
        "L" => r.motor_inductance = parse_f64(key, value)?,
        "physics_dt" => s.physics_dt = parse_f64(key, value)?,
        "control_dt" => s.control_dt = parse_f64(key, value)?,
        "duration" => s.duration = parse_f64(key, value)?,
        "seed" => s.rng_seed = parse_u64(key, value)?,
        "theta_e0" => s.theta_e0 = parse_f64(key, value)?,
        "theta_d0" => s.theta_d0 = parse_f64(key, value)?,
        "eps_v" => s.eps_v = parse_f64(key, value)?,
        "hidden" => s.hidden_width = parse_u64(key, value)? as usize,
        "eta_tuner" => s.eta_tuner = parse_f64(key, value)?,
        "eta_ident" => s.eta_ident = parse_f64(key, value)?,
        "gmax_kp" => s.gain_max[0] = parse_f64(key, value)?,
        "gmax_ki" => s.gain_max[1] = parse_f64(key, value)?,
        "gmax_kd" => s.gain_max[2] = parse_f64(key, value)?,
        "v_max" => s.v_max = parse_f64(key, value)?,
        "record_full_rate" => s.record_full_rate = parse_bool(key, value)?,
        "j_min" => s.jacobian_floor = parse_f64(key, value)?,
        "sign_guard" => s.sign_guard = parse_bool(key, value)?,
        "raw_tuner" => s.raw_tuner = parse_bool(key, value)?,
        "y_scale_t" => s.y_scale_t = parse_f64(key, value)?,
        "y_scale_r" => s.y_scale_r = parse_f64(key, value)?,
        "settle_band_t" => s.settle_band_t = parse_f64(key, value)?,
        "settle_band_r" => s.settle_band_r = parse_f64(key, value)?,
        _ => {
            return Err(Error::InvalidParam {
                key: key.into(),
                message: "unknown key".into(),
            })
        }
    }
    Ok(())
}

/// Serialize a configuration back to the text format. `parse_config` of the
/// result reproduces the input exactly (f64 Display round-trips).
pub fn serialize_config(cfg: &Config) -> String {
    let r = &cfg.robot;
    let s = &cfg.sim;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("M", r.mass.to_string());
    kv("m_e", r.m_e.to_string());
    kv("m_d", r.m_d.to_string());
    kv("r_e", r.r_e.to_string());
    kv("r_d", r.r_d.to_string());
    kv("I_zz", r.inertia_zz.to_string());
    kv("l", r.leg_side.to_string());
    kv("d1", r.motor_offset.to_string());
    kv("h", r.body_height.to_string());
    kv("k", r.spring_k.to_string());
    kv("mu", r.mu.to_string());
    kv("g", r.gravity.to_string());
    kv("R", r.motor_resistance.to_string());
    kv("L", r.motor_inductance.to_string());
    kv("physics_dt", s.physics_dt.to_string());
    kv("control_dt", s.control_dt.to_string());
    kv("duration", s.duration.to_string());
    kv("seed", s.rng_seed.to_string());
    kv("theta_e0", s.theta_e0.to_string());
    kv("theta_d0", s.theta_d0.to_string());
    kv("eps_v", s.eps_v.to_string());
    kv("hidden", s.hidden_width.to_string());
    kv("eta_tuner", s.eta_tuner.to_string());
    kv("eta_ident", s.eta_ident.to_string());
    kv("gmax_kp", s.gain_max[0].to_string());
    kv("gmax_ki", s.gain_max[1].to_string());
    kv("gmax_kd", s.gain_max[2].to_string());
    kv("v_max", s.v_max.to_string());
    kv("record_full_rate", s.record_full_rate.to_string());
    kv("j_min", s.jacobian_floor.to_string());
    kv("sign_guard", s.sign_guard.to_string());
    kv("raw_tuner", s.raw_tuner.to_string());
    kv("y_scale_t", s.y_scale_t.to_string());
    kv("y_scale_r", s.y_scale_r.to_string());
    kv("settle_band_t", s.settle_band_t.to_string());
    kv("settle_band_r", s.settle_band_r.to_string());
    out
}
