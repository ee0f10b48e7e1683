//! Two self-tuning PID channels and the voltage mixer.
//!
//! One channel regulates translation along the body axis, the other yaw.
//! Each channel owns a gain-tuning network (errors in, three gains out) and
//! an online plant identifier supplying the Jacobian that signs the tuner's
//! update. The two channel commands are mixed onto the two motor voltages as
//! common mode (translation) and differential mode (rotation), then clamped
//! to the permitted voltage range; the error integrals freeze while the
//! output is clamped.

use crate::dynamics::RobotState;
use crate::error::{Error, Result};
use crate::identifier::Identifier;
use crate::mlp::{Mlp, OutputActivation};
use crate::params::SimConfig;
use crate::rng::SplitMix64;

/// Displacement along the body axis: x = X cos(phi) + Y sin(phi).
pub fn body_displacement(x: f64, y: f64, phi: f64) -> f64 {
    x * phi.cos() + y * phi.sin()
}

/// Sign-preserving magnitude floor for the identified plant Jacobian, so an
/// untrained identifier cannot stall the tuner with a near-zero chain factor.
fn guard_jacobian(j_raw: f64, floor: f64) -> f64 {
    if j_raw >= 0.0 {
        j_raw.max(floor)
    } else {
        j_raw.min(-floor)
    }
}

/// Tracking errors of the two channels: (e_t, e_r) =
/// (x_d - body displacement, phi_d - phi).
pub fn channel_errors(state: &RobotState, x_d: f64, phi_d: f64) -> (f64, f64) {
    let e_t = x_d - body_displacement(state.pos.x, state.pos.y, state.phi);
    let e_r = phi_d - state.phi;
    (e_t, e_r)
}

/// Raw PID law: u = Kp*e_p + Ki*e_i + Kd*e_d.
pub fn pid_output(gains: [f64; 3], e_p: f64, e_i: f64, e_d: f64) -> f64 {
    gains[0] * e_p + gains[1] * e_i + gains[2] * e_d
}

/// One adaptive channel: gain tuner, identifier, and PID error memory.
#[derive(Debug, Clone)]
pub struct PidChannel {
    tuner: Mlp,
    ident: Identifier,
    e_prev: f64,
    e_int: f64,
    first_tick: bool,
    gain_max: [f64; 3],
    /// Output scale used to condition network inputs, and the matching
    /// identifier y-scale.
    y_scale: f64,
    v_max: f64,
    jacobian_floor: f64,
    sign_guard: bool,
    raw_tuner: bool,
}

/// Per-tick result of one channel.
#[derive(Debug, Clone, Copy)]
pub struct ChannelTick {
    pub u: f64,
    pub gains: [f64; 3],
    pub error: f64,
}

impl PidChannel {
    pub fn new(cfg: &SimConfig, y_scale: f64, rng: &mut SplitMix64) -> Result<Self> {
        let tuner = Mlp::new(
            3,
            cfg.hidden_width,
            3,
            OutputActivation::Bipolar,
            cfg.eta_tuner,
            rng,
        );
        let ident = Identifier::new(cfg.hidden_width, cfg.eta_ident, cfg.v_max, y_scale, rng)?;
        Ok(PidChannel {
            tuner,
            ident,
            e_prev: 0.0,
            e_int: 0.0,
            first_tick: true,
            gain_max: cfg.gain_max,
            y_scale,
            v_max: cfg.v_max,
            jacobian_floor: cfg.jacobian_floor,
            sign_guard: cfg.sign_guard && !cfg.raw_tuner,
            raw_tuner: cfg.raw_tuner,
        })
    }

    /// Advance the channel by one control tick.
    ///
    /// Order: error trio; identifier predict/train on the measurement;
    /// tuner forward to gains; PID output; tuner update chained through the
    /// Jacobian; history push.
    pub fn tick(
        &mut self,
        y_meas: f64,
        reference: f64,
        dt: f64,
        freeze_integral: bool,
    ) -> ChannelTick {
        let e = reference - y_meas;
        if self.first_tick {
            // A step reference would otherwise produce a one-tick derivative
            // spike of e/dt.
            self.e_prev = e;
            self.first_tick = false;
        }
        let e_d = (e - self.e_prev) / dt;
        if !freeze_integral {
            // Clamp so the integral term alone can never demand more than
            // the voltage limit; freezing on clip is not enough for a plant
            // whose real saturation is the stiction threshold well below
            // v_max.
            let cap = self.v_max / self.gain_max[1];
            self.e_int = (self.e_int + e * dt).clamp(-cap, cap);
        }
        let e_p = e;
        let e_i = self.e_int;

        // Identifier: predict this tick's output, grab the Jacobian at the
        // cached forward pass, then absorb the measurement.
        self.ident.predict();
        let j_raw = self.ident.jacobian().expect("predict was called");
        self.ident.train_step(y_meas).expect("predict was called");
        let j = if self.sign_guard {
            guard_jacobian(j_raw, self.jacobian_floor)
        } else {
            j_raw
        };

        // Tuner forward on the conditioned error trio.
        let s = self.y_scale;
        let inputs = [e_p / s, e_i / s, e_d / s];
        let outputs = self.tuner.forward(&inputs).expect("fixed input length");
        let gains = if self.raw_tuner {
            [outputs[0], outputs[1], outputs[2]]
        } else {
            [
                self.gain_max[0] * (1.0 + outputs[0]) / 2.0,
                self.gain_max[1] * (1.0 + outputs[1]) / 2.0,
                self.gain_max[2] * (1.0 + outputs[2]) / 2.0,
            ]
        };

        let u = pid_output(gains, e_p, e_i, e_d);

        // Tuner update in the scaled coordinate system (errors over y_scale,
        // control over v_max) so the step size is meaningful at eta ~ 0.01.
        let e_c_scaled = e / s;
        let j_scaled = j * self.v_max / s;
        let du_do: [f64; 3] = if self.raw_tuner {
            [1.0, 1.0, 1.0]
        } else {
            [
                self.gain_max[0] / 2.0 * e_p / self.v_max,
                self.gain_max[1] / 2.0 * e_i / self.v_max,
                self.gain_max[2] / 2.0 * e_d / self.v_max,
            ]
        };
        self.tuner
            .backward(e_c_scaled, j_scaled, &du_do)
            .expect("forward was called");

        self.e_prev = e;
        self.ident.push_control(u);

        ChannelTick { u, gains, error: e }
    }
}

/// Voltages and diagnostics published every control tick.
#[derive(Debug, Clone, Copy)]
pub struct ControlOutput {
    pub v_e: f64,
    pub v_d: f64,
    pub gains_t: [f64; 3],
    pub gains_r: [f64; 3],
    pub e_t: f64,
    pub e_r: f64,
}

/// The full two-channel controller.
#[derive(Debug, Clone)]
pub struct Controller {
    pub translation: PidChannel,
    pub rotation: PidChannel,
    v_max: f64,
    control_dt: f64,
    /// True when the last mixed output hit the voltage limit.
    clipped: bool,
    tick_count: u64,
}

/// Pick the network conditioning scale for a channel: the configured value
/// if set, else the reference magnitude, else a nominal span.
fn auto_scale(configured: f64, reference: f64, nominal: f64) -> f64 {
    if configured > 0.0 {
        configured
    } else if reference.abs() > 0.0 {
        reference.abs()
    } else {
        nominal
    }
}

impl Controller {
    /// Build both channels from the run configuration and references.
    /// Weight initialization draws from independent sub-streams of the seed.
    pub fn new(cfg: &SimConfig, x_d: f64, phi_d: f64) -> Result<Self> {
        let root = SplitMix64::new(cfg.rng_seed);
        let y_scale_t = auto_scale(cfg.y_scale_t, x_d, 0.02);
        let y_scale_r = auto_scale(cfg.y_scale_r, phi_d, 0.2);
        let mut rng_t = root.fork(1);
        let mut rng_r = root.fork(2);
        Ok(Controller {
            translation: PidChannel::new(cfg, y_scale_t, &mut rng_t)?,
            rotation: PidChannel::new(cfg, y_scale_r, &mut rng_r)?,
            v_max: cfg.v_max,
            control_dt: cfg.control_dt,
            clipped: false,
            tick_count: 0,
        })
    }

    /// One control tick: both channels, then the common/differential mix
    /// onto the motor voltages with saturation and integral freeze.
    pub fn control_step(
        &mut self,
        state: &RobotState,
        x_d: f64,
        phi_d: f64,
    ) -> Result<ControlOutput> {
        let y_t = body_displacement(state.pos.x, state.pos.y, state.phi);
        let y_r = state.phi;
        let freeze = self.clipped;
        let t = self.translation.tick(y_t, x_d, self.control_dt, freeze);
        let r = self.rotation.tick(y_r, phi_d, self.control_dt, freeze);

        // Common mode drives translation, differential mode yaw: with the
        // anti-phase phase convention used here, +u_r must raise motor e's
        // voltage and lower motor d's to produce +phi.
        let raw_e = t.u + r.u;
        let raw_d = t.u - r.u;
        let v_e = raw_e.clamp(-self.v_max, self.v_max);
        let v_d = raw_d.clamp(-self.v_max, self.v_max);
        self.clipped = raw_e != v_e || raw_d != v_d;
        self.tick_count += 1;

        let out = ControlOutput {
            v_e,
            v_d,
            gains_t: t.gains,
            gains_r: r.gains,
            e_t: t.error,
            e_r: r.error,
        };
        let finite = out.v_e.is_finite()
            && out.v_d.is_finite()
            && out.gains_t.iter().all(|g| g.is_finite())
            && out.gains_r.iter().all(|g| g.is_finite());
        if !finite {
            return Err(Error::ControllerDiverged {
                tick: self.tick_count,
            });
        }
        Ok(out)
    }
}
