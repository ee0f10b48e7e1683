//! Fixed-step time integration with per-step contact-mode switching.
//!
//! Classic RK4 advances the pose, velocities and rotor phases while the
//! contact mode and stick anchors stay frozen; the mode machine then runs
//! once at the step boundary. Rotor speeds are algebraic inputs held
//! constant within a step.

use crate::actuator::{eccentric_force, wrap_phase, Drive, RotorState};
use crate::contact::{
    friction_forces, leg_world_positions, leg_world_velocities, normal_loads, update_mode,
    ContactState, LegLoads,
};
use crate::controller::body_displacement;
use crate::dynamics::{state_derivative, RobotState};
use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::params::{serialize_config, Config, RobotParams};

/// One recorded sample of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    /// Displacement along the body axis: X cos(phi) + Y sin(phi).
    pub x_body: f64,
    pub v_e: f64,
    pub v_d: f64,
    pub omega_e: f64,
    pub omega_d: f64,
    pub theta_e: f64,
    pub theta_d: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub stuck: bool,
    /// Translation-channel gains (Kp, Ki, Kd); zero in open loop.
    pub gains_t: [f64; 3],
    /// Rotation-channel gains (Kp, Ki, Kd); zero in open loop.
    pub gains_r: [f64; 3],
    pub e_t: f64,
    pub e_r: f64,
}

/// Time-indexed record of a run plus the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub samples: Vec<TraceSample>,
    /// Full configuration echo in the config-file text format.
    pub config_echo: String,
    pub seed: u64,
}

/// Contact loads for a given instantaneous mechanical state.
fn loads_for(
    params: &RobotParams,
    contact: &ContactState,
    pos: Vec2,
    phi: f64,
    vel: Vec2,
    phidot: f64,
    rotor: &RotorState,
) -> LegLoads {
    let (_, f_ve) = eccentric_force(params.m_e, params.r_e, rotor.omega_e, rotor.theta_e);
    let (_, f_vd) = eccentric_force(params.m_d, params.r_d, rotor.omega_d, rotor.theta_d);
    let normals = normal_loads(params, f_ve, f_vd);
    let leg_pos = leg_world_positions(params, pos, phi);
    let leg_vel = leg_world_velocities(params, vel, phi, phidot);
    let tangentials = friction_forces(contact, &leg_pos, &leg_vel, &normals, params, phi);
    LegLoads {
        normals,
        tangentials,
    }
}

/// The integrable part of the state as a flat vector:
/// [x, y, phi, vx, vy, phidot, theta_e, theta_d].
type StateVec = [f64; 8];

fn pack(state: &RobotState) -> StateVec {
    [
        state.pos.x,
        state.pos.y,
        state.phi,
        state.vel.x,
        state.vel.y,
        state.phidot,
        state.rotor.theta_e,
        state.rotor.theta_d,
    ]
}

fn derivative(
    y: &StateVec,
    contact: &ContactState,
    rotor_speeds: (f64, f64),
    params: &RobotParams,
) -> StateVec {
    let pos = Vec2::new(y[0], y[1]);
    let phi = y[2];
    let vel = Vec2::new(y[3], y[4]);
    let phidot = y[5];
    let rotor = RotorState {
        theta_e: y[6],
        theta_d: y[7],
        omega_e: rotor_speeds.0,
        omega_d: rotor_speeds.1,
    };
    let loads = loads_for(params, contact, pos, phi, vel, phidot, &rotor);
    let d = state_derivative((pos, phi), (vel, phidot), &rotor, &loads, params);
    [
        d.dpos.x, d.dpos.y, d.dphi, d.dvel.x, d.dvel.y, d.dphidot, d.dtheta_e, d.dtheta_d,
    ]
}

/// Advance the state by one RK4 step of length `dt`, then run the mode
/// machine once. `t` is the time at the start of the step (used only for
/// error reporting).
pub fn step(
    state: &mut RobotState,
    params: &RobotParams,
    eps_v: f64,
    dt: f64,
    t: f64,
) -> Result<()> {
    let contact = state.contact;
    let speeds = (state.rotor.omega_e, state.rotor.omega_d);
    let y0 = pack(state);

    let k1 = derivative(&y0, &contact, speeds, params);
    let mut y = y0;
    for i in 0..8 {
        y[i] = y0[i] + 0.5 * dt * k1[i];
    }
    let k2 = derivative(&y, &contact, speeds, params);
    for i in 0..8 {
        y[i] = y0[i] + 0.5 * dt * k2[i];
    }
    let k3 = derivative(&y, &contact, speeds, params);
    for i in 0..8 {
        y[i] = y0[i] + dt * k3[i];
    }
    let k4 = derivative(&y, &contact, speeds, params);
    let mut y1 = y0;
    for i in 0..8 {
        y1[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    state.pos = Vec2::new(y1[0], y1[1]);
    state.phi = y1[2];
    state.vel = Vec2::new(y1[3], y1[4]);
    state.phidot = y1[5];
    state.rotor.theta_e = wrap_phase(y1[6]);
    state.rotor.theta_d = wrap_phase(y1[7]);

    if !state.is_finite() {
        return Err(Error::Blowup { t: t + dt });
    }

    // Mode machine at the step boundary.
    let leg_pos = leg_world_positions(params, state.pos, state.phi);
    let (_, f_ve) = eccentric_force(
        params.m_e,
        params.r_e,
        state.rotor.omega_e,
        state.rotor.theta_e,
    );
    let (_, f_vd) = eccentric_force(
        params.m_d,
        params.r_d,
        state.rotor.omega_d,
        state.rotor.theta_d,
    );
    let normals = normal_loads(params, f_ve, f_vd);
    let springs = match &state.contact {
        ContactState::Stuck { .. } => {
            let leg_vel = leg_world_velocities(params, state.vel, state.phi, state.phidot);
            friction_forces(
                &state.contact,
                &leg_pos,
                &leg_vel,
                &normals,
                params,
                state.phi,
            )
        }
        ContactState::Sliding => [Vec2::ZERO; 3],
    };
    state.contact = update_mode(
        &state.contact,
        state.vel.norm(),
        &leg_pos,
        &springs,
        &normals,
        params.mu,
        eps_v,
    );
    Ok(())
}

/// Build a trace sample from the current state and controller outputs.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sample(
    t: f64,
    state: &RobotState,
    params: &RobotParams,
    v_e: f64,
    v_d: f64,
    gains_t: [f64; 3],
    gains_r: [f64; 3],
    e_t: f64,
    e_r: f64,
) -> TraceSample {
    let (_, f_ve) = eccentric_force(
        params.m_e,
        params.r_e,
        state.rotor.omega_e,
        state.rotor.theta_e,
    );
    let (_, f_vd) = eccentric_force(
        params.m_d,
        params.r_d,
        state.rotor.omega_d,
        state.rotor.theta_d,
    );
    let normals = normal_loads(params, f_ve, f_vd);
    TraceSample {
        t,
        x: state.pos.x,
        y: state.pos.y,
        phi: state.phi,
        x_body: body_displacement(state.pos.x, state.pos.y, state.phi),
        v_e,
        v_d,
        omega_e: state.rotor.omega_e,
        omega_d: state.rotor.omega_d,
        theta_e: state.rotor.theta_e,
        theta_d: state.rotor.theta_d,
        n_a: normals[0],
        n_b: normals[1],
        n_c: normals[2],
        stuck: state.contact.is_stuck(),
        gains_t,
        gains_r,
        e_t,
        e_r,
    }
}

/// Integrate an open-loop run from rest at the origin.
///
/// `duration` overrides the configured duration when positive. Recording is
/// decimated to the control interval unless `record_full_rate` is set.
/// Open-loop runs involve no randomness: identical inputs produce
/// bit-identical traces.
pub fn run_open_loop(config: &Config, drive: Drive, duration: Option<f64>) -> Result<SimTrace> {
    config.validate()?;
    let params = &config.robot;
    let sim = &config.sim;
    let duration = duration.unwrap_or(sim.duration);
    if !(duration > 0.0) {
        return Err(Error::BadSpec("duration must be positive".into()));
    }

    let mut state = RobotState::at_rest(params, sim.theta_e0, sim.theta_d0);
    let (omega_e, omega_d, v_e, v_d) = drive.resolve();
    state.rotor.omega_e = omega_e;
    state.rotor.omega_d = omega_d;

    let dt = sim.physics_dt;
    let n_steps = (duration / dt).round() as usize;
    let record_every = if sim.record_full_rate {
        1
    } else {
        sim.steps_per_tick()
    };

    let zero3 = [0.0; 3];
    let mut samples = Vec::with_capacity(n_steps / record_every + 2);
    samples.push(sample(
        0.0, &state, params, v_e, v_d, zero3, zero3, 0.0, 0.0,
    ));
    for i in 0..n_steps {
        let t = i as f64 * dt;
        step(&mut state, params, sim.eps_v, dt, t)?;
        if (i + 1) % record_every == 0 || i + 1 == n_steps {
            samples.push(sample(
                (i + 1) as f64 * dt,
                &state,
                params,
                v_e,
                v_d,
                zero3,
                zero3,
                0.0,
                0.0,
            ));
        }
    }

    Ok(SimTrace {
        samples,
        config_echo: serialize_config(config),
        seed: sim.rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::ContactState;
    use std::f64::consts::PI;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn resting_robot_is_a_fixed_point() {
        let config = cfg();
        let mut state = RobotState::at_rest(&config.robot, PI, 0.0);
        let initial = state;
        for i in 0..1000 {
            step(
                &mut state,
                &config.robot,
                config.sim.eps_v,
                config.sim.physics_dt,
                i as f64 * config.sim.physics_dt,
            )
            .unwrap();
        }
        assert_eq!(state.pos, initial.pos);
        assert_eq!(state.vel, initial.vel);
        assert_eq!(state.phi, initial.phi);
        assert!(state.contact.is_stuck());
    }

    #[test]
    fn frictionless_drift_is_exact() {
        let mut config = cfg();
        config.robot.mu = 0.0;
        let mut state = RobotState::at_rest(&config.robot, 0.0, 0.0);
        state.contact = ContactState::Sliding;
        state.vel = Vec2::new(1e-3, 0.0);
        let dt = config.sim.physics_dt;
        let n = 10_000;
        for i in 0..n {
            step(
                &mut state,
                &config.robot,
                config.sim.eps_v,
                dt,
                i as f64 * dt,
            )
            .unwrap();
        }
        let expected = 1e-3 * n as f64 * dt;
        assert!(
            (state.pos.x - expected).abs() < 1e-15 * n as f64,
            "{} vs {}",
            state.pos.x,
            expected
        );
        assert_eq!(state.pos.y, 0.0);
    }

    /// One RK4 step against two half steps on a smooth sliding segment:
    /// halving dt cuts the local error by roughly 2^4..2^5.
    #[test]
    fn rk4_order_on_smooth_segment() {
        let config = cfg();
        let params = &config.robot;
        // A sliding state fast enough that no leg velocity crosses zero.
        let base = {
            let mut s = RobotState::at_rest(params, 0.3, 2.1);
            s.contact = ContactState::Sliding;
            s.vel = Vec2::new(0.05, 0.02);
            s.phidot = 0.4;
            s.rotor.omega_e = 455.6;
            s.rotor.omega_d = 430.0;
            s
        };
        let eps_v = config.sim.eps_v;

        let run = |dt: f64, n: usize| {
            let mut s = base;
            for i in 0..n {
                step(&mut s, params, eps_v, dt, i as f64 * dt).unwrap();
            }
            s
        };

        let dt = 4e-5;
        let reference = run(dt / 16.0, 16);
        let coarse = run(dt, 1);
        let fine = run(dt / 2.0, 2);

        let err = |s: &RobotState| {
            ((s.pos.x - reference.pos.x).powi(2)
                + (s.pos.y - reference.pos.y).powi(2)
                + (s.phi - reference.phi).powi(2))
            .sqrt()
        };
        let e_coarse = err(&coarse);
        let e_fine = err(&fine);
        assert!(e_fine > 0.0, "reference too close to fine solution");
        let ratio = e_coarse / e_fine;
        assert!(
            (8.0..200.0).contains(&ratio),
            "expected ~16-32x error reduction, got {ratio} ({e_coarse} / {e_fine})"
        );
    }

    #[test]
    fn open_loop_zero_drive_stays_at_initial_state() {
        let config = cfg();
        let trace = run_open_loop(
            &config,
            Drive::Speeds {
                omega_e: 0.0,
                omega_d: 0.0,
            },
            Some(0.05),
        )
        .unwrap();
        for s in &trace.samples {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 0.0);
            assert_eq!(s.phi, 0.0);
        }
    }

    #[test]
    fn open_loop_is_deterministic() {
        let config = cfg();
        let drive = Drive::Speeds {
            omega_e: 455.6,
            omega_d: 455.6,
        };
        let a = run_open_loop(&config, drive, Some(0.1)).unwrap();
        let b = run_open_loop(&config, drive, Some(0.1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frictionless_anti_phase_run_stays_on_axis() {
        let mut config = cfg();
        config.robot.mu = 0.0;
        let trace = run_open_loop(
            &config,
            Drive::Speeds {
                omega_e: 455.6,
                omega_d: 455.6,
            },
            Some(0.2),
        )
        .unwrap();
        for s in &trace.samples {
            assert!(s.y.abs() <= 1e-9, "y = {}", s.y);
            assert!(s.phi.abs() <= 1e-9, "phi = {}", s.phi);
        }
        // and it actually moves along +x
        assert!(trace.samples.last().unwrap().x > 1e-4);
    }

    #[test]
    fn kinetic_energy_dissipates_with_motors_off() {
        let config = cfg();
        let params = &config.robot;
        let mut state = RobotState::at_rest(params, 0.0, 0.0);
        state.contact = ContactState::Sliding;
        state.vel = Vec2::new(0.02, -0.01);
        let dt = config.sim.physics_dt;
        let ke = |s: &RobotState| {
            0.5 * params.mass * s.vel.dot(s.vel) + 0.5 * params.inertia_zz * s.phidot * s.phidot
        };
        let initial = ke(&state);
        let mut last = initial;
        let mut was_sliding = true;
        // Below this the discrete friction flips sign within a step (the
        // per-step velocity change exceeds eps_v) and KE jitters at the
        // ~1e-12 J scale until the stick band is hit.
        let chatter_floor = 1e-11;
        for i in 0..20_000 {
            step(&mut state, params, config.sim.eps_v, dt, i as f64 * dt).unwrap();
            let now = ke(&state);
            if was_sliding && last > chatter_floor {
                assert!(
                    now <= last + 1e-14,
                    "KE increased while sliding: {last} -> {now}"
                );
            }
            assert!(now <= initial + 1e-14, "KE exceeded initial: {now}");
            was_sliding = !state.contact.is_stuck();
            last = now;
        }
        // It must have come to rest and stuck, with the residual bounded by
        // the capture band.
        assert!(state.contact.is_stuck());
        assert!(state.vel.norm() < 2.0 * config.sim.eps_v);
        assert!(ke(&state) < 1e-10, "residual KE = {}", ke(&state));
    }

    #[test]
    fn open_loop_full_rate_records_every_step() {
        let mut config = cfg();
        config.sim.record_full_rate = true;
        let trace = run_open_loop(
            &config,
            Drive::Speeds {
                omega_e: 455.6,
                omega_d: 455.6,
            },
            Some(0.01),
        )
        .unwrap();
        assert_eq!(trace.samples.len(), 1001);
    }

    #[test]
    fn trace_length_matches_duration() {
        let mut config = cfg();
        config.sim.control_dt = 1e-3;
        let trace = run_open_loop(
            &config,
            Drive::Speeds {
                omega_e: 100.0,
                omega_d: 100.0,
            },
            Some(0.05),
        )
        .unwrap();
        // duration / control_dt + 1
        assert_eq!(trace.samples.len(), 51);
        let dt = config.sim.control_dt;
        for (i, s) in trace.samples.iter().enumerate() {
            assert!((s.t - i as f64 * dt).abs() < 1e-12);
        }
    }
}
