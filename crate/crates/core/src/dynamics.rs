//! Continuous-time rigid-body dynamics of the platform.
//!
//! The model is planar: X, Y, yaw. Leg and motor forces act in the body
//! frame and are rotated into the world frame by the yaw angle; the yaw
//! equation collects the leg friction moments (through the leg coordinates)
//! and the moments of the two motor thrusts mounted at body-y = ∓d1.

use crate::actuator::{eccentric_force, RotorState};
use crate::contact::{ContactState, LegLoads};
use crate::math::Vec2;
use crate::params::{leg_positions, RobotParams};

/// Full mechanical state of the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    /// World position of the COM, m.
    pub pos: Vec2,
    /// Yaw angle, rad. Unwrapped so accumulated rotation is observable.
    pub phi: f64,
    /// World velocity of the COM, m/s.
    pub vel: Vec2,
    /// Yaw rate, rad/s.
    pub phidot: f64,
    pub rotor: RotorState,
    pub contact: ContactState,
}

impl RobotState {
    /// At rest at the origin, stuck, anchors at the nominal leg positions.
    pub fn at_rest(params: &RobotParams, theta_e0: f64, theta_d0: f64) -> Self {
        RobotState {
            pos: Vec2::ZERO,
            phi: 0.0,
            vel: Vec2::ZERO,
            phidot: 0.0,
            rotor: RotorState::new(theta_e0, theta_d0),
            contact: ContactState::Stuck {
                anchors: leg_positions(params),
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite()
            && self.vel.is_finite()
            && self.phi.is_finite()
            && self.phidot.is_finite()
            && self.rotor.theta_e.is_finite()
            && self.rotor.theta_d.is_finite()
    }
}

/// Time derivative of the integrable part of the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub dpos: Vec2,
    pub dphi: f64,
    pub dvel: Vec2,
    pub dphidot: f64,
    pub dtheta_e: f64,
    pub dtheta_d: f64,
}

/// Assemble the state derivative from the current pose, rotor state and
/// contact loads.
///
/// Motor e contributes thrust with a minus sign and motor d with a plus
/// sign; both motor moments enter the yaw equation with -d1. The tangential
/// leg forces are body-frame quantities and are rotated by yaw together with
/// the motor thrust.
pub fn state_derivative(
    pos_phi: (Vec2, f64),
    vel_phidot: (Vec2, f64),
    rotor: &RotorState,
    loads: &LegLoads,
    params: &RobotParams,
) -> StateDerivative {
    let (_, phi) = pos_phi;
    let (vel, phidot) = vel_phidot;

    let (thrust_e, _) = eccentric_force(params.m_e, params.r_e, rotor.omega_e, rotor.theta_e);
    let (thrust_d, _) = eccentric_force(params.m_d, params.r_d, rotor.omega_d, rotor.theta_d);
    let motor_fx = -thrust_e + thrust_d;

    let mut body_force = Vec2::new(motor_fx, 0.0);
    for f in &loads.tangentials {
        body_force = body_force + *f;
    }
    let world_force = body_force.rotated(phi);

    let mut torque = -params.motor_offset * (thrust_e + thrust_d);
    let legs = leg_positions(params);
    for (r, f) in legs.iter().zip(&loads.tangentials) {
        torque += r.cross(*f);
    }

    StateDerivative {
        dpos: vel,
        dphi: phidot,
        dvel: world_force * (1.0 / params.mass),
        dphidot: torque / params.inertia_zz,
        dtheta_e: rotor.omega_e,
        dtheta_d: rotor.omega_d,
    }
}
