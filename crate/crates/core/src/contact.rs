//! Leg-ground contact: normal-load distribution and the two-mode tangential
//! friction scheme.
//!
//! The contact mode is global, switched on the COM speed: while the robot is
//! effectively at rest the legs behave as anchored springs ("stuck"); once a
//! motion threshold is exceeded the body is treated as rigid and each leg
//! sees Coulomb kinetic friction ("sliding"). Entry and exit criteria differ,
//! so the mode cannot chatter within a single step.

use crate::math::Vec2;
use crate::params::{leg_positions, RobotParams};

/// Contact mode plus the stick anchors. Anchors exist exactly when stuck.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactState {
    /// Legs anchored at the world-frame points captured at the stick instant.
    Stuck { anchors: [Vec2; 3] },
    /// Body rigid, legs slide under kinetic friction.
    Sliding,
}

impl ContactState {
    pub fn is_stuck(&self) -> bool {
        matches!(self, ContactState::Stuck { .. })
    }
}

/// Per-leg contact forces for one evaluation: normal loads and tangential
/// body-frame force vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegLoads {
    pub normals: [f64; 3],
    /// Tangential force on each leg, body frame.
    pub tangentials: [Vec2; 3],
}

/// Quasi-static normal-load distribution over the three legs.
///
/// `f_ve`/`f_vd` are the downward-positive motor vertical forces. They
/// modulate the total ground load — the friction-switching premise of the
/// locomotion — and enter as a centered load, exerting no moment about the
/// leg centroid: the static balance then puts equal thirds on the
/// equilateral legs. Nominally straight runs must stay straight for any
/// friction coefficient, so no roll moment may leak into the distribution.
/// If the motors lift the whole weight, the robot is airborne and all loads
/// are zero.
pub fn normal_loads(params: &RobotParams, f_ve: f64, f_vd: f64) -> [f64; 3] {
    let total = params.mass * params.gravity + f_ve + f_vd;
    if total <= 0.0 {
        return [0.0; 3]; // airborne
    }
    let third = total / 3.0;
    [third, third, third]
}

/// Tangential leg forces, returned in the body frame.
///
/// Stuck: each leg is a spring stretched from its anchor to its current
/// world position. Sliding: kinetic friction `-mu*N*v/|v|` per leg, zero for
/// a leg at rest.
pub fn friction_forces(
    contact: &ContactState,
    leg_world_pos: &[Vec2; 3],
    leg_world_vel: &[Vec2; 3],
    normals: &[f64; 3],
    params: &RobotParams,
    phi: f64,
) -> [Vec2; 3] {
    let mut out = [Vec2::ZERO; 3];
    match contact {
        ContactState::Stuck { anchors } => {
            for i in 0..3 {
                let world = (leg_world_pos[i] - anchors[i]) * (-params.spring_k);
                out[i] = world.rotated(-phi);
            }
        }
        ContactState::Sliding => {
            for i in 0..3 {
                let speed = leg_world_vel[i].norm();
                if speed > 0.0 {
                    let world = leg_world_vel[i] * (-params.mu * normals[i] / speed);
                    out[i] = world.rotated(-phi);
                }
            }
        }
    }
    out
}

/// Mode transition check, applied once after each integration step.
///
/// Sliding sticks when the COM speed falls below `eps_v` (anchors captured at
/// the current leg positions). Stuck breaks away when the demanded static
/// friction exceeds the stiction budget: sum of spring-force magnitudes
/// greater than mu times the total normal load.
pub fn update_mode(
    contact: &ContactState,
    com_speed: f64,
    leg_world_pos: &[Vec2; 3],
    spring_forces: &[Vec2; 3],
    normals: &[f64; 3],
    mu: f64,
    eps_v: f64,
) -> ContactState {
    match contact {
        ContactState::Sliding => {
            if com_speed < eps_v {
                ContactState::Stuck {
                    anchors: *leg_world_pos,
                }
            } else {
                ContactState::Sliding
            }
        }
        ContactState::Stuck { .. } => {
            let demand: f64 = spring_forces.iter().map(|f| f.norm()).sum();
            let budget = mu * normals.iter().sum::<f64>();
            if demand > budget {
                ContactState::Sliding
            } else {
                *contact
            }
        }
    }
}

/// World positions of the three legs for a given pose.
pub fn leg_world_positions(params: &RobotParams, pos: Vec2, phi: f64) -> [Vec2; 3] {
    let legs = leg_positions(params);
    [
        pos + legs[0].rotated(phi),
        pos + legs[1].rotated(phi),
        pos + legs[2].rotated(phi),
    ]
}

/// World velocities of the three legs: v_com + phidot x r.
pub fn leg_world_velocities(params: &RobotParams, vel: Vec2, phi: f64, phidot: f64) -> [Vec2; 3] {
    let legs = leg_positions(params);
    let mut out = [Vec2::ZERO; 3];
    for i in 0..3 {
        let r = legs[i].rotated(phi);
        out[i] = vel + Vec2::new(-phidot * r.y, phidot * r.x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn p() -> RobotParams {
        RobotParams::default()
    }

    #[test]
    fn static_loads_are_equal_thirds() {
        let params = p();
        let n = normal_loads(&params, 0.0, 0.0);
        let third = params.mass * params.gravity / 3.0;
        assert!((third - 0.023537).abs() < 2e-6);
        for ni in n {
            assert!((ni - third).abs() < 1e-15);
        }
    }

    #[test]
    fn full_lift_is_airborne() {
        let params = p();
        let w = params.mass * params.gravity;
        assert_eq!(normal_loads(&params, -w / 2.0, -w / 2.0), [0.0; 3]);
        assert_eq!(normal_loads(&params, -w, 0.1 * w - 0.1 * w), [0.0; 3]);
    }

    #[test]
    fn symmetric_motor_push_keeps_symmetry() {
        let params = p();
        let f = 0.05;
        let n = normal_loads(&params, f, f);
        assert!((n[0] - n[2]).abs() < 1e-15);
        let sum: f64 = n.iter().sum();
        assert!((sum - (params.mass * params.gravity + 2.0 * f)).abs() < 1e-15);
    }

    #[test]
    fn load_sum_is_conserved_through_liftoff() {
        let params = p();
        let mut rng = SplitMix64::new(21);
        for _ in 0..2000 {
            let f_ve = rng.uniform(-0.3, 0.3);
            let f_vd = rng.uniform(-0.3, 0.3);
            let n = normal_loads(&params, f_ve, f_vd);
            let expected = (params.mass * params.gravity + f_ve + f_vd).max(0.0);
            let sum: f64 = n.iter().sum();
            assert!(
                (sum - expected).abs() <= 1e-12 * expected.max(1e-300),
                "sum {sum} expected {expected}"
            );
            for ni in n {
                assert!(ni >= 0.0);
            }
        }
    }

    #[test]
    fn stuck_zero_deflection_zero_force() {
        let params = p();
        let legs = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let contact = ContactState::Stuck { anchors: legs };
        let f = friction_forces(&contact, &legs, &[Vec2::ZERO; 3], &[0.02; 3], &params, 0.0);
        for fi in f {
            assert_eq!(fi, Vec2::ZERO);
        }
    }

    #[test]
    fn stuck_micro_deflection_force() {
        let params = p();
        let anchors = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let moved = leg_world_positions(&params, Vec2::new(1e-6, 0.0), 0.0);
        let contact = ContactState::Stuck { anchors };
        let f = friction_forces(&contact, &moved, &[Vec2::ZERO; 3], &[0.02; 3], &params, 0.0);
        for fi in f {
            assert!((fi.norm() - 0.072509185).abs() < 1e-12, "{}", fi.norm());
            assert!(fi.x < 0.0); // restoring
        }
    }

    #[test]
    fn sliding_force_is_kinetic_friction() {
        let params = p();
        let n = params.mass * params.gravity / 3.0;
        let vel = [Vec2::new(0.01, 0.0); 3];
        let legs = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let f = friction_forces(&ContactState::Sliding, &legs, &vel, &[n; 3], &params, 0.0);
        for fi in f {
            assert!((fi.x + 0.0084733).abs() < 2e-6, "{}", fi.x);
            assert!(fi.y.abs() < 1e-18);
        }
    }

    #[test]
    fn frictionless_sliding_has_no_force() {
        let mut params = p();
        params.mu = 0.0;
        let vel = [Vec2::new(0.3, -0.1); 3];
        let legs = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let f = friction_forces(
            &ContactState::Sliding,
            &legs,
            &vel,
            &[0.02; 3],
            &params,
            0.0,
        );
        for fi in f {
            assert_eq!(fi, Vec2::ZERO);
        }
    }

    #[test]
    fn sliding_respects_cone_and_dissipates() {
        let params = p();
        let mut rng = SplitMix64::new(5);
        for _ in 0..500 {
            let vel = [
                Vec2::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Vec2::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                Vec2::ZERO,
            ];
            let n = [rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1), 0.05];
            let phi = rng.uniform(-3.0, 3.0);
            let legs = leg_world_positions(&params, Vec2::ZERO, phi);
            let f = friction_forces(&ContactState::Sliding, &legs, &vel, &n, &params, phi);
            let mut power = 0.0;
            for i in 0..3 {
                let cap = params.mu * n[i];
                assert!(f[i].norm() <= cap + 1e-12 * cap.max(1e-300));
                if vel[i].norm() > 0.0 {
                    assert!((f[i].norm() - cap).abs() <= 1e-12 * cap.max(1e-300));
                }
                power += f[i].rotated(phi).dot(vel[i]);
            }
            assert!(power <= 1e-15);
        }
    }

    #[test]
    fn sliding_sticks_below_threshold() {
        let params = p();
        let legs = leg_world_positions(&params, Vec2::new(0.1, 0.2), 0.3);
        let next = update_mode(
            &ContactState::Sliding,
            0.0,
            &legs,
            &[Vec2::ZERO; 3],
            &[0.02; 3],
            params.mu,
            1e-6,
        );
        match next {
            ContactState::Stuck { anchors } => assert_eq!(anchors, legs),
            ContactState::Sliding => panic!("should have stuck"),
        }
    }

    #[test]
    fn stuck_without_demand_stays_stuck() {
        let params = p();
        let legs = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let state = ContactState::Stuck { anchors: legs };
        let next = update_mode(
            &state,
            0.5, // COM speed is irrelevant while stuck
            &legs,
            &[Vec2::ZERO; 3],
            &[0.02; 3],
            params.mu,
            1e-6,
        );
        assert_eq!(next, state);
    }

    #[test]
    fn stuck_breaks_away_when_springs_exceed_budget() {
        let params = p();
        let legs = leg_world_positions(&params, Vec2::ZERO, 0.0);
        let state = ContactState::Stuck { anchors: legs };
        let n = [0.02; 3];
        let budget = params.mu * 0.06;
        let spring = [Vec2::new(budget * 0.5, 0.0); 3]; // demand = 1.5x budget
        let next = update_mode(&state, 0.0, &legs, &spring, &n, params.mu, 1e-6);
        assert_eq!(next, ContactState::Sliding);
    }

    #[test]
    fn leg_velocity_includes_spin() {
        let params = p();
        let v = leg_world_velocities(&params, Vec2::ZERO, 0.0, 1.0);
        let legs = leg_positions(&params);
        for i in 0..3 {
            assert!((v[i].x + legs[i].y).abs() < 1e-15);
            assert!((v[i].y - legs[i].x).abs() < 1e-15);
        }
    }
}
