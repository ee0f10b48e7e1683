//! The two eccentric-rotating-mass vibration motors.
//!
//! Each motor spins an off-center mass in a vertical plane. The rotating
//! centrifugal force `m·r·ω²` has a horizontal component (thrust, `sin θ`)
//! and a vertical component (normal-load modulation, `cos θ`); the interplay
//! of the two is what rectifies vibration into stick-slip locomotion.
//!
//! The two motors are mounted with mirrored spin senses: commanding the same
//! speed (or voltage) to both makes the rotor phases counter-rotate,
//! `theta_d(t) = -theta_e(t)`. In that configuration the horizontal thrusts
//! add, the yaw moments cancel exactly, and the vertical components add —
//! the total ground load breathes once per revolution, which is what turns
//! the symmetric thrust oscillation into net forward motion. Differential
//! commands unbalance the yaw moments and steer.

use std::f64::consts::TAU;

/// Half-width of the voltage dead zone: |V| below this spins nothing.
pub const DEAD_ZONE_V: f64 = 0.2;

/// Static voltage-to-angular-speed map of a vibration motor, rad/s.
///
/// A fifth-order polynomial fit for V >= 0.2, mirrored for V <= -0.2 so the
/// map is exactly odd, and zero inside the dead zone. The map is algebraic:
/// no electrical transient is modeled. Note the tiny discontinuity at the
/// dead-zone edges (the polynomial evaluates to ~-0.003 rad/s at 0.2 V);
/// it is kept as-is rather than smoothed.
pub fn motor_speed(v: f64) -> f64 {
    if v.abs() < DEAD_ZONE_V {
        return 0.0;
    }
    let w = v.abs();
    let positive = ((((2.6 * w - 26.44) * w + 102.11) * w - 200.92) * w + 253.09) * w - 43.36;
    if v < 0.0 {
        -positive
    } else {
        positive
    }
}

/// Phases and signed phase rates of the two rotors.
///
/// Phases are kept wrapped to (-2π, 2π). `omega_*` are the signed rates
/// `d(theta)/dt`: motor e runs at `-motor_speed(V_e)` (mirrored mounting),
/// motor d at `+motor_speed(V_d)`; in speed-command mode the commanded
/// values map the same way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorState {
    pub theta_e: f64,
    pub theta_d: f64,
    pub omega_e: f64,
    pub omega_d: f64,
}

impl RotorState {
    pub fn new(theta_e: f64, theta_d: f64) -> Self {
        RotorState {
            theta_e: wrap_phase(theta_e),
            theta_d: wrap_phase(theta_d),
            omega_e: 0.0,
            omega_d: 0.0,
        }
    }
}

/// Wrap an angle to (-2π, 2π).
///
/// Uses the IEEE remainder (`%`), which is exact and sign-symmetric:
/// `wrap_phase(-x) == -wrap_phase(x)` bitwise. That keeps the two
/// counter-rotating phases exact mirrors of each other over arbitrarily
/// long runs, so their yaw moments cancel to the last bit and nominally
/// straight runs stay straight. A [0, 2π) wrap would break the mirror by
/// a rounding of 2π at every wrap event.
pub fn wrap_phase(theta: f64) -> f64 {
    theta % TAU
}

/// Advance both rotor phases by one time step, wrapping to (-2π, 2π).
/// Rates are unchanged.
pub fn rotor_step(rotor: RotorState, dt: f64) -> RotorState {
    RotorState {
        theta_e: wrap_phase(rotor.theta_e + rotor.omega_e * dt),
        theta_d: wrap_phase(rotor.theta_d + rotor.omega_d * dt),
        ..rotor
    }
}

/// Signed rotor phase rates for a pair of motor voltages: motor e is the
/// mirrored one.
pub fn rotor_rates(v_e: f64, v_d: f64) -> (f64, f64) {
    (-motor_speed(v_e), motor_speed(v_d))
}

/// Inertial force of one spinning eccentric mass on the body.
///
/// Returns `(horizontal, vertical)` = `(m·r·ω²·sin θ, m·r·ω²·cos θ)` in N.
/// Horizontal is along body-x before the caller applies the per-motor sign;
/// vertical is positive pressing down at θ = 0. The magnitude is exactly
/// `m·r·ω²` for any phase.
pub fn eccentric_force(m: f64, r: f64, omega: f64, theta: f64) -> (f64, f64) {
    let magnitude = m * r * omega * omega;
    let (s, c) = theta.sin_cos();
    (magnitude * s, magnitude * c)
}

/// How the motors are driven in an open-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// Command motor speeds directly, bypassing the voltage map. Values are
    /// in each motor's own spin sense (positive = normal running direction).
    Speeds { omega_e: f64, omega_d: f64 },
    /// Hold constant voltages; speeds come from [`motor_speed`].
    Voltages { v_e: f64, v_d: f64 },
}

impl Drive {
    /// Resolve to signed rotor phase rates and the equivalent voltages
    /// (0 for speed mode).
    pub fn resolve(self) -> (f64, f64, f64, f64) {
        match self {
            Drive::Speeds { omega_e, omega_d } => (-omega_e, omega_d, 0.0, 0.0),
            Drive::Voltages { v_e, v_d } => {
                let (rate_e, rate_d) = rotor_rates(v_e, v_d);
                (rate_e, rate_d, v_e, v_d)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn dead_zone_outputs_zero() {
        assert_eq!(motor_speed(0.1), 0.0);
        assert_eq!(motor_speed(-0.19), 0.0);
        assert_eq!(motor_speed(0.0), 0.0);
    }

    #[test]
    fn one_volt_value() {
        // 2.6 - 26.44 + 102.11 - 200.92 + 253.09 - 43.36 = 87.08
        assert!((motor_speed(1.0) - 87.08).abs() < 1e-9);
        assert!((motor_speed(-1.0) + 87.08).abs() < 1e-9);
    }

    #[test]
    fn dead_zone_edge_keeps_the_fit_value() {
        // The polynomial happens to pass very near zero at the edge, so the
        // jump out of the dead zone is tiny but nonzero.
        assert_eq!(motor_speed(0.19999999), 0.0);
        let edge = motor_speed(0.2);
        assert_ne!(edge, 0.0);
        assert!(edge.abs() < 0.01, "edge value {edge}");
    }

    #[test]
    fn map_is_exactly_odd() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..1000 {
            let v = rng.uniform(-4.0, 4.0);
            assert_eq!(motor_speed(-v), -motor_speed(v), "v = {v}");
        }
    }

    #[test]
    fn rotor_step_zero_speed_keeps_phase() {
        let r = RotorState::new(1.23, 0.5);
        let r2 = rotor_step(r, 0.7);
        assert_eq!(r2.theta_e, 1.23);
        assert_eq!(r2.theta_d, 0.5);
    }

    #[test]
    fn rotor_step_full_revolution_wraps() {
        let mut r = RotorState::new(0.0, 0.0);
        r.omega_e = TAU;
        let r2 = rotor_step(r, 1.0);
        assert_eq!(r2.theta_e, 0.0);
    }

    #[test]
    fn wrap_is_exactly_odd() {
        let mut rng = SplitMix64::new(77);
        for _ in 0..1000 {
            let x = rng.uniform(0.0, 1e4);
            assert_eq!(wrap_phase(-x), -wrap_phase(x), "x = {x}");
        }
    }

    #[test]
    fn rotor_step_advances_linearly() {
        let mut r = RotorState::new(0.0, 0.0);
        r.omega_e = 455.6;
        let r2 = rotor_step(r, 1e-3);
        assert!((r2.theta_e - 0.4556).abs() < 1e-12);
    }

    #[test]
    fn eccentric_force_at_zero_phase_is_vertical() {
        let (h, v) = eccentric_force(9e-4, 1.061e-3, 455.6, 0.0);
        assert_eq!(h, 0.0);
        assert!(v > 0.0);
    }

    #[test]
    fn eccentric_force_at_quarter_phase() {
        let (h, v) = eccentric_force(9e-4, 1.061e-3, 455.6, FRAC_PI_2);
        assert!((h - 0.19821).abs() < 5e-5, "h = {h}");
        assert!(v.abs() < 1e-16);
    }

    #[test]
    fn eccentric_force_magnitude_is_phase_independent() {
        let mut rng = SplitMix64::new(9);
        let m = 9e-4;
        let r = 1.061e-3;
        let omega = 300.0;
        let mag = m * r * omega * omega;
        for _ in 0..100 {
            let theta = rng.uniform(0.0, TAU);
            let (h, v) = eccentric_force(m, r, omega, theta);
            assert!((h * h + v * v - mag * mag).abs() < 1e-12 * mag * mag);
        }
    }

    #[test]
    fn wrap_phase_stays_in_range() {
        for t in [-10.0, -TAU, -1e-18, 0.0, 1.0, TAU, 123.456] {
            let w = wrap_phase(t);
            assert!(w > -TAU && w < TAU, "t={t} w={w}");
        }
    }

    #[test]
    fn speed_drive_counter_rotates() {
        let d = Drive::Speeds {
            omega_e: 455.6,
            omega_d: 455.6,
        };
        let (rate_e, rate_d, ve, vd) = d.resolve();
        assert_eq!((rate_e, rate_d), (-455.6, 455.6));
        assert_eq!((ve, vd), (0.0, 0.0));
    }

    #[test]
    fn voltage_drive_resolves_through_map() {
        let d = Drive::Voltages { v_e: 1.0, v_d: 1.0 };
        let (rate_e, rate_d, _, _) = d.resolve();
        assert!((rate_e + 87.08).abs() < 1e-9);
        assert!((rate_d - 87.08).abs() < 1e-9);
        // Equal voltages make the phases exact mirrors.
        assert_eq!(rate_e, -rate_d);
    }
}
