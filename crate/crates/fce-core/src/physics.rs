//! Physical constants and pointwise force/kinematics formulas.
//!
//! Everything here is a pure function of its inputs; time integration lives
//! in [`crate::trajectory`].

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Mass and geometry of the launched ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallParams {
    pub mass: f64,
    pub radius: f64,
    /// πr², kept precomputed; invariant checked by [`BallParams::new`].
    pub cross_section_area: f64,
}

impl BallParams {
    pub fn new(mass: f64, radius: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::validation(format!("ball mass must be > 0, got {mass}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::validation(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        Ok(Self {
            mass,
            radius,
            cross_section_area: PI * radius * radius,
        })
    }
}

impl Default for BallParams {
    /// 0.14 kg foam ball, 7-inch diameter.
    fn default() -> Self {
        Self::new(0.14, 0.0889).expect("default ball params are valid")
    }
}

/// Ambient conditions the ball flies through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    pub gravity: f64,
    pub air_density: f64,
}

impl Environment {
    pub fn new(gravity: f64, air_density: f64) -> Result<Self> {
        if !(gravity > 0.0 && gravity.is_finite()) {
            return Err(Error::validation(format!("gravity must be > 0, got {gravity}")));
        }
        if !(air_density >= 0.0 && air_density.is_finite()) {
            return Err(Error::validation(format!(
                "air density must be >= 0, got {air_density}"
            )));
        }
        Ok(Self {
            gravity,
            air_density,
        })
    }
}

impl Default for Environment {
    /// 9.81 m/s², sea-level standard air density.
    fn default() -> Self {
        Self::new(9.81, 1.225).expect("default environment is valid")
    }
}

/// Double-flywheel launcher geometry.
///
/// The lower flywheel spins at `motor_ratio * motor_free_speed`; the upper
/// flywheel is geared down by `upper_speed_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlywheelGeometry {
    pub lower_radius: f64,
    pub upper_radius: f64,
    /// Upper angular speed / lower angular speed, in (0, 1].
    pub upper_speed_ratio: f64,
    /// Lower flywheel angular speed at motor ratio 1.0, rad/s.
    pub motor_free_speed: f64,
}

impl FlywheelGeometry {
    pub fn new(
        lower_radius: f64,
        upper_radius: f64,
        upper_speed_ratio: f64,
        motor_free_speed: f64,
    ) -> Result<Self> {
        if !(lower_radius > 0.0 && lower_radius.is_finite()) {
            return Err(Error::validation(format!(
                "lower flywheel radius must be > 0, got {lower_radius}"
            )));
        }
        if !(upper_radius > 0.0 && upper_radius.is_finite()) {
            return Err(Error::validation(format!(
                "upper flywheel radius must be > 0, got {upper_radius}"
            )));
        }
        if !(upper_speed_ratio > 0.0 && upper_speed_ratio <= 1.0) {
            return Err(Error::validation(format!(
                "upper speed ratio must be in (0, 1], got {upper_speed_ratio}"
            )));
        }
        if !(motor_free_speed > 0.0 && motor_free_speed.is_finite()) {
            return Err(Error::validation(format!(
                "motor free speed must be > 0, got {motor_free_speed}"
            )));
        }
        Ok(Self {
            lower_radius,
            upper_radius,
            upper_speed_ratio,
            motor_free_speed,
        })
    }
}

impl Default for FlywheelGeometry {
    /// 4-inch lower wheel, 2.75-inch upper wheel geared to 9/16 speed,
    /// 6000 RPM free speed.
    fn default() -> Self {
        Self::new(0.0508, 0.034925, 9.0 / 16.0, 628.3).expect("default flywheel geometry is valid")
    }
}

/// Dimensionless aerodynamic coefficients (lift `C_l`, drag `C_d`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub lift: f64,
    pub drag: f64,
}

impl CoefficientPair {
    pub fn new(lift: f64, drag: f64) -> Result<Self> {
        if !(lift >= 0.0 && lift.is_finite()) {
            return Err(Error::validation(format!(
                "lift coefficient must be >= 0, got {lift}"
            )));
        }
        if !(drag >= 0.0 && drag.is_finite()) {
            return Err(Error::validation(format!(
                "drag coefficient must be >= 0, got {drag}"
            )));
        }
        Ok(Self { lift, drag })
    }

    /// Both coefficients zero: pure vacuum ballistics.
    pub fn vacuum() -> Self {
        Self {
            lift: 0.0,
            drag: 0.0,
        }
    }
}

/// One launcher setting: horizontal distance to the target base, motor speed
/// ratio in [0, 1], and launch angle in degrees above horizontal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchConfig {
    pub distance: f64,
    pub motor_ratio: f64,
    pub angle: f64,
}

impl LaunchConfig {
    pub fn new(distance: f64, motor_ratio: f64, angle: f64) -> Result<Self> {
        if !(distance > 0.0 && distance.is_finite()) {
            return Err(Error::validation(format!(
                "distance must be > 0, got {distance}"
            )));
        }
        if !(0.0..=1.0).contains(&motor_ratio) {
            return Err(Error::validation(format!(
                "motor ratio must be in [0, 1], got {motor_ratio}"
            )));
        }
        if !(angle > 0.0 && angle < 90.0) {
            return Err(Error::validation(format!(
                "angle must be in (0, 90) degrees, got {angle}"
            )));
        }
        Ok(Self {
            distance,
            motor_ratio,
            angle,
        })
    }

    pub fn angle_radians(&self) -> f64 {
        self.angle.to_radians()
    }
}

/// Magnitudes of the three per-force accelerations at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerations {
    pub lift: f64,
    pub drag: f64,
    pub gravity: f64,
}

/// Ball exit speed from the flywheel pair: average of the two surface speeds.
pub fn initial_velocity(geom: &FlywheelGeometry, motor_ratio: f64) -> f64 {
    let omega_lower = motor_ratio * geom.motor_free_speed;
    let omega_upper = geom.upper_speed_ratio * omega_lower;
    (omega_upper * geom.upper_radius + omega_lower * geom.lower_radius) / 2.0
}

/// Ball spin in rotations per second from the surface-speed difference.
///
/// Positive when the lower flywheel's surface moves faster (backspin, which
/// produces an upward lift component).
pub fn spin_rate(geom: &FlywheelGeometry, motor_ratio: f64, ball: &BallParams) -> f64 {
    let omega_lower = motor_ratio * geom.motor_free_speed;
    let omega_upper = geom.upper_speed_ratio * omega_lower;
    (omega_lower * geom.lower_radius - omega_upper * geom.upper_radius) / (2.0 * PI * ball.radius)
}

/// Per-force acceleration magnitudes for a ball moving at `speed` (m/s) and
/// spinning at `spin` (rotations/s).
///
/// Lift: F_l = C_l · (16/3) · π² · r³ · s · ρ · v, divided by mass.
/// Drag: F_d = (C_d / 2) · A · v² · ρ, divided by mass.
pub fn accelerations(
    ball: &BallParams,
    env: &Environment,
    coeffs: &CoefficientPair,
    speed: f64,
    spin: f64,
) -> Accelerations {
    let r3 = ball.radius * ball.radius * ball.radius;
    let lift_force = coeffs.lift * (16.0 / 3.0) * PI * PI * r3 * spin * env.air_density * speed;
    let drag_force = coeffs.drag / 2.0 * ball.cross_section_area * speed * speed * env.air_density;
    Accelerations {
        lift: lift_force / ball.mass,
        drag: drag_force / ball.mass,
        gravity: env.gravity,
    }
}
