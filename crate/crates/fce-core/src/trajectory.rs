//! Planar trajectory integration and target scoring.
//!
//! Coordinates are relative to the launcher exit point: x horizontal toward
//! the target, y vertical, (0, 0) at launch.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::physics::{self, CoefficientPair, LaunchConfig};

/// One integration sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// Why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// x reached the target plane (x >= distance).
    ReachedTargetPlane,
    /// y dropped below the floor.
    FellBelowFloor,
    /// t_max elapsed.
    TimedOut,
    /// Horizontal velocity dropped to zero or below.
    StalledBackward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<TrajectoryState>,
    pub terminated_by: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV export with header `t,x,y,vx,vy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,vx,vy\n");
        for s in &self.states {
            out.push_str(&format!("{},{},{},{},{}\n", s.t, s.x, s.y, s.vx, s.vy));
        }
        out
    }
}

/// Scoring outcome: did the shot pass through the 2-point / 3-point band.
///
/// The 3-point band is contained in the 2-point band, so `hit3` implies
/// `hit2`; [`Outcome::new`] enforces this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    pub hit2: bool,
    pub hit3: bool,
}

impl Outcome {
    pub fn new(hit2: bool, hit3: bool) -> Result<Self> {
        if hit3 && !hit2 {
            return Err(Error::validation(
                "outcome (hit2=0, hit3=1) violates containment (3-point region is inside 2-point)",
            ));
        }
        Ok(Self { hit2, hit3 })
    }

    pub const MISS: Outcome = Outcome {
        hit2: false,
        hit3: false,
    };
    pub const TWO_POINT: Outcome = Outcome {
        hit2: true,
        hit3: false,
    };
    pub const THREE_POINT: Outcome = Outcome {
        hit2: true,
        hit3: true,
    };
}

/// Target scoring geometry, in launch-exit coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    /// Target center height above the launch exit point, meters.
    pub center_height: f64,
    pub three_pt_halfwidth: f64,
    pub two_pt_halfwidth: f64,
}

impl TargetSpec {
    pub fn new(center_height: f64, three_pt_halfwidth: f64, two_pt_halfwidth: f64) -> Result<Self> {
        if !(three_pt_halfwidth > 0.0 && three_pt_halfwidth < two_pt_halfwidth) {
            return Err(Error::validation(format!(
                "need 0 < three_pt_halfwidth ({three_pt_halfwidth}) < two_pt_halfwidth ({two_pt_halfwidth})"
            )));
        }
        Ok(Self {
            center_height,
            three_pt_halfwidth,
            two_pt_halfwidth,
        })
    }
}

/// Time integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Explicit Euler (default).
    #[default]
    Euler,
    /// Classic 4th-order Runge-Kutta; used as the convergence reference.
    Rk4,
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub dt: f64,
    pub t_max: f64,
    pub integrator: Integrator,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 5.0,
            integrator: Integrator::Euler,
        }
    }
}

#[derive(Clone, Copy)]
struct Derivative {
    dx: f64,
    dy: f64,
    dvx: f64,
    dvy: f64,
}

/// Integrate a launch until it reaches the target plane, hits the floor,
/// times out, or stalls (vx <= 0), whichever happens first.
///
/// Spin is taken constant over the flight. The velocity angle is recomputed
/// from (vx, vy) at every force evaluation.
pub fn simulate(
    config: &LaunchConfig,
    coeffs: &CoefficientPair,
    sim: &SimConfig,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::validation(format!("dt must be > 0, got {}", opts.dt)));
    }
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return Err(Error::validation(format!(
            "t_max must be > 0, got {}",
            opts.t_max
        )));
    }

    let v0 = physics::initial_velocity(&sim.flywheel, config.motor_ratio);
    let spin = physics::spin_rate(&sim.flywheel, config.motor_ratio, &sim.ball);
    let theta0 = config.angle_radians();
    let floor_y = sim.floor_y();

    let deriv = |vx: f64, vy: f64| -> Derivative {
        let speed = vx.hypot(vy);
        let theta = vy.atan2(vx);
        let a = physics::accelerations(&sim.ball, &sim.env, coeffs, speed, spin);
        Derivative {
            dx: vx,
            dy: vy,
            dvx: -(a.lift * theta.sin() + a.drag * theta.cos()),
            dvy: a.lift * theta.cos() - a.drag * theta.sin() - a.gravity,
        }
    };

    let mut state = TrajectoryState {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        vx: v0 * theta0.cos(),
        vy: v0 * theta0.sin(),
    };
    let mut states = Vec::with_capacity(256);
    states.push(state);

    let terminated_by = loop {
        if state.x >= config.distance {
            break Termination::ReachedTargetPlane;
        }
        if state.y < floor_y {
            break Termination::FellBelowFloor;
        }
        if state.t >= opts.t_max {
            break Termination::TimedOut;
        }
        if state.vx <= 0.0 {
            break Termination::StalledBackward;
        }

        let dt = opts.dt;
        state = match opts.integrator {
            Integrator::Euler => {
                let d = deriv(state.vx, state.vy);
                TrajectoryState {
                    t: state.t + dt,
                    x: state.x + dt * d.dx,
                    y: state.y + dt * d.dy,
                    vx: state.vx + dt * d.dvx,
                    vy: state.vy + dt * d.dvy,
                }
            }
            Integrator::Rk4 => {
                let k1 = deriv(state.vx, state.vy);
                let k2 = deriv(state.vx + 0.5 * dt * k1.dvx, state.vy + 0.5 * dt * k1.dvy);
                let k3 = deriv(state.vx + 0.5 * dt * k2.dvx, state.vy + 0.5 * dt * k2.dvy);
                let k4 = deriv(state.vx + dt * k3.dvx, state.vy + dt * k3.dvy);
                TrajectoryState {
                    t: state.t + dt,
                    x: state.x + dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
                    y: state.y + dt / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy),
                    vx: state.vx + dt / 6.0 * (k1.dvx + 2.0 * k2.dvx + 2.0 * k3.dvx + k4.dvx),
                    vy: state.vy + dt / 6.0 * (k1.dvy + 2.0 * k2.dvy + 2.0 * k3.dvy + k4.dvy),
                }
            }
        };
        if !(state.x.is_finite() && state.y.is_finite() && state.vx.is_finite() && state.vy.is_finite()) {
            return Err(Error::validation(
                "trajectory state became non-finite during integration",
            ));
        }
        states.push(state);
    };

    Ok(Trajectory {
        states,
        terminated_by,
    })
}

/// Height at the target plane x = distance, linearly interpolated between
/// the straddling samples. `None` if the trajectory never got there.
pub fn crossing_height(traj: &Trajectory, config: &LaunchConfig) -> Option<f64> {
    if traj.terminated_by != Termination::ReachedTargetPlane {
        return None;
    }
    let after = traj.last();
    if traj.states.len() == 1 {
        // Degenerate: already at the plane at t=0 (distance <= 0 is rejected
        // by LaunchConfig, so this does not happen in practice).
        return Some(after.y);
    }
    let before = &traj.states[traj.states.len() - 2];
    let dx = after.x - before.x;
    if dx <= 0.0 {
        return Some(after.y);
    }
    let frac = (config.distance - before.x) / dx;
    Some(before.y + frac * (after.y - before.y))
}

/// Classify a trajectory against the target bands at x = distance.
pub fn score(traj: &Trajectory, config: &LaunchConfig, target: &TargetSpec) -> Outcome {
    match crossing_height(traj, config) {
        None => Outcome::MISS,
        Some(y_d) => {
            let dev = (y_d - target.center_height).abs();
            let hit3 = dev <= target.three_pt_halfwidth;
            let hit2 = dev <= target.two_pt_halfwidth || hit3;
            Outcome { hit2, hit3 }
        }
    }
}

/// Absolute miss distance from the target center at the target plane;
/// +infinity when the plane was never reached.
pub fn deviation(traj: &Trajectory, config: &LaunchConfig, target: &TargetSpec) -> f64 {
    match crossing_height(traj, config) {
        None => f64::INFINITY,
        Some(y_d) => (y_d - target.center_height).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::FlywheelGeometry;
    use approx::assert_relative_eq;

    /// SimConfig whose flywheel yields exactly v0 = 10 m/s at motor ratio 1,
    /// with zero spin, launch height 0 (floor at y = 0).
    fn vacuum_config() -> SimConfig {
        let mut sim = SimConfig::default();
        // Equal surface speeds: v0 = omega_l * r_l, spin = 0.
        sim.flywheel = FlywheelGeometry::new(0.1, 0.2, 0.5, 100.0).unwrap();
        sim.launch_height = 0.0;
        sim.target_height = 2.4384;
        sim
    }

    fn vacuum_range_shot(integrator: Integrator, dt: f64) -> Trajectory {
        let sim = vacuum_config();
        // Place the target plane past the vacuum range so the shot lands first.
        let config = LaunchConfig::new(15.0, 1.0, 45.0).unwrap();
        let opts = SimOptions {
            dt,
            t_max: 5.0,
            integrator,
        };
        simulate(&config, &CoefficientPair::vacuum(), &sim, &opts).unwrap()
    }

    /// x where the trajectory returns to y=0, interpolated.
    fn landing_x(traj: &Trajectory) -> f64 {
        let n = traj.states.len();
        let after = &traj.states[n - 1];
        let before = &traj.states[n - 2];
        let frac = (0.0 - before.y) / (after.y - before.y);
        before.x + frac * (after.x - before.x)
    }

    #[test]
    fn vacuum_range_matches_closed_form_euler() {
        let traj = vacuum_range_shot(Integrator::Euler, 1e-3);
        assert_eq!(traj.terminated_by, Termination::FellBelowFloor);
        let range = 100.0 * (2.0f64 * 45f64.to_radians()).sin() / 9.81;
        assert!((landing_x(&traj) - range).abs() < 1e-2);
    }

    #[test]
    fn vacuum_range_matches_closed_form_rk4() {
        // RK4 itself is far below 1e-6 here; the landing-point linear
        // interpolation is the limiting error, so use a finer step.
        let traj = vacuum_range_shot(Integrator::Rk4, 1e-4);
        let range = 100.0 * (2.0f64 * 45f64.to_radians()).sin() / 9.81;
        assert!((landing_x(&traj) - range).abs() < 1e-6);
    }

    #[test]
    fn vacuum_positions_match_closed_form_pointwise() {
        let sim = vacuum_config();
        let config = LaunchConfig::new(100.0, 1.0, 45.0).unwrap();
        let opts = SimOptions {
            dt: 1e-3,
            t_max: 2.0,
            integrator: Integrator::Euler,
        };
        let traj = simulate(&config, &CoefficientPair::vacuum(), &sim, &opts).unwrap();
        let (v0, th) = (10.0, 45f64.to_radians());
        for s in traj.states.iter().step_by(200) {
            let x_exact = v0 * th.cos() * s.t;
            let y_exact = v0 * th.sin() * s.t - 0.5 * 9.81 * s.t * s.t;
            assert!((s.x - x_exact).abs() < 1e-2, "t={} x={} exact={}", s.t, s.x, x_exact);
            assert!((s.y - y_exact).abs() < 1e-2, "t={} y={} exact={}", s.t, s.y, y_exact);
        }
    }

    #[test]
    fn zero_motor_stalls_immediately() {
        let sim = SimConfig::default();
        let config = LaunchConfig::new(5.0, 0.0, 45.0).unwrap();
        let traj = simulate(
            &config,
            &CoefficientPair::vacuum(),
            &sim,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.terminated_by, Termination::StalledBackward);
        assert_eq!(traj.states.len(), 1);
    }

    #[test]
    fn drag_lowers_and_delays_the_crossing() {
        let sim = vacuum_config();
        let config = LaunchConfig::new(5.0, 1.0, 45.0).unwrap();
        let opts = SimOptions::default();
        let free = simulate(&config, &CoefficientPair::vacuum(), &sim, &opts).unwrap();
        let dragged = simulate(
            &config,
            &CoefficientPair::new(0.0, 0.5).unwrap(),
            &sim,
            &opts,
        )
        .unwrap();
        assert_eq!(free.terminated_by, Termination::ReachedTargetPlane);
        assert_eq!(dragged.terminated_by, Termination::ReachedTargetPlane);
        let y_free = crossing_height(&free, &config).unwrap();
        let y_drag = crossing_height(&dragged, &config).unwrap();
        assert!(y_drag < y_free);
        assert!(dragged.last().t > free.last().t);
    }

    #[test]
    fn rejects_bad_dt() {
        let sim = SimConfig::default();
        let config = LaunchConfig::new(5.0, 0.5, 45.0).unwrap();
        let opts = SimOptions {
            dt: 0.0,
            ..SimOptions::default()
        };
        assert!(simulate(&config, &CoefficientPair::vacuum(), &sim, &opts).is_err());
    }

    #[test]
    fn determinism_bit_identical() {
        let sim = SimConfig::default();
        let config = LaunchConfig::new(5.0, 0.8, 40.0).unwrap();
        let coeffs = CoefficientPair::new(0.06, 0.91).unwrap();
        let a = simulate(&config, &coeffs, &sim, &SimOptions::default()).unwrap();
        let b = simulate(&config, &coeffs, &sim, &SimOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    fn fake_crossing_traj(y_d: f64, distance: f64) -> (Trajectory, LaunchConfig) {
        // Two states straddling x = distance with constant y = y_d.
        let traj = Trajectory {
            states: vec![
                TrajectoryState { t: 0.0, x: 0.0, y: 0.0, vx: 1.0, vy: 0.0 },
                TrajectoryState { t: 1.0, x: distance - 0.5, y: y_d, vx: 1.0, vy: 0.0 },
                TrajectoryState { t: 2.0, x: distance + 0.5, y: y_d, vx: 1.0, vy: 0.0 },
            ],
            terminated_by: Termination::ReachedTargetPlane,
        };
        (traj, LaunchConfig::new(distance, 0.5, 45.0).unwrap())
    }

    fn target() -> TargetSpec {
        TargetSpec::new(1.8384, 0.07, 0.35).unwrap()
    }

    #[test]
    fn score_bullseye() {
        let (traj, config) = fake_crossing_traj(1.8384, 5.0);
        assert_eq!(score(&traj, &config, &target()), Outcome::THREE_POINT);
        assert_eq!(deviation(&traj, &config, &target()), 0.0);
    }

    #[test]
    fn score_two_point_band() {
        let (traj, config) = fake_crossing_traj(1.8384 + 0.20, 5.0);
        assert_eq!(score(&traj, &config, &target()), Outcome::TWO_POINT);
    }

    #[test]
    fn score_miss() {
        let (traj, config) = fake_crossing_traj(1.8384 + 1.0, 5.0);
        assert_eq!(score(&traj, &config, &target()), Outcome::MISS);
    }

    #[test]
    fn deviation_absolute_value_and_sentinel() {
        let (traj, config) = fake_crossing_traj(1.8384 - 0.12, 5.0);
        assert_relative_eq!(deviation(&traj, &config, &target()), 0.12, max_relative = 1e-12);

        let timed_out = Trajectory {
            states: vec![TrajectoryState { t: 0.0, x: 0.0, y: 0.0, vx: 0.1, vy: 0.0 }],
            terminated_by: Termination::TimedOut,
        };
        assert_eq!(deviation(&timed_out, &config, &target()), f64::INFINITY);
        assert_eq!(score(&timed_out, &config, &target()), Outcome::MISS);
    }

    #[test]
    fn outcome_containment_enforced() {
        assert!(Outcome::new(false, true).is_err());
        assert!(Outcome::new(true, true).is_ok());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (traj, _) = fake_crossing_traj(1.0, 5.0);
        let csv = traj.to_csv();
        assert!(csv.starts_with("t,x,y,vx,vy\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
