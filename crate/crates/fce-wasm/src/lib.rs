//! Browser bindings for the trajectory simulator.
//!
//! Three operations back the demo page in `www/`:
//! - [`trajectory_svg`]: one shot rendered with the scoring bands,
//! - [`launch_summary`]: the numbers behind that shot as JSON,
//! - [`angle_sweep_svg`]: deviation-vs-angle curve for a distance/motor
//!   setting, showing which angles score.
//!
//! All functions are plain pure Rust and are also callable (and tested)
//! natively.

use wasm_bindgen::prelude::*;

use fce_core::svg::{trajectory_plot, PlotSeries};
use fce_core::trajectory::{self, Integrator, SimOptions, Termination};
use fce_core::{CoefficientPair, LaunchConfig, SimConfig};

fn build_inputs(
    distance: f64,
    motor: f64,
    angle: f64,
    cl: f64,
    cd: f64,
) -> Result<(LaunchConfig, CoefficientPair, SimConfig), String> {
    let config = LaunchConfig::new(distance, motor, angle).map_err(|e| e.to_string())?;
    let coeffs = CoefficientPair::new(cl, cd).map_err(|e| e.to_string())?;
    Ok((config, coeffs, SimConfig::default()))
}

fn opts(rk4: bool) -> SimOptions {
    SimOptions {
        integrator: if rk4 { Integrator::Rk4 } else { Integrator::Euler },
        ..SimOptions::default()
    }
}

/// SVG plot of a single launch with the 2-point/3-point scoring bands.
#[wasm_bindgen]
pub fn trajectory_svg(
    distance: f64,
    motor: f64,
    angle: f64,
    cl: f64,
    cd: f64,
    rk4: bool,
) -> Result<String, String> {
    let (config, coeffs, sim) = build_inputs(distance, motor, angle, cl, cd)?;
    let traj =
        trajectory::simulate(&config, &coeffs, &sim, &opts(rk4)).map_err(|e| e.to_string())?;
    Ok(trajectory_plot(
        &[PlotSeries {
            label: format!("cl={cl} cd={cd}"),
            trajectory: &traj,
        }],
        config.distance,
        &sim.target(),
        sim.floor_y(),
    ))
}

/// JSON summary of a single launch: exit velocity, spin, termination,
/// height at the target plane, deviation, and the scored outcome.
#[wasm_bindgen]
pub fn launch_summary(
    distance: f64,
    motor: f64,
    angle: f64,
    cl: f64,
    cd: f64,
    rk4: bool,
) -> Result<String, String> {
    let (config, coeffs, sim) = build_inputs(distance, motor, angle, cl, cd)?;
    let target = sim.target();
    let traj =
        trajectory::simulate(&config, &coeffs, &sim, &opts(rk4)).map_err(|e| e.to_string())?;
    let outcome = trajectory::score(&traj, &config, &target);
    let dev = trajectory::deviation(&traj, &config, &target);
    let v0 = fce_core::physics::initial_velocity(&sim.flywheel, config.motor_ratio);
    let spin = fce_core::physics::spin_rate(&sim.flywheel, config.motor_ratio, &sim.ball);
    let termination = match traj.terminated_by {
        Termination::ReachedTargetPlane => "reached_target_plane",
        Termination::FellBelowFloor => "fell_below_floor",
        Termination::TimedOut => "timed_out",
        Termination::StalledBackward => "stalled",
    };
    let y_d = trajectory::crossing_height(&traj, &config)
        .map(|y| y.to_string())
        .unwrap_or_else(|| "null".into());
    let dev_str = if dev.is_finite() {
        dev.to_string()
    } else {
        "null".into()
    };
    Ok(format!(
        "{{\"v0_mps\":{v0},\"spin_rps\":{spin},\"termination\":\"{termination}\",\
         \"y_at_plane\":{y_d},\"deviation_m\":{dev_str},\
         \"hit2\":{},\"hit3\":{},\"flight_time_s\":{}}}",
        outcome.hit2,
        outcome.hit3,
        traj.last().t
    ))
}

/// SVG chart of deviation from the target center as the launch angle sweeps
/// 15..=75 degrees, with the 3-point (red) and 2-point (blue) thresholds.
#[wasm_bindgen]
pub fn angle_sweep_svg(distance: f64, motor: f64, cl: f64, cd: f64) -> Result<String, String> {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let (_, coeffs, sim) = build_inputs(distance, motor, 45.0, cl, cd)?;
    let target = sim.target();
    let options = opts(false);

    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut angle = 15.0;
    while angle <= 75.0 + 1e-9 {
        let config = LaunchConfig::new(distance, motor, angle).map_err(|e| e.to_string())?;
        let traj = trajectory::simulate(&config, &coeffs, &sim, &options)
            .map_err(|e| e.to_string())?;
        let dev = trajectory::deviation(&traj, &config, &target);
        if dev.is_finite() {
            points.push((angle, dev));
        }
        angle += 0.5;
    }

    let dev_cap = 1.5f64;
    let px = |a: f64| M + (a - 15.0) / 60.0 * (W - 2.0 * M);
    let py = |d: f64| H - M - (d.min(dev_cap) / dev_cap) * (H - 2.0 * M);

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    for (halfwidth, color, label) in [
        (target.two_pt_halfwidth, "#1f77b4", "2-pt band"),
        (target.three_pt_halfwidth, "#d62728", "3-pt band"),
    ] {
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" \
             stroke-dasharray=\"4 3\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\">{label}</text>\n",
            px(15.0),
            py(halfwidth),
            px(75.0),
            py(halfwidth),
            px(75.0) - 60.0,
            py(halfwidth) - 4.0,
        ));
    }
    if points.is_empty() {
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#333\">no angle reaches the target plane</text>\n",
            W / 2.0 - 120.0,
            H / 2.0
        ));
    } else {
        let path: Vec<String> = points
            .iter()
            .map(|(a, d)| format!("{:.2},{:.2}", px(*a), py(*d)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#333\">launch angle (deg)</text>\n\
         <text x=\"12\" y=\"{:.2}\" fill=\"#333\" transform=\"rotate(-90 16 {:.2})\">deviation (m)</text>\n\
         </svg>\n",
        W / 2.0 - 50.0,
        H - 12.0,
        H / 2.0,
        H / 2.0
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_svg_renders() {
        let svg = trajectory_svg(4.0, 0.7, 50.0, 0.06, 0.91, false).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
    }

    #[test]
    fn summary_is_json_with_outcome() {
        let json = launch_summary(4.0, 0.7, 50.0, 0.06, 0.91, false).unwrap();
        assert!(json.contains("\"hit2\":"));
        assert!(json.contains("\"termination\":"));
    }

    #[test]
    fn angle_sweep_renders() {
        let svg = angle_sweep_svg(4.0, 0.7, 0.06, 0.91).unwrap();
        assert!(svg.contains("3-pt band"));
    }

    #[test]
    fn invalid_input_is_an_error() {
        assert!(trajectory_svg(-1.0, 0.5, 45.0, 0.0, 0.0, false).is_err());
        assert!(launch_summary(4.0, 2.0, 45.0, 0.0, 0.0, false).is_err());
    }
}
