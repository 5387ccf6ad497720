//! Standalone SVG emission for trajectory plots: polylines plus the vertical
//! 2-point / 3-point scoring bands at the target plane. No plotting
//! dependency, text-diffable output.

use crate::trajectory::{TargetSpec, Trajectory};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// A labeled trajectory to draw.
pub struct PlotSeries<'a> {
    pub label: String,
    pub trajectory: &'a Trajectory,
}

struct Mapper {
    x_min: f64,
    x_span: f64,
    y_min: f64,
    y_span: f64,
}

impl Mapper {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / self.x_span * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        // SVG y grows downward.
        HEIGHT - MARGIN - (y - self.y_min) / self.y_span * (HEIGHT - 2.0 * MARGIN)
    }
}

fn fmt(v: f64) -> String {
    format!("{:.2}", v)
}

/// Render trajectories (launch-exit coordinates) with the scoring bands at
/// `distance` and the floor at `floor_y`.
pub fn trajectory_plot(
    series: &[PlotSeries<'_>],
    distance: f64,
    target: &TargetSpec,
    floor_y: f64,
) -> String {
    let mut x_max = distance;
    let mut y_max = target.center_height + target.two_pt_halfwidth;
    let mut y_min = floor_y;
    for s in series {
        for st in &s.trajectory.states {
            x_max = x_max.max(st.x);
            y_max = y_max.max(st.y);
            y_min = y_min.min(st.y);
        }
    }
    let map = Mapper {
        x_min: 0.0,
        x_span: (x_max * 1.05).max(1e-6),
        y_min: y_min - 0.2,
        y_span: (y_max - y_min + 0.6).max(1e-6),
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Floor.
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\" stroke-width=\"1\"/>\n",
        fmt(map.px(0.0)),
        fmt(map.py(floor_y)),
        fmt(map.px(x_max * 1.05)),
        fmt(map.py(floor_y))
    ));

    // Scoring bands at the target plane: wide 2-point band in blue, narrow
    // 3-point band in red.
    let band = |halfwidth: f64, color: &str, width: f64| {
        format!(
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"{color}\" stroke-width=\"{width}\"/>\n",
            x = fmt(map.px(distance)),
            y1 = fmt(map.py(target.center_height - halfwidth)),
            y2 = fmt(map.py(target.center_height + halfwidth)),
        )
    };
    out.push_str(&band(target.two_pt_halfwidth, "#1f77b4", 4.0));
    out.push_str(&band(target.three_pt_halfwidth, "#d62728", 6.0));

    // Launch point marker.
    out.push_str(&format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"black\"/>\n",
        fmt(map.px(0.0)),
        fmt(map.py(0.0))
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .trajectory
            .states
            .iter()
            .map(|st| format!("{},{}", fmt(map.px(st.x)), fmt(map.py(st.y))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            fmt(WIDTH - MARGIN - 150.0),
            fmt(MARGIN + 16.0 * i as f64),
            xml_escape(&s.label)
        ));
    }

    // Axis captions.
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#333\">x (m)</text>\n",
        fmt(WIDTH / 2.0),
        fmt(HEIGHT - 12.0)
    ));
    out.push_str(&format!(
        "<text x=\"12\" y=\"{}\" fill=\"#333\" transform=\"rotate(-90 16 {})\">y (m)</text>\n",
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0)
    ));

    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::physics::{CoefficientPair, LaunchConfig};
    use crate::trajectory::{simulate, SimOptions};

    #[test]
    fn emits_valid_looking_svg() {
        let sim = SimConfig::default();
        let config = LaunchConfig::new(4.0, 0.7, 50.0).unwrap();
        let coeffs = CoefficientPair::new(0.06, 0.91).unwrap();
        let traj = simulate(&config, &coeffs, &sim, &SimOptions::default()).unwrap();
        let svg = trajectory_plot(
            &[PlotSeries {
                label: "cl=0.06 cd=0.91".into(),
                trajectory: &traj,
            }],
            config.distance,
            &sim.target(),
            sim.floor_y(),
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<polyline"));
        // Both scoring bands present.
        assert_eq!(svg.matches("<line").count(), 3);
    }

    #[test]
    fn deterministic_output() {
        let sim = SimConfig::default();
        let config = LaunchConfig::new(4.0, 0.7, 50.0).unwrap();
        let traj = simulate(&config, &CoefficientPair::vacuum(), &sim, &SimOptions::default()).unwrap();
        let render = || {
            trajectory_plot(
                &[PlotSeries {
                    label: "vacuum".into(),
                    trajectory: &traj,
                }],
                config.distance,
                &sim.target(),
                sim.floor_y(),
            )
        };
        assert_eq!(render(), render());
    }
}
