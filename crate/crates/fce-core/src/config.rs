//! Flat `key=value` configuration file for the physical constants.
//!
//! Recognized keys:
//! `ball.mass_kg`, `ball.radius_m`, `env.gravity`, `env.air_density`,
//! `flywheel.lower_radius_m`, `flywheel.upper_radius_m`,
//! `flywheel.upper_speed_ratio`, `flywheel.motor_free_speed_rad_s`,
//! `launch.height_m`, `target.height_m`.
//!
//! Lines starting with `#` and blank lines are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::physics::{BallParams, Environment, FlywheelGeometry};
use crate::trajectory::TargetSpec;

/// The full physical setup: ball, air, launcher, and target geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub ball: BallParams,
    pub env: Environment,
    pub flywheel: FlywheelGeometry,
    /// Height of the launcher exit point above the floor, meters.
    pub launch_height: f64,
    /// Height of the target center above the floor, meters.
    pub target_height: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ball: BallParams::default(),
            env: Environment::default(),
            flywheel: FlywheelGeometry::default(),
            launch_height: 0.6,
            target_height: 2.4384, // 8 feet
        }
    }
}

impl SimConfig {
    /// Target geometry in launch-exit coordinates (y = 0 at the exit point).
    pub fn target(&self) -> TargetSpec {
        TargetSpec::new(self.target_height - self.launch_height, 0.07, 0.35)
            .expect("default halfwidths are valid")
    }

    /// y-coordinate of the floor in launch-exit coordinates.
    pub fn floor_y(&self) -> f64 {
        -self.launch_height
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_named(&text, path)
    }

    fn from_str_named(text: &str, path: &Path) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, line_no, "expected key=value"))?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::parse(path, line_no, format!("invalid number for `{key}`"))
            })?;
            let slot = match key {
                "ball.mass_kg" => &mut raw.ball_mass,
                "ball.radius_m" => &mut raw.ball_radius,
                "env.gravity" => &mut raw.gravity,
                "env.air_density" => &mut raw.air_density,
                "flywheel.lower_radius_m" => &mut raw.lower_radius,
                "flywheel.upper_radius_m" => &mut raw.upper_radius,
                "flywheel.upper_speed_ratio" => &mut raw.upper_speed_ratio,
                "flywheel.motor_free_speed_rad_s" => &mut raw.motor_free_speed,
                "launch.height_m" => &mut raw.launch_height,
                "target.height_m" => &mut raw.target_height,
                _ => return Err(Error::parse(path, line_no, format!("unknown key `{key}`"))),
            };
            *slot = Some(value);
        }
        raw.build()
    }

    /// Serialize back to the `key=value` format (all keys, current values).
    pub fn to_config_string(&self) -> String {
        format!(
            "ball.mass_kg={}\nball.radius_m={}\nenv.gravity={}\nenv.air_density={}\n\
             flywheel.lower_radius_m={}\nflywheel.upper_radius_m={}\n\
             flywheel.upper_speed_ratio={}\nflywheel.motor_free_speed_rad_s={}\n\
             launch.height_m={}\ntarget.height_m={}\n",
            self.ball.mass,
            self.ball.radius,
            self.env.gravity,
            self.env.air_density,
            self.flywheel.lower_radius,
            self.flywheel.upper_radius,
            self.flywheel.upper_speed_ratio,
            self.flywheel.motor_free_speed,
            self.launch_height,
            self.target_height,
        )
    }
}

#[derive(Default)]
struct RawConfig {
    ball_mass: Option<f64>,
    ball_radius: Option<f64>,
    gravity: Option<f64>,
    air_density: Option<f64>,
    lower_radius: Option<f64>,
    upper_radius: Option<f64>,
    upper_speed_ratio: Option<f64>,
    motor_free_speed: Option<f64>,
    launch_height: Option<f64>,
    target_height: Option<f64>,
}

impl RawConfig {
    fn build(self) -> Result<SimConfig> {
        let d = SimConfig::default();
        let launch_height = self.launch_height.unwrap_or(d.launch_height);
        let target_height = self.target_height.unwrap_or(d.target_height);
        if !(launch_height >= 0.0 && launch_height.is_finite()) {
            return Err(Error::validation(format!(
                "launch height must be >= 0, got {launch_height}"
            )));
        }
        if !(target_height > launch_height) {
            return Err(Error::validation(format!(
                "target height ({target_height}) must exceed launch height ({launch_height})"
            )));
        }
        Ok(SimConfig {
            ball: BallParams::new(
                self.ball_mass.unwrap_or(d.ball.mass),
                self.ball_radius.unwrap_or(d.ball.radius),
            )?,
            env: Environment::new(
                self.gravity.unwrap_or(d.env.gravity),
                self.air_density.unwrap_or(d.env.air_density),
            )?,
            flywheel: FlywheelGeometry::new(
                self.lower_radius.unwrap_or(d.flywheel.lower_radius),
                self.upper_radius.unwrap_or(d.flywheel.upper_radius),
                self.upper_speed_ratio.unwrap_or(d.flywheel.upper_speed_ratio),
                self.motor_free_speed.unwrap_or(d.flywheel.motor_free_speed),
            )?,
            launch_height,
            target_height,
        })
    }
}
