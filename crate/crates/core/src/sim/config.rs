// SPDX-License-Identifier: Apache-2.0

//! Scenario description consumed by the runner.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::background::BackgroundBuildParams;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};
use crate::preprocess::FilterParams;
use crate::rosette::RosetteParams;
use crate::scene::{
    make_pattern, PatternName, PatternParams, Scene, TargetModel, Trajectory, WeatherModel,
};
use crate::tracker::TrackerParams;
use crate::turret::TurretParams;

/// Built-in static geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Environment {
    /// Walled hall spanning x ∈ [-1, 7], y ∈ [-4, 4], z ∈ [0, 3.5].
    #[default]
    Indoor,
    /// Open field: ground plane only.
    Outdoor,
}

const WALL: f64 = 0.2;

/// The four walls and the ceiling of the indoor hall.
pub fn hall_walls() -> Vec<Aabb> {
    let b = |a: [f64; 3], c: [f64; 3]| Aabb::new(Point3::from(a), Point3::from(c));
    alloc::vec![
        b([7.0, -4.0 - WALL, 0.0], [7.0 + WALL, 4.0 + WALL, 3.5]),
        b([-1.0 - WALL, -4.0 - WALL, 0.0], [-1.0, 4.0 + WALL, 3.5]),
        b([-1.0, 4.0, 0.0], [7.0, 4.0 + WALL, 3.5]),
        b([-1.0, -4.0 - WALL, 0.0], [7.0, -4.0, 3.5]),
        b(
            [-1.0 - WALL, -4.0 - WALL, 3.5],
            [7.0 + WALL, 4.0 + WALL, 3.5 + WALL]
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct SceneSpec {
    pub environment: Environment,
    pub ground: bool,
    pub ground_z: f64,
    /// Boxes added on top of the environment's own geometry.
    pub obstacles: Vec<Aabb>,
    pub weather: WeatherModel,
    /// Range below which returns saturate, in meters.
    pub reference_range: f64,
    /// Intersection of the pan and tilt axes; also the sensor origin.
    pub turret_origin: Point3,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            environment: Environment::Indoor,
            ground: true,
            ground_z: 0.0,
            obstacles: Vec::new(),
            weather: WeatherModel::default(),
            reference_range: DEFAULT_REFERENCE_RANGE,
            turret_origin: Point3::new(0.0, 0.0, 1.2),
        }
    }
}

/// Calibrated against the outdoor range sweeps.
pub const DEFAULT_REFERENCE_RANGE: f64 = 55.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TargetSpec {
    pub pattern: PatternName,
    pub diameter: f64,
    pub reflectivity: f64,
    pub path: PatternParams,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            pattern: PatternName::Vertical,
            diameter: 0.3,
            reflectivity: 0.5,
            path: PatternParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct Timing {
    pub lidar_rate: f64,
    pub filter_rate: f64,
    /// Delay from the start of a frame's integration to its delivery to the
    /// filter. Includes the integration time itself.
    pub pipeline_latency: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            lidar_rate: 10.0,
            filter_rate: 15.0,
            pipeline_latency: 0.12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct MetricsParams {
    /// Truth speeds at or below this count as hovering.
    pub stationary_speed: f64,
    /// Ticks at or above this fraction of the peak speed form the peak-speed
    /// windows.
    pub peak_speed_fraction: f64,
    pub histogram_bin_width: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self {
            stationary_speed: 0.05,
            peak_speed_fraction: 0.9,
            histogram_bin_width: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ScenarioConfig {
    /// Length of the tracking phase in seconds. Defaults to the time the
    /// target needs to finish its pattern.
    pub duration: Option<f64>,
    pub seed: u64,
    pub scene: SceneSpec,
    pub target: TargetSpec,
    pub sensor: RosetteParams,
    pub filter: FilterParams,
    pub tracker: TrackerParams,
    pub turret: TurretParams,
    pub background: BackgroundBuildParams,
    pub timing: Timing,
    pub metrics: MetricsParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.duration {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(
                    "duration",
                    "must be a non-negative number of seconds",
                ));
            }
        }
        let t = &self.timing;
        if !(t.lidar_rate > 0.0) {
            return Err(Error::invalid("timing.lidar_rate", "must be positive"));
        }
        if !(t.filter_rate > 0.0) {
            return Err(Error::invalid("timing.filter_rate", "must be positive"));
        }
        if t.filter_rate < t.lidar_rate {
            return Err(Error::Conflict {
                first: "timing.filter_rate",
                second: "timing.lidar_rate",
                reason: "the filter must run at least as fast as the sensor".into(),
            });
        }
        self.sensor.validate()?;
        if self.sensor.integration_time * t.lidar_rate > 1.0 + 1e-9 {
            return Err(Error::Conflict {
                first: "sensor.integration_time",
                second: "timing.lidar_rate",
                reason: "frames would overlap".into(),
            });
        }
        if t.pipeline_latency < self.sensor.integration_time {
            return Err(Error::Conflict {
                first: "timing.pipeline_latency",
                second: "sensor.integration_time",
                reason: "a frame cannot be delivered before its integration ends".into(),
            });
        }
        if !(self.scene.reference_range > 0.0) {
            return Err(Error::invalid("scene.reference_range", "must be positive"));
        }
        self.filter.validate()?;
        self.tracker.validate()?;
        self.turret.validate()?;
        self.background.validate()?;
        let m = &self.metrics;
        if !(m.histogram_bin_width > 0.0) {
            return Err(Error::invalid(
                "metrics.histogram_bin_width",
                "must be positive",
            ));
        }
        if !(m.peak_speed_fraction > 0.0 && m.peak_speed_fraction <= 1.0) {
            return Err(Error::invalid(
                "metrics.peak_speed_fraction",
                "must be in (0, 1]",
            ));
        }
        if !(m.stationary_speed >= 0.0) {
            return Err(Error::invalid(
                "metrics.stationary_speed",
                "must be non-negative",
            ));
        }
        self.scene(Some(self.trajectory()?)).map(|_| ())
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        make_pattern(self.target.pattern, &self.target.path)
    }

    /// Static geometry plus, when given, the target.
    pub fn scene(&self, trajectory: Option<Trajectory>) -> Result<Scene> {
        let s = &self.scene;
        let mut obstacles = match s.environment {
            Environment::Indoor => hall_walls(),
            Environment::Outdoor => Vec::new(),
        };
        obstacles.extend_from_slice(&s.obstacles);
        let scene = Scene {
            ground_z: s.ground.then_some(s.ground_z),
            obstacles,
            target: trajectory.map(|trajectory| TargetModel {
                diameter: self.target.diameter,
                reflectivity: self.target.reflectivity,
                trajectory,
            }),
            weather: s.weather,
            reference_range: s.reference_range,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Tracking-phase length after defaults are applied.
    pub fn tracking_duration(&self, trajectory: &Trajectory) -> f64 {
        self.duration.unwrap_or_else(|| trajectory.end_time() + 1.0)
    }

    pub fn ground_z(&self) -> Option<f64> {
        self.scene.ground.then_some(self.scene.ground_z)
    }
}
