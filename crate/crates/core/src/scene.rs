// SPDX-License-Identifier: Apache-2.0

//! Static geometry, the scripted target, ray queries and the return model.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, Vector3};

/// A hold position of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Point3,
    /// Seconds spent stationary at the waypoint before leaving it.
    pub wait: f64,
}

impl Waypoint {
    pub fn new(position: Point3, wait: f64) -> Self {
        Self { position, wait }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    start: f64,
    depart: f64,
    arrive: f64,
    from: Point3,
    to: Point3,
}

/// Waypoint schedule with raised-cosine speed profile on every segment.
///
/// The target first holds at `lead_in` (if any) and flies to the first
/// waypoint, then visits the waypoint list `repeat_count` times. A closed
/// pattern returns to the first waypoint at the end. After the last visit the
/// target holds in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lead_in: Option<Waypoint>,
    pub waypoints: Vec<Waypoint>,
    pub closed: bool,
    pub segment_duration: f64,
    pub repeat_count: u32,
    legs: Vec<Leg>,
    /// Box holding every position the path visits.
    bounds: Aabb,
}

impl Trajectory {
    pub fn new(
        lead_in: Option<Waypoint>,
        waypoints: Vec<Waypoint>,
        closed: bool,
        segment_duration: f64,
        repeat_count: u32,
    ) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::invalid(
                "target.path",
                "at least one waypoint is required",
            ));
        }
        if !(segment_duration > 0.0) {
            return Err(Error::invalid(
                "target.path.segment_duration",
                "must be positive",
            ));
        }
        if repeat_count == 0 {
            return Err(Error::invalid(
                "target.path.repeat_count",
                "must be at least 1",
            ));
        }
        if waypoints
            .iter()
            .chain(lead_in.iter())
            .any(|w| !(w.wait >= 0.0))
        {
            return Err(Error::invalid("target.path.wait", "must be non-negative"));
        }

        let mut visits: Vec<Waypoint> = lead_in.into_iter().collect();
        for _ in 0..repeat_count {
            visits.extend_from_slice(&waypoints);
        }
        if closed {
            visits.push(waypoints[0]);
        }

        let mut legs = Vec::with_capacity(visits.len());
        let mut t = 0.0;
        for (i, v) in visits.iter().enumerate() {
            let depart = t + v.wait;
            let (to, arrive) = match visits.get(i + 1) {
                Some(next) => (next.position, depart + segment_duration),
                None => (v.position, f64::INFINITY),
            };
            legs.push(Leg {
                start: t,
                depart,
                arrive,
                from: v.position,
                to,
            });
            t = arrive;
        }
        let first = visits[0].position;
        let bounds = visits.iter().fold(Aabb::new(first, first), |b, v| {
            Aabb::new(b.min.inf(&v.position), b.max.sup(&v.position))
        });

        Ok(Self {
            lead_in,
            waypoints,
            closed,
            segment_duration,
            repeat_count,
            legs,
            bounds,
        })
    }

    /// Smallest box containing the whole path. Every leg is a straight
    /// segment between waypoints, so the waypoints alone bound it.
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    /// A target that never moves.
    pub fn stationary(position: Point3) -> Self {
        Self::new(None, vec![Waypoint::new(position, 0.0)], false, 1.0, 1)
            .expect("valid stationary trajectory")
    }

    /// Time at which the final hold begins.
    pub fn end_time(&self) -> f64 {
        self.legs.last().map_or(0.0, |l| l.start)
    }

    /// Time intervals during which the target is in flight.
    pub fn moving_intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.legs
            .iter()
            .filter(|l| l.arrive.is_finite())
            .map(|l| (l.depart, l.arrive))
    }

    fn leg_at(&self, t: f64) -> &Leg {
        let idx = self.legs.partition_point(|l| l.start <= t);
        &self.legs[idx.saturating_sub(1)]
    }

    pub fn position(&self, t: f64) -> Point3 {
        let leg = self.leg_at(t);
        if t <= leg.depart || !leg.arrive.is_finite() {
            return leg.from;
        }
        if t >= leg.arrive {
            return leg.to;
        }
        let s = (t - leg.depart) / (leg.arrive - leg.depart);
        let blend = 0.5 * (1.0 - libm::cos(PI * s));
        leg.from + (leg.to - leg.from) * blend
    }

    pub fn velocity(&self, t: f64) -> Vector3 {
        let leg = self.leg_at(t);
        if t <= leg.depart || !leg.arrive.is_finite() || t >= leg.arrive {
            return Vector3::zeros();
        }
        let dur = leg.arrive - leg.depart;
        let s = (t - leg.depart) / dur;
        (leg.to - leg.from) * (0.5 * PI / dur * libm::sin(PI * s))
    }

    /// Largest speed reached on any segment.
    pub fn peak_speed(&self) -> f64 {
        self.legs
            .iter()
            .filter(|l| l.arrive.is_finite())
            .map(|l| 0.5 * PI * (l.to - l.from).norm() / (l.arrive - l.depart))
            .fold(0.0, f64::max)
    }
}

pub fn target_position(traj: &Trajectory, t: f64) -> Point3 {
    traj.position(t)
}

/// The tracked vehicle, modelled as a sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub diameter: f64,
    pub reflectivity: f64,
    pub trajectory: Trajectory,
}

impl TargetModel {
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct WeatherModel {
    /// Atmospheric extinction coefficient in 1/m; zero is clear air.
    pub extinction_beta: f64,
    /// Return probabilities below this are treated as no return.
    pub detection_threshold: f64,
}

impl Default for WeatherModel {
    fn default() -> Self {
        Self {
            extinction_beta: 0.0,
            detection_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surface {
    Ground,
    Obstacle,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub range: f64,
    pub surface: Surface,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Height of the ground plane; `None` for a scene without ground.
    pub ground_z: Option<f64>,
    pub obstacles: Vec<Aabb>,
    pub target: Option<TargetModel>,
    pub weather: WeatherModel,
    /// Range below which target returns saturate (the `r0` of the return
    /// model), in meters.
    pub reference_range: f64,
}

impl Scene {
    pub fn empty() -> Self {
        Self {
            ground_z: None,
            obstacles: Vec::new(),
            target: None,
            weather: WeatherModel::default(),
            reference_range: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.obstacles.iter().any(Aabb::is_degenerate) {
            return Err(Error::invalid(
                "scene.obstacles",
                "box extents must be positive",
            ));
        }
        if let Some(target) = &self.target {
            if !(target.diameter > 0.0) {
                return Err(Error::invalid("target.diameter", "must be positive"));
            }
            if !(target.reflectivity > 0.0 && target.reflectivity <= 1.0) {
                return Err(Error::invalid("target.reflectivity", "must be in (0, 1]"));
            }
        }
        if !(self.weather.extinction_beta >= 0.0) {
            return Err(Error::invalid(
                "scene.weather.extinction_beta",
                "must be non-negative",
            ));
        }
        let thr = self.weather.detection_threshold;
        if !(thr > 0.0 && thr < 1.0) {
            return Err(Error::invalid(
                "scene.weather.detection_threshold",
                "must be in (0, 1)",
            ));
        }
        if !(self.reference_range > 0.0) {
            return Err(Error::invalid("scene.reference_range", "must be positive"));
        }
        Ok(())
    }

    pub fn target_position(&self, t: f64) -> Option<Point3> {
        self.target.as_ref().map(|tg| tg.trajectory.position(t))
    }

    /// Nearest intersection of the static geometry only.
    pub fn ray_cast_static(&self, origin: &Point3, dir: &Vector3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut consider = |range: f64, surface: Surface| {
            if range >= 0.0 && best.is_none_or(|b| range < b.range) {
                best = Some(Hit { range, surface });
            }
        };
        if let Some(gz) = self.ground_z {
            if dir.z < 0.0 && origin.z >= gz {
                consider((gz - origin.z) / dir.z, Surface::Ground);
            }
        }
        for b in &self.obstacles {
            if let Some(r) = b.ray_hit(origin, dir) {
                consider(r, Surface::Obstacle);
            }
        }
        best
    }

    /// Whether nothing static blocks the segment between `from` and `to`.
    pub fn line_of_sight(&self, from: &Point3, to: &Point3) -> bool {
        let d = to - from;
        let len = d.norm();
        if len == 0.0 {
            return true;
        }
        let dir = d / len;
        self.obstacles
            .iter()
            .all(|b| b.ray_hit(from, &dir).is_none_or(|r| r >= len))
    }
}

/// Distance along a unit ray to a sphere surface, if hit in front of origin.
pub fn ray_sphere(origin: &Point3, dir: &Vector3, center: &Point3, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = libm::sqrt(disc);
    let near = -b - sq;
    if near >= 0.0 {
        return Some(near);
    }
    let far = -b + sq;
    (far >= 0.0).then_some(far)
}

/// Nearest intersection among ground, obstacles and the target at time `t`.
pub fn ray_cast(scene: &Scene, origin: &Point3, dir: &Vector3, t: f64) -> Option<Hit> {
    let static_hit = scene.ray_cast_static(origin, dir);
    let target_hit = scene.target.as_ref().and_then(|tg| {
        let r = Vector3::repeat(tg.radius());
        let b = tg.trajectory.bounds();
        Aabb::new(b.min - r, b.max + r).ray_hit(origin, dir)?;
        let c = tg.trajectory.position(t);
        ray_sphere(origin, dir, &c, tg.radius()).map(|range| Hit {
            range,
            surface: Surface::Target,
        })
    });
    match (static_hit, target_hit) {
        (Some(s), Some(tg)) => Some(if tg.range < s.range { tg } else { s }),
        (s, tg) => s.or(tg),
    }
}

/// Probability that a hit at `range` produces a return.
///
/// `reflectivity · exp(-2βr) · min(1, (r0/r)²)`, clamped to `[0, 1]`;
/// anything under the detection threshold is zero. Static surfaces use
/// reflectivity 1.
pub fn return_probability(range: f64, target_hit: bool, scene: &Scene) -> f64 {
    let reflectivity = match (&scene.target, target_hit) {
        (Some(tg), true) => tg.reflectivity,
        _ => 1.0,
    };
    let r0 = scene.reference_range;
    let falloff = if range <= r0 {
        1.0
    } else {
        (r0 / range) * (r0 / range)
    };
    let p = (reflectivity * libm::exp(-2.0 * scene.weather.extinction_beta * range) * falloff)
        .clamp(0.0, 1.0);
    if p < scene.weather.detection_threshold {
        0.0
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PatternName {
    Vertical,
    Horizontal,
    Fast,
    LostAndFound,
    RangeSweep,
}

impl FromStr for PatternName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "vertical" => Ok(Self::Vertical),
            "horizontal" => Ok(Self::Horizontal),
            "fast" => Ok(Self::Fast),
            "lost_and_found" | "lostandfound" => Ok(Self::LostAndFound),
            "range_sweep" | "rangesweep" => Ok(Self::RangeSweep),
            _ => Err(Error::UnknownPattern(s.to_string())),
        }
    }
}

impl PatternName {
    pub fn default_segment_duration(self) -> f64 {
        match self {
            Self::Fast => 2.25,
            _ => 3.0,
        }
    }

    pub fn default_repeat_count(self) -> u32 {
        match self {
            Self::Vertical | Self::Horizontal => 3,
            Self::Fast | Self::LostAndFound => 4,
            Self::RangeSweep => 1,
        }
    }
}

/// Shape and timing inputs of [`make_pattern`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PatternParams {
    /// Middle of the pattern in world coordinates. For the lost-and-found
    /// pattern this is the hidden waypoint.
    pub center: Point3,
    /// Side length of the pattern in meters.
    pub extent: f64,
    pub wait: f64,
    /// Defaults to 3 s, or 2.25 s for the fast pattern.
    pub segment_duration: Option<f64>,
    /// Defaults to 3 for vertical and horizontal, 4 otherwise.
    pub repeat_count: Option<u32>,
    /// When set, the target first rests at `takeoff_z` below the first
    /// waypoint for this many seconds.
    pub takeoff_wait: Option<f64>,
    pub takeoff_z: f64,
    /// Range sweep: sensor location the sweep moves away from.
    pub sweep_origin: Point3,
    /// Range sweep: horizontal direction of travel (radians from +x).
    pub sweep_heading: f64,
    pub sweep_start_range: f64,
    pub sweep_max_range: f64,
    pub sweep_altitude: f64,
    pub sweep_max_speed: f64,
}

impl Default for PatternParams {
    fn default() -> Self {
        Self {
            center: Point3::new(3.0, 0.0, 1.5),
            extent: 1.8,
            wait: 2.0,
            segment_duration: None,
            repeat_count: None,
            takeoff_wait: None,
            takeoff_z: 0.05,
            sweep_origin: Point3::origin(),
            sweep_heading: 0.0,
            sweep_start_range: 15.0,
            sweep_max_range: 180.0,
            sweep_altitude: 5.0,
            sweep_max_speed: 6.0,
        }
    }
}

/// Builds one of the test flight patterns.
pub fn make_pattern(name: PatternName, params: &PatternParams) -> Result<Trajectory> {
    let c = params.center;
    let h = 0.5 * params.extent;
    let wait = params.wait;
    let mut segment_duration = params
        .segment_duration
        .unwrap_or_else(|| name.default_segment_duration());
    let repeat_count = params
        .repeat_count
        .unwrap_or_else(|| name.default_repeat_count());
    let wp = |x: f64, y: f64, z: f64| Waypoint::new(Point3::new(x, y, z), wait);

    let waypoints = match name {
        // square in the plane facing the sensor
        PatternName::Vertical => vec![
            wp(c.x, c.y - h, c.z - h),
            wp(c.x, c.y - h, c.z + h),
            wp(c.x, c.y + h, c.z + h),
            wp(c.x, c.y + h, c.z - h),
        ],
        // square in the horizontal plane through the center
        PatternName::Horizontal => vec![
            wp(c.x - h, c.y - h, c.z),
            wp(c.x - h, c.y + h, c.z),
            wp(c.x + h, c.y + h, c.z),
            wp(c.x + h, c.y - h, c.z),
        ],
        PatternName::Fast => vec![wp(c.x, c.y - h, c.z), wp(c.x, c.y + h, c.z)],
        // visible start, hidden middle, visible end on the same side so
        // the target leaves cover close to where it entered
        PatternName::LostAndFound => {
            let side = 2.0 * h / 3.0;
            vec![
                wp(c.x, c.y - 2.0 * side, c.z - 0.5 * side),
                wp(c.x, c.y, c.z),
                wp(c.x, c.y - 2.0 * side, c.z + 0.5 * side),
            ]
        }
        PatternName::RangeSweep => {
            if !(params.sweep_max_range > params.sweep_start_range
                && params.sweep_start_range > 0.0)
            {
                return Err(Error::invalid(
                    "target.path.sweep_max_range",
                    "must exceed sweep_start_range, which must be positive",
                ));
            }
            if !(params.sweep_max_speed > 0.0) {
                return Err(Error::invalid(
                    "target.path.sweep_max_speed",
                    "must be positive",
                ));
            }
            let heading = Vector3::new(
                libm::cos(params.sweep_heading),
                libm::sin(params.sweep_heading),
                0.0,
            );
            let at = |r: f64| {
                let p = params.sweep_origin + heading * r;
                Waypoint::new(Point3::new(p.x, p.y, params.sweep_altitude), wait)
            };
            let length = params.sweep_max_range - params.sweep_start_range;
            if params.segment_duration.is_none() {
                // raised-cosine peak speed is π/2 times the mean speed
                segment_duration = 0.5 * PI * length / params.sweep_max_speed;
            }
            vec![at(params.sweep_start_range), at(params.sweep_max_range)]
        }
    };

    let lead_in = params.takeoff_wait.map(|w| {
        let first = waypoints[0].position;
        Waypoint::new(Point3::new(first.x, first.y, params.takeoff_z), w)
    });
    let closed = true;
    Trajectory::new(lead_in, waypoints, closed, segment_duration, repeat_count)
}
