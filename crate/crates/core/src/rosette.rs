// SPDX-License-Identifier: Apache-2.0

//! Rosette scan pattern and the simulated LiDAR.
//!
//! The beam deflection is the sum of two counter-rotating phasors, the
//! classic approximation of a pair of Risley prisms. The two phasors have
//! equal amplitude and start in phase opposition, so the beam passes through
//! the boresight on every petal and the point density peaks at the center of
//! the field of view.
//!
//! A 16-ring spinning scanner is available as a reference sampling mode for
//! point-count comparisons. It shares the ray casting and return model.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Point3, PointCloud, Rotation, SensorPose, TimedPoint, Vector3};
use crate::scene::{self, Scene, Surface};

/// How ray directions are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum ScanPattern {
    Rosette,
    /// Evenly spaced elevation rings on a spinning head.
    Rings {
        rings: u32,
        /// Full vertical field of view in radians.
        vertical_fov: f64,
        rotation_hz: f64,
    },
}

impl ScanPattern {
    /// 16 rings over ±15° spinning at 10 Hz.
    pub fn reference_rings() -> Self {
        ScanPattern::Rings {
            rings: 16,
            vertical_fov: 30f64.to_radians(),
            rotation_hz: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct RosetteParams {
    /// Prism rotation frequencies in Hz.
    pub f1: f64,
    pub f2: f64,
    /// Full horizontal and vertical field of view in radians.
    pub fov_h: f64,
    pub fov_v: f64,
    /// Emitted rays per second.
    pub point_rate: f64,
    /// Seconds per frame.
    pub integration_time: f64,
    pub range_max: f64,
    pub range_noise_sigma: f64,
    pub pattern: ScanPattern,
}

impl Default for RosetteParams {
    fn default() -> Self {
        Self {
            f1: 50.0,
            f2: 31.0,
            fov_h: 70.4f64.to_radians(),
            fov_v: 77.2f64.to_radians(),
            point_rate: 240_000.0,
            integration_time: 0.1,
            range_max: 450.0,
            range_noise_sigma: 0.02,
            pattern: ScanPattern::Rosette,
        }
    }
}

impl RosetteParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f1 > 0.0 && self.f2 > 0.0) {
            return Err(Error::invalid(
                "sensor.f1",
                "prism frequencies must be positive",
            ));
        }
        if self.f1 == self.f2 {
            return Err(Error::invalid("sensor.f2", "must differ from sensor.f1"));
        }
        for (key, fov) in [("sensor.fov_h", self.fov_h), ("sensor.fov_v", self.fov_v)] {
            if !(fov > 0.0 && fov < PI) {
                return Err(Error::invalid(key, "must be in (0, π)"));
            }
        }
        if !(self.point_rate > 0.0) {
            return Err(Error::invalid("sensor.point_rate", "must be positive"));
        }
        if !(self.integration_time > 0.0) {
            return Err(Error::invalid(
                "sensor.integration_time",
                "must be positive",
            ));
        }
        if !(self.range_max > 0.0) {
            return Err(Error::invalid("sensor.range_max", "must be positive"));
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err(Error::invalid(
                "sensor.range_noise_sigma",
                "must be non-negative",
            ));
        }
        if let ScanPattern::Rings {
            rings,
            vertical_fov,
            rotation_hz,
        } = self.pattern
        {
            if rings < 2 || !(vertical_fov > 0.0 && vertical_fov < PI) || !(rotation_hz > 0.0) {
                return Err(Error::invalid("sensor.pattern", "ring scanner needs ≥2 rings, a vertical fov in (0, π) and a positive rotation rate"));
            }
        }
        Ok(())
    }

    /// Half-amplitudes of the horizontal and vertical deflection.
    pub fn half_fov(&self) -> (f64, f64) {
        (0.5 * self.fov_h, 0.5 * self.fov_v)
    }

    /// Rays emitted per frame.
    pub fn rays_per_frame(&self) -> usize {
        libm::floor(self.point_rate * self.integration_time) as usize
    }

    /// Time between consecutive rays.
    pub fn ray_interval(&self) -> f64 {
        self.integration_time / self.rays_per_frame().max(1) as f64
    }
}

/// Unit beam direction in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamDirection(Vector3);

impl BeamDirection {
    /// Direction at horizontal/vertical angular offsets from the boresight.
    pub fn from_angles(a_h: f64, a_v: f64) -> Self {
        let (sv, cv) = libm::sincos(a_v);
        let (sh, ch) = libm::sincos(a_h);
        Self(Vector3::new(cv * ch, cv * sh, sv))
    }

    pub fn vector(&self) -> &Vector3 {
        &self.0
    }

    /// Angle from the boresight.
    pub fn off_axis(&self) -> f64 {
        libm::acos(self.0.x.clamp(-1.0, 1.0))
    }
}

/// Horizontal and vertical deflection of the rosette beam at time `t`.
pub fn rosette_deflection(t: f64, params: &RosetteParams) -> (f64, f64) {
    let (amp_h, amp_v) = params.half_fov();
    // Reduce to a fraction of a turn first; phases grow large over long runs.
    let turns = |f: f64| {
        let x = f * t;
        x - libm::floor(x)
    };
    let (s1, c1) = libm::sincos(TAU * turns(params.f1));
    let (s2, c2) = libm::sincos(PI - TAU * turns(params.f2));
    (0.5 * amp_h * (c1 + c2), 0.5 * amp_v * (s1 + s2))
}

pub fn rosette_direction(t: f64, params: &RosetteParams) -> BeamDirection {
    let (a_h, a_v) = rosette_deflection(t, params);
    BeamDirection::from_angles(a_h, a_v)
}

/// Direction of ray number `index` fired at time `t` by the ring scanner.
pub fn ring_direction(
    t: f64,
    index: usize,
    rings: u32,
    vertical_fov: f64,
    rotation_hz: f64,
) -> BeamDirection {
    let ring = (index % rings as usize) as f64;
    let elevation = -0.5 * vertical_fov + ring * vertical_fov / (rings - 1) as f64;
    let azimuth = libm::fmod(TAU * rotation_hz * t, TAU);
    BeamDirection::from_angles(azimuth, elevation)
}

/// Direction of the `index`-th ray of a frame, fired at `t`.
pub fn beam_direction(t: f64, index: usize, params: &RosetteParams) -> BeamDirection {
    match params.pattern {
        ScanPattern::Rosette => rosette_direction(t, params),
        ScanPattern::Rings {
            rings,
            vertical_fov,
            rotation_hz,
        } => ring_direction(t, index, rings, vertical_fov, rotation_hz),
    }
}

/// Ray emission times and sensor-frame directions of the frame starting at `t0`.
pub fn frame_rays(
    t0: f64,
    params: &RosetteParams,
) -> impl Iterator<Item = (f64, BeamDirection)> + '_ {
    let n = params.rays_per_frame();
    let dt = params.ray_interval();
    (0..n).map(move |i| {
        let t = t0 + i as f64 * dt;
        (t, beam_direction(t, i, params))
    })
}

/// A single simulated return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Return {
    /// Sensor-frame point.
    pub point: TimedPoint,
    pub surface: Surface,
}

/// Casts one beam into the scene.
///
/// `rotation` is the sensor-to-world rotation of `pose` and is passed in so
/// callers can reuse it across rays.
pub fn cast_beam<R: Rng + ?Sized>(
    scene: &Scene,
    origin: &Point3,
    rotation: &Rotation,
    dir: &BeamDirection,
    t: f64,
    params: &RosetteParams,
    rng: &mut R,
) -> Option<Return> {
    let world_dir = rotation * dir.vector();
    let hit = scene::ray_cast(scene, origin, &world_dir, t)?;
    if hit.range > params.range_max {
        return None;
    }
    let p = scene::return_probability(hit.range, hit.surface == Surface::Target, scene);
    if p <= 0.0 || rng.random::<f64>() >= p {
        return None;
    }
    let noise: f64 = if params.range_noise_sigma > 0.0 {
        params.range_noise_sigma * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    let range = (hit.range + noise).max(0.0);
    Some(Return {
        point: TimedPoint::new(t, Point3::from(dir.vector() * range), p),
        surface: hit.surface,
    })
}

/// One frame from a fixed pose, with the surface each return came from.
pub fn scan_labeled<R: Rng + ?Sized>(
    scene: &Scene,
    pose: &SensorPose,
    t0: f64,
    params: &RosetteParams,
    rng: &mut R,
) -> (PointCloud, Vec<Surface>) {
    let rotation = pose.orientation.rotation();
    let mut points = Vec::new();
    let mut surfaces = Vec::new();
    for (t, dir) in frame_rays(t0, params) {
        if let Some(ret) = cast_beam(scene, &pose.origin, &rotation, &dir, t, params, rng) {
            points.push(ret.point);
            surfaces.push(ret.surface);
        }
    }
    let cloud = PointCloud::with_points(Frame::Sensor, t0, t0 + params.integration_time, points);
    (cloud, surfaces)
}

/// One frame from a fixed pose, in the sensor frame.
pub fn scan<R: Rng + ?Sized>(
    scene: &Scene,
    pose: &SensorPose,
    t0: f64,
    params: &RosetteParams,
    rng: &mut R,
) -> PointCloud {
    scan_labeled(scene, pose, t0, params, rng).0
}
