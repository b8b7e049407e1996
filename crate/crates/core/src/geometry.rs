// SPDX-License-Identifier: Apache-2.0

//! Points, clouds and the sensor/turret/world frame conventions.
//!
//! World up is `+z`. At rest the sensor boresight is world `+x`. A pan-tilt
//! pose rotates first about the world `z` axis (pan, counter-clockwise
//! positive) and then about the panned `y` axis so that positive tilt lifts
//! the boresight. The pan and tilt axes intersect at the sensor origin.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Matrix3;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Rotation = Matrix3<f64>;

/// A single LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    /// Simulation time of the return in seconds.
    pub t: f64,
    pub position: Point3,
    pub intensity: f64,
}

impl TimedPoint {
    pub fn new(t: f64, position: Point3, intensity: f64) -> Self {
        Self {
            t,
            position,
            intensity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Frame {
    Sensor,
    World,
}

/// One integration window of returns.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub frame: Frame,
    pub points: Vec<TimedPoint>,
    pub t_start: f64,
    pub t_end: f64,
}

impl PointCloud {
    pub fn new(frame: Frame, t_start: f64, t_end: f64) -> Self {
        debug_assert!(t_start <= t_end);
        Self {
            frame,
            points: Vec::new(),
            t_start,
            t_end,
        }
    }

    pub fn with_points(frame: Frame, t_start: f64, t_end: f64, points: Vec<TimedPoint>) -> Self {
        Self {
            frame,
            points,
            t_start,
            t_end,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same frame and time window, no points.
    pub fn empty_like(&self) -> Self {
        Self::new(self.frame, self.t_start, self.t_end)
    }

    /// Keeps the points for which `keep` returns true, preserving order.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> Self {
        let points = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, p)| *p)
            .collect();
        Self::with_points(self.frame, self.t_start, self.t_end, points)
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.position.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    fn ensure_frame(&self, expected: Frame) -> Result<()> {
        if self.frame == expected {
            Ok(())
        } else {
            Err(Error::FrameMismatch {
                expected,
                actual: self.frame,
            })
        }
    }
}

/// Turret orientation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PanTiltPose {
    pub pan: f64,
    pub tilt: f64,
}

impl PanTiltPose {
    /// Wraps `pan` into `[-π, π]` and clamps `tilt` into `[-π/2, π/2]`.
    pub fn new(pan: f64, tilt: f64) -> Self {
        Self {
            pan: wrap_angle(pan),
            tilt: tilt.clamp(-FRAC_PI_2, FRAC_PI_2),
        }
    }

    /// Unit vector along the sensor `+x` axis in the world frame.
    pub fn boresight(&self) -> Vector3 {
        let (sp, cp) = (libm::sin(self.pan), libm::cos(self.pan));
        let (st, ct) = (libm::sin(self.tilt), libm::cos(self.tilt));
        Vector3::new(ct * cp, ct * sp, st)
    }

    pub fn rotation(&self) -> Rotation {
        pan_tilt_to_rotation(*self)
    }
}

/// Wraps an angle into `[-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let mut w = libm::fmod(a + PI, TAU);
    if w < 0.0 {
        w += TAU;
    }
    w - PI
}

/// Sensor-to-world rotation for a pan-tilt pose.
///
/// Equal to `Rz(pan) · Ry(-tilt)`; the first column is the boresight.
pub fn pan_tilt_to_rotation(pose: PanTiltPose) -> Rotation {
    let (sp, cp) = libm::sincos(pose.pan);
    let (st, ct) = libm::sincos(pose.tilt);
    Matrix3::new(
        cp * ct,
        -sp,
        -cp * st, //
        sp * ct,
        cp,
        -sp * st, //
        st,
        0.0,
        ct,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SensorPose {
    pub origin: Point3,
    pub orientation: PanTiltPose,
}

impl SensorPose {
    pub fn new(origin: Point3, orientation: PanTiltPose) -> Self {
        Self {
            origin,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Point3::origin(), PanTiltPose::default())
    }

    pub fn to_world(&self, p: &Point3) -> Point3 {
        self.origin + self.orientation.rotation() * p.coords
    }
}

/// Sensor-frame cloud to world frame with a single pose.
pub fn transform_cloud(cloud: &PointCloud, pose: &SensorPose) -> Result<PointCloud> {
    transform_cloud_with(cloud, |_| *pose)
}

/// Sensor-frame cloud to world frame, looking up the pose at each point's
/// timestamp. Used to deskew frames captured while the turret slews.
pub fn transform_cloud_with(
    cloud: &PointCloud,
    mut pose_at: impl FnMut(f64) -> SensorPose,
) -> Result<PointCloud> {
    cloud.ensure_frame(Frame::Sensor)?;
    let mut cached: Option<(f64, SensorPose, Rotation)> = None;
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let (pose, rot) = match cached {
                Some((t, pose, rot)) if t == p.t => (pose, rot),
                _ => {
                    let pose = pose_at(p.t);
                    let rot = pose.orientation.rotation();
                    cached = Some((p.t, pose, rot));
                    (pose, rot)
                }
            };
            TimedPoint::new(p.t, pose.origin + rot * p.position.coords, p.intensity)
        })
        .collect();
    Ok(PointCloud::with_points(
        Frame::World,
        cloud.t_start,
        cloud.t_end,
        points,
    ))
}

/// Inverse of [`transform_cloud`].
pub fn to_sensor_frame(cloud: &PointCloud, pose: &SensorPose) -> Result<PointCloud> {
    cloud.ensure_frame(Frame::World)?;
    let rot_t = pose.orientation.rotation().transpose();
    let points = cloud
        .points
        .iter()
        .map(|p| {
            TimedPoint::new(
                p.t,
                Point3::from(rot_t * (p.position - pose.origin)),
                p.intensity,
            )
        })
        .collect();
    Ok(PointCloud::with_points(
        Frame::Sensor,
        cloud.t_start,
        cloud.t_end,
        points,
    ))
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn extent(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|i| !(self.max[i] > self.min[i]))
    }

    /// Slab-method intersection; returns the entry distance along `dir`
    /// when the ray starts outside, or the exit distance when inside.
    pub fn ray_hit(&self, origin: &Point3, dir: &Vector3) -> Option<f64> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut t0 = (self.min[i] - origin[i]) * inv;
            let mut t1 = (self.max[i] - origin[i]) * inv;
            if t0 > t1 {
                core::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
        if t_far < 0.0 {
            None
        } else if t_near >= 0.0 {
            Some(t_near)
        } else {
            Some(t_far)
        }
    }
}
