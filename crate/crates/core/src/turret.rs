// SPDX-License-Identifier: Apache-2.0

//! Pan-tilt turret: the serpentine raster used while the background map is
//! built, boresight centering on the track estimate, and slew-limited motion.

use core::f64::consts::{FRAC_PI_2, PI};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, PanTiltPose, Point3};
use crate::tracker::TrackEstimate;

/// Rectangle in pan/tilt space, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScanArea {
    pub pan_min: f64,
    pub pan_max: f64,
    pub tilt_min: f64,
    pub tilt_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TurretParams {
    /// Per-axis limit, rad/s.
    pub max_slew_rate: f64,
    pub command_rate: f64,
    pub deadband: f64,
    pub scan_area: ScanArea,
    pub scan_line_spacing: f64,
    pub scan_duration: f64,
}

impl Default for TurretParams {
    fn default() -> Self {
        Self {
            max_slew_rate: PI,
            command_rate: 15.0,
            deadband: 0.5_f64.to_radians(),
            scan_area: ScanArea {
                pan_min: -1.0,
                pan_max: 1.0,
                tilt_min: -0.6,
                tilt_max: 0.6,
            },
            scan_line_spacing: 0.3,
            scan_duration: 30.0,
        }
    }
}

impl TurretParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_slew_rate > 0.0) {
            return Err(Error::invalid("turret.max_slew_rate", "must be positive"));
        }
        if !(self.command_rate > 0.0) {
            return Err(Error::invalid("turret.command_rate", "must be positive"));
        }
        if !(self.deadband >= 0.0) {
            return Err(Error::invalid("turret.deadband", "must be non-negative"));
        }
        let a = &self.scan_area;
        if !(a.pan_min <= a.pan_max && a.pan_min >= -PI && a.pan_max <= PI) {
            return Err(Error::invalid(
                "turret.scan_area",
                "pan range must be ordered and within [-pi, pi]",
            ));
        }
        if !(a.tilt_min <= a.tilt_max && a.tilt_min >= -FRAC_PI_2 && a.tilt_max <= FRAC_PI_2) {
            return Err(Error::invalid(
                "turret.scan_area",
                "tilt range must be ordered and within [-pi/2, pi/2]",
            ));
        }
        if !(self.scan_line_spacing > 0.0) {
            return Err(Error::invalid(
                "turret.scan_line_spacing",
                "must be positive",
            ));
        }
        if !(self.scan_duration > 0.0) {
            return Err(Error::invalid("turret.scan_duration", "must be positive"));
        }
        Ok(())
    }

    /// Number of tilt rows in the raster.
    pub fn scan_rows(&self) -> usize {
        let span = self.scan_area.tilt_max - self.scan_area.tilt_min;
        libm::floor(span / self.scan_line_spacing + 1e-9) as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Mode {
    Initialization,
    Tracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurretState {
    pub pose: PanTiltPose,
    pub mode: Mode,
    pub t: f64,
}

impl TurretState {
    pub fn new(pose: PanTiltPose, mode: Mode, t: f64) -> Self {
        Self { pose, mode, t }
    }
}

/// Raster pose at time `t` (clamped to the scan window). Even rows sweep pan
/// upward, odd rows sweep back.
pub fn scan_mode_command(t: f64, params: &TurretParams) -> PanTiltPose {
    let a = &params.scan_area;
    let rows = params.scan_rows();
    let row_time = params.scan_duration / rows as f64;
    let t = t.clamp(0.0, params.scan_duration);
    let row = (libm::floor(t / row_time) as usize).min(rows - 1);
    let frac = ((t - row as f64 * row_time) / row_time).clamp(0.0, 1.0);
    let tilt = (a.tilt_min + row as f64 * params.scan_line_spacing).min(a.tilt_max);
    let span = a.pan_max - a.pan_min;
    let pan = if row.is_multiple_of(2) {
        a.pan_min + frac * span
    } else {
        a.pan_max - frac * span
    };
    PanTiltPose { pan, tilt }
}

/// Pose that puts the estimate on the boresight, or the current pose when
/// the required change is inside the deadband on both axes.
pub fn tracking_command(
    state: &TurretState,
    est: &TrackEstimate,
    turret_origin: &Point3,
    params: &TurretParams,
) -> PanTiltPose {
    let d = est.position - turret_origin;
    let horiz = libm::hypot(d.x, d.y);
    let (pan, tilt) = if horiz == 0.0 {
        (
            state.pose.pan,
            if d.z >= 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 },
        )
    } else {
        (libm::atan2(d.y, d.x), libm::atan2(d.z, horiz))
    };
    let dpan = wrap_angle(pan - state.pose.pan).abs();
    let dtilt = (tilt - state.pose.tilt).abs();
    if dpan < params.deadband && dtilt < params.deadband {
        state.pose
    } else {
        PanTiltPose { pan, tilt }
    }
}

fn approach(current: f64, error: f64, budget: f64) -> f64 {
    if error.abs() <= budget {
        current + error
    } else {
        current + budget.copysign(error)
    }
}

/// Moves each axis toward the command by at most `max_slew_rate * dt`,
/// along the shorter way round for pan.
pub fn step_dynamics(
    state: &TurretState,
    command: PanTiltPose,
    dt: f64,
    params: &TurretParams,
) -> TurretState {
    let budget = params.max_slew_rate * dt.max(0.0);
    let pan = approach(
        state.pose.pan,
        wrap_angle(command.pan - state.pose.pan),
        budget,
    );
    let tilt = approach(state.pose.tilt, command.tilt - state.pose.tilt, budget);
    TurretState {
        pose: PanTiltPose {
            pan: wrap_angle(pan),
            tilt: tilt.clamp(-FRAC_PI_2, FRAC_PI_2),
        },
        mode: state.mode,
        t: state.t + dt,
    }
}

/// Pose reached after `dt` seconds of a constant command, evaluated at any
/// intermediate time without stepping.
pub fn pose_after(
    start: PanTiltPose,
    command: PanTiltPose,
    dt: f64,
    params: &TurretParams,
) -> PanTiltPose {
    let s = TurretState::new(start, Mode::Tracking, 0.0);
    step_dynamics(&s, command, dt, params).pose
}
