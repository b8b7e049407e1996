// SPDX-License-Identifier: Apache-2.0

//! Detection and tracking of small aerial vehicles with a rosette-scanning
//! LiDAR mounted on a pan-tilt turret.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithmic
//! piece of the pipeline:
//!
//! * [`geometry`]: points, clouds, pan-tilt poses and frame transforms.
//! * [`rosette`]: the two-prism scan pattern and the simulated sensor.
//! * [`scene`]: static geometry, the scripted target and the return model.
//! * [`background`]: the occupancy octree used for background subtraction.
//! * [`preprocess`]: range, background and outlier filters.
//! * [`tracker`]: the particle filter.
//! * [`turret`]: raster scanning, target centering and slew-limited dynamics.
//! * [`sim`]: the closed-loop scenario runner and its metrics.
//!
//! File formats, configuration parsing and the command line live in the
//! companion `mavtrack` crate.

#![no_std]
#![forbid(unsafe_code)]
// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod background;
pub mod error;
pub mod geometry;
pub mod preprocess;
pub mod rosette;
pub mod scene;
pub mod sim;
pub mod spatial;
pub mod tracker;
pub mod turret;

pub use error::{Error, Result};
pub use geometry::{Frame, PanTiltPose, Point3, PointCloud, SensorPose, TimedPoint, Vector3};
