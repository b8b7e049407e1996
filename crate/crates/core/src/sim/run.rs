// SPDX-License-Identifier: Apache-2.0

//! The closed-loop runner.
//!
//! Everything happens on a virtual clock. Filter ticks fall at `i / filter_rate`
//! and frame `k` integrates over `[k / lidar_rate, k / lidar_rate + T)`. Each
//! ray is cast with the turret pose at its own emission time, and the same
//! pose history deskews the frame once it is complete. A frame reaches the
//! filter at the first tick at or after `start + pipeline_latency`.
//!
//! Per tick the order is: deliver at most one frame, step the tracker, log,
//! then issue the next turret command, which holds until the next tick.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::background::{BackgroundBuilder, OccupancyOctree};
use crate::error::Result;
use crate::geometry::{
    transform_cloud_with, Frame, PanTiltPose, Point3, PointCloud, Rotation, SensorPose, TimedPoint,
};
use crate::preprocess::filter_frame;
use crate::rosette::{self, beam_direction, cast_beam};
use crate::scene::{Scene, Surface};
use crate::tracker::{init_filter, Status};
use crate::turret::{
    pose_after, scan_mode_command, tracking_command, Mode, TurretParams, TurretState,
};

use super::config::ScenarioConfig;
use super::metrics::{compute_metrics, MetricsReport};

/// Per-tick tracker output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRecord {
    pub t: f64,
    pub position: Point3,
    pub sigma_particles: f64,
    pub status: Status,
    /// Turret pose at the tick.
    pub pan: f64,
    pub tilt: f64,
    /// Consecutive empty measurements so far. Not exported.
    pub misses: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthRecord {
    pub t: f64,
    pub position: Point3,
    pub speed: f64,
}

/// One delivered frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    /// Delivery time.
    pub t: f64,
    /// Points that survived preprocessing.
    pub n_points: usize,
    /// Distance from the sensor to the target at mid-integration.
    pub target_range: f64,
    /// Start of integration. Not exported.
    pub t_capture: f64,
    /// Raw returns from the target. Not exported.
    pub target_returns: usize,
    /// Preprocessed points lying on the target. Not exported.
    pub target_points: usize,
}

/// A change in whether the target center can be seen from the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityChange {
    pub t: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub track: Vec<TrackRecord>,
    pub truth: Vec<TruthRecord>,
    pub scans: Vec<ScanRecord>,
    /// Starts with the state at t = 0.
    pub visibility: Vec<VisibilityChange>,
    pub report: MetricsReport,
}

const STREAM_TRACKING: u64 = 1 << 40;
const STREAM_BACKGROUND: u64 = 2 << 40;

fn frame_rng(seed: u64, stream: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + k);
    rng
}

/// Raster-scans the target-free scene and returns the inflated map.
pub fn prepare_background(config: &ScenarioConfig) -> Result<OccupancyOctree> {
    config.validate()?;
    let scene = config.scene(None)?;
    let origin = config.scene.turret_origin;
    let mut builder = BackgroundBuilder::new(&config.background, config.ground_z())?;
    let n_frames =
        libm::ceil(config.turret.scan_duration * config.timing.lidar_rate - 1e-9).max(1.0) as u64;
    for k in 0..n_frames {
        let t0 = k as f64 / config.timing.lidar_rate;
        let pose = SensorPose::new(origin, scan_mode_command(t0, &config.turret));
        let mut rng = frame_rng(config.seed, STREAM_BACKGROUND, k);
        let cloud = rosette::scan(&scene, &pose, t0, &config.sensor, &mut rng);
        builder.add_scan(&cloud, &pose)?;
    }
    builder.finish()
}

/// Builds the background, then runs the tracking phase.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    let background = prepare_background(config)?;
    run_with_background(config, &background)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    t: f64,
    pose: PanTiltPose,
    command: PanTiltPose,
}

/// Commanded motion between ticks, queried as a turret encoder would be.
struct PoseTimeline<'a> {
    segments: Vec<Segment>,
    params: &'a TurretParams,
}

impl PoseTimeline<'_> {
    fn pose_at(&self, t: f64) -> PanTiltPose {
        let i = self
            .segments
            .partition_point(|s| s.t <= t)
            .saturating_sub(1);
        let s = &self.segments[i];
        pose_after(s.pose, s.command, t - s.t, self.params)
    }
}

struct Capture {
    k: u64,
    t0: f64,
    next_ray: usize,
    rng: ChaCha8Rng,
    points: Vec<TimedPoint>,
    target_returns: usize,
}

struct Pending {
    deliver_tick: u64,
    capture: Capture,
}

/// Tracking phase against a prepared background map.
pub fn run_with_background(
    config: &ScenarioConfig,
    background: &OccupancyOctree,
) -> Result<RunOutput> {
    config.validate()?;
    let trajectory = config.trajectory()?;
    let duration = config.tracking_duration(&trajectory);
    let scene = config.scene(Some(trajectory.clone()))?;
    let static_scene = config.scene(None)?;
    let origin = config.scene.turret_origin;
    let timing = config.timing;
    let sensor = &config.sensor;
    let tick_time = |i: u64| i as f64 / timing.filter_rate;
    let n_ticks = libm::ceil(duration * timing.filter_rate - 1e-9).max(0.0) as u64;
    let n_rays = sensor.rays_per_frame();
    let ray_dt = sensor.ray_interval();
    let command_period = 1.0 / config.turret.command_rate;
    let target_radius = 0.5 * config.target.diameter;

    let mut particles = init_filter(&config.tracker, config.seed)?;
    let mut turret = TurretState::new(
        scan_mode_command(config.turret.scan_duration, &config.turret),
        Mode::Tracking,
        0.0,
    );
    let mut command = turret.pose;
    let mut next_command = 0.0;
    let mut timeline = PoseTimeline {
        segments: Vec::new(),
        params: &config.turret,
    };

    let mut active: Option<Capture> = None;
    let mut next_frame = 0u64;
    let mut pending: VecDeque<Pending> = VecDeque::new();

    let mut track = Vec::with_capacity(n_ticks as usize);
    let mut truth = Vec::with_capacity(n_ticks as usize);
    let mut scans = Vec::new();
    let mut rot_cache: Option<(PanTiltPose, Rotation)> = None;

    for i in 0..n_ticks {
        let t = tick_time(i);

        let measurement = match pending.front() {
            Some(p) if p.deliver_tick <= i => {
                let cap = pending.pop_front().expect("front exists").capture;
                let raw = PointCloud::with_points(
                    Frame::Sensor,
                    cap.t0,
                    cap.t0 + sensor.integration_time,
                    cap.points,
                );
                let world = transform_cloud_with(&raw, |tau| {
                    SensorPose::new(origin, timeline.pose_at(tau))
                })?;
                let cloud = filter_frame(
                    &world,
                    &config.filter,
                    Some(background),
                    config.ground_z(),
                    &origin,
                );
                let mid = cap.t0 + 0.5 * sensor.integration_time;
                let on_target = cloud
                    .points
                    .iter()
                    .filter(|p| {
                        (p.position - trajectory.position(p.t)).norm() <= target_radius + 0.1
                    })
                    .count();
                scans.push(ScanRecord {
                    t,
                    n_points: cloud.len(),
                    target_range: (trajectory.position(mid) - origin).norm(),
                    t_capture: cap.t0,
                    target_returns: cap.target_returns,
                    target_points: on_target,
                });
                Some(cloud)
            }
            _ => None,
        };

        let est = particles.step(measurement.as_ref(), t, &config.tracker)?;
        track.push(TrackRecord {
            t,
            position: est.position,
            sigma_particles: est.sigma_particles,
            status: est.status,
            pan: turret.pose.pan,
            tilt: turret.pose.tilt,
            misses: particles.last_measurement_age(),
        });
        truth.push(TruthRecord {
            t,
            position: trajectory.position(t),
            speed: trajectory.velocity(t).norm(),
        });

        if t + 1e-9 >= next_command {
            if est.status != Status::Lost {
                command = tracking_command(&turret, &est, &origin, &config.turret);
            }
            next_command += command_period;
        }
        timeline.segments.push(Segment {
            t,
            pose: turret.pose,
            command,
        });

        // Cast every ray emitted before the next tick.
        let t_next = tick_time(i + 1);
        loop {
            if active.is_none() {
                let t0 = next_frame as f64 / timing.lidar_rate;
                if t0 >= t_next || t0 >= duration {
                    break;
                }
                active = Some(Capture {
                    k: next_frame,
                    t0,
                    next_ray: 0,
                    rng: frame_rng(config.seed, STREAM_TRACKING, next_frame),
                    points: Vec::new(),
                    target_returns: 0,
                });
                next_frame += 1;
            }
            let cap = active.as_mut().expect("capture is active");
            let end = (libm::ceil((t_next - cap.t0) / ray_dt).max(0.0) as usize).min(n_rays);
            for j in cap.next_ray..end {
                let tau = cap.t0 + j as f64 * ray_dt;
                let pose = timeline.pose_at(tau);
                let rotation = match rot_cache {
                    Some((p, r)) if p == pose => r,
                    _ => {
                        let r = pose.rotation();
                        rot_cache = Some((pose, r));
                        r
                    }
                };
                let dir = beam_direction(tau, j, sensor);
                if let Some(ret) =
                    cast_beam(&scene, &origin, &rotation, &dir, tau, sensor, &mut cap.rng)
                {
                    if ret.surface == Surface::Target {
                        cap.target_returns += 1;
                    }
                    cap.points.push(ret.point);
                }
            }
            cap.next_ray = cap.next_ray.max(end);
            if cap.next_ray < n_rays {
                break;
            }
            let capture = active.take().expect("capture is active");
            let deliver = capture.t0 + timing.pipeline_latency;
            let deliver_tick = libm::ceil(deliver * timing.filter_rate - 1e-9).max(0.0) as u64;
            debug_assert!(capture.k + 1 == next_frame);
            pending.push_back(Pending {
                deliver_tick,
                capture,
            });
        }

        turret = TurretState {
            pose: pose_after(turret.pose, command, t_next - t, &config.turret),
            mode: Mode::Tracking,
            t: t_next,
        };
    }

    let visibility =
        visibility_changes(&static_scene, &scene, &origin, n_ticks, timing.filter_rate);
    let report = compute_metrics(&track, &truth, &scans, &visibility, config)?;
    Ok(RunOutput {
        track,
        truth,
        scans,
        visibility,
        report,
    })
}

/// Line-of-sight transitions to the target center, sampled at every tick and
/// refined by bisection to a millisecond.
fn visibility_changes(
    static_scene: &Scene,
    scene: &Scene,
    origin: &Point3,
    n_ticks: u64,
    rate: f64,
) -> Vec<VisibilityChange> {
    let Some(target) = &scene.target else {
        return Vec::new();
    };
    let visible = |t: f64| static_scene.line_of_sight(origin, &target.trajectory.position(t));
    let mut out = Vec::new();
    if n_ticks == 0 {
        return out;
    }
    let mut state = visible(0.0);
    out.push(VisibilityChange {
        t: 0.0,
        visible: state,
    });
    for i in 1..n_ticks {
        let (a, b) = ((i - 1) as f64 / rate, i as f64 / rate);
        let now = visible(b);
        if now != state {
            let (mut lo, mut hi) = (a, b);
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                if visible(mid) == state {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(VisibilityChange {
                t: hi,
                visible: now,
            });
            state = now;
        }
    }
    out
}
