// SPDX-License-Identifier: Apache-2.0

//! Accuracy and detection statistics of a run.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tracker::Status;

use super::config::ScenarioConfig;
use super::run::{ScanRecord, TrackRecord, TruthRecord, VisibilityChange};

/// Scans whose target range falls in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub scans: usize,
    pub mean_points: f64,
}

/// Error figures cover Stable ticks only. A figure is `None` when no tick
/// qualifies or the inputs needed for it were not supplied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub ticks: usize,
    pub stable_ticks: usize,
    pub mean_error: Option<f64>,
    pub sigma_error: Option<f64>,
    pub rmse: Option<f64>,
    pub mean_error_stationary: Option<f64>,
    pub rmse_stationary: Option<f64>,
    pub mean_error_moving: Option<f64>,
    pub rmse_moving: Option<f64>,
    /// Mean error while the target flies near its top speed.
    pub mean_error_peak_speed: Option<f64>,
    /// Pearson correlation of truth speed and error.
    pub speed_error_correlation: Option<f64>,
    /// Largest sensor-to-target range held Stable before the first loss.
    pub detection_distance: Option<f64>,
    /// Worst delay from the target becoming visible again to a Stable track.
    /// Infinite if the track never recovered.
    pub redetect_latency: Option<f64>,
    /// Delay from the first frame with target points to the first Stable tick.
    pub initial_lock_time: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

impl MetricsReport {
    /// Scalar figures by name, in a fixed order.
    pub fn scalars(&self) -> [(&'static str, Option<f64>); 14] {
        [
            ("ticks", Some(self.ticks as f64)),
            ("stable_ticks", Some(self.stable_ticks as f64)),
            ("mean_error", self.mean_error),
            ("sigma_error", self.sigma_error),
            ("rmse", self.rmse),
            ("mean_error_stationary", self.mean_error_stationary),
            ("rmse_stationary", self.rmse_stationary),
            ("mean_error_moving", self.mean_error_moving),
            ("rmse_moving", self.rmse_moving),
            ("mean_error_peak_speed", self.mean_error_peak_speed),
            ("speed_error_correlation", self.speed_error_correlation),
            ("detection_distance", self.detection_distance),
            ("redetect_latency", self.redetect_latency),
            ("initial_lock_time", self.initial_lock_time),
        ]
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn rms(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| libm::sqrt(v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64))
}

fn population_std(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    Some(libm::sqrt(
        v.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / v.len() as f64,
    ))
}

/// Pearson correlation; `None` for fewer than three pairs or no spread.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return None;
    }
    let (mx, my) = (mean(x)?, mean(y)?);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / libm::sqrt(sxx * syy))
}

/// Index of the truth record nearest in time, if within `max_skew`.
fn nearest(truth: &[TruthRecord], t: f64, max_skew: f64) -> Option<usize> {
    let i = truth.partition_point(|r| r.t < t);
    let mut best: Option<usize> = None;
    for j in [i.wrapping_sub(1), i] {
        if j < truth.len() && best.is_none_or(|b| (truth[j].t - t).abs() < (truth[b].t - t).abs()) {
            best = Some(j);
        }
    }
    best.filter(|&j| (truth[j].t - t).abs() <= max_skew)
}

pub fn compute_metrics(
    track: &[TrackRecord],
    truth: &[TruthRecord],
    scans: &[ScanRecord],
    visibility: &[VisibilityChange],
    config: &ScenarioConfig,
) -> Result<MetricsReport> {
    if track.is_empty() || truth.is_empty() {
        if track.is_empty() && truth.is_empty() && scans.is_empty() {
            return Ok(MetricsReport::default());
        }
        return Err(Error::EmptyLogs);
    }
    let m = &config.metrics;
    let origin = config.scene.turret_origin;
    let max_skew = 0.5 / config.timing.filter_rate + 1e-9;
    let peak = truth.iter().map(|r| r.speed).fold(0.0, f64::max);

    let mut all = Vec::new();
    let mut stationary = Vec::new();
    let mut moving = Vec::new();
    let mut at_peak = Vec::new();
    let mut speeds = Vec::new();
    let mut stable_ticks = 0;
    let mut first_stable = None;
    let mut first_lost_after_lock = None;
    let mut detection: Option<f64> = None;

    for (i, rec) in track.iter().enumerate() {
        if rec.status == Status::Lost && first_stable.is_some() && first_lost_after_lock.is_none() {
            first_lost_after_lock = Some(i);
        }
        if rec.status != Status::Stable {
            continue;
        }
        stable_ticks += 1;
        first_stable.get_or_insert(i);
        let Some(j) = nearest(truth, rec.t, max_skew) else {
            continue;
        };
        let tr = &truth[j];
        let e = (rec.position - tr.position).norm();
        all.push(e);
        speeds.push(tr.speed);
        if tr.speed <= m.stationary_speed {
            stationary.push(e);
        } else {
            moving.push(e);
        }
        if peak > 0.0 && tr.speed >= m.peak_speed_fraction * peak {
            at_peak.push(e);
        }
        if first_lost_after_lock.is_none() {
            let r = (tr.position - origin).norm();
            detection = Some(detection.map_or(r, |d| d.max(r)));
        }
    }

    let initial_lock_time = scans
        .iter()
        .find(|s| s.target_points > 0)
        .and_then(|s| first_stable.map(|i| (track[i].t - s.t).max(0.0)));

    Ok(MetricsReport {
        ticks: track.len(),
        stable_ticks,
        mean_error: mean(&all),
        sigma_error: population_std(&all),
        rmse: rms(&all),
        mean_error_stationary: mean(&stationary),
        rmse_stationary: rms(&stationary),
        mean_error_moving: mean(&moving),
        rmse_moving: rms(&moving),
        mean_error_peak_speed: mean(&at_peak),
        speed_error_correlation: pearson(&speeds, &all),
        detection_distance: detection,
        redetect_latency: redetect_latency(track, visibility),
        initial_lock_time,
        histogram: histogram(scans, m.histogram_bin_width),
    })
}

/// For every occlusion that knocked the track out of Stable, the delay from
/// the end of the occlusion to the next Stable tick (zero if the track
/// recovered before the center came into view). Returns the worst case.
pub fn redetect_latency(track: &[TrackRecord], visibility: &[VisibilityChange]) -> Option<f64> {
    let mut worst: Option<f64> = None;
    let mut hidden_since: Option<f64> = None;
    for change in visibility {
        match (change.visible, hidden_since) {
            (false, _) => hidden_since = Some(change.t),
            (true, Some(t_hidden)) => {
                hidden_since = None;
                let start = track.partition_point(|r| r.t < t_hidden);
                let Some(dropped) = track[start..]
                    .iter()
                    .position(|r| r.status != Status::Stable)
                else {
                    continue;
                };
                let dropped = start + dropped;
                if track[dropped].t > change.t {
                    continue;
                }
                let latency = track[dropped..]
                    .iter()
                    .find(|r| r.status == Status::Stable)
                    .map_or(f64::INFINITY, |r| (r.t - change.t).max(0.0));
                worst = Some(worst.map_or(latency, |w| w.max(latency)));
            }
            (true, None) => {}
        }
    }
    worst
}

/// Scans grouped by target range into bins of `width` starting at zero, up
/// to the farthest bin that holds a scan.
pub fn histogram(scans: &[ScanRecord], width: f64) -> Vec<HistogramBin> {
    let Some(max_bin) = scans
        .iter()
        .map(|s| libm::floor(s.target_range / width) as usize)
        .max()
    else {
        return Vec::new();
    };
    let mut counts = alloc::vec![(0usize, 0usize); max_bin + 1];
    for s in scans {
        let b = libm::floor(s.target_range / width) as usize;
        counts[b].0 += 1;
        counts[b].1 += s.n_points;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, (n, pts))| HistogramBin {
            lo: b as f64 * width,
            hi: (b + 1) as f64 * width,
            scans: n,
            mean_points: if n == 0 { 0.0 } else { pts as f64 / n as f64 },
        })
        .collect()
}
