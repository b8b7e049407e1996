// SPDX-License-Identifier: Apache-2.0

//! Position-only particle filter.
//!
//! The state is a random walk: prediction adds isotropic Gaussian noise and
//! the measurement is the filtered target cloud. Each cycle runs predict,
//! update and systematic resampling; the reported estimate is the weighted
//! mean taken between update and resampling.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Frame, Point3, PointCloud, Vector3};
use crate::spatial::NeighborIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Point3,
    pub weight: f64,
}

/// How a measurement cloud is scored against a particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Likelihood {
    /// Gaussian kernel around the cloud centroid.
    #[default]
    Centroid,
    /// Gaussian kernel around the measured point closest to the particle.
    NearestPoint,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrackerParams {
    pub n_particles: usize,
    /// Per-axis standard deviation of the random-walk prediction noise.
    pub sigma_pred: f64,
    pub sigma_meas: f64,
    /// Below this particle spread the track counts as stable.
    pub sigma_threshold: f64,
    pub lost_after_misses: u32,
    /// Region the initial particles are drawn from.
    pub surveillance_volume: Aabb,
    pub likelihood: Likelihood,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            n_particles: 500,
            sigma_pred: 0.1,
            sigma_meas: 0.05,
            sigma_threshold: 0.15,
            lost_after_misses: 10,
            surveillance_volume: Aabb::new(Point3::new(0.5, -3.0, 0.3), Point3::new(6.0, 3.0, 3.0)),
            likelihood: Likelihood::Centroid,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::NoParticles);
        }
        if !(self.sigma_pred >= 0.0) {
            return Err(Error::invalid("tracker.sigma_pred", "must be non-negative"));
        }
        if !(self.sigma_meas > 0.0) {
            return Err(Error::invalid("tracker.sigma_meas", "must be positive"));
        }
        if !(self.sigma_threshold > 0.0) {
            return Err(Error::invalid(
                "tracker.sigma_threshold",
                "must be positive",
            ));
        }
        if self.lost_after_misses < 1 {
            return Err(Error::invalid(
                "tracker.lost_after_misses",
                "must be at least 1",
            ));
        }
        if self.surveillance_volume.is_degenerate() {
            return Err(Error::DegenerateVolume);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Status {
    Searching,
    Stable,
    Lost,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Searching => "searching",
            Status::Stable => "stable",
            Status::Lost => "lost",
        }
    }
}

impl core::str::FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "searching" => Ok(Status::Searching),
            "stable" => Ok(Status::Stable),
            "lost" => Ok(Status::Lost),
            _ => Err(Error::Format("unknown track status")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEstimate {
    pub t: f64,
    pub position: Point3,
    pub sigma_particles: f64,
    pub status: Status,
}

/// The particle cloud together with its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
    rng: ChaCha8Rng,
    last_measurement_age: u32,
    /// Set when the last update's likelihood underflowed everywhere.
    degenerate: bool,
}

impl ParticleSet {
    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn last_measurement_age(&self) -> u32 {
        self.last_measurement_age
    }

    /// Replaces the particles, e.g. to start from a known configuration.
    /// Weights are renormalized.
    pub fn set_particles(&mut self, particles: Vec<Particle>) -> Result<()> {
        if particles.is_empty() {
            return Err(Error::NoParticles);
        }
        self.particles = particles;
        normalize(&mut self.particles);
        Ok(())
    }

    pub fn predict(&mut self, params: &TrackerParams) {
        if params.sigma_pred == 0.0 {
            return;
        }
        let mut noise: Vec<Vector3> = (0..self.particles.len())
            .map(|_| {
                Vector3::new(
                    self.rng.sample::<f64, _>(StandardNormal),
                    self.rng.sample::<f64, _>(StandardNormal),
                    self.rng.sample::<f64, _>(StandardNormal),
                ) * params.sigma_pred
            })
            .collect();
        if self.particles.len() > 2 {
            decorrelate(&self.particles, &mut noise);
        }
        for (p, n) in self.particles.iter_mut().zip(&noise) {
            p.position += n;
        }
    }

    /// Bayes update against a preprocessed world-frame cloud. An empty cloud
    /// only ages the track.
    pub fn update(&mut self, cloud: &PointCloud, params: &TrackerParams) -> Result<()> {
        if cloud.frame != Frame::World {
            return Err(Error::FrameMismatch {
                expected: Frame::World,
                actual: cloud.frame,
            });
        }
        if cloud.is_empty() {
            self.last_measurement_age = self.last_measurement_age.saturating_add(1);
            return Ok(());
        }
        let inv = -0.5 / (params.sigma_meas * params.sigma_meas);
        match params.likelihood {
            Likelihood::Centroid => {
                let z = cloud.centroid().expect("cloud is non-empty");
                for p in &mut self.particles {
                    p.weight *= libm::exp((p.position - z).norm_squared() * inv);
                }
            }
            Likelihood::NearestPoint => {
                let pts: Vec<Point3> = cloud.points.iter().map(|p| p.position).collect();
                let index = NeighborIndex::new(&pts);
                for p in &mut self.particles {
                    let d2 = index.knn_dist2(&p.position, 1, None)[0];
                    p.weight *= libm::exp(d2 * inv);
                }
            }
        }
        self.degenerate = !normalize(&mut self.particles);
        self.last_measurement_age = 0;
        Ok(())
    }

    /// Systematic resampling with a fresh offset from the set's stream.
    pub fn resample(&mut self) {
        let n = self.particles.len();
        let offset = self.rng.random::<f64>() / n as f64;
        let weights: Vec<f64> = self.particles.iter().map(|p| p.weight).collect();
        let idx = systematic_indices(&weights, offset);
        let w = 1.0 / n as f64;
        self.particles = idx
            .into_iter()
            .map(|i| Particle {
                position: self.particles[i].position,
                weight: w,
            })
            .collect();
    }

    pub fn estimate(&self, t: f64, params: &TrackerParams) -> TrackEstimate {
        // Moments are taken about the first particle so that a collapsed
        // cloud yields exactly zero spread.
        let anchor = self.particles[0].position;
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        let mut shift = Vector3::zeros();
        for p in &self.particles {
            shift += (p.position - anchor) * p.weight;
        }
        shift /= total;
        let mut var = Vector3::zeros();
        for p in &self.particles {
            let d = p.position - anchor - shift;
            var += d.component_mul(&d) * p.weight;
        }
        var /= total;
        let mean = anchor.coords + shift;
        let sigma = (libm::sqrt(var.x) + libm::sqrt(var.y) + libm::sqrt(var.z)) / 3.0;
        let status = if self.last_measurement_age >= params.lost_after_misses {
            Status::Lost
        } else if !self.degenerate && sigma < params.sigma_threshold {
            Status::Stable
        } else {
            Status::Searching
        };
        TrackEstimate {
            t,
            position: Point3::from(mean),
            sigma_particles: sigma,
            status,
        }
    }

    /// One filter tick: predict, then update and resample if a cloud
    /// arrived. The estimate is taken before resampling.
    pub fn step(
        &mut self,
        cloud: Option<&PointCloud>,
        t: f64,
        params: &TrackerParams,
    ) -> Result<TrackEstimate> {
        self.predict(params);
        let Some(cloud) = cloud else {
            return Ok(self.estimate(t, params));
        };
        self.update(cloud, params)?;
        let est = self.estimate(t, params);
        if !cloud.is_empty() {
            self.resample();
        }
        Ok(est)
    }
}

/// Removes, per axis, the weighted mean of the noise and its weighted
/// regression on the particle offsets. The cloud's weighted mean then stays
/// put and its weighted variance grows by exactly the variance of what is
/// left, so a predict step can never shrink the spread through sampling
/// luck. Two degrees of freedom out of N are lost, which is negligible at
/// filter sizes.
fn decorrelate(particles: &[Particle], noise: &mut [Vector3]) {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    let anchor = particles[0].position;
    for axis in 0..3 {
        let (mut mx, mut mn) = (0.0, 0.0);
        for (p, n) in particles.iter().zip(noise.iter()) {
            mx += p.weight * (p.position[axis] - anchor[axis]);
            mn += p.weight * n[axis];
        }
        mx /= total;
        mn /= total;
        let (mut sxx, mut sxn) = (0.0, 0.0);
        for (p, n) in particles.iter().zip(noise.iter()) {
            let dx = p.position[axis] - anchor[axis] - mx;
            sxx += p.weight * dx * dx;
            sxn += p.weight * dx * (n[axis] - mn);
        }
        let beta = if sxx > 0.0 { sxn / sxx } else { 0.0 };
        for (p, n) in particles.iter().zip(noise.iter_mut()) {
            let dx = p.position[axis] - anchor[axis] - mx;
            n[axis] -= mn + beta * dx;
        }
    }
}

/// Scales weights to sum to one. Returns false when they all vanished, in
/// which case they are reset to uniform.
fn normalize(particles: &mut [Particle]) -> bool {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if total > 0.0 && total.is_finite() {
        for p in particles.iter_mut() {
            p.weight /= total;
        }
        true
    } else {
        let w = 1.0 / particles.len() as f64;
        for p in particles.iter_mut() {
            p.weight = w;
        }
        false
    }
}

/// Indices picked by walking the weight CDF at `offset + j/N`.
/// `offset` must lie in `[0, 1/N)`.
pub fn systematic_indices(weights: &[f64], offset: f64) -> Vec<usize> {
    // Walk in units of 1/N so equal weights land exactly on the sample grid.
    let n = weights.len();
    let scale = n as f64;
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    let mut cum = weights.first().copied().unwrap_or(0.0) * scale;
    let start = offset * scale;
    for j in 0..n {
        let u = start + j as f64;
        while u >= cum && i + 1 < n {
            i += 1;
            cum += weights[i] * scale;
        }
        out.push(i);
    }
    out
}

/// Draws `n_particles` uniformly over the surveillance volume.
pub fn init_filter(params: &TrackerParams, seed: u64) -> Result<ParticleSet> {
    if params.n_particles == 0 {
        return Err(Error::NoParticles);
    }
    let vol = &params.surveillance_volume;
    if vol.is_degenerate() {
        return Err(Error::DegenerateVolume);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / params.n_particles as f64;
    let particles = (0..params.n_particles)
        .map(|_| Particle {
            position: Point3::new(
                rng.random_range(vol.min.x..vol.max.x),
                rng.random_range(vol.min.y..vol.max.y),
                rng.random_range(vol.min.z..vol.max.z),
            ),
            weight: w,
        })
        .collect();
    Ok(ParticleSet {
        particles,
        rng,
        last_measurement_age: 0,
        degenerate: false,
    })
}

pub fn predict(mut set: ParticleSet, params: &TrackerParams) -> ParticleSet {
    set.predict(params);
    set
}

pub fn update(
    mut set: ParticleSet,
    cloud: &PointCloud,
    params: &TrackerParams,
) -> Result<ParticleSet> {
    set.update(cloud, params)?;
    Ok(set)
}

pub fn resample(mut set: ParticleSet) -> ParticleSet {
    set.resample();
    set
}

pub fn estimate(set: &ParticleSet, t: f64, params: &TrackerParams) -> TrackEstimate {
    set.estimate(t, params)
}

pub fn step(
    mut set: ParticleSet,
    cloud: Option<&PointCloud>,
    t: f64,
    params: &TrackerParams,
) -> Result<(ParticleSet, TrackEstimate)> {
    let est = set.step(cloud, t, params)?;
    Ok((set, est))
}
