// SPDX-License-Identifier: Apache-2.0

//! Per-frame filtering: range and ground limits, background subtraction,
//! radius outlier removal and statistical outlier removal.
//!
//! Every filter only drops points. Order and coordinates of the kept points
//! are untouched.

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::background::OccupancyOctree;
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::spatial::NeighborIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct FilterParams {
    pub near_min: f64,
    pub far_max: f64,
    /// Minimum height above the ground plane.
    pub ground_margin: f64,
    pub ror_radius: f64,
    pub ror_min_neighbors: usize,
    pub sor_k: usize,
    /// Standard-deviation multiplier of the statistical filter.
    pub sor_alpha: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            near_min: 0.5,
            far_max: 10.0,
            ground_margin: 0.15,
            ror_radius: 0.5,
            ror_min_neighbors: 2,
            sor_k: 8,
            sor_alpha: 1.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_min < self.far_max) {
            return Err(Error::invalid(
                "filter.near_min",
                "must be below filter.far_max",
            ));
        }
        if !(self.ror_radius > 0.0) {
            return Err(Error::invalid("filter.ror_radius", "must be positive"));
        }
        if self.ror_min_neighbors < 1 {
            return Err(Error::invalid(
                "filter.ror_min_neighbors",
                "must be at least 1",
            ));
        }
        if self.sor_k < 1 {
            return Err(Error::invalid("filter.sor_k", "must be at least 1"));
        }
        if !(self.sor_alpha > 0.0) {
            return Err(Error::invalid("filter.sor_alpha", "must be positive"));
        }
        Ok(())
    }
}

/// Keeps points with `z > floor` (when given) and distance from `origin`
/// within `[near_min, far_max]`.
pub fn limit_range(
    cloud: &PointCloud,
    near_min: f64,
    far_max: f64,
    floor: Option<f64>,
    origin: &Point3,
) -> PointCloud {
    let (near2, far2) = (near_min * near_min, far_max * far_max);
    cloud.retain_indices(|i| {
        let p = &cloud.points[i].position;
        let r2 = (p - origin).norm_squared();
        floor.is_none_or(|f| p.z > f) && r2 >= near2 && r2 <= far2
    })
}

pub fn range_filter(
    cloud: &PointCloud,
    params: &FilterParams,
    ground_z: Option<f64>,
    sensor_origin: &Point3,
) -> PointCloud {
    limit_range(
        cloud,
        params.near_min,
        params.far_max,
        ground_z.map(|g| g + params.ground_margin),
        sensor_origin,
    )
}

pub fn subtract_background(cloud: &PointCloud, octree: &OccupancyOctree) -> PointCloud {
    cloud.retain_indices(|i| !octree.is_background(&cloud.points[i].position))
}

fn positions(cloud: &PointCloud) -> Vec<Point3> {
    cloud.points.iter().map(|p| p.position).collect()
}

/// Keeps a point when at least `min_neighbors` other points lie within
/// `radius` of it.
pub fn radius_outlier_removal(cloud: &PointCloud, radius: f64, min_neighbors: usize) -> PointCloud {
    if cloud.is_empty() {
        return cloud.clone();
    }
    let pts = positions(cloud);
    let index = NeighborIndex::new(&pts);
    let keep: Vec<bool> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| index.has_at_least(p, radius, Some(i), min_neighbors))
        .collect();
    cloud.retain_indices(|i| keep[i])
}

/// Mean of the square roots of ascending squared distances.
pub fn mean_distance(sorted_dist2: &[f64]) -> f64 {
    if sorted_dist2.is_empty() {
        return 0.0;
    }
    sorted_dist2.iter().map(|d| libm::sqrt(*d)).sum::<f64>() / sorted_dist2.len() as f64
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

/// Drops points whose mean distance to their `k` nearest neighbors exceeds
/// the cloud-wide mean of that quantity by more than `alpha` standard
/// deviations. Clouds with no more than `k` points pass unchanged.
pub fn statistical_outlier_removal(cloud: &PointCloud, k: usize, alpha: f64) -> PointCloud {
    if cloud.len() <= k {
        return cloud.clone();
    }
    let pts = positions(cloud);
    let index = NeighborIndex::new(&pts);
    let mean_dists: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| mean_distance(&index.knn_dist2(p, k, Some(i))))
        .collect();
    let (mu, sigma) = mean_std(&mean_dists);
    let limit = mu + alpha * sigma;
    cloud.retain_indices(|i| mean_dists[i] <= limit)
}

/// The full per-frame chain, in order: range and ground limits, background
/// subtraction, radius filter, statistical filter.
pub fn filter_frame(
    cloud: &PointCloud,
    params: &FilterParams,
    background: Option<&OccupancyOctree>,
    ground_z: Option<f64>,
    sensor_origin: &Point3,
) -> PointCloud {
    let mut c = range_filter(cloud, params, ground_z, sensor_origin);
    if let Some(bg) = background {
        c = subtract_background(&c, bg);
    }
    let c = radius_outlier_removal(&c, params.ror_radius, params.ror_min_neighbors);
    statistical_outlier_removal(&c, params.sor_k, params.sor_alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Frame, TimedPoint};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec;

    fn world(points: &[Point3]) -> PointCloud {
        PointCloud::with_points(
            Frame::World,
            0.0,
            1.0,
            points
                .iter()
                .enumerate()
                .map(|(i, p)| TimedPoint::new(i as f64 * 1e-3, *p, 1.0))
                .collect(),
        )
    }

    fn random_points(seed: u64, n: usize, half: f64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-half..half),
                    rng.random_range(-half..half),
                    rng.random_range(0.0..half),
                )
            })
            .collect()
    }

    fn is_subsequence(out: &PointCloud, inp: &PointCloud) -> bool {
        let mut it = inp.points.iter();
        out.points.iter().all(|p| it.any(|q| q == p))
    }

    #[test]
    fn ground_and_far_points_removed() {
        let params = FilterParams::default();
        let c = world(&[
            Point3::new(3.0, 0.0, 0.0),
            Point3::new(params.far_max + 1.0, 0.0, 1.0),
            Point3::new(3.0, 0.0, 1.0),
            Point3::new(0.1, 0.0, 1.0),
        ]);
        let out = range_filter(&c, &params, Some(0.0), &Point3::new(0.0, 0.0, 1.0));
        assert_eq!(out.points.len(), 1);
        assert_eq!(out.points[0].position, Point3::new(3.0, 0.0, 1.0));
    }

    #[test]
    fn range_filter_matches_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = FilterParams {
            near_min: 1.0,
            far_max: 6.0,
            ground_margin: 0.2,
            ..FilterParams::default()
        };
        let origin = Point3::new(0.0, 0.0, 1.0);
        let pts: Vec<Point3> = (0..100)
            .map(|_| {
                Point3::new(
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-8.0..8.0),
                    rng.random_range(-0.5..3.0),
                )
            })
            .collect();
        let out = range_filter(&world(&pts), &params, Some(0.0), &origin);
        let expected: Vec<Point3> = pts
            .iter()
            .copied()
            .filter(|p| {
                let r = ((p.x - origin.x).powi(2)
                    + (p.y - origin.y).powi(2)
                    + (p.z - origin.z).powi(2))
                .sqrt();
                p.z > 0.2 && (1.0..=6.0).contains(&r)
            })
            .collect();
        assert_eq!(
            out.points.iter().map(|p| p.position).collect::<Vec<_>>(),
            expected
        );
    }

    #[test]
    fn background_subtraction() {
        let mut tree = OccupancyOctree::new(
            0.1,
            Aabb::new(Point3::new(-5.0, -5.0, -5.0), Point3::new(5.0, 5.0, 5.0)),
        )
        .unwrap();
        let wall: Vec<Point3> = (0..20)
            .map(|i| Point3::new(2.0, -1.0 + 0.1 * i as f64, 1.0))
            .collect();
        let c = world(&wall);
        tree.insert_cloud(&c).unwrap();
        assert!(subtract_background(&c, &tree).is_empty());
        let empty = OccupancyOctree::new(0.1, *tree.bounds()).unwrap();
        assert_eq!(subtract_background(&c, &empty), c);
    }

    #[test]
    fn ror_isolated_and_pair() {
        let single = world(&[Point3::new(1.0, 1.0, 1.0)]);
        assert!(radius_outlier_removal(&single, 0.5, 1).is_empty());
        let pair = world(&[Point3::new(1.0, 1.0, 1.0), Point3::new(1.01, 1.0, 1.0)]);
        assert_eq!(radius_outlier_removal(&pair, 0.5, 1).len(), 2);
    }

    fn ror_oracle(pts: &[Point3], radius: f64, min_n: usize) -> Vec<Point3> {
        pts.iter()
            .enumerate()
            .filter(|(i, p)| {
                pts.iter()
                    .enumerate()
                    .filter(|(j, q)| {
                        j != i && {
                            let d = **p - **q;
                            d.x * d.x + d.y * d.y + d.z * d.z <= radius * radius
                        }
                    })
                    .count()
                    >= min_n
            })
            .map(|(_, p)| *p)
            .collect()
    }

    fn sor_oracle(pts: &[Point3], k: usize, alpha: f64) -> Vec<Point3> {
        if pts.len() <= k {
            return pts.to_vec();
        }
        let d: Vec<f64> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut all: Vec<f64> = pts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| {
                        let v = *p - *q;
                        v.x * v.x + v.y * v.y + v.z * v.z
                    })
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                all[..k].iter().map(|x| x.sqrt()).sum::<f64>() / k as f64
            })
            .collect();
        let n = d.len() as f64;
        let mu = d.iter().sum::<f64>() / n;
        let sd = (d.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)).sqrt();
        pts.iter()
            .zip(&d)
            .filter(|(_, di)| **di <= mu + alpha * sd)
            .map(|(p, _)| *p)
            .collect()
    }

    #[test]
    fn ror_matches_pairwise_oracle() {
        for seed in 0..10 {
            let pts = random_points(seed, 500, 4.0);
            let out = radius_outlier_removal(&world(&pts), 0.5, 2);
            let got: Vec<Point3> = out.points.iter().map(|p| p.position).collect();
            assert_eq!(got, ror_oracle(&pts, 0.5, 2));
        }
    }

    #[test]
    fn sor_identical_points_all_kept() {
        let c = world(&vec![Point3::new(1.0, 2.0, 3.0); 30]);
        assert_eq!(statistical_outlier_removal(&c, 5, 1.0), c);
    }

    #[test]
    fn sor_drops_far_point() {
        let mut pts = random_points(6, 20, 0.1);
        pts.push(Point3::new(10.0, 0.0, 0.0));
        let out = statistical_outlier_removal(&world(&pts), 5, 1.0);
        let got: Vec<Point3> = out.points.iter().map(|p| p.position).collect();
        assert!(!got.contains(&Point3::new(10.0, 0.0, 0.0)));
        assert_eq!(got.len(), 20);
    }

    #[test]
    fn sor_small_cloud_unchanged() {
        let c = world(&random_points(7, 5, 1.0));
        assert_eq!(statistical_outlier_removal(&c, 5, 1.0), c);
    }

    #[test]
    fn sor_matches_knn_oracle() {
        for seed in 0..10 {
            let pts = random_points(100 + seed, 300, 3.0);
            let out = statistical_outlier_removal(&world(&pts), 8, 1.0);
            let got: Vec<Point3> = out.points.iter().map(|p| p.position).collect();
            assert_eq!(got, sor_oracle(&pts, 8, 1.0));
        }
    }

    #[test]
    fn chain_rejects_invalid_params() {
        assert!(FilterParams {
            ror_radius: 0.0,
            ..FilterParams::default()
        }
        .validate()
        .is_err());
        assert!(FilterParams {
            near_min: 20.0,
            ..FilterParams::default()
        }
        .validate()
        .is_err());
        assert!(FilterParams::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn filters_are_contractions(seed in any::<u64>(), n in 0usize..120) {
            let c = world(&random_points(seed, n, 2.0));
            let r = radius_outlier_removal(&c, 0.4, 2);
            let s = statistical_outlier_removal(&c, 4, 1.0);
            let g = range_filter(&c, &FilterParams::default(), Some(0.3), &Point3::origin());
            prop_assert!(is_subsequence(&r, &c));
            prop_assert!(is_subsequence(&s, &c));
            prop_assert!(is_subsequence(&g, &c));
        }

        #[test]
        fn ror_is_permutation_invariant(seed in any::<u64>(), n in 1usize..150) {
            let pts = random_points(seed, n, 2.0);
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc));
            let key = |p: &Point3| (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
            let mut a: Vec<_> = radius_outlier_removal(&world(&pts), 0.4, 2).points.iter().map(|p| key(&p.position)).collect();
            let mut b: Vec<_> = radius_outlier_removal(&world(&shuffled), 0.4, 2).points.iter().map(|p| key(&p.position)).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
