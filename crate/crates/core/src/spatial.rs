// SPDX-License-Identifier: Apache-2.0

//! Static 3-d tree for the neighbor queries of the outlier filters.

use alloc::vec::Vec;

use crate::geometry::Point3;

/// Below this many points queries scan linearly.
pub const BRUTE_FORCE_LIMIT: usize = 48;

#[inline]
fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Balanced kd-tree stored implicitly: the median of each range is the node.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    /// Original index of each permuted point.
    order: Vec<usize>,
    /// Split axis of the node at each position.
    axis: Vec<u8>,
}

impl KdTree {
    pub fn build(points: &[Point3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut axis = alloc::vec![0u8; points.len()];
        build_range(points, &mut order, &mut axis, 0, points.len());
        let permuted = order.iter().map(|i| points[*i]).collect();
        Self {
            points: permuted,
            order,
            axis,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points other than `skip` within `radius` of `q` (inclusive).
    pub fn count_within(&self, q: &Point3, radius: f64, skip: Option<usize>) -> usize {
        self.count_capped(q, radius, skip, usize::MAX)
    }

    /// Whether at least `n` points other than `skip` lie within `radius`.
    /// Stops searching as soon as the answer is known.
    pub fn has_at_least(&self, q: &Point3, radius: f64, skip: Option<usize>, n: usize) -> bool {
        n == 0 || self.count_capped(q, radius, skip, n) >= n
    }

    fn count_capped(&self, q: &Point3, radius: f64, skip: Option<usize>, cap: usize) -> usize {
        let r2 = radius * radius;
        let mut count = 0;
        // Balanced tree, so the pending ranges never exceed twice its depth.
        let mut stack = [(0usize, 0usize); 2 * usize::BITS as usize];
        let mut top = 1;
        stack[0] = (0, self.points.len());
        while top > 0 {
            top -= 1;
            let (lo, hi) = stack[top];
            if lo >= hi {
                continue;
            }
            let mid = lo + (hi - lo) / 2;
            let p = &self.points[mid];
            if dist2(q, p) <= r2 && Some(self.order[mid]) != skip {
                count += 1;
                if count >= cap {
                    return count;
                }
            }
            let ax = self.axis[mid] as usize;
            let diff = q[ax] - p[ax];
            let (near, far) = if diff <= 0.0 {
                ((lo, mid), (mid + 1, hi))
            } else {
                ((mid + 1, hi), (lo, mid))
            };
            if diff * diff <= r2 {
                stack[top] = far;
                top += 1;
            }
            stack[top] = near;
            top += 1;
        }
        count
    }

    /// Squared distances to the `k` nearest points other than `skip`,
    /// ascending. Fewer than `k` are returned if the tree is too small.
    pub fn knn_dist2(&self, q: &Point3, k: usize, skip: Option<usize>) -> Vec<f64> {
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        if k == 0 {
            return best;
        }
        self.knn_rec(q, k, skip, 0, self.points.len(), &mut best);
        best
    }

    fn knn_rec(
        &self,
        q: &Point3,
        k: usize,
        skip: Option<usize>,
        lo: usize,
        hi: usize,
        best: &mut Vec<f64>,
    ) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[mid];
        if Some(self.order[mid]) != skip {
            push_bounded(best, k, dist2(q, p));
        }
        let ax = self.axis[mid] as usize;
        let diff = q[ax] - p[ax];
        let (near, far) = if diff <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(q, k, skip, near.0, near.1, best);
        if best.len() < k || diff * diff <= *best.last().unwrap() {
            self.knn_rec(q, k, skip, far.0, far.1, best);
        }
    }
}

fn push_bounded(best: &mut Vec<f64>, k: usize, d: f64) {
    if best.len() == k && d >= *best.last().unwrap() {
        return;
    }
    let pos = best.partition_point(|x| *x <= d);
    best.insert(pos, d);
    if best.len() > k {
        best.pop();
    }
}

fn build_range(points: &[Point3], order: &mut [usize], axis: &mut [u8], lo: usize, hi: usize) {
    if hi <= lo {
        return;
    }
    // split along the widest axis of the range
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for i in &order[lo..hi] {
        for a in 0..3 {
            min[a] = min[a].min(points[*i][a]);
            max[a] = max[a].max(points[*i][a]);
        }
    }
    let ax = (0..3)
        .max_by(|a, b| (max[*a] - min[*a]).total_cmp(&(max[*b] - min[*b])))
        .unwrap();
    let mid = lo + (hi - lo) / 2;
    order[lo..hi]
        .select_nth_unstable_by(mid - lo, |a, b| points[*a][ax].total_cmp(&points[*b][ax]));
    axis[mid] = ax as u8;
    build_range(points, order, axis, lo, mid);
    build_range(points, order, axis, mid + 1, hi);
}

/// Linear-scan versions of the kd-tree queries.
pub mod brute {
    use super::*;

    pub fn count_within(points: &[Point3], q: &Point3, radius: f64, skip: Option<usize>) -> usize {
        let r2 = radius * radius;
        points
            .iter()
            .enumerate()
            .filter(|(j, p)| Some(*j) != skip && dist2(q, p) <= r2)
            .count()
    }

    pub fn knn_dist2(points: &[Point3], q: &Point3, k: usize, skip: Option<usize>) -> Vec<f64> {
        let mut d: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, p)| dist2(q, p))
            .collect();
        d.sort_unstable_by(f64::total_cmp);
        d.truncate(k);
        d
    }
}

/// Neighbor queries over a point set, backed by a kd-tree unless the set is
/// small enough for a linear scan.
#[derive(Debug, Clone)]
pub enum NeighborIndex<'a> {
    Brute(&'a [Point3]),
    Tree(KdTree),
}

impl<'a> NeighborIndex<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        if points.len() <= BRUTE_FORCE_LIMIT {
            Self::Brute(points)
        } else {
            Self::Tree(KdTree::build(points))
        }
    }

    pub fn count_within(&self, q: &Point3, radius: f64, skip: Option<usize>) -> usize {
        match self {
            Self::Brute(p) => brute::count_within(p, q, radius, skip),
            Self::Tree(t) => t.count_within(q, radius, skip),
        }
    }

    pub fn has_at_least(&self, q: &Point3, radius: f64, skip: Option<usize>, n: usize) -> bool {
        match self {
            Self::Brute(p) => brute::count_within(p, q, radius, skip) >= n,
            Self::Tree(t) => t.has_at_least(q, radius, skip, n),
        }
    }

    pub fn knn_dist2(&self, q: &Point3, k: usize, skip: Option<usize>) -> Vec<f64> {
        match self {
            Self::Brute(p) => brute::knn_dist2(p, q, k, skip),
            Self::Tree(t) => t.knn_dist2(q, k, skip),
        }
    }
}
