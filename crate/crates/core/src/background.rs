// SPDX-License-Identifier: Apache-2.0

//! Static background model.
//!
//! Occupied leaves are stored as Morton keys relative to the map bounds,
//! i.e. a linear octree: leaf lookup is one hash probe, and sorting keys
//! gives octree order. Occupancy is binary. The map is built once from a
//! target-free scan of the scene and then frozen.

use alloc::vec::Vec;

use hashbrown::HashSet;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{transform_cloud, Aabb, Frame, Point3, PointCloud, SensorPose};
use crate::preprocess;

const MAGIC: &[u8; 4] = b"MVOC";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 6 * 8 + 8;
const AXIS_BITS: u32 = 21;
const AXIS_LIMIT: i64 = 1 << AXIS_BITS;

pub type VoxelIndex = [i64; 3];

#[derive(Debug, Clone)]
pub struct OccupancyOctree {
    resolution: f64,
    bounds: Aabb,
    base: VoxelIndex,
    dims: [i64; 3],
    leaves: HashSet<u64>,
}

impl PartialEq for OccupancyOctree {
    fn eq(&self, other: &Self) -> bool {
        self.resolution == other.resolution
            && self.bounds == other.bounds
            && self.leaves == other.leaves
    }
}

fn spread(v: u64) -> u64 {
    let mut x = v & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

fn compact(v: u64) -> u64 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & 0x1f_ffff;
    x
}

fn morton(rel: [i64; 3]) -> u64 {
    spread(rel[0] as u64) | spread(rel[1] as u64) << 1 | spread(rel[2] as u64) << 2
}

fn unmorton(key: u64) -> [i64; 3] {
    [
        compact(key) as i64,
        compact(key >> 1) as i64,
        compact(key >> 2) as i64,
    ]
}

impl OccupancyOctree {
    pub fn new(resolution: f64, bounds: Aabb) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::invalid("background.resolution", "must be positive"));
        }
        if (0..3).any(|i| !(bounds.max[i] >= bounds.min[i])) {
            return Err(Error::invalid(
                "background.bounds",
                "max must not be below min",
            ));
        }
        let base = voxel_index_of(&bounds.min, resolution);
        let top = voxel_index_of(&bounds.max, resolution);
        let dims = [
            top[0] - base[0] + 1,
            top[1] - base[1] + 1,
            top[2] - base[2] + 1,
        ];
        if dims.iter().any(|d| *d > AXIS_LIMIT) {
            return Err(Error::invalid(
                "background.resolution",
                "too many voxels along an axis",
            ));
        }
        Ok(Self {
            resolution,
            bounds,
            base,
            dims,
            leaves: HashSet::new(),
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    /// Number of occupied leaves.
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn voxel_index(&self, p: &Point3) -> VoxelIndex {
        voxel_index_of(p, self.resolution)
    }

    fn key(&self, idx: VoxelIndex) -> Option<u64> {
        let rel = [
            idx[0] - self.base[0],
            idx[1] - self.base[1],
            idx[2] - self.base[2],
        ];
        (0..3)
            .all(|i| rel[i] >= 0 && rel[i] < self.dims[i])
            .then(|| morton(rel))
    }

    fn index_of_key(&self, key: u64) -> VoxelIndex {
        let rel = unmorton(key);
        [
            rel[0] + self.base[0],
            rel[1] + self.base[1],
            rel[2] + self.base[2],
        ]
    }

    /// Marks the voxel containing `p`; points outside the bounds are skipped.
    pub fn insert_point(&mut self, p: &Point3) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        match self.key(self.voxel_index(p)) {
            Some(k) => {
                self.leaves.insert(k);
                true
            }
            None => false,
        }
    }

    pub fn insert_cloud(&mut self, cloud: &PointCloud) -> Result<()> {
        if cloud.frame != Frame::World {
            return Err(Error::FrameMismatch {
                expected: Frame::World,
                actual: cloud.frame,
            });
        }
        for p in &cloud.points {
            self.insert_point(&p.position);
        }
        Ok(())
    }

    pub fn is_occupied(&self, idx: VoxelIndex) -> bool {
        self.key(idx).is_some_and(|k| self.leaves.contains(&k))
    }

    pub fn is_background(&self, p: &Point3) -> bool {
        self.is_occupied(self.voxel_index(p))
    }

    /// Occupied voxel indices in lexicographic order.
    pub fn occupied(&self) -> Vec<VoxelIndex> {
        let mut v: Vec<VoxelIndex> = self.leaves.iter().map(|k| self.index_of_key(*k)).collect();
        v.sort_unstable();
        v
    }

    /// Chebyshev dilation by `radius` voxels, clipped to the bounds.
    pub fn inflate(&self, radius: u32) -> Self {
        let mut out = Self {
            leaves: HashSet::with_capacity(self.leaves.len() * (2 * radius as usize + 1).pow(3)),
            ..self.clone()
        };
        let r = radius as i64;
        for key in &self.leaves {
            let c = unmorton(*key);
            for dx in -r..=r {
                for dy in -r..=r {
                    for dz in -r..=r {
                        let rel = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if (0..3).all(|i| rel[i] >= 0 && rel[i] < self.dims[i]) {
                            out.leaves.insert(morton(rel));
                        }
                    }
                }
            }
        }
        out
    }

    /// Serializes to the documented binary layout:
    ///
    /// | bytes | content |
    /// |-------|---------|
    /// | 4     | magic `MVOC` |
    /// | 2     | version, u16 LE |
    /// | 8     | resolution, f64 LE |
    /// | 48    | bounds min xyz, max xyz, f64 LE |
    /// | 8     | voxel count, u64 LE |
    /// | 12·n  | voxel indices as i32 LE triples, lexicographically sorted |
    pub fn to_bytes(&self) -> Vec<u8> {
        let voxels = self.occupied();
        let mut out = Vec::with_capacity(HEADER_LEN + 12 * voxels.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.resolution.to_le_bytes());
        for v in self.bounds.min.iter().chain(self.bounds.max.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(voxels.len() as u64).to_le_bytes());
        for idx in voxels {
            for c in idx {
                out.extend_from_slice(&(c as i32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format("truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic"));
        }
        let mut cur = 4;
        let mut take = |n: usize| {
            let s = &bytes[cur..cur + n];
            cur += n;
            s
        };
        let version = u16::from_le_bytes(take(2).try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format("unsupported version"));
        }
        let f = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let resolution = f(take(8));
        let mut b = [0.0; 6];
        for v in &mut b {
            *v = f(take(8));
        }
        let count = u64::from_le_bytes(take(8).try_into().unwrap()) as usize;
        if bytes.len() != HEADER_LEN + count.saturating_mul(12) {
            return Err(Error::Format("voxel count does not match payload length"));
        }
        let bounds = Aabb::new(Point3::new(b[0], b[1], b[2]), Point3::new(b[3], b[4], b[5]));
        let mut tree =
            Self::new(resolution, bounds).map_err(|_| Error::Format("invalid header values"))?;
        tree.leaves.reserve(count);
        for chunk in bytes[HEADER_LEN..].chunks_exact(12) {
            let c = |i: usize| i32::from_le_bytes(chunk[i..i + 4].try_into().unwrap()) as i64;
            let key = tree
                .key([c(0), c(4), c(8)])
                .ok_or(Error::Format("voxel outside bounds"))?;
            tree.leaves.insert(key);
        }
        Ok(tree)
    }
}

fn voxel_index_of(p: &Point3, resolution: f64) -> VoxelIndex {
    [
        libm::floor(p.x / resolution) as i64,
        libm::floor(p.y / resolution) as i64,
        libm::floor(p.z / resolution) as i64,
    ]
}

pub fn insert_cloud(octree: &mut OccupancyOctree, cloud: &PointCloud) -> Result<()> {
    octree.insert_cloud(cloud)
}

pub fn inflate(octree: &OccupancyOctree, radius: u32) -> OccupancyOctree {
    octree.inflate(radius)
}

pub fn is_background(octree: &OccupancyOctree, p: &Point3) -> bool {
    octree.is_background(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct BackgroundBuildParams {
    pub near_min: f64,
    pub far_max: f64,
    /// Points at most this far above the ground are dropped.
    pub ground_margin: f64,
    /// Dilation applied after all scans are inserted, in voxels.
    pub inflation_radius: u32,
    /// Leaf edge length in meters.
    pub resolution: f64,
    /// Surveillance volume covered by the map.
    pub bounds: Aabb,
}

impl Default for BackgroundBuildParams {
    fn default() -> Self {
        Self {
            near_min: 0.5,
            far_max: 10.0,
            ground_margin: 0.15,
            inflation_radius: 1,
            resolution: 0.1,
            bounds: Aabb::new(
                Point3::new(-10.0, -10.0, -1.0),
                Point3::new(10.0, 10.0, 5.0),
            ),
        }
    }
}

impl BackgroundBuildParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_min < self.far_max) {
            return Err(Error::invalid(
                "background.near_min",
                "must be below background.far_max",
            ));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::invalid("background.resolution", "must be positive"));
        }
        Ok(())
    }
}

/// Incremental form of [`build_background`], for callers that produce scans
/// one at a time.
#[derive(Debug, Clone)]
pub struct BackgroundBuilder {
    tree: OccupancyOctree,
    params: BackgroundBuildParams,
    ground_z: Option<f64>,
    scans: usize,
}

impl BackgroundBuilder {
    pub fn new(params: &BackgroundBuildParams, ground_z: Option<f64>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            tree: OccupancyOctree::new(params.resolution, params.bounds)?,
            params: *params,
            ground_z,
            scans: 0,
        })
    }

    /// Adds a scan that is already in the world frame, taken from `origin`.
    pub fn add_world(&mut self, cloud: &PointCloud, origin: &Point3) -> Result<()> {
        let p = &self.params;
        let floor = self.ground_z.map(|g| g + p.ground_margin);
        let kept = preprocess::limit_range(cloud, p.near_min, p.far_max, floor, origin);
        self.tree.insert_cloud(&kept)?;
        self.scans += 1;
        Ok(())
    }

    pub fn add_scan(&mut self, cloud: &PointCloud, pose: &SensorPose) -> Result<()> {
        let world = transform_cloud(cloud, pose)?;
        self.add_world(&world, &pose.origin)
    }

    /// Inflates and returns the frozen map.
    pub fn finish(self) -> Result<OccupancyOctree> {
        if self.scans == 0 {
            return Err(Error::NoScans);
        }
        Ok(self.tree.inflate(self.params.inflation_radius))
    }
}

/// Builds the inflated background map from sensor-frame scans and the pose
/// each was taken from.
pub fn build_background(
    scans: &[(PointCloud, SensorPose)],
    params: &BackgroundBuildParams,
    ground_z: Option<f64>,
) -> Result<OccupancyOctree> {
    if scans.is_empty() {
        return Err(Error::NoScans);
    }
    let mut builder = BackgroundBuilder::new(params, ground_z)?;
    for (cloud, pose) in scans {
        builder.add_scan(cloud, pose)?;
    }
    builder.finish()
}
