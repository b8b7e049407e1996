// SPDX-License-Identifier: Apache-2.0

//! Background maps on disk, in the octree's own binary layout.

use std::path::Path;

use mavtrack_core::background::OccupancyOctree;

use crate::error::CliError;

pub fn save_octree(path: &Path, tree: &OccupancyOctree) -> Result<(), CliError> {
    std::fs::write(path, tree.to_bytes()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_octree(path: &Path) -> Result<OccupancyOctree, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    OccupancyOctree::from_bytes(&bytes).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
