// SPDX-License-Identifier: Apache-2.0

//! File formats, configuration and the command line for the `mavtrack`
//! simulation testbed. The algorithms live in [`mavtrack_core`].

pub mod config;
pub mod csvio;
pub mod error;
pub mod octree_io;

use std::path::{Path, PathBuf};

pub use mavtrack_core as core;
use mavtrack_core::background::OccupancyOctree;
use mavtrack_core::sim::{prepare_background, run_with_background, RunOutput, ScenarioConfig};

pub use config::{parse_config, parse_config_str};
pub use error::{CliError, ConfigError, ConfigErrorKind};

/// Output file names inside the run directory.
pub const TRACK_FILE: &str = "track.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SCANS_FILE: &str = "scans.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

/// Runs a scenario, using `background` when given, and writes every log and
/// report into `out_dir`.
pub fn run_to_dir(
    config: &ScenarioConfig,
    background: Option<&OccupancyOctree>,
    out_dir: &Path,
) -> Result<RunOutput, CliError> {
    let owned;
    let bg = match background {
        Some(b) => b,
        None => {
            owned = prepare_background(config)?;
            &owned
        }
    };
    let out = run_with_background(config, bg)?;
    write_outputs(&out, out_dir)?;
    Ok(out)
}

pub fn write_outputs(out: &RunOutput, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let p = |name: &str| -> PathBuf { out_dir.join(name) };
    csvio::write_track(&p(TRACK_FILE), &out.track)?;
    csvio::write_truth(&p(TRUTH_FILE), &out.truth)?;
    csvio::write_scans(&p(SCANS_FILE), &out.scans)?;
    csvio::write_report(&p(REPORT_FILE), &out.report)?;
    csvio::write_histogram(&p(HISTOGRAM_FILE), &out.report.histogram)
}
