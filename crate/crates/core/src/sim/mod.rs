// SPDX-License-Identifier: Apache-2.0

//! Closed-loop scenarios: background mapping, then tracking with the turret
//! following the filter estimate.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{Environment, MetricsParams, ScenarioConfig, SceneSpec, TargetSpec, Timing};
pub use metrics::{compute_metrics, HistogramBin, MetricsReport};
pub use run::{
    prepare_background, run_scenario, run_with_background, RunOutput, ScanRecord, TrackRecord,
    TruthRecord, VisibilityChange,
};
