// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mavtrack::core::sim::{compute_metrics, ScenarioConfig};
use mavtrack::{config, csvio, octree_io, CliError};

/// Closed-loop simulation of LiDAR-based drone tracking.
#[derive(Parser)]
#[command(name = "mavtrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its logs and report.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// `key=value` with a dotted key, e.g. `tracker.sigma_pred=0.2`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Reuse a saved background map instead of scanning.
        #[arg(long)]
        background: Option<PathBuf>,
        /// Save the background map used by this run.
        #[arg(long)]
        save_background: Option<PathBuf>,
    },
    /// Compute metrics from a track log and a truth log.
    Metrics {
        tracklog: PathBuf,
        truthlog: PathBuf,
        /// Scenario supplying the metric settings and sensor position.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the report; printed only when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a scenario once per value of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, num_args = 1.., required = true)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the full scenario schema with default values.
    DescribeConfig,
}

fn with_seed(overrides: &[String], seed: Option<u64>) -> Vec<String> {
    let mut o = overrides.to_vec();
    if let Some(s) = seed {
        o.push(format!("seed={s}"));
    }
    o
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn run(
    cfg_path: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    overrides: &[String],
    background: Option<&Path>,
    save_background: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = config::parse_config(cfg_path, &with_seed(overrides, seed))?;
    let bg = match background {
        Some(p) => octree_io::load_octree(p)?,
        None => mavtrack::core::sim::prepare_background(&cfg)?,
    };
    if let Some(p) = save_background {
        octree_io::save_octree(p, &bg)?;
    }
    let out = mavtrack::run_to_dir(&cfg, Some(&bg), out_dir)?;
    let mut stdout = std::io::stdout().lock();
    csvio::print_report(&mut stdout, &out.report).map_err(stdout_err)
}

fn metrics(
    track: &Path,
    truth: &Path,
    cfg: Option<&Path>,
    out_dir: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = match cfg {
        Some(p) => config::parse_config(p, &[])?,
        None => ScenarioConfig::default(),
    };
    let track = csvio::read_track(track)?;
    let truth = csvio::read_truth(truth)?;
    let report = compute_metrics(&track, &truth, &[], &[], &cfg)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        csvio::write_report(&dir.join(mavtrack::REPORT_FILE), &report)?;
    }
    let mut stdout = std::io::stdout().lock();
    csvio::print_report(&mut stdout, &report).map_err(stdout_err)
}

fn sweep(
    cfg_path: &Path,
    param: &str,
    values: &[String],
    seed: Option<u64>,
    out_dir: &Path,
    overrides: &[String],
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let mut o = with_seed(overrides, seed);
        o.push(format!("{param}={v}"));
        let cfg = config::parse_config(cfg_path, &o)?;
        let dir = out_dir.join(format!("{i:03}"));
        let out = mavtrack::run_to_dir(&cfg, None, &dir)?;
        let scalars = out.report.scalars();
        let mut row = vec![v.clone()];
        row.extend(
            scalars
                .iter()
                .map(|(_, x)| x.map(csvio::fmt_f64).unwrap_or_default()),
        );
        println!(
            "{param}={v}  rmse={}  detection_distance={}",
            out.report
                .rmse
                .map(csvio::fmt_f64)
                .unwrap_or_else(|| "-".into()),
            out.report
                .detection_distance
                .map(csvio::fmt_f64)
                .unwrap_or_else(|| "-".into())
        );
        rows.push(row);
    }
    let path = out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|source| CliError::Csv {
        path: path.clone(),
        source,
    })?;
    let mut header = vec![param.to_string()];
    header.extend(
        mavtrack::core::sim::MetricsReport::default()
            .scalars()
            .iter()
            .map(|(k, _)| k.to_string()),
    );
    w.write_record(&header).map_err(|source| CliError::Csv {
        path: path.clone(),
        source,
    })?;
    for r in rows {
        w.write_record(&r).map_err(|source| CliError::Csv {
            path: path.clone(),
            source,
        })?;
    }
    w.flush().map_err(|source| CliError::Io { path, source })
}

fn describe() -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "# mavtrack scenario file (TOML). Every key is optional; the values below\n\
         # are the defaults. Unknown keys are rejected. Units: meters, seconds,\n\
         # radians, Hz. `duration` defaults to the end of the target's pattern.\n\
         # target.pattern: vertical | horizontal | fast | lost_and_found | range_sweep\n\
         # scene.environment: indoor | outdoor\n\
         # sensor.pattern: {{ kind = \"rosette\" }} or\n\
         #   {{ kind = \"rings\", rings = 16, vertical_fov = 0.5236, rotation_hz = 10.0 }}\n"
    )
    .map_err(stdout_err)?;
    write!(out, "{}", config::default_config_toml()).map_err(stdout_err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out_dir,
            overrides,
            background,
            save_background,
        } => run(
            config,
            *seed,
            out_dir,
            overrides,
            background.as_deref(),
            save_background.as_deref(),
        ),
        Command::Metrics {
            tracklog,
            truthlog,
            config,
            out_dir,
        } => metrics(tracklog, truthlog, config.as_deref(), out_dir.as_deref()),
        Command::Sweep {
            config,
            param,
            values,
            seed,
            out_dir,
            overrides,
        } => sweep(config, param, values, *seed, out_dir, overrides),
        Command::DescribeConfig => describe(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
