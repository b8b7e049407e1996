// SPDX-License-Identifier: Apache-2.0

//! CSV logs and reports.
//!
//! | file | columns |
//! |------|---------|
//! | track log | `t,est_x,est_y,est_z,sigma_particles,status,pan,tilt` |
//! | truth log | `t,x,y,z,speed` |
//! | scan log | `t,n_points,target_range` |
//! | report | `metric,value` |
//! | histogram | `bin_lo,bin_hi,scans,mean_points` |
//!
//! Floats carry six significant digits. Missing report values are empty.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use mavtrack_core::sim::{HistogramBin, MetricsReport, ScanRecord, TrackRecord, TruthRecord};
use mavtrack_core::tracker::Status;
use mavtrack_core::Point3;

use crate::error::CliError;

pub const TRACK_HEADER: [&str; 8] = [
    "t",
    "est_x",
    "est_y",
    "est_z",
    "sigma_particles",
    "status",
    "pan",
    "tilt",
];
pub const TRUTH_HEADER: [&str; 5] = ["t", "x", "y", "z", "speed"];
pub const SCAN_HEADER: [&str; 3] = ["t", "n_points", "target_range"];
pub const REPORT_HEADER: [&str; 2] = ["metric", "value"];
pub const HISTOGRAM_HEADER: [&str; 4] = ["bin_lo", "bin_hi", "scans", "mean_points"];

/// Six significant digits, printed in the shortest form that reads back to
/// the rounded value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!(
                "expected columns `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err(path))
}

fn field<T: std::str::FromStr>(
    path: &Path,
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T, CliError> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        message: format!(
            "line {}: `{name}` value `{raw}` is not valid",
            rec.position().map_or(0, |p| p.line())
        ),
    })
}

fn check_increasing(path: &Path, ts: impl Iterator<Item = f64>) -> Result<(), CliError> {
    let mut last = f64::NEG_INFINITY;
    for (i, t) in ts.enumerate() {
        if t <= last {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: format!("record {} is not later than the one before it", i + 1),
            });
        }
        last = t;
    }
    Ok(())
}

pub fn write_track(path: &Path, track: &[TrackRecord]) -> Result<(), CliError> {
    write_rows(
        path,
        TRACK_HEADER,
        track.iter().map(|r| {
            [
                fmt_f64(r.t),
                fmt_f64(r.position.x),
                fmt_f64(r.position.y),
                fmt_f64(r.position.z),
                fmt_f64(r.sigma_particles),
                r.status.as_str().to_string(),
                fmt_f64(r.pan),
                fmt_f64(r.tilt),
            ]
        }),
    )
}

pub fn read_track(path: &Path) -> Result<Vec<TrackRecord>, CliError> {
    let out = read_rows(path, &TRACK_HEADER)?
        .iter()
        .map(|rec| {
            let f = |i: usize| field::<f64>(path, rec, i, TRACK_HEADER[i]);
            Ok(TrackRecord {
                t: f(0)?,
                position: Point3::new(f(1)?, f(2)?, f(3)?),
                sigma_particles: f(4)?,
                status: field::<Status>(path, rec, 5, "status")?,
                pan: f(6)?,
                tilt: f(7)?,
                misses: 0,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    check_increasing(path, out.iter().map(|r| r.t))?;
    Ok(out)
}

pub fn write_truth(path: &Path, truth: &[TruthRecord]) -> Result<(), CliError> {
    write_rows(
        path,
        TRUTH_HEADER,
        truth.iter().map(|r| {
            [
                fmt_f64(r.t),
                fmt_f64(r.position.x),
                fmt_f64(r.position.y),
                fmt_f64(r.position.z),
                fmt_f64(r.speed),
            ]
        }),
    )
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>, CliError> {
    let out = read_rows(path, &TRUTH_HEADER)?
        .iter()
        .map(|rec| {
            let f = |i: usize| field::<f64>(path, rec, i, TRUTH_HEADER[i]);
            Ok(TruthRecord {
                t: f(0)?,
                position: Point3::new(f(1)?, f(2)?, f(3)?),
                speed: f(4)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    check_increasing(path, out.iter().map(|r| r.t))?;
    Ok(out)
}

pub fn write_scans(path: &Path, scans: &[ScanRecord]) -> Result<(), CliError> {
    write_rows(
        path,
        SCAN_HEADER,
        scans.iter().map(|s| {
            [
                fmt_f64(s.t),
                s.n_points.to_string(),
                fmt_f64(s.target_range),
            ]
        }),
    )
}

pub fn write_report(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    write_rows(
        path,
        REPORT_HEADER,
        report
            .scalars()
            .into_iter()
            .map(|(k, v)| [k.to_string(), v.map(fmt_f64).unwrap_or_default()]),
    )
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<(), CliError> {
    write_rows(
        path,
        HISTOGRAM_HEADER,
        bins.iter().map(|b| {
            [
                fmt_f64(b.lo),
                fmt_f64(b.hi),
                b.scans.to_string(),
                fmt_f64(b.mean_points),
            ]
        }),
    )
}

/// Human-readable `name value` lines.
pub fn print_report(out: &mut impl Write, report: &MetricsReport) -> std::io::Result<()> {
    for (k, v) in report.scalars() {
        writeln!(
            out,
            "{k:<24} {}",
            v.map(fmt_f64).unwrap_or_else(|| "-".into())
        )?;
    }
    Ok(())
}
