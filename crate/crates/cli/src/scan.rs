//! Scans over a manifest of points: one CSV row per point and a JSON
//! summary with the non-parallelity error of each curve.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use serde::Serialize;
use uccvqe::CurveErrors;

use crate::config::{self, RunArgs, RunConfig, Source};
use crate::pipeline::{self, Failure, Report, SCHEMA_VERSION};

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Manifest: shared `key = value` settings and `point = LABEL SOURCE` lines.
    pub manifest: PathBuf,
    /// Also solve for the first excited state at every point.
    #[arg(long)]
    pub excited: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub label: String,
    pub source: Source,
}

pub const CSV_HEADER: &str =
    "label,e_vqe,e_fci,error_meh,e_vqe_exc,e_fci_exc,error_exc_meh,overlap_residual,status";

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub label: String,
    pub e_vqe: f64,
    pub e_fci: f64,
    pub error_meh: f64,
    pub e_vqe_exc: Option<f64>,
    pub e_fci_exc: Option<f64>,
    pub error_exc_meh: Option<f64>,
    pub overlap_residual: Option<f64>,
    pub status: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: &'static str,
    pub timestamp_unix: u64,
    pub manifest: String,
    pub config: RunConfig,
    pub total_points: usize,
    pub converged_points: usize,
    /// Over converged rows only; absent when none converged.
    pub npe_meh: Option<f64>,
    pub npe_exc_meh: Option<f64>,
    pub rows: Vec<Row>,
    pub reports: Vec<Report>,
}

/// Parses `point` values (`LABEL SOURCE`) with their line numbers.
pub fn parse_points(raw: &[(String, usize)], base: &Path) -> anyhow::Result<Vec<Point>> {
    if raw.is_empty() {
        bail!("manifest has no point entries");
    }
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for (value, line) in raw {
        let mut parts = value.split_whitespace();
        let (Some(label), Some(source), None) = (parts.next(), parts.next(), parts.next()) else {
            bail!("line {line}: expected point = LABEL SOURCE");
        };
        if !seen.insert(label.to_string()) {
            bail!("line {line}: duplicate label {label:?}");
        }
        points.push(Point {
            label: label.to_string(),
            source: Source::parse(source, base).with_context(|| format!("line {line}"))?,
        });
    }
    Ok(points)
}

fn row(label: &str, report: &Report) -> Row {
    let ex = report.excited.as_ref();
    Row {
        label: label.to_string(),
        e_vqe: report.ground.e_vqe,
        e_fci: report.ground.e_fci,
        error_meh: report.ground.error_meh,
        e_vqe_exc: ex.map(|e| e.e_vqe),
        e_fci_exc: ex.map(|e| e.e_fci),
        error_exc_meh: ex.map(|e| e.error_meh),
        overlap_residual: ex.map(|e| e.overlap_residual),
        status: if report.converged { "ok" } else { "not_converged" },
    }
}

fn curve_npe(rows: &[Row], pick: impl Fn(&Row) -> Option<f64>) -> anyhow::Result<Option<f64>> {
    let (labels, errors): (Vec<String>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.status == "ok")
        .filter_map(|r| pick(r).map(|e| (r.label.clone(), e)))
        .unzip();
    if errors.is_empty() {
        return Ok(None);
    }
    Ok(Some(CurveErrors::new(labels, errors)?.npe))
}

fn field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(rows: &[Row], npe: Option<f64>, npe_exc: Option<f64>) -> String {
    let mut out = format!("# schema_version={SCHEMA_VERSION}\n{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.label,
            r.e_vqe,
            r.e_fci,
            r.error_meh,
            field(r.e_vqe_exc),
            field(r.e_fci_exc),
            field(r.error_exc_meh),
            field(r.overlap_residual),
            r.status
        );
    }
    let _ = writeln!(out, "# npe_meh={}", field(npe));
    let _ = writeln!(out, "# npe_exc_meh={}", field(npe_exc));
    out
}

fn run_points(config: &RunConfig, points: &[Point]) -> Vec<Result<Report, Failure>> {
    let one = |p: &Point| pipeline::run(config, &p.source, "scan");
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(one).collect()
    }
}

/// Summary path next to the CSV: `curve.csv` gives `curve.json`.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Runs every point and returns the resolved config, the CSV text and the
/// summary.
pub fn scan(args: &ScanArgs) -> Result<(RunConfig, String, Summary), Failure> {
    if args.run.config.is_some() {
        return Err(anyhow!("scan reads its settings from the manifest; --config is not accepted").into());
    }
    if args.run.fcidump.is_some() || args.run.model.is_some() {
        return Err(anyhow!("scan points carry their own sources; drop --fcidump/--model").into());
    }
    let run = RunArgs {
        config: Some(args.manifest.clone()),
        ..args.run.clone()
    };
    let (merged, excited, raw_points) = config::load(&run, args.excited)?;
    let config = RunConfig::from_args(&merged, excited, false)?;
    if config.source.is_some() {
        return Err(anyhow!("manifest sets a shared source; list sources on point lines").into());
    }
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let points = parse_points(&raw_points, base).with_context(|| format!("in manifest {}", args.manifest.display()))?;

    let mut reports = Vec::with_capacity(points.len());
    for (point, outcome) in points.iter().zip(run_points(&config, &points)) {
        match outcome {
            Ok(r) => reports.push(r),
            Err(Failure::Input(e)) => return Err(Failure::Input(e.context(format!("point {}", point.label)))),
            Err(Failure::Mu(m)) => return Err(Failure::Mu(format!("point {}: {m}", point.label))),
        }
    }
    let rows: Vec<Row> = points.iter().zip(&reports).map(|(p, r)| row(&p.label, r)).collect();
    let npe = curve_npe(&rows, |r| Some(r.error_meh))?;
    let npe_exc = curve_npe(&rows, |r| r.error_exc_meh)?;
    let csv = to_csv(&rows, npe, npe_exc);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: "scan",
        timestamp_unix: pipeline::timestamp(),
        manifest: args.manifest.display().to_string(),
        config: config.clone(),
        total_points: rows.len(),
        converged_points: rows.iter().filter(|r| r.status == "ok").count(),
        npe_meh: npe,
        npe_exc_meh: npe_exc,
        rows,
        reports,
    };
    Ok((config, csv, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(label: &str, err: f64, status: &'static str) -> Row {
        Row {
            label: label.into(),
            e_vqe: err,
            e_fci: 0.0,
            error_meh: err,
            e_vqe_exc: None,
            e_fci_exc: None,
            error_exc_meh: None,
            overlap_residual: None,
            status,
        }
    }

    #[test]
    fn npe_is_max_minus_min() {
        let rows = [bare("a", 1.0, "ok"), bare("b", 3.0, "ok"), bare("c", 2.0, "ok")];
        assert_eq!(curve_npe(&rows, |r| Some(r.error_meh)).unwrap(), Some(2.0));
        assert_eq!(curve_npe(&rows, |r| r.error_exc_meh).unwrap(), None);
    }

    #[test]
    fn npe_skips_unconverged_rows() {
        let rows = [bare("a", 1.0, "ok"), bare("b", 30.0, "not_converged"), bare("c", 2.0, "ok")];
        assert_eq!(curve_npe(&rows, |r| Some(r.error_meh)).unwrap(), Some(1.0));
    }

    #[test]
    fn points_are_checked() {
        let base = Path::new("/m");
        let ok = parse_points(&[("R1 a.fcidump".into(), 1), ("R2 hubbard:2,1,4".into(), 2)], base).unwrap();
        assert_eq!(ok[0].source, Source::Fcidump { path: "/m/a.fcidump".into() });
        assert!(parse_points(&[], base).is_err());
        assert!(parse_points(&[("R1 a".into(), 1), ("R1 b".into(), 2)], base).is_err());
        assert!(parse_points(&[("R1".into(), 1)], base).is_err());
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[bare("a", 0.5, "ok")], Some(0.0), None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema_version=1");
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines[2], "a,0.5,0,0.5,,,,,ok");
        assert_eq!(lines[3], "# npe_meh=0");
        assert_eq!(lines[4], "# npe_exc_meh=");
    }
}
