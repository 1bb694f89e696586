use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::results::{read_drift_rows, read_result_rows, DriftRow, ResultRow};
use crate::analysis::{f_star, lambda_star, locate_u_shape, summarize, Bootstrap, SummaryStats, UShape};
use crate::engine::Variant;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMode {
    /// Mean F over `f_star(n)` per size.
    Scaling,
    /// Minimum of mean F over the lambda grid, per size.
    UShape,
    /// Bootstrap intervals of mean F compared between two result files.
    Unbiasedness,
    /// Gain statistics of drift probes.
    Drift,
}

impl ReportMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportMode::Scaling => "scaling",
            ReportMode::UShape => "u-shape",
            ReportMode::Unbiasedness => "unbiasedness",
            ReportMode::Drift => "drift",
        }
    }
}

impl FromStr for ReportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(ReportMode::Scaling),
            "u-shape" | "ushape" | "u_shape" => Ok(ReportMode::UShape),
            "unbiasedness" => Ok(ReportMode::Unbiasedness),
            "drift" => Ok(ReportMode::Drift),
            other => Err(invalid(format!("unknown report mode {other:?}"))),
        }
    }
}

/// Identifies a grid cell in a results file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub n: usize,
    pub lambda: usize,
    pub k: f64,
    pub r: f64,
    pub variant: Variant,
}

type OrdKey = (usize, usize, u64, u64, Variant);

impl CellKey {
    fn ord(&self) -> OrdKey {
        (self.n, self.lambda, self.k.to_bits(), self.r.to_bits(), self.variant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub runs: usize,
    pub successes: usize,
    pub evaluations: SummaryStats,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub key: CellKey,
    pub mean_f: f64,
    pub f_star: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub rows: Vec<ScalingRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub max_over_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UShapeSummary {
    pub n: usize,
    pub r: f64,
    pub variant: Variant,
    pub lambda_star: f64,
    pub curve: Vec<(f64, f64)>,
    pub shape: UShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbiasedCell {
    pub key: CellKey,
    pub first: SummaryStats,
    pub second: SummaryStats,
    pub overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftCell {
    pub key: CellKey,
    pub d0: usize,
    pub probes: usize,
    pub mean_gain: f64,
    pub gain_std_error: f64,
    pub mean_ell: f64,
    pub max_gain: usize,
    /// Probes with `gain > ell`.
    pub cap_violations: usize,
    /// Fraction of probes with `gain >= d0 / 2`.
    pub halving_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: ReportMode,
    pub sources: Vec<PathBuf>,
    pub cells: Vec<CellSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub u_shape: Vec<UShapeSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unbiasedness: Vec<UnbiasedCell>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub drift: Vec<DriftCell>,
}

fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_result_rows(BufReader::new(File::open(path)?), path)
}

fn summarize_cells(rows: &[ResultRow], bootstrap: Bootstrap) -> Result<Vec<CellSummary>> {
    let mut groups: BTreeMap<OrdKey, (CellKey, Vec<&ResultRow>)> = BTreeMap::new();
    for row in rows {
        let key = CellKey {
            n: row.n,
            lambda: row.lambda,
            k: row.k,
            r: row.r,
            variant: row.variant,
        };
        groups.entry(key.ord()).or_insert_with(|| (key, Vec::new())).1.push(row);
    }
    groups
        .into_values()
        .map(|(key, rows)| {
            let f: Vec<f64> = rows.iter().map(|r| r.evaluations as f64).collect();
            Ok(CellSummary {
                key,
                runs: rows.len(),
                successes: rows.iter().filter(|r| r.success).count(),
                evaluations: summarize(&f, bootstrap)?,
                mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / rows.len() as f64,
            })
        })
        .collect()
}

fn missing(mode: ReportMode, reason: impl Into<String>) -> Error {
    Error::MissingCells {
        mode: mode.as_str(),
        reason: reason.into(),
    }
}

fn scaling(cells: &[CellSummary]) -> Result<ScalingSummary> {
    let mut sizes: Vec<usize> = cells.iter().map(|c| c.key.n).collect();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(missing(ReportMode::Scaling, "need results for at least two sizes"));
    }
    let rows: Vec<ScalingRow> = cells
        .iter()
        .map(|c| {
            let fs = f_star(c.key.n as f64);
            ScalingRow {
                key: c.key,
                mean_f: c.evaluations.mean,
                f_star: fs,
                ratio: c.evaluations.mean / fs,
            }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    Ok(ScalingSummary {
        rows,
        max_ratio,
        min_ratio,
        max_over_min: max_ratio / min_ratio,
    })
}

fn u_shape(cells: &[CellSummary]) -> Result<Vec<UShapeSummary>> {
    let mut groups: BTreeMap<(usize, u64, Variant), Vec<&CellSummary>> = BTreeMap::new();
    for c in cells {
        groups.entry((c.key.n, c.key.r.to_bits(), c.key.variant)).or_default().push(c);
    }
    let mut out = Vec::new();
    for ((n, r_bits, variant), group) in groups {
        let mut lambdas: Vec<usize> = group.iter().map(|c| c.key.lambda).collect();
        lambdas.sort_unstable();
        let distinct = {
            let mut d = lambdas.clone();
            d.dedup();
            d.len()
        };
        if distinct != lambdas.len() {
            return Err(missing(
                ReportMode::UShape,
                format!("several k values share a lambda at n = {n}; sweep one k rule at a time"),
            ));
        }
        if distinct < 3 {
            continue;
        }
        let curve: Vec<(f64, f64)> = group
            .iter()
            .map(|c| (c.key.lambda as f64, c.evaluations.mean))
            .collect();
        let shape = locate_u_shape(&curve)?;
        let mut curve = curve;
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.push(UShapeSummary {
            n,
            r: f64::from_bits(r_bits),
            variant,
            lambda_star: lambda_star(n as f64),
            curve,
            shape,
        });
    }
    if out.is_empty() {
        return Err(missing(ReportMode::UShape, "need at least three lambda values for one size"));
    }
    Ok(out)
}

fn drift_cells(rows: &[DriftRow]) -> Vec<DriftCell> {
    let mut groups: BTreeMap<(OrdKey, usize), (CellKey, Vec<&DriftRow>)> = BTreeMap::new();
    for row in rows {
        let key = CellKey {
            n: row.n,
            lambda: row.lambda,
            k: row.k,
            r: row.r,
            variant: row.variant,
        };
        groups
            .entry((key.ord(), row.d0))
            .or_insert_with(|| (key, Vec::new()))
            .1
            .push(row);
    }
    groups
        .into_iter()
        .map(|((_, d0), (key, rows))| {
            let m = rows.len() as f64;
            let mean_gain = rows.iter().map(|r| r.gain as f64).sum::<f64>() / m;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r.gain as f64 - mean_gain).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            DriftCell {
                key,
                d0,
                probes: rows.len(),
                mean_gain,
                gain_std_error: (var / m).sqrt(),
                mean_ell: rows.iter().map(|r| r.ell as f64).sum::<f64>() / m,
                max_gain: rows.iter().map(|r| r.gain).max().unwrap_or(0),
                cap_violations: rows.iter().filter(|r| r.gain > r.ell).count(),
                halving_frequency: rows.iter().filter(|r| d0 > 0 && 2 * r.gain >= d0).count() as f64 / m,
            }
        })
        .collect()
}

/// Aggregates result files for one report mode. Unbiasedness takes two
/// files (one per target) and compares matching cells; drift takes probe
/// files written by the `drift` command; the other modes take any number
/// of result files.
pub fn report(paths: &[PathBuf], mode: ReportMode, bootstrap: Bootstrap) -> Result<Report> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("report needs at least one results file"));
    }
    let mut report = Report {
        mode,
        sources: paths.to_vec(),
        cells: Vec::new(),
        scaling: None,
        u_shape: Vec::new(),
        unbiasedness: Vec::new(),
        drift: Vec::new(),
    };
    match mode {
        ReportMode::Drift => {
            let mut rows = Vec::new();
            for p in paths {
                rows.extend(read_drift_rows(BufReader::new(File::open(p)?), p)?);
            }
            if rows.is_empty() {
                return Err(missing(mode, "no drift probes"));
            }
            report.drift = drift_cells(&rows);
        }
        ReportMode::Unbiasedness => {
            if paths.len() != 2 {
                return Err(missing(mode, "give exactly two result files, one per target"));
            }
            let first = summarize_cells(&load_results(&paths[0])?, bootstrap)?;
            let second = summarize_cells(&load_results(&paths[1])?, bootstrap)?;
            for a in &first {
                if let Some(b) = second.iter().find(|b| b.key.ord() == a.key.ord()) {
                    report.unbiasedness.push(UnbiasedCell {
                        key: a.key,
                        first: a.evaluations,
                        second: b.evaluations,
                        overlap: a.evaluations.ci_overlaps(&b.evaluations),
                    });
                }
            }
            if report.unbiasedness.is_empty() {
                return Err(missing(mode, "the two files share no cell"));
            }
            report.cells = first;
            report.cells.extend(second);
        }
        ReportMode::Scaling | ReportMode::UShape => {
            let mut rows = Vec::new();
            for p in paths {
                rows.extend(load_results(p)?);
            }
            if rows.is_empty() {
                return Err(missing(mode, "no result rows"));
            }
            report.cells = summarize_cells(&rows, bootstrap)?;
            if mode == ReportMode::Scaling {
                report.scaling = Some(scaling(&report.cells)?);
            } else {
                report.u_shape = u_shape(&report.cells)?;
            }
        }
    }
    Ok(report)
}

impl Report {
    /// Plain-text rendering for terminals.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "report mode: {}", self.mode.as_str());
        if !self.cells.is_empty() {
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>8} {:>6} {:>11} {:>5} {:>5} {:>14} {:>14} {:>12} {:>27}",
                "n", "lambda", "k", "r", "variant", "runs", "ok", "mean F", "median F", "se", "95% CI"
            );
            for c in &self.cells {
                let e = &c.evaluations;
                let _ = writeln!(
                    s,
                    "{:>8} {:>6} {:>8.3} {:>6.3} {:>11} {:>5} {:>5} {:>14.1} {:>14.1} {:>12.1} {:>27}",
                    c.key.n,
                    c.key.lambda,
                    c.key.k,
                    c.key.r,
                    c.key.variant.as_str(),
                    c.runs,
                    c.successes,
                    e.mean,
                    e.median,
                    e.std_error,
                    format!("[{:.1}, {:.1}]", e.ci_low, e.ci_high)
                );
            }
        }
        if let Some(sc) = &self.scaling {
            let _ = writeln!(s, "\nscaling: mean F / f_star(n)");
            for r in &sc.rows {
                let _ = writeln!(s, "  n={:<8} mean F={:<14.1} f*={:<14.1} ratio={:.4}", r.key.n, r.mean_f, r.f_star, r.ratio);
            }
            let _ = writeln!(s, "  max/min ratio = {:.4}", sc.max_over_min);
        }
        for u in &self.u_shape {
            let _ = writeln!(
                s,
                "\nu-shape n={} r={} {}: argmin lambda={} (lambda*={:.3}), min mean F={:.1}, left ratio={:.3}, right ratio={:.3}",
                u.n,
                u.r,
                u.variant.as_str(),
                u.shape.argmin_lambda,
                u.lambda_star,
                u.shape.min_value,
                u.shape.left_ratio,
                u.shape.right_ratio
            );
        }
        if !self.unbiasedness.is_empty() {
            let _ = writeln!(s, "\nunbiasedness: bootstrap 95% CIs of mean F");
            for u in &self.unbiasedness {
                let _ = writeln!(
                    s,
                    "  n={} lambda={} k={:.3} r={:.3}: [{:.1}, {:.1}] vs [{:.1}, {:.1}] overlap={}",
                    u.key.n, u.key.lambda, u.key.k, u.key.r, u.first.ci_low, u.first.ci_high, u.second.ci_low, u.second.ci_high, u.overlap
                );
            }
        }
        if !self.drift.is_empty() {
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>8} {:>6} {:>8} {:>8} {:>12} {:>10} {:>10} {:>8} {:>10} {:>10}",
                "n", "lambda", "k", "r", "d0", "probes", "mean gain", "se", "mean ell", "max", "gain>ell", "halving"
            );
            for d in &self.drift {
                let _ = writeln!(
                    s,
                    "{:>8} {:>6} {:>8.3} {:>6.3} {:>8} {:>8} {:>12.5} {:>10.5} {:>10.4} {:>8} {:>10} {:>10.2e}",
                    d.key.n, d.key.lambda, d.key.k, d.key.r, d.d0, d.probes, d.mean_gain, d.gain_std_error, d.mean_ell, d.max_gain, d.cap_violations, d.halving_frequency
                );
            }
        }
        s
    }
}
