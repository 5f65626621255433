//! Report and data-file writers. Every wall-clock value in any emitted JSON
//! lives under a field named `timing`, so stripping those fields yields
//! byte-identical output across reruns with the same seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use assoc_core::{MetricRecord, PoseDistribution, RansacStats, RunReport};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Top-level report written by `run` and embedded per repetition.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub reps: Vec<RepOutput>,
    pub aggregate: Aggregate,
    pub timing: RunTiming,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RepOutput {
    pub rep: usize,
    pub seed: u64,
    /// Solver run report (absent for the oracle and reference solvers).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_report: Option<RunReport>,
    pub distribution: DistributionSummary,
    pub metrics: Vec<MetricRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub modes: usize,
    pub total_multiplicity: u64,
    /// Cliques that could not be lifted to a pose (fewer than three
    /// associations or degenerate geometry).
    pub degenerate_cliques: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub metrics: Vec<MetricAggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<RansacStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_clique_count: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub component: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct RunTiming {
    pub total_s: f64,
    pub reference_s: f64,
    pub per_rep_s: Vec<f64>,
}

/// Mean and sample standard deviation per (metric, component) across reps.
pub fn aggregate_metrics(per_rep: &[Vec<MetricRecord>]) -> Vec<MetricAggregate> {
    let mut out: Vec<MetricAggregate> = Vec::new();
    let Some(first) = per_rep.first() else {
        return out;
    };
    for (idx, record) in first.iter().enumerate() {
        let values: Vec<f64> = per_rep.iter().map(|rep| rep[idx].value).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        out.push(MetricAggregate {
            metric: record.metric.clone(),
            component: record.component.clone(),
            mean,
            std,
        });
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| CliError::io("write", e))
}

pub fn write_distribution_files(dir: &Path, dist: &PoseDistribution) -> CliResult<()> {
    let json = dist
        .to_json()
        .map_err(|e| CliError::Io(format!("serialize distribution: {e}")))?;
    std::fs::write(dir.join("distribution.json"), json)
        .map_err(|e| CliError::io("write distribution.json", e))?;
    std::fs::write(dir.join("distribution.csv"), dist.to_csv())
        .map_err(|e| CliError::io("write distribution.csv", e))
}

/// Histogram with explicit bin edges: `bin_left,bin_right,mass` rows, mass
/// normalized to 1 over the distribution's multiplicity.
fn histogram_csv(values: &[(f64, f64)], width: f64, range: Option<(f64, f64)>) -> String {
    let mut out = String::from("bin_left,bin_right,mass\n");
    if values.is_empty() {
        return out;
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
            let lo = (lo / width).floor() * width;
            let mut hi = (hi / width).ceil() * width;
            if hi <= lo {
                hi = lo + width;
            }
            (lo, hi)
        }
    };
    let bins = ((hi - lo) / width).round().max(1.0) as usize;
    let mut mass = vec![0.0f64; bins];
    let total: f64 = values.iter().map(|v| v.1).sum();
    for &(v, m) in values {
        let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        mass[idx] += m / total;
    }
    for (i, m) in mass.iter().enumerate() {
        let left = lo + i as f64 * width;
        out.push_str(&format!("{left},{},{m}\n", left + width));
    }
    out
}

/// Per-axis histograms: translation x, y, z (0.25 m bins over the data
/// range) and yaw about +z (5 degree bins over the full circle).
pub fn write_histograms(dir: &Path, dist: &PoseDistribution) -> CliResult<()> {
    let collect = |f: &dyn Fn(&assoc_core::Pose) -> f64| -> Vec<(f64, f64)> {
        dist.iter().map(|(p, m)| (f(p), m as f64)).collect()
    };
    let axes: [(&str, Vec<(f64, f64)>, f64, Option<(f64, f64)>); 4] = [
        ("x", collect(&|p| p.translation.x), 0.25, None),
        ("y", collect(&|p| p.translation.y), 0.25, None),
        ("z", collect(&|p| p.translation.z), 0.25, None),
        (
            "yaw",
            collect(&|p| p.yaw().to_degrees()),
            5.0,
            Some((-180.0, 180.0)),
        ),
    ];
    for (name, values, width, range) in axes {
        let csv = histogram_csv(&values, width, range);
        std::fs::write(dir.join(format!("hist_{name}.csv")), csv)
            .map_err(|e| CliError::io("write histogram", e))?;
    }
    Ok(())
}

/// Human-readable metric table; values scaled by 100 for display only.
pub fn print_metric_table(records: &[MetricAggregate]) {
    if records.is_empty() {
        return;
    }
    println!("{:<6} {:<12} {:>12} {:>12}", "metric", "component", "mean(x100)", "std(x100)");
    for r in records {
        println!(
            "{:<6} {:<12} {:>12.4} {:>12.4}",
            r.metric,
            r.component,
            r.mean * 100.0,
            r.std * 100.0
        );
    }
}

pub fn print_record_table(records: &[MetricRecord]) {
    println!("{:<6} {:<12} {:>12}", "metric", "component", "value(x100)");
    for r in records {
        println!(
            "{:<6} {:<12} {:>12.4}",
            r.metric,
            r.component,
            r.value * 100.0
        );
    }
}
