//! The `compare` verb: metric report between two saved distributions.

use serde::Serialize;

use assoc_core::{MetricRecord, PoseDistribution};

use crate::args::CompareArgs;
use crate::config::MetricKind;
use crate::error::{CliError, CliResult};
use crate::output::{print_record_table, write_json};
use crate::pipeline::metric_records;

#[derive(Serialize)]
struct CompareOutput {
    a: String,
    b: String,
    records: Vec<MetricRecord>,
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let load = |path: &std::path::Path| -> CliResult<PoseDistribution> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read distribution {}: {e}", path.display()))
        })?;
        PoseDistribution::from_json(&text).map_err(|e| {
            CliError::Config(format!("cannot parse distribution {}: {e}", path.display()))
        })
    };
    let a = load(&args.dist_a)?;
    let b = load(&args.dist_b)?;
    if a.is_empty() || b.is_empty() {
        return Err(CliError::EmptyDistribution(
            "compare needs two nonempty distributions".into(),
        ));
    }
    let metrics = args
        .metrics
        .clone()
        .unwrap_or_else(|| vec![MetricKind::Ed, MetricKind::Mmd, MetricKind::W1]);
    let records = metric_records(&metrics, args.mmd_bandwidth, &a, &b)?;
    print_record_table(&records);

    std::fs::create_dir_all(&args.common.out_dir).map_err(|e| CliError::io("create out dir", e))?;
    write_json(
        &args.common.out_dir.join("compare.json"),
        &CompareOutput {
            a: args.dist_a.display().to_string(),
            b: args.dist_b.display().to_string(),
            records,
        },
    )
}
