//! The `run` verb: scene -> affinity -> solver -> pose distribution ->
//! metrics against the randomized reference, over several repetitions.

use std::path::Path;
use std::time::Instant;

use assoc_core::PoseDistribution;

use crate::args::RunArgs;
use crate::config::{derive_seed, ExperimentConfig, SolverKind};
use crate::error::{CliError, CliResult};
use crate::output::{
    aggregate_metrics, print_metric_table, write_distribution_files, write_histograms, write_json,
    Aggregate, DistributionSummary, RepOutput, RunOutput, RunTiming,
};
use crate::pipeline::{
    build_problem, distribution_from_cliques, metric_records, reference_distribution, run_oracle,
    run_particle_solver, Problem,
};

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let config = crate::args::resolve_config(&args.common, &args.scene, &args.solver)?;
    let out_dir = &args.common.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io("create out dir", e))?;
    let cache_dir = args
        .solver
        .cache_dir
        .clone()
        .unwrap_or_else(|| out_dir.join("ref_cache"));

    let started = Instant::now();
    let problem = build_problem(&config)?;
    println!(
        "scene: |S|={} |T|={} candidates={}",
        problem.s.len(),
        problem.t.len(),
        problem.affinity.n()
    );

    match config.solver {
        SolverKind::RansacRef => run_reference_only(&config, &problem, out_dir, &cache_dir, started),
        SolverKind::OracleBk => run_oracle_bk(&config, &problem, out_dir, &cache_dir, started),
        _ => run_particle(&config, &problem, out_dir, &cache_dir, started),
    }
}

fn run_particle(
    config: &ExperimentConfig,
    problem: &Problem,
    out_dir: &Path,
    cache_dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let want_metrics = !config.metrics.is_empty();
    let (reference, ref_stats, reference_s) = if want_metrics {
        let (dist, stats, secs) = reference_distribution(config, problem, Some(cache_dir))?;
        if dist.is_empty() {
            return Err(CliError::EmptyDistribution(
                "reference generator accepted no proposals; cannot compute metrics".into(),
            ));
        }
        (Some(dist), Some(stats), secs)
    } else {
        (None, None, 0.0)
    };

    let mut reps = Vec::new();
    let mut per_rep_metrics = Vec::new();
    let mut per_rep_s = Vec::new();
    let mut merged = PoseDistribution::default();
    for rep in 0..config.repetitions {
        let seed = derive_seed(config.seed, rep as u64);
        let rep_started = Instant::now();
        let run = run_particle_solver(config, problem, seed)?;
        let dist = distribution_from_cliques(config, problem, &run.cliques);
        per_rep_s.push(rep_started.elapsed().as_secs_f64());

        let metrics = match &reference {
            Some(reference) if !dist.is_empty() => {
                metric_records(&config.metrics, config.mmd_bandwidth, &dist, reference)?
            }
            _ => Vec::new(),
        };
        if !metrics.is_empty() {
            per_rep_metrics.push(metrics.clone());
        }
        for (pose, mult) in dist.iter() {
            merged.push_merged(*pose, mult, config.merge_tolerance());
        }
        reps.push(RepOutput {
            rep,
            seed,
            distribution: DistributionSummary {
                modes: dist.len(),
                total_multiplicity: dist.total_multiplicity(),
                degenerate_cliques: run.cliques.len() as u64 - dist.total_multiplicity(),
            },
            solver_report: Some(run.report),
            metrics,
        });
    }

    let aggregate = Aggregate {
        metrics: aggregate_metrics(&per_rep_metrics),
        reference: ref_stats,
        oracle_clique_count: None,
    };
    print_metric_table(&aggregate.metrics);

    let output = RunOutput {
        config: config.resolved(),
        reps,
        aggregate,
        timing: RunTiming {
            total_s: started.elapsed().as_secs_f64(),
            reference_s,
            per_rep_s,
        },
    };
    write_json(&out_dir.join("report.json"), &output)?;
    write_distribution_files(out_dir, &merged)?;
    write_histograms(out_dir, &merged)?;

    if merged.is_empty() {
        return Err(CliError::EmptyDistribution(
            "no repetition produced a non-degenerate pose".into(),
        ));
    }
    println!(
        "wrote report.json, distribution.{{json,csv}}, hist_*.csv to {}",
        out_dir.display()
    );
    Ok(())
}

fn run_oracle_bk(
    config: &ExperimentConfig,
    problem: &Problem,
    out_dir: &Path,
    cache_dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let cliques = run_oracle(config, problem)?;
    write_json(&out_dir.join("cliques.json"), &cliques)?;
    println!("oracle: {} maximal cliques", cliques.len());

    let dist = distribution_from_cliques(config, problem, &cliques);
    let (metrics, ref_stats, reference_s) = if !config.metrics.is_empty() && !dist.is_empty() {
        let (reference, stats, secs) = reference_distribution(config, problem, Some(cache_dir))?;
        if reference.is_empty() {
            return Err(CliError::EmptyDistribution(
                "reference generator accepted no proposals; cannot compute metrics".into(),
            ));
        }
        (
            metric_records(&config.metrics, config.mmd_bandwidth, &dist, &reference)?,
            Some(stats),
            secs,
        )
    } else {
        (Vec::new(), None, 0.0)
    };

    let aggregate = Aggregate {
        metrics: aggregate_metrics(&[metrics.clone()].into_iter().filter(|m| !m.is_empty()).collect::<Vec<_>>()),
        reference: ref_stats,
        oracle_clique_count: Some(cliques.len()),
    };
    print_metric_table(&aggregate.metrics);
    let output = RunOutput {
        config: config.resolved(),
        reps: vec![RepOutput {
            rep: 0,
            seed: config.seed,
            solver_report: None,
            distribution: DistributionSummary {
                modes: dist.len(),
                total_multiplicity: dist.total_multiplicity(),
                degenerate_cliques: cliques.len() as u64 - dist.total_multiplicity(),
            },
            metrics,
        }],
        aggregate,
        timing: RunTiming {
            total_s: started.elapsed().as_secs_f64(),
            reference_s,
            per_rep_s: Vec::new(),
        },
    };
    write_json(&out_dir.join("report.json"), &output)?;
    write_distribution_files(out_dir, &dist)?;
    write_histograms(out_dir, &dist)?;
    if dist.is_empty() {
        return Err(CliError::EmptyDistribution(
            "no maximal clique could be lifted to a pose".into(),
        ));
    }
    Ok(())
}

fn run_reference_only(
    config: &ExperimentConfig,
    problem: &Problem,
    out_dir: &Path,
    cache_dir: &Path,
    started: Instant,
) -> CliResult<()> {
    let (dist, stats, reference_s) = reference_distribution(config, problem, Some(cache_dir))?;
    println!(
        "reference: {} trials, {} accepted, {} kept, {} modes",
        stats.trials,
        stats.accepted,
        stats.kept,
        dist.len()
    );
    let output = RunOutput {
        config: config.resolved(),
        reps: vec![RepOutput {
            rep: 0,
            seed: config.seed,
            solver_report: None,
            distribution: DistributionSummary {
                modes: dist.len(),
                total_multiplicity: dist.total_multiplicity(),
                degenerate_cliques: 0,
            },
            metrics: Vec::new(),
        }],
        aggregate: Aggregate {
            metrics: Vec::new(),
            reference: Some(stats.clone()),
            oracle_clique_count: None,
        },
        timing: RunTiming {
            total_s: started.elapsed().as_secs_f64(),
            reference_s,
            per_rep_s: Vec::new(),
        },
    };
    write_json(&out_dir.join("report.json"), &output)?;
    write_distribution_files(out_dir, &dist)?;
    write_histograms(out_dir, &dist)?;
    if stats.empty {
        eprintln!("warning: no proposal passed the acceptance gate");
        return Err(CliError::EmptyDistribution(
            "reference generator accepted no proposals".into(),
        ));
    }
    Ok(())
}
