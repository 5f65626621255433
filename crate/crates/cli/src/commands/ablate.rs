//! The `ablate` verb: cross-product sweep over particle count, step size,
//! and kernel bandwidth, one CSV row per grid cell and repetition.

use std::fmt::Write as _;
use std::time::Instant;

use crate::args::AblateArgs;
use crate::config::{derive_seed, MetricKind, SolverKind};
use crate::error::{CliError, CliResult};
use crate::pipeline::{
    build_problem, distribution_from_cliques, metric_records, reference_distribution,
    run_particle_solver,
};

pub fn cmd_ablate(args: &AblateArgs) -> CliResult<()> {
    let config = crate::args::resolve_config(&args.common, &args.scene, &args.solver)?;
    if matches!(config.solver, SolverKind::OracleBk | SolverKind::RansacRef) {
        return Err(CliError::Config(
            "ablate sweeps particle solvers only (baseline, stein, langevin)".into(),
        ));
    }
    let out_dir = &args.common.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io("create out dir", e))?;
    let cache_dir = args
        .solver
        .cache_dir
        .clone()
        .unwrap_or_else(|| out_dir.join("ref_cache"));

    let problem = build_problem(&config)?;
    let resolved = config.solver_config(0);
    let particles = args
        .grid_particles
        .clone()
        .unwrap_or_else(|| vec![resolved.n_particles]);
    let steps = args
        .grid_steps
        .clone()
        .unwrap_or_else(|| vec![resolved.step_size]);
    let bandwidths = args
        .grid_bandwidths
        .clone()
        .unwrap_or_else(|| vec![resolved.kernel_bandwidth]);

    let reference = if config.metrics.is_empty() {
        None
    } else {
        let (dist, _, _) = reference_distribution(&config, &problem, Some(&cache_dir))?;
        if dist.is_empty() {
            return Err(CliError::EmptyDistribution(
                "reference generator accepted no proposals; cannot compute metrics".into(),
            ));
        }
        Some(dist)
    };

    let metric_columns = [
        (MetricKind::Ed, "translation"),
        (MetricKind::Ed, "rotation"),
        (MetricKind::Mmd, "translation"),
        (MetricKind::Mmd, "rotation"),
        (MetricKind::W1, "translation"),
        (MetricKind::W1, "rotation"),
    ];
    let mut csv = String::from(
        "n_particles,step_size,kernel_bandwidth,rep,runtime_s,status,\
         ed_trans,ed_rot,mmd_trans,mmd_rot,w1_trans,w1_rot\n",
    );

    let mut job = 0u64;
    let mut failures = 0usize;
    for &n_particles in &particles {
        for &step_size in &steps {
            for &kernel_bandwidth in &bandwidths {
                for rep in 0..config.repetitions {
                    let mut cell = config.clone();
                    cell.n_particles = Some(n_particles);
                    cell.step_size = Some(step_size);
                    cell.kernel_bandwidth = Some(kernel_bandwidth);
                    let seed = derive_seed(config.seed, job);
                    job += 1;

                    let started = Instant::now();
                    let outcome = run_cell(&cell, &problem, seed, reference.as_ref());
                    let runtime = started.elapsed().as_secs_f64();
                    write!(
                        csv,
                        "{n_particles},{step_size},{kernel_bandwidth},{rep},{runtime:.4}"
                    )
                    .expect("writing to string cannot fail");
                    match outcome {
                        Ok(records) => {
                            csv.push_str(",ok");
                            for (kind, component) in &metric_columns {
                                let value = records.iter().find(|r| {
                                    r.metric == kind.name() && r.component == *component
                                });
                                match value {
                                    Some(r) => {
                                        write!(csv, ",{}", r.value)
                                            .expect("writing to string cannot fail")
                                    }
                                    None => csv.push(','),
                                }
                            }
                            csv.push('\n');
                        }
                        Err(e) => {
                            failures += 1;
                            eprintln!(
                                "cell n_particles={n_particles} step={step_size} \
                                 bandwidth={kernel_bandwidth} rep={rep} failed: {e}"
                            );
                            csv.push_str(",failed,,,,,,\n");
                        }
                    }
                }
            }
        }
    }

    let path = out_dir.join("ablation.csv");
    std::fs::write(&path, csv).map_err(|e| CliError::io("write ablation.csv", e))?;
    println!(
        "wrote {} ({} cells x {} reps, {failures} failed rows)",
        path.display(),
        particles.len() * steps.len() * bandwidths.len(),
        config.repetitions
    );
    Ok(())
}

fn run_cell(
    cell: &crate::config::ExperimentConfig,
    problem: &crate::pipeline::Problem,
    seed: u64,
    reference: Option<&assoc_core::PoseDistribution>,
) -> CliResult<Vec<assoc_core::MetricRecord>> {
    let run = run_particle_solver(cell, problem, seed)?;
    let dist = distribution_from_cliques(cell, problem, &run.cliques);
    if dist.is_empty() {
        return Err(CliError::EmptyDistribution(
            "solver returned no usable solutions".into(),
        ));
    }
    match reference {
        Some(reference) => metric_records(&cell.metrics, cell.mmd_bandwidth, &dist, reference),
        None => Ok(Vec::new()),
    }
}
