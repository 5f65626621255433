//! Shared machinery for the run/ablate commands: affinity construction,
//! solver dispatch, reference distributions with on-disk caching, metrics.

use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use assoc_core::oracle::enumerate_maximal_cliques_capped;
use assoc_core::{
    all_pairs_candidates, binarize, build_affinity, cliques_to_distribution, energy_distance, mmd,
    ransac_reference_distribution, run_baseline, run_langevin, run_stein, wasserstein1,
    AffinityMatrix, AffinityParams, Bandwidth, Clique, GroundMetric, MetricRecord, PointSet,
    PoseDistribution, RansacStats, SolverRun,
};

use crate::config::{derive_seed, ExperimentConfig, MetricKind, SolverKind, REFERENCE_SEED_INDEX};
use crate::error::{CliError, CliResult};

pub struct Problem {
    pub s: PointSet,
    pub t: PointSet,
    pub affinity: AffinityMatrix,
}

pub fn build_problem(config: &ExperimentConfig) -> CliResult<Problem> {
    let (s, t) = config.build_scene()?;
    let candidates = all_pairs_candidates(&s, &t);
    let mut params = AffinityParams::new(config.sigma, config.epsilon);
    params.endpoint_exclusivity = config.endpoint_exclusivity;
    let affinity = build_affinity(&s, &t, &candidates, params)
        .map_err(|e| CliError::Config(format!("affinity construction failed: {e}")))?;
    Ok(Problem { s, t, affinity })
}

/// One particle-solver execution (baseline / stein / langevin).
pub fn run_particle_solver(
    config: &ExperimentConfig,
    problem: &Problem,
    seed: u64,
) -> CliResult<SolverRun> {
    let solver_cfg = config.solver_config(seed);
    let run = match config.solver {
        SolverKind::Baseline => run_baseline(&problem.affinity, &solver_cfg),
        SolverKind::Stein => run_stein(&problem.affinity, &solver_cfg),
        SolverKind::Langevin => run_langevin(&problem.affinity, &solver_cfg),
        other => {
            return Err(CliError::Config(format!(
                "{} is not a particle solver",
                other.name()
            )))
        }
    };
    run.map_err(|e| CliError::Solver(e.to_string()))
}

/// Exact maximal-clique enumeration of the binarized affinity.
pub fn run_oracle(config: &ExperimentConfig, problem: &Problem) -> CliResult<Vec<Clique>> {
    let graph = binarize(&problem.affinity, config.binarize_threshold);
    enumerate_maximal_cliques_capped(&graph, config.enumeration_cap)
        .map_err(|e| CliError::Solver(e.to_string()))
}

pub fn distribution_from_cliques(
    config: &ExperimentConfig,
    problem: &Problem,
    cliques: &[Clique],
) -> PoseDistribution {
    cliques_to_distribution(
        cliques,
        &problem.affinity,
        &problem.s,
        &problem.t,
        config.merge_tolerance(),
    )
}

/// Reference distribution, generated or loaded from the cache directory.
/// The cache key covers the scene, the generator parameters, and the seed.
pub fn reference_distribution(
    config: &ExperimentConfig,
    problem: &Problem,
    cache_dir: Option<&Path>,
) -> CliResult<(PoseDistribution, RansacStats, f64)> {
    let seed = derive_seed(config.seed, REFERENCE_SEED_INDEX);
    let params = config.ransac_params(seed);

    let cache_path = cache_dir.map(|dir| reference_cache_path(dir, config, seed));
    if let Some(path) = &cache_path {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(cached) = serde_json::from_str::<CachedReference>(&text) {
                let dist = PoseDistribution::from_json(&cached.distribution)
                    .map_err(|e| CliError::Io(format!("corrupt reference cache: {e}")))?;
                return Ok((dist, cached.stats, 0.0));
            }
        }
    }

    let started = Instant::now();
    let (dist, stats) = ransac_reference_distribution(&problem.s, &problem.t, &params)
        .map_err(|e| CliError::Solver(format!("reference generation failed: {e}")))?;
    let elapsed = started.elapsed().as_secs_f64();

    if let Some(path) = &cache_path {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io("cache dir", e))?;
        }
        let cached = CachedReference {
            distribution: dist
                .to_json()
                .map_err(|e| CliError::Io(format!("serialize reference: {e}")))?,
            stats: stats.clone(),
        };
        let text = serde_json::to_string(&cached)
            .map_err(|e| CliError::Io(format!("serialize reference cache: {e}")))?;
        std::fs::write(path, text).map_err(|e| CliError::io("write reference cache", e))?;
    }
    Ok((dist, stats, elapsed))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CachedReference {
    distribution: String,
    stats: RansacStats,
}

fn reference_cache_path(dir: &Path, config: &ExperimentConfig, seed: u64) -> PathBuf {
    let mut hasher = Sha256::new();
    let scene_json = serde_json::to_string(&config.scene).unwrap_or_default();
    let ransac_json = serde_json::to_string(&config.ransac).unwrap_or_default();
    hasher.update(scene_json.as_bytes());
    hasher.update(ransac_json.as_bytes());
    hasher.update(seed.to_le_bytes());
    hasher.update(config.merge_translation_tol.to_le_bytes());
    hasher.update(config.merge_chordal_tol.to_le_bytes());
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("ref_{hex}.json"))
}

/// The requested metrics between two distributions, translation and
/// rotation components each.
pub fn metric_records(
    metrics: &[MetricKind],
    mmd_bandwidth: Option<f64>,
    a: &PoseDistribution,
    b: &PoseDistribution,
) -> CliResult<Vec<MetricRecord>> {
    let bandwidth = match mmd_bandwidth {
        Some(h) => Bandwidth::Fixed(h),
        None => Bandwidth::Median,
    };
    let mut records = Vec::new();
    for metric in metrics {
        for ground in [GroundMetric::TranslationEuclidean, GroundMetric::RotationChordal] {
            let value = match metric {
                MetricKind::Ed => energy_distance(a, b, ground),
                MetricKind::Mmd => mmd(a, b, ground, bandwidth),
                MetricKind::W1 => wasserstein1(a, b, ground),
            }
            .map_err(|e| CliError::Solver(format!("metric {}: {e}", metric.name())))?;
            records.push(MetricRecord {
                metric: metric.name().to_string(),
                component: ground.component_name().to_string(),
                value,
            });
        }
    }
    Ok(records)
}
