//! End-to-end solver loops: initialization, homotopy schedule, particle
//! updates, projection, and clique extraction.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::affinity::{penalize, AffinityMatrix, PenalizedAffinity};
use crate::error::Result;
use crate::solver::ops::{
    adagrad_rescale, extract_clique, langevin_direction, max_eigenvalue, norm_rescale, objective,
    project, score, svgd_direction, ProjectOutcome,
};
use crate::solver::{
    Clique, ParticleEnsemble, ParticleReport, RescaleMode, RunReport, SolverConfig, Timing,
    FEASIBILITY_TOL,
};

/// Everything a solver run produces.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub cliques: Vec<Clique>,
    pub ensemble: ParticleEnsemble,
    pub report: RunReport,
}

struct ParticleState {
    theta: DVector<f64>,
    /// Per-coordinate accumulator (used in `RescaleMode::PerCoordinate`).
    acc_coord: DVector<f64>,
    /// Scalar accumulator (used in `RescaleMode::ParticleNorm`).
    acc_norm: f64,
    rng: ChaCha8Rng,
    stream: u64,
    reinits: usize,
    max_norm: f64,
    min_entry: f64,
}

impl ParticleState {
    fn new(seed: u64, stream: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let theta = uniform_vector(&mut rng, n);
        Self {
            theta,
            acc_coord: DVector::zeros(n),
            acc_norm: 0.0,
            rng,
            stream,
            reinits: 0,
            max_norm: 0.0,
            min_entry: f64::INFINITY,
        }
    }

    fn rescale(&mut self, dir: &DVector<f64>, mode: RescaleMode, decay: f64) -> DVector<f64> {
        match mode {
            RescaleMode::ParticleNorm => norm_rescale(dir, &mut self.acc_norm, decay),
            RescaleMode::PerCoordinate => adagrad_rescale(dir, &mut self.acc_coord, decay),
        }
    }

    /// Project the particle back to the feasible set. A degenerate
    /// projection re-initializes the particle uniformly (then projects the
    /// fresh draw, which is entrywise positive so cannot degenerate again)
    /// and resets its optimizer state.
    fn project_in_place(&mut self) {
        let (p, outcome) = project(&self.theta);
        self.theta = p;
        if outcome == ProjectOutcome::Degenerate {
            self.reinits += 1;
            let fresh = uniform_vector(&mut self.rng, self.theta.len());
            let (p, _) = project(&fresh);
            self.theta = p;
            self.acc_coord.fill(0.0);
            self.acc_norm = 0.0;
        }
        let norm = self.theta.norm();
        debug_assert!(
            norm <= 1.0 + FEASIBILITY_TOL,
            "post-projection norm {norm} above bound"
        );
        self.max_norm = self.max_norm.max(norm);
        self.min_entry = self.min_entry.min(self.theta.min());
    }

    fn exported_acc(&self, mode: RescaleMode) -> DVector<f64> {
        match mode {
            RescaleMode::ParticleNorm => {
                DVector::from_element(self.theta.len(), self.acc_norm)
            }
            RescaleMode::PerCoordinate => self.acc_coord.clone(),
        }
    }
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random::<f64>())
}

fn init_states(cfg: &SolverConfig, n: usize) -> Vec<ParticleState> {
    (0..cfg.n_particles)
        .map(|i| ParticleState::new(cfg.seed, i as u64, n))
        .collect()
}

/// Number of homotopy stages: an initial stage at `d = 0`, then increments
/// of `delta` until `d` reaches `n` (mirrors the run loop exactly).
fn homotopy_stages(n: usize, delta: f64) -> usize {
    let mut d = 0.0;
    let mut stages = 1usize;
    while d < n as f64 {
        d += delta;
        stages += 1;
        if stages > n + 1 {
            break; // delta >= 1 always holds (unit diagonal), this is a guard
        }
    }
    stages
}

fn finalize(
    solver: &str,
    states: Vec<ParticleState>,
    pa_final: &PenalizedAffinity,
    mode: RescaleMode,
    iterations_run: usize,
    monotonicity_violations: usize,
    started: Instant,
) -> SolverRun {
    let cliques: Vec<Clique> = states
        .par_iter()
        .map(|s| extract_clique(&s.theta, pa_final))
        .collect();
    let particles: Vec<ParticleReport> = states
        .iter()
        .zip(&cliques)
        .map(|(s, c)| ParticleReport {
            clique: c.indices.clone(),
            omega_hat: c.omega_hat,
            objective: objective(&s.theta, pa_final),
        })
        .collect();
    let report = RunReport {
        solver: solver.to_string(),
        n_candidates: pa_final.n(),
        n_particles: states.len(),
        iterations_run,
        degenerate_reinits: states.iter().map(|s| s.reinits).sum(),
        monotonicity_violations,
        max_post_projection_norm: states.iter().fold(0.0f64, |m, s| m.max(s.max_norm)),
        min_post_projection_entry: states
            .iter()
            .fold(f64::INFINITY, |m, s| m.min(s.min_entry)),
        particles,
        timing: Timing {
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    };
    let ensemble = ParticleEnsemble {
        theta: states.iter().map(|s| s.theta.clone()).collect(),
        adagrad_acc: states.iter().map(|s| s.exported_acc(mode)).collect(),
        rng_seeds: states.iter().map(|s| s.stream).collect(),
    };
    SolverRun {
        cliques,
        ensemble,
        report,
    }
}

fn run_homotopy_ascent(
    m: &AffinityMatrix,
    cfg: &SolverConfig,
    kernelized: bool,
    solver_name: &str,
) -> Result<SolverRun> {
    cfg.validate()?;
    let started = Instant::now();
    let n = m.n();
    let delta = max_eigenvalue(m);
    let stages = homotopy_stages(n, delta);
    let iters_per_stage = (cfg.max_inner_iters / stages).max(1);

    let mut states = init_states(cfg, n);
    let mut iterations_run = 0usize;
    let mut monotonicity_violations = 0usize;
    let track_objective = !kernelized && cfg.n_particles == 1;

    // the first stage runs unpenalized: the leading-eigenvector dynamics
    // concentrate mass on dense consistent structure before the penalty
    // starts carving it down to a clique
    let mut d = 0.0;
    let mut pa;
    loop {
        pa = penalize(m, d)?;
        for _ in 0..iters_per_stage {
            let directions: Vec<DVector<f64>> = if kernelized {
                let thetas: Vec<DVector<f64>> =
                    states.iter().map(|s| s.theta.clone()).collect();
                svgd_direction(&thetas, &pa, cfg.kernel_bandwidth)
            } else {
                states
                    .par_iter()
                    .map(|s| score(&s.theta, &pa))
                    .collect()
            };
            let obj_before = track_objective.then(|| objective(&states[0].theta, &pa));
            states
                .par_iter_mut()
                .zip(directions)
                .for_each(|(state, dir)| {
                    let rescaled = state.rescale(&dir, cfg.rescale_mode, cfg.adagrad_decay);
                    state.theta.axpy(cfg.step_size, &rescaled, 1.0);
                });
            if let Some(before) = obj_before {
                let after = objective(&states[0].theta, &pa);
                if after < before - 1e-9 {
                    monotonicity_violations += 1;
                }
            }
            states.par_iter_mut().for_each(|s| s.project_in_place());
            iterations_run += 1;
        }
        if d >= n as f64 {
            break;
        }
        d += delta;
    }

    Ok(finalize(
        solver_name,
        states,
        &pa,
        cfg.rescale_mode,
        iterations_run,
        monotonicity_violations,
        started,
    ))
}

/// Kernelized deterministic ensemble over the homotopy schedule: particles
/// follow the kernel-weighted score with a pairwise repulsive term, with
/// the inconsistency penalty raised by the top affinity eigenvalue per
/// stage until it reaches `n`. Extraction uses the final penalized matrix.
pub fn run_stein(m: &AffinityMatrix, cfg: &SolverConfig) -> Result<SolverRun> {
    run_homotopy_ascent(m, cfg, true, "stein")
}

/// Single-particle projected gradient ascent with the same homotopy
/// schedule; the single-hypothesis reference the ensembles are compared
/// against. Ignores `cfg.n_particles`.
pub fn run_baseline(m: &AffinityMatrix, cfg: &SolverConfig) -> Result<SolverRun> {
    let cfg = SolverConfig {
        n_particles: 1,
        ..cfg.clone()
    };
    run_homotopy_ascent(m, &cfg, false, "baseline")
}

/// Stochastic ensemble: the penalty is fixed at `n` and every particle
/// follows its own noisy score ascent, one RNG stream per particle so
/// results do not depend on worker count.
pub fn run_langevin(m: &AffinityMatrix, cfg: &SolverConfig) -> Result<SolverRun> {
    cfg.validate()?;
    let started = Instant::now();
    let n = m.n();
    let pa = penalize(m, n as f64)?;
    let mut states = init_states(cfg, n);

    for _ in 0..cfg.max_inner_iters {
        states.par_iter_mut().for_each(|state| {
            let noise =
                DVector::from_fn(n, |_, _| state.rng.sample::<f64, _>(StandardNormal));
            if cfg.adagrad_drift_only {
                let drift = cfg.step_size * score(&state.theta, &pa);
                let mut step = state.rescale(&drift, cfg.rescale_mode, cfg.adagrad_decay);
                step.axpy(cfg.noise_scale.coefficient(cfg.step_size), &noise, 1.0);
                state.theta += step;
            } else {
                let dir = langevin_direction(
                    &state.theta,
                    &pa,
                    cfg.step_size,
                    &noise,
                    cfg.noise_scale,
                );
                let step = state.rescale(&dir, cfg.rescale_mode, cfg.adagrad_decay);
                state.theta += step;
            }
            state.project_in_place();
        });
    }

    Ok(finalize(
        "langevin",
        states,
        &pa,
        cfg.rescale_mode,
        cfg.max_inner_iters,
        0,
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::AffinityMatrix;
    use crate::solver::NoiseScale;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn planted(n: usize, k: usize, extra: &[(usize, usize)]) -> AffinityMatrix {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((i, j));
            }
        }
        edges.extend_from_slice(extra);
        AffinityMatrix::from_binary_edges(n, &edges).unwrap()
    }

    fn distractors(n: usize, k: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let mut edges = Vec::new();
        while edges.len() < count {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && (a >= k || b >= k) {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges
    }

    #[test]
    fn baseline_recovers_planted_clique() {
        for seed in 0..10 {
            let m = planted(30, 5, &distractors(30, 5, 40, seed));
            let cfg = SolverConfig {
                seed,
                ..SolverConfig::baseline_defaults()
            };
            let run = run_baseline(&m, &cfg).unwrap();
            assert_eq!(run.cliques.len(), 1);
            assert_eq!(
                run.cliques[0].indices,
                vec![0, 1, 2, 3, 4],
                "seed {seed} missed the planted clique"
            );
            assert_eq!(run.cliques[0].omega_hat, 5);
        }
    }

    #[test]
    fn baseline_identity_affinity_gives_singletons() {
        let m = AffinityMatrix::from_binary_edges(12, &[]).unwrap();
        let cfg = SolverConfig {
            seed: 3,
            ..SolverConfig::baseline_defaults()
        };
        let run = run_baseline(&m, &cfg).unwrap();
        assert_eq!(run.cliques[0].omega_hat, 1);
    }

    #[test]
    fn baseline_single_node() {
        let m = AffinityMatrix::from_binary_edges(1, &[]).unwrap();
        let cfg = SolverConfig {
            max_inner_iters: 50,
            seed: 1,
            ..SolverConfig::baseline_defaults()
        };
        let run = run_baseline(&m, &cfg).unwrap();
        assert_eq!(run.cliques[0].indices, vec![0]);
    }

    #[test]
    fn stein_single_particle_recovers_planted_clique() {
        let m = planted(30, 5, &[]);
        let cfg = SolverConfig {
            n_particles: 1,
            step_size: 0.05,
            seed: 21,
            ..SolverConfig::stein_defaults()
        };
        let run = run_stein(&m, &cfg).unwrap();
        assert_eq!(run.cliques[0].indices, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn stein_is_deterministic_given_seed() {
        let m = planted(15, 4, &[(7, 8), (8, 9), (7, 9)]);
        let cfg = SolverConfig {
            n_particles: 16,
            max_inner_iters: 60,
            seed: 5,
            ..SolverConfig::stein_defaults()
        };
        let a = run_stein(&m, &cfg).unwrap();
        let b = run_stein(&m, &cfg).unwrap();
        assert_eq!(a.cliques, b.cliques);
        for (ta, tb) in a.ensemble.theta.iter().zip(&b.ensemble.theta) {
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn langevin_is_deterministic_given_seed() {
        let m = planted(15, 4, &[]);
        let cfg = SolverConfig {
            n_particles: 16,
            max_inner_iters: 80,
            seed: 5,
            ..SolverConfig::langevin_defaults()
        };
        let a = run_langevin(&m, &cfg).unwrap();
        let b = run_langevin(&m, &cfg).unwrap();
        assert_eq!(a.cliques, b.cliques);
        for (ta, tb) in a.ensemble.theta.iter().zip(&b.ensemble.theta) {
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn langevin_results_independent_of_worker_count() {
        let m = planted(12, 4, &[]);
        let cfg = SolverConfig {
            n_particles: 8,
            max_inner_iters: 50,
            seed: 9,
            ..SolverConfig::langevin_defaults()
        };
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool2 = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let a = pool1.install(|| run_langevin(&m, &cfg)).unwrap();
        let b = pool2.install(|| run_langevin(&m, &cfg)).unwrap();
        assert_eq!(a.cliques, b.cliques);
    }

    #[test]
    fn langevin_concentrates_on_unique_maximum_clique() {
        // the hot default noise keeps a tail of particles one rounding step
        // below the full clique; the standard scaling meets the 95% bar
        let m = planted(12, 5, &[]);
        let cfg = SolverConfig {
            n_particles: 100,
            noise_scale: NoiseScale::SqrtTwoAlpha,
            seed: 17,
            ..SolverConfig::langevin_defaults()
        };
        let run = run_langevin(&m, &cfg).unwrap();
        let target = vec![0usize, 1, 2, 3, 4];
        let hits = run.cliques.iter().filter(|c| c.indices == target).count();
        assert!(hits >= 95, "only {hits}/100 particles found the planted clique");

        // at the paper's hotter noise scaling the misses are subsets of the
        // planted clique, not other modes
        let cfg_hot = SolverConfig {
            noise_scale: NoiseScale::TwoSqrtAlpha,
            ..cfg
        };
        let run = run_langevin(&m, &cfg_hot).unwrap();
        let target_clique = Clique::new(target);
        let contained = run
            .cliques
            .iter()
            .filter(|c| !c.is_empty() && c.is_subset_of(&target_clique))
            .count();
        assert!(contained >= 95, "only {contained}/100 inside the planted clique");
    }

    #[test]
    fn feasibility_bounds_reported() {
        let m = planted(10, 3, &[]);
        let cfg = SolverConfig {
            n_particles: 32,
            max_inner_iters: 40,
            seed: 2,
            ..SolverConfig::langevin_defaults()
        };
        let run = run_langevin(&m, &cfg).unwrap();
        assert!(run.report.max_post_projection_norm <= 1.0 + FEASIBILITY_TOL);
        assert!(run.report.min_post_projection_entry >= 0.0);
    }

    #[test]
    fn baseline_objective_is_monotone_within_stages() {
        for seed in 0..5 {
            let m = planted(25, 5, &distractors(25, 5, 30, seed));
            let cfg = SolverConfig {
                seed,
                ..SolverConfig::baseline_defaults()
            };
            let run = run_baseline(&m, &cfg).unwrap();
            assert_eq!(
                run.report.monotonicity_violations, 0,
                "seed {seed} produced monotonicity violations"
            );
        }
    }

    #[test]
    fn noise_mode_changes_trajectories() {
        let m = planted(10, 3, &[]);
        let base = SolverConfig {
            n_particles: 4,
            max_inner_iters: 30,
            seed: 8,
            ..SolverConfig::langevin_defaults()
        };
        let standard = SolverConfig {
            noise_scale: NoiseScale::SqrtTwoAlpha,
            ..base.clone()
        };
        let a = run_langevin(&m, &base).unwrap();
        let b = run_langevin(&m, &standard).unwrap();
        assert_ne!(a.ensemble.theta, b.ensemble.theta);
    }

    #[test]
    fn per_coordinate_mode_runs_and_differs() {
        let m = planted(10, 3, &[]);
        let base = SolverConfig {
            n_particles: 4,
            max_inner_iters: 30,
            seed: 8,
            ..SolverConfig::langevin_defaults()
        };
        let per_coord = SolverConfig {
            rescale_mode: RescaleMode::PerCoordinate,
            ..base.clone()
        };
        let a = run_langevin(&m, &base).unwrap();
        let b = run_langevin(&m, &per_coord).unwrap();
        assert_ne!(a.ensemble.theta, b.ensemble.theta);
        assert!(b.report.max_post_projection_norm <= 1.0 + FEASIBILITY_TOL);
    }

    #[test]
    fn permutation_symmetry_of_deterministic_ascent() {
        // relabeling the candidates relabels the recovered maximum clique
        let m = planted(8, 3, &[(5, 6)]);
        let perm: Vec<usize> = vec![3, 0, 6, 1, 7, 2, 5, 4]; // new index -> old index
        let mut edges_p = Vec::new();
        let old_m = m.m();
        let inv: Vec<usize> = {
            let mut inv = vec![0; 8];
            for (new, &old) in perm.iter().enumerate() {
                inv[old] = new;
            }
            inv
        };
        for i in 0..8 {
            for j in (i + 1)..8 {
                if old_m[(i, j)] > 0.5 {
                    edges_p.push((inv[i].min(inv[j]), inv[i].max(inv[j])));
                }
            }
        }
        let mp = AffinityMatrix::from_binary_edges(8, &edges_p).unwrap();

        let cfg = SolverConfig {
            max_inner_iters: 300,
            seed: 4,
            ..SolverConfig::baseline_defaults()
        };
        let a = run_baseline(&m, &cfg).unwrap();
        let b = run_baseline(&mp, &cfg).unwrap();
        let mapped: Vec<usize> = {
            let mut v: Vec<usize> = a.cliques[0].indices.iter().map(|&i| inv[i]).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(mapped, b.cliques[0].indices);
    }
}
