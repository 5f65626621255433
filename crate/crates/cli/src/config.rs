//! Experiment configuration: JSON-loadable, overridable from CLI flags,
//! echoed verbatim into every report for reproducibility.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use assoc_core::{
    generate, registration::RansacParams, MergeTolerance, NoiseScale, PointSet, RescaleMode,
    SceneSpec, SolverConfig,
};

use crate::error::{CliError, CliResult};

/// Where the two point sets come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSource {
    Generated(SceneSpec),
    FromFile {
        kind: FromFileTag,
        s_file: PathBuf,
        t_file: PathBuf,
    },
}

/// Forces `{"kind": "from_file"}` in the JSON form of the file variant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FromFileTag {
    FromFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Baseline,
    Stein,
    Langevin,
    OracleBk,
    RansacRef,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Baseline => "baseline",
            SolverKind::Stein => "stein",
            SolverKind::Langevin => "langevin",
            SolverKind::OracleBk => "oracle_bk",
            SolverKind::RansacRef => "ransac_ref",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ed,
    Mmd,
    W1,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Ed => "ed",
            MetricKind::Mmd => "mmd",
            MetricKind::W1 => "w1",
        }
    }
}

/// Randomized reference-generator settings (the `ransac_ref` solver).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RansacSettings {
    pub n_trials: usize,
    pub max_keep: usize,
    pub inlier_dist: f64,
    pub min_inlier_frac: f64,
    pub icp_max_iters: usize,
}

impl Default for RansacSettings {
    fn default() -> Self {
        Self {
            n_trials: 100_000,
            max_keep: 5000,
            inlier_dist: 0.2,
            min_inlier_frac: 0.5,
            icp_max_iters: 50,
        }
    }
}

fn default_sigma() -> f64 {
    0.4
}
fn default_epsilon() -> f64 {
    0.6
}
fn default_true() -> bool {
    true
}
fn default_metrics() -> Vec<MetricKind> {
    vec![MetricKind::Ed, MetricKind::Mmd, MetricKind::W1]
}
fn default_reps() -> usize {
    10
}
fn default_threshold() -> f64 {
    0.5
}
fn default_cap() -> usize {
    64
}
fn default_merge_tol() -> f64 {
    1e-6
}

/// One experiment: scene, solver, affinity and metric settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scene: SceneSource,
    pub solver: SolverKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub endpoint_exclusivity: bool,
    /// Solver overrides; unset fields use the solver's own defaults.
    #[serde(default)]
    pub n_particles: Option<usize>,
    #[serde(default)]
    pub max_inner_iters: Option<usize>,
    #[serde(default)]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub adagrad_decay: Option<f64>,
    #[serde(default)]
    pub kernel_bandwidth: Option<f64>,
    #[serde(default)]
    pub noise_scale: Option<NoiseScale>,
    #[serde(default)]
    pub rescale_mode: Option<RescaleMode>,
    #[serde(default)]
    pub adagrad_drift_only: bool,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    /// MMD kernel bandwidth; omitted means the median heuristic.
    #[serde(default)]
    pub mmd_bandwidth: Option<f64>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub ransac: RansacSettings,
    #[serde(default = "default_threshold")]
    pub binarize_threshold: f64,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default = "default_merge_tol")]
    pub merge_translation_tol: f64,
    #[serde(default = "default_merge_tol")]
    pub merge_chordal_tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.repetitions < 1 {
            return Err(CliError::Config("repetitions must be >= 1".into()));
        }
        if !(self.sigma > 0.0) || !(self.epsilon > 0.0) {
            return Err(CliError::Config(format!(
                "sigma and epsilon must be positive (got {}, {})",
                self.sigma, self.epsilon
            )));
        }
        Ok(())
    }

    /// Solver configuration with overrides applied and the given seed.
    pub fn solver_config(&self, seed: u64) -> SolverConfig {
        let mut cfg = match self.solver {
            SolverKind::Baseline => SolverConfig::baseline_defaults(),
            SolverKind::Stein => SolverConfig::stein_defaults(),
            _ => SolverConfig::langevin_defaults(),
        };
        if let Some(v) = self.n_particles {
            cfg.n_particles = v;
        }
        if let Some(v) = self.max_inner_iters {
            cfg.max_inner_iters = v;
        }
        if let Some(v) = self.step_size {
            cfg.step_size = v;
        }
        if let Some(v) = self.adagrad_decay {
            cfg.adagrad_decay = v;
        }
        if let Some(v) = self.kernel_bandwidth {
            cfg.kernel_bandwidth = v;
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = v;
        }
        if let Some(v) = self.rescale_mode {
            cfg.rescale_mode = v;
        }
        cfg.adagrad_drift_only = self.adagrad_drift_only;
        cfg.seed = seed;
        cfg
    }

    /// Fill every optional solver field with its resolved value so the
    /// report echo is complete.
    pub fn resolved(&self) -> Self {
        let solved = self.solver_config(self.seed);
        Self {
            n_particles: Some(solved.n_particles),
            max_inner_iters: Some(solved.max_inner_iters),
            step_size: Some(solved.step_size),
            adagrad_decay: Some(solved.adagrad_decay),
            kernel_bandwidth: Some(solved.kernel_bandwidth),
            noise_scale: Some(solved.noise_scale),
            rescale_mode: Some(solved.rescale_mode),
            ..self.clone()
        }
    }

    pub fn ransac_params(&self, seed: u64) -> RansacParams {
        RansacParams {
            n_trials: self.ransac.n_trials,
            max_keep: self.ransac.max_keep,
            inlier_dist: self.ransac.inlier_dist,
            min_inlier_frac: self.ransac.min_inlier_frac,
            icp_max_iters: self.ransac.icp_max_iters,
            merge_tol: self.merge_tolerance(),
            seed,
        }
    }

    pub fn merge_tolerance(&self) -> MergeTolerance {
        MergeTolerance {
            translation: self.merge_translation_tol,
            chordal: self.merge_chordal_tol,
        }
    }

    /// Produce the point-set pair, generating or loading as configured.
    pub fn build_scene(&self) -> CliResult<(PointSet, PointSet)> {
        match &self.scene {
            SceneSource::Generated(spec) => {
                let scene = generate(spec)
                    .map_err(|e| CliError::Config(format!("scene generation failed: {e}")))?;
                Ok((scene.s, scene.t))
            }
            SceneSource::FromFile { s_file, t_file, .. } => {
                Ok((load_pointset(s_file)?, load_pointset(t_file)?))
            }
        }
    }
}

pub fn load_pointset(path: &Path) -> CliResult<PointSet> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read point set {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse point set {}: {e}", path.display())))
}

/// Stable per-job seed stream (splitmix64 of seed and job index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ 0x9E3779B97F4A7C15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Job index reserved for the reference distribution.
pub const REFERENCE_SEED_INDEX: u64 = 0x5EED_0000_0000_0001;
