//! Command-line surface. Flags mirror the experiment-config fields; a JSON
//! config can supply everything, with explicit flags taking precedence.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use assoc_core::{NoiseScale, Pose, RescaleMode, SceneKind, SceneSpec};

use crate::config::{
    ExperimentConfig, FromFileTag, MetricKind, RansacSettings, SceneSource, SolverKind,
};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "assoc",
    version,
    about = "Multimodal global data association: particle ensembles over a penalized \
             geometric-consistency objective, with exact clique and distribution oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run a solver on a scene and write report, distribution, and histograms
    Run(RunArgs),
    /// Compare two saved pose distributions
    Compare(CompareArgs),
    /// Sweep solver parameters over a grid and write a long-format CSV
    Ablate(AblateArgs),
    /// Generate a synthetic scene and write its point sets plus metadata
    GenScene(GenSceneArgs),
    /// Enumerate the maximal cliques of the binarized consistency graph
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Master seed; every repetition, particle, and trial derives from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (0 = all cores); results do not depend on this
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// JSON experiment config; explicit flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
pub struct SceneArgs {
    /// Scene family
    #[arg(long, value_enum)]
    pub scene: Option<SceneArg>,
    /// Points on the circle
    #[arg(long)]
    pub n_points: Option<usize>,
    /// Circle radius in meters
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub points_per_line: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub clusters_per_pod: Option<usize>,
    /// Gaussian noise sigma added to the second copy (meters)
    #[arg(long)]
    pub noise: Option<f64>,
    /// Seed of the scene noise stream
    #[arg(long)]
    pub scene_seed: Option<u64>,
    /// Yaw (degrees) of the transform applied to the second copy
    #[arg(long)]
    pub yaw_deg: Option<f64>,
    #[arg(long)]
    pub tx: Option<f64>,
    #[arg(long)]
    pub ty: Option<f64>,
    #[arg(long)]
    pub tz: Option<f64>,
    /// First point set (JSON), for --scene from-file
    #[arg(long)]
    pub s_file: Option<PathBuf>,
    /// Second point set (JSON), for --scene from-file
    #[arg(long)]
    pub t_file: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneArg {
    Circle,
    TwoLines,
    RepeatedClusters,
    TriangleToy,
    FromFile,
}

impl SceneArgs {
    /// Build a scene source when any scene flag was given.
    pub fn to_source(&self) -> CliResult<Option<SceneSource>> {
        let Some(kind) = self.scene else {
            return Ok(None);
        };
        if kind == SceneArg::FromFile {
            let (Some(s), Some(t)) = (self.s_file.clone(), self.t_file.clone()) else {
                return Err(CliError::Config(
                    "--scene from-file requires --s-file and --t-file".into(),
                ));
            };
            return Ok(Some(SceneSource::FromFile {
                kind: FromFileTag::FromFile,
                s_file: s,
                t_file: t,
            }));
        }
        let scene_kind = match kind {
            SceneArg::Circle => SceneKind::Circle {
                n_points: self.n_points.unwrap_or(8),
                radius: self.radius.unwrap_or(4.0),
            },
            SceneArg::TwoLines => SceneKind::TwoLines {
                points_per_line: self.points_per_line.unwrap_or(6),
                spacing: self.spacing.unwrap_or(1.0),
                gap: self.gap.unwrap_or(1.0),
            },
            SceneArg::RepeatedClusters => SceneKind::RepeatedClusters {
                clusters_per_pod: self.clusters_per_pod.unwrap_or(6),
            },
            SceneArg::TriangleToy => SceneKind::TriangleToy,
            SceneArg::FromFile => unreachable!(),
        };
        let mut spec = SceneSpec::new(scene_kind);
        spec.noise_sigma = self.noise.unwrap_or(0.0);
        spec.seed = self.scene_seed.unwrap_or(0);
        let yaw = self.yaw_deg.unwrap_or(0.0).to_radians();
        let t = Vector3::new(
            self.tx.unwrap_or(0.0),
            self.ty.unwrap_or(0.0),
            self.tz.unwrap_or(0.0),
        );
        spec.applied_pose = Pose::from_axis_angle(Vector3::z(), yaw, t);
        Ok(Some(SceneSource::Generated(spec)))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum NoiseModeArg {
    /// Coefficient 2*sqrt(alpha) on the noise
    #[value(name = "2sqrt")]
    TwoSqrt,
    /// Coefficient sqrt(2*alpha), the standard discretized-diffusion scaling
    #[value(name = "sqrt2")]
    Sqrt2,
}

impl From<NoiseModeArg> for NoiseScale {
    fn from(v: NoiseModeArg) -> Self {
        match v {
            NoiseModeArg::TwoSqrt => NoiseScale::TwoSqrtAlpha,
            NoiseModeArg::Sqrt2 => NoiseScale::SqrtTwoAlpha,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RescaleArg {
    ParticleNorm,
    PerCoordinate,
}

impl From<RescaleArg> for RescaleMode {
    fn from(v: RescaleArg) -> Self {
        match v {
            RescaleArg::ParticleNorm => RescaleMode::ParticleNorm,
            RescaleArg::PerCoordinate => RescaleMode::PerCoordinate,
        }
    }
}

#[derive(Args, Clone, Default)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub n_particles: Option<usize>,
    /// Total inner-iteration budget
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Accumulator decay in [0, 1)
    #[arg(long)]
    pub decay: Option<f64>,
    /// RBF kernel bandwidth (kernelized ensemble)
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_mode: Option<NoiseModeArg>,
    #[arg(long, value_enum)]
    pub rescale: Option<RescaleArg>,
    /// Rescale only the drift; add the Langevin noise unscaled
    #[arg(long)]
    pub drift_only: bool,
    /// Consistency-kernel width (meters)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Consistency cutoff (meters)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Allow two candidates sharing an endpoint to be consistent
    #[arg(long)]
    pub no_endpoint_exclusivity: bool,
    /// Metrics to report (comma separated: ed,mmd,w1)
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricKind>>,
    /// Fixed MMD kernel bandwidth (default: median heuristic)
    #[arg(long)]
    pub mmd_bandwidth: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub ransac_trials: Option<usize>,
    #[arg(long)]
    pub max_keep: Option<usize>,
    #[arg(long)]
    pub inlier_dist: Option<f64>,
    #[arg(long)]
    pub min_inlier_frac: Option<f64>,
    #[arg(long)]
    pub binarize_threshold: Option<f64>,
    /// Node cap for exact clique enumeration
    #[arg(long)]
    pub cap: Option<usize>,
    /// Directory for cached reference distributions
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args)]
pub struct CompareArgs {
    /// First distribution JSON
    pub dist_a: PathBuf,
    /// Second distribution JSON
    pub dist_b: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricKind>>,
    #[arg(long)]
    pub mmd_bandwidth: Option<f64>,
}

#[derive(Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Particle counts to sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub grid_particles: Option<Vec<usize>>,
    /// Step sizes to sweep
    #[arg(long, value_delimiter = ',')]
    pub grid_steps: Option<Vec<f64>>,
    /// Kernel bandwidths to sweep
    #[arg(long, value_delimiter = ',')]
    pub grid_bandwidths: Option<Vec<f64>>,
}

#[derive(Args)]
pub struct GenSceneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Base name of the emitted files
    #[arg(long, default_value = "scene")]
    pub name: String,
}

#[derive(Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Merge config file, scene flags, and solver flags into one experiment
/// config (flags win).
pub fn resolve_config(
    common: &CommonArgs,
    scene: &SceneArgs,
    solver: &SolverArgs,
) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig {
            scene: SceneSource::Generated(SceneSpec::circle(8, 4.0)),
            solver: SolverKind::Langevin,
            sigma: 0.4,
            epsilon: 0.6,
            endpoint_exclusivity: true,
            n_particles: None,
            max_inner_iters: None,
            step_size: None,
            adagrad_decay: None,
            kernel_bandwidth: None,
            noise_scale: None,
            rescale_mode: None,
            adagrad_drift_only: false,
            metrics: vec![MetricKind::Ed, MetricKind::Mmd, MetricKind::W1],
            mmd_bandwidth: None,
            repetitions: 10,
            ransac: RansacSettings::default(),
            binarize_threshold: 0.5,
            enumeration_cap: 64,
            merge_translation_tol: 1e-6,
            merge_chordal_tol: 1e-6,
            seed: 0,
        },
    };
    if let Some(source) = scene.to_source()? {
        cfg.scene = source;
    }
    if let Some(v) = solver.solver {
        cfg.solver = v;
    }
    if let Some(v) = solver.n_particles {
        cfg.n_particles = Some(v);
    }
    if let Some(v) = solver.iters {
        cfg.max_inner_iters = Some(v);
    }
    if let Some(v) = solver.step_size {
        cfg.step_size = Some(v);
    }
    if let Some(v) = solver.decay {
        cfg.adagrad_decay = Some(v);
    }
    if let Some(v) = solver.bandwidth {
        cfg.kernel_bandwidth = Some(v);
    }
    if let Some(v) = solver.noise_mode {
        cfg.noise_scale = Some(v.into());
    }
    if let Some(v) = solver.rescale {
        cfg.rescale_mode = Some(v.into());
    }
    if solver.drift_only {
        cfg.adagrad_drift_only = true;
    }
    if let Some(v) = solver.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = solver.epsilon {
        cfg.epsilon = v;
    }
    if solver.no_endpoint_exclusivity {
        cfg.endpoint_exclusivity = false;
    }
    if let Some(v) = &solver.metrics {
        cfg.metrics = v.clone();
    }
    if let Some(v) = solver.mmd_bandwidth {
        cfg.mmd_bandwidth = Some(v);
    }
    if let Some(v) = solver.reps {
        cfg.repetitions = v;
    }
    if let Some(v) = solver.ransac_trials {
        cfg.ransac.n_trials = v;
    }
    if let Some(v) = solver.max_keep {
        cfg.ransac.max_keep = v;
    }
    if let Some(v) = solver.inlier_dist {
        cfg.ransac.inlier_dist = v;
    }
    if let Some(v) = solver.min_inlier_frac {
        cfg.ransac.min_inlier_frac = v;
    }
    if let Some(v) = solver.binarize_threshold {
        cfg.binarize_threshold = v;
    }
    if let Some(v) = solver.cap {
        cfg.enumeration_cap = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}
