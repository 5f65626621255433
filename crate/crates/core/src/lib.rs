//! Multimodal global data association.
//!
//! Given two point sets, this crate approximates the full posterior over
//! candidate association sets — and the induced distribution of rigid
//! transforms — instead of committing to a single answer. Hypotheses are
//! nonnegative vectors on the unit ball scored by a penalized geometric
//! consistency matrix; ensembles of such hypotheses are evolved either
//! deterministically (kernelized gradient ascent) or stochastically
//! (Langevin dynamics), and each particle is rounded to a discrete
//! association set at the end. Exact references ship alongside: maximal
//! clique enumeration of the consistency graph, a randomized
//! proposal-plus-refinement registration baseline, and distribution
//! distances (energy distance, MMD, exact Wasserstein-1) split into
//! translation and rotation components.
//!
//! Modules follow the pipeline: [`pointset`] and [`affinity`] build the
//! problem, [`solver`] samples it, [`oracle`] checks it exactly,
//! [`registration`] lifts association sets to poses, [`metrics`] compares
//! pose distributions, and [`scene`] synthesizes ambiguous test worlds.

pub mod affinity;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod pointset;
pub mod pose;
pub mod registration;
pub mod scene;
pub mod solver;

pub use affinity::{build_affinity, penalize, AffinityMatrix, AffinityParams, PenalizedAffinity};
pub use error::{Error, Result};
pub use metrics::{
    energy_distance, mmd, pairwise_distances, wasserstein1, Bandwidth, GroundMetric, MetricRecord,
};
pub use oracle::{
    binarize, coverage_report, enumerate_maximal_cliques, ConsistencyGraph, CoverageReport,
};
pub use pointset::{all_pairs_candidates, consistency_distance, Association, PointSet};
pub use pose::{MergeTolerance, Pose, PoseDistribution};
pub use registration::{
    clique_to_pose, cliques_to_distribution, fit_rigid_transform, icp_refine,
    ransac_reference_distribution, IcpResult, RansacParams, RansacStats,
};
pub use scene::{generate, Scene, SceneKind, SceneSpec, SceneSidecar, SymmetryElement};
pub use solver::{
    run_baseline, run_langevin, run_stein, Clique, NoiseScale, ParticleEnsemble, RescaleMode,
    RunReport, SolverConfig, SolverRun,
};
