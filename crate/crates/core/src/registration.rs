//! Lifting association sets to rigid transforms: least-squares alignment,
//! ICP refinement, and the randomized reference-distribution generator.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::pose::{MergeTolerance, Pose, PoseDistribution};
use crate::solver::Clique;

/// Least-squares rigid alignment of paired points via SVD of the
/// cross-covariance, with reflection correction. Minimizes
/// `sum_k || R s_k + t - t_k ||^2`.
pub fn fit_rigid_transform(pairs: &[(Vector3<f64>, Vector3<f64>)]) -> Result<Pose> {
    if pairs.len() < 3 {
        return Err(Error::Underdetermined(pairs.len()));
    }
    let n = pairs.len() as f64;
    let mut s_bar = Vector3::zeros();
    let mut t_bar = Vector3::zeros();
    for (s, t) in pairs {
        s_bar += s;
        t_bar += t;
    }
    s_bar /= n;
    t_bar /= n;

    let mut h = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for (s, t) in pairs {
        let sc = s - s_bar;
        let tc = t - t_bar;
        h += sc * tc.transpose();
        scatter += sc * sc.transpose();
    }

    // collinear or coincident source points leave the rotation unconstrained
    let mut evals: Vec<f64> = scatter.symmetric_eigen().eigenvalues.iter().cloned().collect();
    evals.sort_by(|a, b| b.total_cmp(a));
    if evals[1] <= 1e-12 * evals[0].max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateGeometry(
            "source points are collinear or coincident".into(),
        ));
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("svd with u requested");
    let v_t = svd.v_t.expect("svd with v_t requested");
    let v = v_t.transpose();
    let det = (v * u.transpose()).determinant();
    // flip the direction of the smallest singular value if a reflection won
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(2);
    let mut d = Matrix3::identity();
    d[(smallest, smallest)] = det.signum();
    let rotation = v * d * u.transpose();
    let translation = t_bar - rotation * s_bar;
    Pose::new(rotation, translation)
}

/// Map a clique of candidate indices back to point pairs and fit a pose.
/// Cliques with fewer than three associations or degenerate geometry are
/// rejected with the corresponding error.
pub fn clique_to_pose(
    c: &Clique,
    m: &AffinityMatrix,
    s: &PointSet,
    t: &PointSet,
) -> Result<Pose> {
    let candidates = m.candidates();
    let mut pairs = Vec::with_capacity(c.len());
    for &idx in &c.indices {
        let a = candidates.get(idx).ok_or(Error::IndexOutOfBounds {
            what: "candidate",
            index: idx,
            len: candidates.len(),
        })?;
        pairs.push((s.points[a.s_index], t.points[a.t_index]));
    }
    fit_rigid_transform(&pairs)
}

/// Outcome of an ICP refinement.
#[derive(Debug, Clone)]
pub struct IcpResult {
    pub pose: Pose,
    pub iterations: usize,
    pub converged: bool,
    /// No target point was within the correspondence radius of any source
    /// point at the initial pose; the initial pose is returned unchanged.
    pub no_overlap: bool,
    /// Mean correspondence distance recorded at the start of each iteration.
    pub mean_residuals: Vec<f64>,
}

/// Point-to-point ICP: nearest-neighbor correspondences within `corr_dist`,
/// rigid refit, iterated until the pose change drops below 1e-6 or
/// `max_iters` is reached.
pub fn icp_refine(
    s: &PointSet,
    t: &PointSet,
    init: Pose,
    max_iters: usize,
    corr_dist: f64,
) -> Result<IcpResult> {
    if corr_dist <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "corr_dist must be positive, got {corr_dist}"
        )));
    }
    const POSE_DELTA_TOL: f64 = 1e-6;

    let mut pose = init;
    let mut mean_residuals = Vec::new();
    for iter in 0..max_iters {
        let mut pairs = Vec::new();
        let mut residual_sum = 0.0;
        for sp in &s.points {
            let mapped = pose.apply(sp);
            let mut best = f64::INFINITY;
            let mut best_t = None;
            for tp in &t.points {
                let d = (mapped - tp).norm();
                if d < best {
                    best = d;
                    best_t = Some(*tp);
                }
            }
            if best <= corr_dist {
                pairs.push((*sp, best_t.expect("best_t set with finite best")));
                residual_sum += best;
            }
        }
        if pairs.is_empty() {
            return Ok(IcpResult {
                pose: init,
                iterations: iter,
                converged: false,
                no_overlap: true,
                mean_residuals,
            });
        }
        mean_residuals.push(residual_sum / pairs.len() as f64);
        if pairs.len() < 3 {
            return Ok(IcpResult {
                pose,
                iterations: iter,
                converged: false,
                no_overlap: false,
                mean_residuals,
            });
        }
        let new_pose = fit_rigid_transform(&pairs)?;
        let delta =
            (new_pose.rotation - pose.rotation).norm() + (new_pose.translation - pose.translation).norm();
        pose = new_pose;
        if delta < POSE_DELTA_TOL {
            return Ok(IcpResult {
                pose,
                iterations: iter + 1,
                converged: true,
                no_overlap: false,
                mean_residuals,
            });
        }
    }
    Ok(IcpResult {
        pose,
        iterations: max_iters,
        converged: false,
        no_overlap: false,
        mean_residuals,
    })
}

/// Parameters of the randomized proposal generator.
#[derive(Debug, Clone)]
pub struct RansacParams {
    pub n_trials: usize,
    pub max_keep: usize,
    pub inlier_dist: f64,
    pub min_inlier_frac: f64,
    pub icp_max_iters: usize,
    pub merge_tol: MergeTolerance,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            n_trials: 100_000,
            max_keep: 5000,
            inlier_dist: 0.2,
            min_inlier_frac: 0.5,
            icp_max_iters: 50,
            merge_tol: MergeTolerance::default(),
            seed: 0,
        }
    }
}

/// Summary counters of a reference-distribution run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RansacStats {
    pub trials: usize,
    pub accepted: usize,
    pub kept: usize,
    /// True when no trial passed the acceptance gate and the distribution
    /// is empty.
    pub empty: bool,
}

/// Reference pose distribution from congruent-triangle proposals plus ICP.
///
/// Each trial samples three non-collinear points from `s` and three from
/// `t` with approximately congruent pairwise distances, fits a pose, and
/// accepts it when at least `min_inlier_frac` of `s` lands within
/// `inlier_dist` of some point of `t`. Accepted proposals (first-come, up
/// to `max_keep`) are ICP-refined and merged into a multiplicity-weighted
/// distribution. Per-trial RNG streams keep the result independent of
/// worker count.
pub fn ransac_reference_distribution(
    s: &PointSet,
    t: &PointSet,
    params: &RansacParams,
) -> Result<(PoseDistribution, RansacStats)> {
    if s.len() < 3 || t.len() < 3 {
        return Err(Error::InvalidParameter(
            "reference generation needs at least 3 points per set".into(),
        ));
    }
    if params.min_inlier_frac <= 0.0 || params.min_inlier_frac > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "min_inlier_frac must be in (0, 1], got {}",
            params.min_inlier_frac
        )));
    }
    if params.inlier_dist <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "inlier_dist must be positive, got {}",
            params.inlier_dist
        )));
    }

    let accepted: Vec<(usize, Pose)> = (0..params.n_trials)
        .into_par_iter()
        .filter_map(|trial| {
            propose(s, t, params, trial).map(|pose| (trial, pose))
        })
        .collect();
    let mut accepted = accepted;
    accepted.sort_by_key(|(trial, _)| *trial);
    let n_accepted = accepted.len();
    accepted.truncate(params.max_keep);

    let refined: Vec<Pose> = accepted
        .par_iter()
        .map(|(_, pose)| {
            icp_refine(s, t, *pose, params.icp_max_iters, params.inlier_dist)
                .map(|r| r.pose)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut dist = PoseDistribution::default();
    for pose in refined {
        dist.push_merged(pose, 1, params.merge_tol);
    }
    let stats = RansacStats {
        trials: params.n_trials,
        accepted: n_accepted,
        kept: accepted.len(),
        empty: n_accepted == 0,
    };
    Ok((dist, stats))
}

fn propose(s: &PointSet, t: &PointSet, params: &RansacParams, trial: usize) -> Option<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(trial as u64);

    let si = sample_distinct3(&mut rng, s.len());
    let ti = sample_distinct3(&mut rng, t.len());
    let sp = [s.points[si[0]], s.points[si[1]], s.points[si[2]]];
    let tp = [t.points[ti[0]], t.points[ti[1]], t.points[ti[2]]];

    // non-collinear source triangle
    let area2 = (sp[1] - sp[0]).cross(&(sp[2] - sp[0])).norm();
    if area2 <= 1e-12 {
        return None;
    }
    // approximate congruence of the two triangles
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let ds = (sp[a] - sp[b]).norm();
        let dt = (tp[a] - tp[b]).norm();
        if (ds - dt).abs() > params.inlier_dist {
            return None;
        }
    }

    let pairs = [(sp[0], tp[0]), (sp[1], tp[1]), (sp[2], tp[2])];
    let pose = fit_rigid_transform(&pairs).ok()?;

    // inlier verification over the whole source set
    let needed = (params.min_inlier_frac * s.len() as f64).ceil() as usize;
    let mut inliers = 0;
    for (k, spt) in s.points.iter().enumerate() {
        let mapped = pose.apply(spt);
        if t.points.iter().any(|tp| (mapped - tp).norm() <= params.inlier_dist) {
            inliers += 1;
        }
        if inliers + (s.len() - k - 1) < needed {
            return None; // cannot reach the acceptance threshold anymore
        }
    }
    (inliers >= needed).then_some(pose)
}

fn sample_distinct3(rng: &mut ChaCha8Rng, n: usize) -> [usize; 3] {
    debug_assert!(n >= 3);
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n);
    while b == a {
        b = rng.random_range(0..n);
    }
    let mut c = rng.random_range(0..n);
    while c == a || c == b {
        c = rng.random_range(0..n);
    }
    [a, b, c]
}

/// Aggregate per-particle cliques into a pose distribution: identical
/// cliques collapse into multiplicity counts, degenerate cliques (fewer
/// than three associations or unusable geometry) are skipped, and poses
/// within the merge tolerance coalesce.
pub fn cliques_to_distribution(
    cliques: &[Clique],
    m: &AffinityMatrix,
    s: &PointSet,
    t: &PointSet,
    tol: MergeTolerance,
) -> PoseDistribution {
    use std::collections::HashMap;
    let mut counts: HashMap<&[usize], u64> = HashMap::new();
    let mut order: Vec<&Clique> = Vec::new();
    for c in cliques {
        let e = counts.entry(c.indices.as_slice()).or_insert(0);
        if *e == 0 {
            order.push(c);
        }
        *e += 1;
    }
    let mut dist = PoseDistribution::default();
    for c in order {
        if let Ok(pose) = clique_to_pose(c, m, s, t) {
            dist.push_merged(pose, counts[c.indices.as_slice()], tol);
        }
    }
    dist
}
