//! Synthetic ambiguous scenes with analytically known symmetry groups.
//!
//! Each generator returns a canonical point set `S`, a transformed noisy
//! copy `T`, the transform that produced it, and the rigid self-congruences
//! of the noiseless `S` together with their index correspondences. The
//! self-congruences are what make these scenes ambiguous: every element
//! induces a distinct valid registration mode.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::PointSet;
use crate::pose::Pose;

/// Scene family plus its geometry parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneKind {
    /// Evenly spaced points on a planar ring; `n_points`-fold yaw symmetry.
    Circle { n_points: usize, radius: f64 },
    /// Two parallel rows of evenly spaced points; translational symmetry
    /// along the row axis at integer multiples of the spacing.
    TwoLines {
        points_per_line: usize,
        spacing: f64,
        gap: f64,
    },
    /// Two pods of identical point clusters placed along an irregular
    /// U-shape; the pod-to-pod shift is the dominant ambiguity.
    RepeatedClusters { clusters_per_pod: usize },
    /// Isosceles triangle; one flip self-congruence besides the identity.
    TriangleToy,
}

/// Full description of a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(flatten)]
    pub kind: SceneKind,
    /// Per-coordinate standard deviation of the Gaussian noise added to `T`.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Transform applied to produce the second copy.
    #[serde(default)]
    pub applied_pose: Pose,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind) -> Self {
        Self {
            kind,
            noise_sigma: 0.0,
            applied_pose: Pose::identity(),
            seed: 0,
        }
    }

    pub fn circle(n_points: usize, radius: f64) -> Self {
        Self::new(SceneKind::Circle { n_points, radius })
    }

    pub fn two_lines(points_per_line: usize, spacing: f64, gap: f64) -> Self {
        Self::new(SceneKind::TwoLines {
            points_per_line,
            spacing,
            gap,
        })
    }

    pub fn repeated_clusters(clusters_per_pod: usize) -> Self {
        Self::new(SceneKind::RepeatedClusters { clusters_per_pod })
    }

    pub fn triangle_toy() -> Self {
        Self::new(SceneKind::TriangleToy)
    }

    fn validate(&self) -> Result<()> {
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        match self.kind {
            SceneKind::Circle { n_points, radius } => {
                if n_points < 3 {
                    return Err(Error::InvalidParameter("circle needs >= 3 points".into()));
                }
                if radius <= 0.0 {
                    return Err(Error::InvalidParameter("circle radius must be positive".into()));
                }
            }
            SceneKind::TwoLines {
                points_per_line,
                spacing,
                gap,
            } => {
                if points_per_line < 2 {
                    return Err(Error::InvalidParameter(
                        "two_lines needs >= 2 points per line".into(),
                    ));
                }
                if spacing <= 0.0 || gap <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "two_lines spacing and gap must be positive".into(),
                    ));
                }
            }
            SceneKind::RepeatedClusters { clusters_per_pod } => {
                if clusters_per_pod < 1 {
                    return Err(Error::InvalidParameter(
                        "repeated_clusters needs >= 1 cluster per pod".into(),
                    ));
                }
            }
            SceneKind::TriangleToy => {}
        }
        Ok(())
    }
}

/// A rigid self-congruence of the canonical scene: the pose together with
/// the index pairs it matches (`G(S[i]) = S[j]` for each `(i, j)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryElement {
    pub pose: Pose,
    pub correspondence: Vec<(usize, usize)>,
}

/// Generated scene pair with ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub s: PointSet,
    pub t: PointSet,
    pub true_pose: Pose,
    pub symmetry_group: Vec<SymmetryElement>,
}

/// Sidecar metadata written next to the point-set files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSidecar {
    pub true_pose: Pose,
    pub symmetry_group: Vec<SymmetryElement>,
}

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (points, symmetry_group) = match spec.kind {
        SceneKind::Circle { n_points, radius } => circle_scene(n_points, radius),
        SceneKind::TwoLines {
            points_per_line,
            spacing,
            gap,
        } => two_lines_scene(points_per_line, spacing, gap),
        SceneKind::RepeatedClusters { clusters_per_pod } => {
            repeated_clusters_scene(clusters_per_pod)
        }
        SceneKind::TriangleToy => triangle_scene(),
    };
    let s = PointSet::new("source", points)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let t_points = s
        .points
        .iter()
        .map(|p| {
            let mut q = spec.applied_pose.apply(p);
            if spec.noise_sigma > 0.0 {
                q += spec.noise_sigma
                    * Vector3::new(
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    );
            }
            q
        })
        .collect();
    let t = PointSet::new("target", t_points)?;
    Ok(Scene {
        s,
        t,
        true_pose: spec.applied_pose,
        symmetry_group,
    })
}

fn circle_scene(n: usize, radius: f64) -> (Vec<Vector3<f64>>, Vec<SymmetryElement>) {
    let points: Vec<Vector3<f64>> = (0..n)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
        })
        .collect();
    let symmetry = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            SymmetryElement {
                pose: Pose::from_axis_angle(Vector3::z(), angle, Vector3::zeros()),
                correspondence: (0..n).map(|i| (i, (i + k) % n)).collect(),
            }
        })
        .collect();
    (points, symmetry)
}

fn two_lines_scene(m: usize, spacing: f64, gap: f64) -> (Vec<Vector3<f64>>, Vec<SymmetryElement>) {
    let mut points = Vec::with_capacity(2 * m);
    for line in 0..2 {
        let y = if line == 0 { gap / 2.0 } else { -gap / 2.0 };
        for j in 0..m {
            points.push(Vector3::new(j as f64 * spacing, y, 0.0));
        }
    }
    // shifts by k * spacing along x; |k| <= m - 2 so at least two columns
    // (four points) stay matched and the fit is well-posed
    let mut symmetry = Vec::new();
    let max_shift = m.saturating_sub(2) as i64;
    for k in -max_shift..=max_shift {
        let mut correspondence = Vec::new();
        for line in 0..2usize {
            for j in 0..m as i64 {
                let jt = j + k;
                if (0..m as i64).contains(&jt) {
                    correspondence.push((line * m + j as usize, line * m + jt as usize));
                }
            }
        }
        symmetry.push(SymmetryElement {
            pose: Pose {
                rotation: nalgebra::Matrix3::identity(),
                translation: Vector3::new(k as f64 * spacing, 0.0, 0.0),
            },
            correspondence,
        });
    }
    (points, symmetry)
}

/// Cluster template: four points with all pairwise distances distinct so a
/// cluster has no self-symmetry (proxies for chair / desk / keyboard /
/// monitor centroids of one workstation).
fn cluster_template() -> [Vector3<f64>; 4] {
    [
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(0.8, 0.0, 0.0),
        Vector3::new(0.55, 0.45, 0.0),
        Vector3::new(0.2, 0.3, 0.5),
    ]
}

/// Cluster anchor positions along a U with monotonically growing gaps, so
/// the only repeated structure is the pod itself.
fn u_positions(q: usize) -> Vec<Vector3<f64>> {
    let mut ts = Vec::with_capacity(q);
    let mut t = 0.0;
    for c in 0..q {
        ts.push(t);
        t += 1.0 + 0.35 * ((c + 1) as f64).sqrt();
    }
    let total = if q > 1 { ts[q - 1] } else { 1.0 };
    let (width, height) = (3.4, 3.0);
    ts.iter()
        .map(|&t| {
            let u = t / total; // 0..1 along the U
            if u < 1.0 / 3.0 {
                let f = u * 3.0;
                Vector3::new(0.0, height * (1.0 - f), 0.0)
            } else if u < 2.0 / 3.0 {
                let f = (u - 1.0 / 3.0) * 3.0;
                Vector3::new(width * f, 0.0, 0.0)
            } else {
                let f = (u - 2.0 / 3.0) * 3.0;
                Vector3::new(width, height * f, 0.0)
            }
        })
        .collect()
}

fn repeated_clusters_scene(q: usize) -> (Vec<Vector3<f64>>, Vec<SymmetryElement>) {
    let template = cluster_template();
    let anchors = u_positions(q);
    let pod_offset = Vector3::new(7.6, 0.0, 0.0);
    let mut points = Vec::with_capacity(2 * q * template.len());
    for pod in 0..2 {
        let shift = pod_offset * pod as f64;
        for anchor in &anchors {
            for tp in &template {
                points.push(anchor + shift + tp);
            }
        }
    }
    let per_pod = q * template.len();
    let identity = SymmetryElement {
        pose: Pose::identity(),
        correspondence: (0..2 * per_pod).map(|i| (i, i)).collect(),
    };
    let forward = SymmetryElement {
        pose: Pose {
            rotation: nalgebra::Matrix3::identity(),
            translation: pod_offset,
        },
        correspondence: (0..per_pod).map(|i| (i, i + per_pod)).collect(),
    };
    let backward = SymmetryElement {
        pose: Pose {
            rotation: nalgebra::Matrix3::identity(),
            translation: -pod_offset,
        },
        correspondence: (0..per_pod).map(|i| (i + per_pod, i)).collect(),
    };
    (points, vec![identity, forward, backward])
}

fn triangle_scene() -> (Vec<Vector3<f64>>, Vec<SymmetryElement>) {
    // base 3.0, legs ~3.62: the leg/base difference exceeds the default
    // consistency cutoff, so the only self-congruences are the identity and
    // the flip about the altitude
    let points = vec![
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(3.0, 0.0, 0.0),
        Vector3::new(1.5, 3.3, 0.0),
    ];
    let identity = SymmetryElement {
        pose: Pose::identity(),
        correspondence: vec![(0, 0), (1, 1), (2, 2)],
    };
    let flip = SymmetryElement {
        pose: Pose::from_axis_angle(Vector3::y(), std::f64::consts::PI, Vector3::new(3.0, 0.0, 0.0)),
        correspondence: vec![(0, 1), (1, 0), (2, 2)],
    };
    (points, vec![identity, flip])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::fit_rigid_transform;
    use approx::assert_relative_eq;

    #[test]
    fn circle_symmetry_group_has_expected_yaws() {
        let scene = generate(&SceneSpec::circle(8, 2.0)).unwrap();
        assert_eq!(scene.s.len(), 8);
        assert_eq!(scene.symmetry_group.len(), 8);
        for (k, g) in scene.symmetry_group.iter().enumerate() {
            let expected = (k as f64 * 45.0).to_radians();
            let yaw = g.pose.yaw();
            let diff = (yaw - expected).rem_euclid(2.0 * std::f64::consts::PI);
            let diff = diff.min(2.0 * std::f64::consts::PI - diff);
            assert!(diff < 1e-9, "element {k}: yaw {yaw} vs {expected}");
        }
    }

    #[test]
    fn noiseless_identity_copy_is_exact() {
        let scene = generate(&SceneSpec::circle(8, 2.0)).unwrap();
        assert_eq!(scene.s.points, scene.t.points);
    }

    #[test]
    fn symmetry_elements_register_with_zero_residual() {
        for spec in [
            SceneSpec::circle(8, 2.0),
            SceneSpec::two_lines(6, 1.0, 1.0),
            SceneSpec::repeated_clusters(4),
            SceneSpec::triangle_toy(),
        ] {
            let scene = generate(&spec).unwrap();
            for g in &scene.symmetry_group {
                if g.correspondence.len() < 3 {
                    continue;
                }
                let pairs: Vec<_> = g
                    .correspondence
                    .iter()
                    .map(|&(i, j)| (scene.s.points[i], scene.s.points[j]))
                    .collect();
                // the pose maps point i onto point j, so fitting those pairs
                // must recover it exactly
                match fit_rigid_transform(&pairs) {
                    Ok(fit) => {
                        assert!(
                            (fit.rotation - g.pose.rotation).norm() < 1e-9,
                            "{spec:?}: rotation mismatch"
                        );
                        assert!(
                            (fit.translation - g.pose.translation).norm() < 1e-9,
                            "{spec:?}: translation mismatch"
                        );
                        for &(i, j) in &g.correspondence {
                            let mapped = g.pose.apply(&scene.s.points[i]);
                            assert!((mapped - scene.s.points[j]).norm() < 1e-9);
                        }
                    }
                    Err(crate::error::Error::DegenerateGeometry(_)) => {
                        // collinear overlap (e.g. single-column shift); the
                        // correspondence itself must still be exact
                        for &(i, j) in &g.correspondence {
                            let mapped = g.pose.apply(&scene.s.points[i]);
                            assert!((mapped - scene.s.points[j]).norm() < 1e-9);
                        }
                    }
                    Err(e) => panic!("unexpected fit error: {e}"),
                }
            }
        }
    }

    #[test]
    fn two_lines_symmetries_are_spacing_multiples() {
        let spec = SceneSpec::two_lines(6, 1.0, 1.0);
        let scene = generate(&spec).unwrap();
        // shifts -4..=4 -> 9 elements
        assert_eq!(scene.symmetry_group.len(), 9);
        for g in &scene.symmetry_group {
            let shift = g.pose.translation.x;
            assert_relative_eq!(shift.round(), shift, epsilon = 1e-12);
            assert_eq!(g.pose.translation.y, 0.0);
        }
    }

    #[test]
    fn determinism_and_noise_application() {
        let mut spec = SceneSpec::circle(8, 2.0);
        spec.noise_sigma = 0.05;
        spec.seed = 44;
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.t.points, b.t.points);

        spec.seed = 45;
        let c = generate(&spec).unwrap();
        assert_ne!(a.t.points, c.t.points);
    }

    #[test]
    fn noise_standard_deviation_matches_sigma() {
        let sigma = 0.07;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..10_000u64 {
            let mut spec = SceneSpec::triangle_toy();
            spec.noise_sigma = sigma;
            spec.seed = seed;
            let scene = generate(&spec).unwrap();
            for (sp, tp) in scene.s.points.iter().zip(&scene.t.points) {
                let d = tp - scene.true_pose.apply(sp);
                for c in d.iter() {
                    sum_sq += c * c;
                    count += 1;
                }
            }
        }
        let emp = (sum_sq / count as f64).sqrt();
        assert!(
            (emp - sigma).abs() / sigma < 0.03,
            "empirical sigma {emp} vs {sigma}"
        );
    }

    #[test]
    fn applied_pose_moves_target() {
        let mut spec = SceneSpec::triangle_toy();
        spec.applied_pose =
            Pose::from_axis_angle(Vector3::z(), 0.4, Vector3::new(2.0, 0.5, 0.0));
        let scene = generate(&spec).unwrap();
        for (sp, tp) in scene.s.points.iter().zip(&scene.t.points) {
            assert_relative_eq!(spec.applied_pose.apply(sp), *tp, epsilon = 1e-12);
        }
    }

    #[test]
    fn repeated_clusters_counts() {
        let scene = generate(&SceneSpec::repeated_clusters(6)).unwrap();
        assert_eq!(scene.s.len(), 48);
        assert_eq!(scene.symmetry_group.len(), 3);
        // pod shift matches half the points
        assert_eq!(scene.symmetry_group[1].correspondence.len(), 24);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&SceneSpec::circle(2, 2.0)).is_err());
        assert!(generate(&SceneSpec::circle(8, 0.0)).is_err());
        let mut bad = SceneSpec::triangle_toy();
        bad.noise_sigma = -0.1;
        assert!(generate(&bad).is_err());
        assert!(generate(&SceneSpec::two_lines(1, 1.0, 1.0)).is_err());
    }

    #[test]
    fn spec_serde_round_trip() {
        let mut spec = SceneSpec::two_lines(6, 1.0, 1.2);
        spec.noise_sigma = 0.01;
        spec.seed = 7;
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains(r#""kind":"two_lines""#));
        let back: SceneSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
