//! Cross-module behavior: permutation covariance of the deterministic
//! update rule, and the scene -> affinity -> solver -> distribution path.

use assoc_core::*;
use nalgebra::DVector;

/// Relabeling candidates and the initialization identically must produce
/// the identically relabeled trajectory (the deterministic update has no
/// preferred candidate order).
#[test]
fn deterministic_trajectory_is_permutation_covariant() {
    let n = 10;
    let edges = [(0, 1), (0, 2), (1, 2), (2, 3), (4, 7), (5, 6), (6, 8), (5, 8)];
    let m = AffinityMatrix::from_binary_edges(n, &edges).unwrap();

    let perm: Vec<usize> = vec![7, 2, 9, 4, 0, 5, 8, 1, 6, 3]; // new -> old
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut edges_p = Vec::new();
    for &(a, b) in &edges {
        edges_p.push((inv[a].min(inv[b]), inv[a].max(inv[b])));
    }
    let mp = AffinityMatrix::from_binary_edges(n, &edges_p).unwrap();

    let d = 4.0;
    let pa = penalize(&m, d).unwrap();
    let pap = penalize(&mp, d).unwrap();

    let mut u = DVector::from_fn(n, |i, _| 0.3 + 0.05 * i as f64);
    let mut up = DVector::from_fn(n, |i, _| u[perm[i]]);
    let mut acc = 0.0;
    let mut acc_p = 0.0;
    let alpha = 0.02;
    for _ in 0..60 {
        let g = solver::score(&u, &pa);
        let gp = solver::score(&up, &pap);
        u += alpha * solver::norm_rescale(&g, &mut acc, 0.9);
        up += alpha * solver::norm_rescale(&gp, &mut acc_p, 0.9);
        let (q, _) = solver::project(&u);
        let (qp, _) = solver::project(&up);
        u = q;
        up = qp;
        for i in 0..n {
            assert!(
                (up[i] - u[perm[i]]).abs() < 1e-9,
                "trajectories diverged at coordinate {i}: {} vs {}",
                up[i],
                u[perm[i]]
            );
        }
    }
}

/// Full path on the crisp triangle: solver cliques map onto the two rigid
/// self-congruences and nothing else.
#[test]
fn triangle_pipeline_finds_both_modes() {
    let mut spec = SceneSpec::triangle_toy();
    spec.applied_pose = Pose::from_axis_angle(
        nalgebra::Vector3::z(),
        0.4,
        nalgebra::Vector3::new(1.0, -0.5, 0.0),
    );
    let scene = generate(&spec).unwrap();
    let cands = all_pairs_candidates(&scene.s, &scene.t);
    let m = build_affinity(&scene.s, &scene.t, &cands, AffinityParams::new(0.4, 0.6)).unwrap();

    let oracle = enumerate_maximal_cliques(&binarize(&m, 0.5)).unwrap();
    let modes: Vec<_> = oracle.iter().filter(|c| c.len() >= 3).collect();
    assert_eq!(modes.len(), 2, "triangle should have exactly two rigid modes");

    let cfg = SolverConfig {
        n_particles: 200,
        seed: 11,
        ..SolverConfig::langevin_defaults()
    };
    let run = run_langevin(&m, &cfg).unwrap();
    let report = coverage_report(&run.cliques, &oracle);
    assert_eq!(report.hit_rate, 1.0);
    assert_eq!(report.spurious, 0);

    // the two cliques induce the two symmetry poses composed with the
    // applied transform
    let dist = cliques_to_distribution(&run.cliques, &m, &scene.s, &scene.t, MergeTolerance::default());
    assert_eq!(dist.len(), 2);
    for (pose, _) in dist.iter() {
        let matched = scene.symmetry_group.iter().any(|g| {
            let expected = spec.applied_pose.compose(&g.pose);
            expected.chordal_distance(pose) < 1e-6
                && (expected.translation - pose.translation).norm() < 1e-6
        });
        assert!(matched, "pose does not match any symmetry mode");
    }
}

/// The affinity matrix of a noiseless scene binarizes to a graph whose
/// maximal cliques of full scene size are exactly the symmetry group.
#[test]
fn circle_consistency_graph_matches_symmetry_group() {
    let scene = generate(&SceneSpec::circle(8, 4.0)).unwrap();
    let cands = all_pairs_candidates(&scene.s, &scene.t);
    let m = build_affinity(&scene.s, &scene.t, &cands, AffinityParams::new(0.4, 0.6)).unwrap();
    let cliques = enumerate_maximal_cliques(&binarize(&m, 0.5)).unwrap();
    let full: Vec<_> = cliques.iter().filter(|c| c.len() == 8).collect();
    // 8 rotations and 8 flips
    assert_eq!(full.len(), 16);
    assert!(cliques.iter().all(|c| c.len() <= 8));

    // the 8 rotation cliques are the documented symmetry correspondences
    for g in &scene.symmetry_group {
        let indices: Vec<usize> = g
            .correspondence
            .iter()
            .map(|&(i, j)| {
                cands
                    .iter()
                    .position(|a| a.s_index == i && a.t_index == j)
                    .unwrap()
            })
            .collect();
        let clique = Clique::new(indices);
        assert!(
            full.iter().any(|c| c.indices == clique.indices),
            "symmetry clique missing from the oracle enumeration"
        );
    }
}
