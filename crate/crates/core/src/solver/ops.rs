//! Primitive operations shared by the solver variants.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::affinity::{AffinityMatrix, PenalizedAffinity};
use crate::solver::{Clique, NoiseScale, ADAGRAD_EPS};

/// Quadratic-form objective `u^T M_d u`.
pub fn objective(u: &DVector<f64>, pa: &PenalizedAffinity) -> f64 {
    u.dot(&(pa.m_d() * u))
}

/// Gradient of the log posterior: `2 M_d u`.
pub fn score(u: &DVector<f64>, pa: &PenalizedAffinity) -> DVector<f64> {
    2.0 * (pa.m_d() * u)
}

/// RBF kernel `exp(-||x - y||^2 / (2 sigma_k^2))`.
pub fn rbf_kernel(x: &DVector<f64>, y: &DVector<f64>, sigma_k: f64) -> f64 {
    let sq = (x - y).norm_squared();
    (-sq / (2.0 * sigma_k * sigma_k)).exp()
}

/// Gradient of the RBF kernel in its second argument:
/// `k(x, y) * (x - y) / sigma_k^2`.
pub fn rbf_kernel_grad_y(x: &DVector<f64>, y: &DVector<f64>, sigma_k: f64) -> DVector<f64> {
    let k = rbf_kernel(x, y, sigma_k);
    (x - y) * (k / (sigma_k * sigma_k))
}

/// Kernelized update direction for every particle.
///
/// Row `i` is `(1/N) sum_j [ score(theta_j) k(theta_i, theta_j)
/// + grad_{theta_j} k(theta_i, theta_j) ]`. The attractive term pulls
/// particles toward high-density regions, the kernel-gradient term pushes
/// them apart. With a single particle this reduces exactly to the score.
pub fn svgd_direction(
    theta: &[DVector<f64>],
    pa: &PenalizedAffinity,
    sigma_k: f64,
) -> Vec<DVector<f64>> {
    let n_p = theta.len();
    assert!(n_p >= 1, "ensemble must contain at least one particle");
    let scores: Vec<DVector<f64>> = theta.par_iter().map(|u| score(u, pa)).collect();
    let inv_bw_sq = 1.0 / (sigma_k * sigma_k);
    let inv_n = 1.0 / n_p as f64;

    theta
        .par_iter()
        .map(|ti| {
            let mut phi = DVector::zeros(ti.len());
            for (tj, sj) in theta.iter().zip(&scores) {
                let diff = ti - tj;
                let k = (-diff.norm_squared() * 0.5 * inv_bw_sq).exp();
                phi.axpy(k, sj, 1.0);
                phi.axpy(k * inv_bw_sq, &diff, 1.0);
            }
            phi * inv_n
        })
        .collect()
}

/// Full Langevin increment before accumulator rescaling:
/// `alpha * score(u) + c(alpha) * noise` with `c` set by the noise mode.
pub fn langevin_direction(
    u: &DVector<f64>,
    pa: &PenalizedAffinity,
    alpha: f64,
    noise: &DVector<f64>,
    mode: NoiseScale,
) -> DVector<f64> {
    let mut dir = score(u, pa) * alpha;
    dir.axpy(mode.coefficient(alpha), noise, 1.0);
    dir
}

/// Per-coordinate adaptive rescaling with an exponentially decayed
/// squared-gradient accumulator (updated in place):
/// `acc <- decay * acc + (1 - decay) * g^2`, output `g / (sqrt(acc) + 1e-8)`.
///
/// Note that this flattens every coordinate to roughly unit magnitude. On
/// the penalized objective that erases the relative gradient structure the
/// clique dynamics depend on, so the solvers default to the
/// direction-preserving [`norm_rescale`] and keep this variant as an
/// ablation mode.
pub fn adagrad_rescale(g: &DVector<f64>, acc: &mut DVector<f64>, decay: f64) -> DVector<f64> {
    debug_assert_eq!(g.len(), acc.len());
    let mut out = DVector::zeros(g.len());
    for i in 0..g.len() {
        let gi = g[i];
        acc[i] = decay * acc[i] + (1.0 - decay) * gi * gi;
        out[i] = gi / (acc[i].sqrt() + ADAGRAD_EPS);
    }
    out
}

/// Per-particle adaptive rescaling: one scalar accumulator tracks the
/// squared 2-norm of the incoming directions (updated in place) and the
/// whole direction is divided by its square root, preserving the relative
/// magnitudes across coordinates:
/// `acc <- decay * acc + (1 - decay) * |g|^2`, output `g / (sqrt(acc) + 1e-8)`.
///
/// With `decay = 0` this is plain normalization to the unit sphere.
pub fn norm_rescale(g: &DVector<f64>, acc: &mut f64, decay: f64) -> DVector<f64> {
    *acc = decay * *acc + (1.0 - decay) * g.norm_squared();
    g / (acc.sqrt() + ADAGRAD_EPS)
}

/// Result of projecting a particle onto the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectOutcome {
    Ok,
    /// The input had no positive direction (zero or all-negative); the
    /// projection is the zero vector and the particle needs re-initialization.
    Degenerate,
}

/// Project onto the nonnegative part of the unit ball: normalize to unit
/// 2-norm, then clamp negatives to zero (in that order, so the result can
/// have norm below one).
pub fn project(u: &DVector<f64>) -> (DVector<f64>, ProjectOutcome) {
    let norm = u.norm();
    if norm == 0.0 {
        return (DVector::zeros(u.len()), ProjectOutcome::Degenerate);
    }
    let mut v = u / norm;
    let mut any_positive = false;
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        } else if *x > 0.0 {
            any_positive = true;
        }
    }
    if any_positive {
        (v, ProjectOutcome::Ok)
    } else {
        (v, ProjectOutcome::Degenerate)
    }
}

/// Largest eigenvalue of the affinity matrix by power iteration from the
/// all-ones vector. The matrix is entrywise nonnegative, so its spectral
/// radius is this eigenvalue and a positive start vector cannot be
/// orthogonal to the leading eigenvector.
pub fn max_eigenvalue(m: &AffinityMatrix) -> f64 {
    const MAX_ITERS: usize = 1000;
    const REL_TOL: f64 = 1e-6;

    let n = m.n();
    let a = m.m();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERS {
        let v = a * &x;
        let new_lambda = x.dot(&v);
        let vn = v.norm();
        if vn == 0.0 {
            return 0.0;
        }
        x = v / vn;
        if (new_lambda - lambda).abs() <= REL_TOL * new_lambda.abs().max(f64::MIN_POSITIVE) {
            return new_lambda;
        }
        lambda = new_lambda;
    }
    lambda
}

/// Extract the association set encoded by a projected particle: take the
/// top `round(u^T M_d u)` coordinates (clamped to `[0, n]`), ties broken
/// by lower index.
///
/// The quadratic form is evaluated on `u / |u|`. Hypotheses live on the
/// unit sphere intersected with the nonnegative cone, but the
/// normalize-then-clamp projection lets norms drift below one (the clamp
/// keeps removing the mass the penalty pushes negative), which would
/// deflate the rounded score of an otherwise clean clique indicator.
pub fn extract_clique(u: &DVector<f64>, pa: &PenalizedAffinity) -> Clique {
    let n = u.len();
    let norm = u.norm();
    if norm == 0.0 {
        return Clique {
            indices: Vec::new(),
            omega_hat: 0,
        };
    }
    let unit = u / norm;
    let u = &unit;
    let omega = objective(u, pa).round().clamp(0.0, n as f64) as usize;
    if omega == 0 {
        return Clique {
            indices: Vec::new(),
            omega_hat: 0,
        };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
    let mut indices = order[..omega].to_vec();
    indices.sort_unstable();
    Clique {
        indices,
        omega_hat: omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::{penalize, AffinityMatrix};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_pa(n: usize) -> PenalizedAffinity {
        let m = AffinityMatrix::from_binary_edges(n, &[]).unwrap();
        penalize(&m, 0.0).unwrap()
    }

    fn planted_clique_pa(n: usize, k: usize, d: f64) -> PenalizedAffinity {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                edges.push((i, j));
            }
        }
        let m = AffinityMatrix::from_binary_edges(n, &edges).unwrap();
        penalize(&m, d).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
    }

    #[test]
    fn objective_examples() {
        let pa1 = identity_pa(1);
        assert_relative_eq!(objective(&DVector::from_vec(vec![0.0]), &pa1), 0.0);
        assert_relative_eq!(objective(&DVector::from_vec(vec![1.0]), &pa1), 1.0);

        let pa = planted_clique_pa(6, 3, 0.0);
        let s = 1.0 / 3.0f64.sqrt();
        let u = DVector::from_vec(vec![s, s, s, 0.0, 0.0, 0.0]);
        assert_relative_eq!(objective(&u, &pa), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn score_examples() {
        let pa = identity_pa(3);
        let zero = DVector::zeros(3);
        assert_eq!(score(&zero, &pa), zero);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(score(&e1, &pa), 2.0 * e1.clone());
    }

    /// Central finite differences of the objective.
    fn fd_score(u: &DVector<f64>, pa: &PenalizedAffinity, h: f64) -> DVector<f64> {
        DVector::from_fn(u.len(), |i, _| {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] += h;
            dn[i] -= h;
            (objective(&up, pa) - objective(&dn, pa)) / (2.0 * h)
        })
    }

    #[test]
    fn score_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 12;
            let pa = planted_clique_pa(n, 4, rng.random_range(0.0..5.0));
            let u = rand_vec(&mut rng, n, -1.0, 1.0);
            let analytic = score(&u, &pa);
            let numeric = fd_score(&u, &pa, 1e-5);
            let rel = (&analytic - &numeric).norm() / analytic.norm().max(1e-12);
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn rbf_kernel_examples() {
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        assert_relative_eq!(rbf_kernel(&x, &x, 0.7), 1.0);
        assert_eq!(rbf_kernel_grad_y(&x, &x, 0.7), DVector::zeros(3));

        // ||x - y|| = sigma_k -> exp(-1/2)
        let y = DVector::from_vec(vec![0.3 + 0.7, -0.2, 0.5]);
        assert_relative_eq!(rbf_kernel(&x, &y, 0.7), (-0.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn rbf_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 8;
            let x = rand_vec(&mut rng, n, -1.0, 1.0);
            let y = rand_vec(&mut rng, n, -1.0, 1.0);
            let sigma_k = rng.random_range(0.3..1.5);
            let analytic = rbf_kernel_grad_y(&x, &y, sigma_k);
            let h = 1e-6;
            let numeric = DVector::from_fn(n, |i, _| {
                let mut up = y.clone();
                let mut dn = y.clone();
                up[i] += h;
                dn[i] -= h;
                (rbf_kernel(&x, &up, sigma_k) - rbf_kernel(&x, &dn, sigma_k)) / (2.0 * h)
            });
            let rel = (&analytic - &numeric).norm() / analytic.norm().max(1e-9);
            assert!(rel < 1e-6, "relative error {rel}");
        }
    }

    #[test]
    fn svgd_single_particle_is_score_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pa = planted_clique_pa(6, 3, 2.0);
        for _ in 0..10 {
            let u = rand_vec(&mut rng, 6, 0.0, 1.0);
            let dir = svgd_direction(std::slice::from_ref(&u), &pa, 0.005);
            assert_eq!(dir[0], score(&u, &pa));
        }
    }

    #[test]
    fn svgd_identical_particles_collapse_to_score() {
        let pa = planted_clique_pa(5, 3, 1.0);
        let u = DVector::from_vec(vec![0.4, 0.3, 0.2, 0.1, 0.0]);
        let dirs = svgd_direction(&[u.clone(), u.clone()], &pa, 0.05);
        let s = score(&u, &pa);
        assert_relative_eq!(&dirs[0], &s, max_relative = 1e-14);
        assert_relative_eq!(&dirs[1], &s, max_relative = 1e-14);
    }

    #[test]
    fn svgd_matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 6;
        let pa = planted_clique_pa(n, 3, 4.0);
        let theta: Vec<DVector<f64>> = (0..3).map(|_| rand_vec(&mut rng, n, 0.0, 1.0)).collect();
        let sigma_k = 0.25;
        let fast = svgd_direction(&theta, &pa, sigma_k);

        // textbook evaluation, independent of the production path
        let n_p = theta.len();
        for i in 0..n_p {
            let mut phi = DVector::zeros(n);
            for j in 0..n_p {
                let k = rbf_kernel(&theta[i], &theta[j], sigma_k);
                phi += k * score(&theta[j], &pa) + rbf_kernel_grad_y(&theta[i], &theta[j], sigma_k);
            }
            phi /= n_p as f64;
            assert_relative_eq!(&fast[i], &phi, epsilon = 1e-12);
        }
    }

    #[test]
    fn langevin_direction_examples() {
        let pa = identity_pa(4);
        let zero = DVector::zeros(4);
        let d = langevin_direction(&zero, &pa, 0.5, &zero, NoiseScale::TwoSqrtAlpha);
        assert_eq!(d, zero);

        // score = 0 at u = 0; alpha = 1 in the 2*sqrt(alpha) mode -> 2 * noise
        let noise = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
        let d = langevin_direction(&zero, &pa, 1.0, &noise, NoiseScale::TwoSqrtAlpha);
        assert_relative_eq!(&d, &(2.0 * noise.clone()), max_relative = 1e-15);

        let d = langevin_direction(&zero, &pa, 1.0, &noise, NoiseScale::SqrtTwoAlpha);
        assert_relative_eq!(&d, &(2.0f64.sqrt() * noise), max_relative = 1e-15);
    }

    #[test]
    fn langevin_increment_mean_is_drift() {
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pa = planted_clique_pa(4, 3, 1.0);
        let u = DVector::from_vec(vec![0.5, 0.4, 0.3, 0.2]);
        let alpha = 0.01;
        let n_draws = 100_000;
        let mut mean = DVector::zeros(4);
        for _ in 0..n_draws {
            let noise = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
            mean += langevin_direction(&u, &pa, alpha, &noise, NoiseScale::TwoSqrtAlpha);
        }
        mean /= n_draws as f64;
        let drift = alpha * score(&u, &pa);
        // std error of each coordinate: 2 sqrt(alpha) / sqrt(n_draws)
        let se = 2.0 * alpha.sqrt() / (n_draws as f64).sqrt();
        for i in 0..4 {
            assert!(
                (mean[i] - drift[i]).abs() < 3.0 * se,
                "coordinate {i}: {} vs {}",
                mean[i],
                drift[i]
            );
        }
    }

    #[test]
    fn adagrad_first_step_and_decay() {
        let g = DVector::from_element(3, 1.0);
        let mut acc = DVector::zeros(3);
        let out = adagrad_rescale(&g, &mut acc, 0.9);
        for i in 0..3 {
            assert_relative_eq!(acc[i], 0.1, max_relative = 1e-12);
            assert_relative_eq!(out[i], 1.0 / (0.1f64.sqrt() + 1e-8), max_relative = 1e-12);
            assert_relative_eq!(out[i], 3.1623, max_relative = 1e-4);
        }

        let zero = DVector::zeros(3);
        let out = adagrad_rescale(&zero, &mut acc, 0.9);
        assert_eq!(out, zero);
        for i in 0..3 {
            assert_relative_eq!(acc[i], 0.09, max_relative = 1e-12);
        }
    }

    #[test]
    fn norm_rescale_preserves_direction() {
        let g = DVector::from_vec(vec![3.0, -4.0, 0.0]);
        let mut acc = 0.0;
        let out = norm_rescale(&g, &mut acc, 0.0);
        assert_relative_eq!(acc, 25.0, max_relative = 1e-12);
        assert_relative_eq!(&out, &(&g / (5.0 + 1e-8)), max_relative = 1e-12);

        // constant-direction fixed point: output approaches the unit vector
        let mut acc = 0.0;
        let mut out = DVector::zeros(3);
        for _ in 0..300 {
            out = norm_rescale(&g, &mut acc, 0.9);
        }
        assert_relative_eq!(out.norm(), 1.0, max_relative = 1e-8);
        assert_relative_eq!(out[0] / out[1], -0.75, max_relative = 1e-12);
    }

    #[test]
    fn adagrad_converges_to_sign() {
        let g = DVector::from_element(2, -0.7);
        let mut acc = DVector::zeros(2);
        let mut out = DVector::zeros(2);
        for _ in 0..500 {
            out = adagrad_rescale(&g, &mut acc, 0.9);
        }
        for i in 0..2 {
            assert_relative_eq!(out[i], -1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn project_examples() {
        let (p, o) = project(&DVector::from_vec(vec![3.0, 4.0, 0.0]));
        assert_eq!(o, ProjectOutcome::Ok);
        assert_relative_eq!(&p, &DVector::from_vec(vec![0.6, 0.8, 0.0]), max_relative = 1e-15);

        let (p, o) = project(&DVector::from_vec(vec![1.0, -1.0]));
        assert_eq!(o, ProjectOutcome::Ok);
        assert_relative_eq!(p[0], 1.0 / 2.0f64.sqrt(), max_relative = 1e-15);
        assert_eq!(p[1], 0.0);
        assert!(p.norm() < 1.0);

        // idempotent on the feasible set
        let u = DVector::from_vec(vec![0.6, 0.8]);
        let (p, _) = project(&u);
        assert_relative_eq!(&p, &u, max_relative = 1e-15);

        let (p, o) = project(&DVector::zeros(3));
        assert_eq!(o, ProjectOutcome::Degenerate);
        assert_eq!(p, DVector::zeros(3));

        let (p, o) = project(&DVector::from_vec(vec![-1.0, -2.0]));
        assert_eq!(o, ProjectOutcome::Degenerate);
        assert_eq!(p, DVector::zeros(2));
    }

    #[test]
    fn max_eigenvalue_examples() {
        let ident = AffinityMatrix::from_binary_edges(5, &[]).unwrap();
        assert_relative_eq!(max_eigenvalue(&ident), 1.0, max_relative = 1e-6);

        // all-ones 4x4: single nonzero eigenvalue 4
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((i, j));
            }
        }
        let ones = AffinityMatrix::from_binary_edges(4, &edges).unwrap();
        assert_relative_eq!(max_eigenvalue(&ones), 4.0, max_relative = 1e-6);
    }

    #[test]
    fn max_eigenvalue_matches_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let n = 16;
            let k = rng.random_range(3..8);
            let mut edges = Vec::new();
            for i in 0..k {
                for j in (i + 1)..k {
                    edges.push((i, j));
                }
            }
            for _ in 0..10 {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            let m = AffinityMatrix::from_binary_edges(n, &edges).unwrap();
            let dense = DMatrix::from(m.m().clone())
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(max_eigenvalue(&m), dense, max_relative = 1e-5);
        }
    }

    #[test]
    fn planted_clique_eigenvalue_is_clique_size() {
        // k-clique block of ones has leading eigenvalue k; identity elsewhere
        for k in [3usize, 5, 8] {
            let pa = planted_clique_pa(20, k, 0.0);
            assert_relative_eq!(max_eigenvalue(pa.base()), k as f64, max_relative = 1e-5);
        }
    }

    #[test]
    fn extract_clique_examples() {
        let pa = planted_clique_pa(8, 3, 1.0);
        let s = 1.0 / 3.0f64.sqrt();
        let mut u = DVector::zeros(8);
        u[0] = s;
        u[1] = s;
        u[2] = s;
        let c = extract_clique(&u, &pa);
        assert_eq!(c.omega_hat, 3);
        assert_eq!(c.indices, vec![0, 1, 2]);

        let ident = identity_pa(4);
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let c = extract_clique(&e1, &ident);
        assert_eq!(c.omega_hat, 1);
        assert_eq!(c.indices, vec![0]);

        let c = extract_clique(&DVector::zeros(4), &ident);
        assert!(c.is_empty());
        assert_eq!(c.omega_hat, 0);
    }

    #[test]
    fn extract_clique_tie_break_prefers_lower_index() {
        let pa = identity_pa(4);
        // objective = 0.25 * 4... use u with equal entries and omega 1
        let u = DVector::from_vec(vec![0.7, 0.7, 0.0, 0.0]);
        // objective = 0.49 + 0.49 = 0.98 -> omega 1; tie between 0 and 1
        let c = extract_clique(&u, &pa);
        assert_eq!(c.indices, vec![0]);
    }
}
