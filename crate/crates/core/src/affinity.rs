//! Geometric-consistency affinity matrix over candidate associations.
//!
//! Entry `(i, j)` scores how well associations `i` and `j` can hold
//! simultaneously under a rigid motion: `exp(-d^2 / (2 sigma^2))` when the
//! consistency distance `d` is below the cutoff `epsilon`, zero otherwise.
//! Zero entries form the inconsistency mask `C`, and the penalized matrix
//! `M_d = M - d C` drives the particle solvers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pointset::{consistency_distance, Association, PointSet};

/// Parameters for [`build_affinity`].
#[derive(Debug, Clone, Copy)]
pub struct AffinityParams {
    /// Consistency-kernel width in meters.
    pub sigma: f64,
    /// Consistency cutoff in meters.
    pub epsilon: f64,
    /// Treat two candidates sharing an endpoint (same `s` or same `t`) as
    /// mutually exclusive, i.e. give them affinity zero. On by default to
    /// match one-to-one association semantics; can be disabled for ablation.
    pub endpoint_exclusivity: bool,
}

impl AffinityParams {
    pub fn new(sigma: f64, epsilon: f64) -> Self {
        Self {
            sigma,
            epsilon,
            endpoint_exclusivity: true,
        }
    }
}

/// Symmetric affinity matrix with unit diagonal, entries in `[0, 1]`,
/// plus the derived inconsistency mask and the candidate list the rows
/// and columns refer to.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    m: DMatrix<f64>,
    mask_c: DMatrix<f64>,
    candidates: Vec<Association>,
    sigma: f64,
    epsilon: f64,
}

impl AffinityMatrix {
    /// Wrap an already-built affinity matrix. Checks the structural
    /// invariants; the mask is derived from the zeros of `m`.
    pub fn from_matrix(
        m: DMatrix<f64>,
        candidates: Vec<Association>,
        sigma: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::InvalidParameter("affinity matrix must be square".into()));
        }
        if candidates.len() != n {
            return Err(Error::InvalidParameter(format!(
                "candidate list length {} does not match matrix size {n}",
                candidates.len()
            )));
        }
        for i in 0..n {
            if (m[(i, i)] - 1.0).abs() != 0.0 {
                return Err(Error::InvalidParameter("affinity diagonal must be exactly 1".into()));
            }
            for j in (i + 1)..n {
                let a = m[(i, j)];
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidParameter(format!(
                        "affinity entry ({i},{j}) = {a} outside [0, 1]"
                    )));
                }
                if (a - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "affinity entry ({i},{j}) not symmetric"
                    )));
                }
            }
        }
        let mask_c = derive_mask(&m);
        Ok(Self {
            m,
            mask_c,
            candidates,
            sigma,
            epsilon,
        })
    }

    /// Binary affinity from an undirected adjacency list: 1 on edges and on
    /// the diagonal, 0 elsewhere. Candidates are synthesized placeholders;
    /// used for planted-clique experiments and the maximal-clique comparison.
    pub fn from_binary_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfBounds {
                    what: "edge endpoint",
                    index: a.max(b),
                    len: n,
                });
            }
            if a != b {
                m[(a, b)] = 1.0;
                m[(b, a)] = 1.0;
            }
        }
        let candidates = (0..n).map(|i| Association::new(i, i)).collect();
        Self::from_matrix(m, candidates, 1.0, 1.0)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Inconsistency mask: 1 where `m` is exactly 0 off-diagonal, else 0.
    pub fn mask_c(&self) -> &DMatrix<f64> {
        &self.mask_c
    }

    pub fn candidates(&self) -> &[Association] {
        &self.candidates
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

fn derive_mask(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j && m[(i, j)] == 0.0 {
            1.0
        } else {
            0.0
        }
    })
}

/// Build the affinity matrix for `candidates` between point sets `s` and `t`.
pub fn build_affinity(
    s: &PointSet,
    t: &PointSet,
    candidates: &[Association],
    params: AffinityParams,
) -> Result<AffinityMatrix> {
    if params.sigma <= 0.0 || !params.sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", params.sigma)));
    }
    if params.epsilon <= 0.0 || !params.epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {}",
            params.epsilon
        )));
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate list"));
    }
    for c in candidates {
        if c.s_index >= s.len() {
            return Err(Error::IndexOutOfBounds {
                what: "candidate s_index",
                index: c.s_index,
                len: s.len(),
            });
        }
        if c.t_index >= t.len() {
            return Err(Error::IndexOutOfBounds {
                what: "candidate t_index",
                index: c.t_index,
                len: t.len(),
            });
        }
    }

    let n = candidates.len();
    let inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let (ci, cj) = (candidates[i], candidates[j]);
            let shared = ci.s_index == cj.s_index || ci.t_index == cj.t_index;
            let entry = if shared && params.endpoint_exclusivity {
                0.0
            } else {
                let d = consistency_distance(ci, cj, s, t);
                if d < params.epsilon {
                    (-d * d * inv_two_sigma_sq).exp()
                } else {
                    0.0
                }
            };
            m[(i, j)] = entry;
            m[(j, i)] = entry;
        }
    }
    let mask_c = derive_mask(&m);
    Ok(AffinityMatrix {
        m,
        mask_c,
        candidates: candidates.to_vec(),
        sigma: params.sigma,
        epsilon: params.epsilon,
    })
}

/// Affinity with inconsistent entries replaced by `-d`: `m_d = m - d * C`.
#[derive(Debug, Clone)]
pub struct PenalizedAffinity {
    base: AffinityMatrix,
    d: f64,
    m_d: DMatrix<f64>,
}

impl PenalizedAffinity {
    pub fn base(&self) -> &AffinityMatrix {
        &self.base
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn m_d(&self) -> &DMatrix<f64> {
        &self.m_d
    }

    pub fn n(&self) -> usize {
        self.m_d.nrows()
    }
}

/// Apply penalty `d` to the inconsistent entries of `base`.
pub fn penalize(base: &AffinityMatrix, d: f64) -> Result<PenalizedAffinity> {
    if d < 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!("penalty d must be >= 0, got {d}")));
    }
    let m_d = base.m() - base.mask_c() * d;
    Ok(PenalizedAffinity {
        base: base.clone(),
        d,
        m_d,
    })
}
