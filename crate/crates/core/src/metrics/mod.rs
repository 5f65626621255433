//! Distances between empirical pose distributions: energy distance, MMD,
//! and exact Wasserstein-1, computed separately on translations (Euclidean
//! ground metric) and rotations (chordal ground metric).

mod transport;

pub use transport::{solve_transport, TransportSolution};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::PoseDistribution;

/// Ground metric on the pose component under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundMetric {
    /// Euclidean distance between translations.
    TranslationEuclidean,
    /// Frobenius norm of the rotation difference.
    RotationChordal,
}

impl GroundMetric {
    pub fn distance(&self, a: &crate::pose::Pose, b: &crate::pose::Pose) -> f64 {
        match self {
            GroundMetric::TranslationEuclidean => a.translation_distance(b),
            GroundMetric::RotationChordal => a.chordal_distance(b),
        }
    }

    pub fn component_name(&self) -> &'static str {
        match self {
            GroundMetric::TranslationEuclidean => "translation",
            GroundMetric::RotationChordal => "rotation",
        }
    }
}

/// Kernel bandwidth selection for MMD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// Weighted median of pairwise ground distances over the pooled
    /// samples; falls back to 1 when the median is not positive.
    Median,
}

/// Ground distances between the distinct samples of two distributions.
/// Multiplicities are honored downstream as weights, not by expansion.
pub fn pairwise_distances(
    a: &PoseDistribution,
    b: &PoseDistribution,
    g: GroundMetric,
) -> Result<DMatrix<f64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("pose distribution"));
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        g.distance(&a.samples[i], &b.samples[j])
    }))
}

fn weights(d: &PoseDistribution) -> Vec<f64> {
    let total = d.total_multiplicity() as f64;
    d.multiplicities.iter().map(|&m| m as f64 / total).collect()
}

/// Energy distance `2 E d(X,Y) - E d(X,X') - E d(Y,Y')` with expectations
/// under the multiplicity-weighted empirical measures (the squared-form
/// estimator, self-pairs included).
pub fn energy_distance(a: &PoseDistribution, b: &PoseDistribution, g: GroundMetric) -> Result<f64> {
    let dab = pairwise_distances(a, b, g)?;
    let daa = pairwise_distances(a, a, g)?;
    let dbb = pairwise_distances(b, b, g)?;
    let wa = weights(a);
    let wb = weights(b);
    let mean = |d: &DMatrix<f64>, wr: &[f64], wc: &[f64]| {
        let mut acc = 0.0;
        for i in 0..wr.len() {
            for j in 0..wc.len() {
                acc += wr[i] * wc[j] * d[(i, j)];
            }
        }
        acc
    };
    Ok(2.0 * mean(&dab, &wa, &wb) - mean(&daa, &wa, &wa) - mean(&dbb, &wb, &wb))
}

/// Squared maximum mean discrepancy with the Gaussian kernel
/// `exp(-d^2 / (2 h^2))` over the ground metric, as the biased V-statistic
/// (self-pairs included), weighted by multiplicities.
pub fn mmd(
    a: &PoseDistribution,
    b: &PoseDistribution,
    g: GroundMetric,
    bandwidth: Bandwidth,
) -> Result<f64> {
    let dab = pairwise_distances(a, b, g)?;
    let daa = pairwise_distances(a, a, g)?;
    let dbb = pairwise_distances(b, b, g)?;
    let h = match bandwidth {
        Bandwidth::Fixed(h) => {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "kernel bandwidth must be positive, got {h}"
                )));
            }
            h
        }
        Bandwidth::Median => median_bandwidth(a, b, g),
    };
    let wa = weights(a);
    let wb = weights(b);
    let inv = 1.0 / (2.0 * h * h);
    let kmean = |d: &DMatrix<f64>, wr: &[f64], wc: &[f64]| {
        let mut acc = 0.0;
        for i in 0..wr.len() {
            for j in 0..wc.len() {
                let dij = d[(i, j)];
                acc += wr[i] * wc[j] * (-dij * dij * inv).exp();
            }
        }
        acc
    };
    Ok(kmean(&daa, &wa, &wa) + kmean(&dbb, &wb, &wb) - 2.0 * kmean(&dab, &wa, &wb))
}

/// Weighted median of pairwise distances between distinct pooled samples.
/// All-identical pooled samples (or any other way the median fails to be
/// positive) fall back to `h = 1`.
fn median_bandwidth(a: &PoseDistribution, b: &PoseDistribution, g: GroundMetric) -> f64 {
    let pooled: Vec<(&crate::pose::Pose, f64)> = a
        .iter()
        .map(|(p, m)| (p, m as f64))
        .chain(b.iter().map(|(p, m)| (p, m as f64)))
        .collect();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            pairs.push((g.distance(pooled[i].0, pooled[j].0), pooled[i].1 * pooled[j].1));
        }
    }
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut median = 0.0;
    for (d, w) in &pairs {
        acc += w;
        if acc >= total / 2.0 {
            median = *d;
            break;
        }
    }
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Exact Wasserstein-1 between the multiplicity-weighted empirical
/// measures, solved as a balanced transportation problem (multiplicities
/// cross-scaled to a common integer total, so flows are exact).
pub fn wasserstein1(a: &PoseDistribution, b: &PoseDistribution, g: GroundMetric) -> Result<f64> {
    let d = pairwise_distances(a, b, g)?;
    let wa_total: u64 = a.total_multiplicity();
    let wb_total: u64 = b.total_multiplicity();
    let supplies: Vec<u64> = a.multiplicities.iter().map(|&m| m * wb_total).collect();
    let demands: Vec<u64> = b.multiplicities.iter().map(|&m| m * wa_total).collect();
    let cost: Vec<Vec<f64>> = (0..a.len())
        .map(|i| (0..b.len()).map(|j| d[(i, j)]).collect())
        .collect();
    let sol = solve_transport(&cost, &supplies, &demands)?;
    Ok(sol.scaled_cost / sol.total_mass as f64)
}

/// One row of the metric report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRecord {
    pub metric: String,
    pub component: String,
    pub value: f64,
}
