//! Exact maximal-clique enumeration on the binarized consistency graph.
//!
//! This is the ground-truth side of the solver comparison: every locally
//! optimal hypothesis of the particle solvers should correspond to a
//! maximal clique here. Enumeration cost is exponential in the worst case,
//! so the graph size is capped; the particle solvers are the scalable
//! approximation of exactly this enumeration.

use serde::{Deserialize, Serialize};

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::solver::Clique;

/// Node cap for enumeration; beyond this the search space is considered
/// intractable and the call is rejected.
pub const DEFAULT_ENUMERATION_CAP: usize = 64;

/// Default threshold for rounding affinity entries to edges.
pub const DEFAULT_BINARIZE_THRESHOLD: f64 = 0.5;

/// Undirected graph over candidate associations, stored as bitset rows.
#[derive(Debug, Clone)]
pub struct ConsistencyGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
}

impl ConsistencyGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let words = n.div_ceil(64);
        let mut g = Self {
            n,
            words,
            adj: vec![0; n * words],
        };
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfBounds {
                    what: "edge endpoint",
                    index: a.max(b),
                    len: n,
                });
            }
            if a != b {
                g.set_edge(a, b);
            }
        }
        Ok(g)
    }

    fn set_edge(&mut self, a: usize, b: usize) {
        self.adj[a * self.words + b / 64] |= 1 << (b % 64);
        self.adj[b * self.words + a / 64] |= 1 << (a % 64);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }
}

/// Round an affinity matrix to a graph: edge iff the off-diagonal entry is
/// strictly above `threshold`.
pub fn binarize(m: &AffinityMatrix, threshold: f64) -> ConsistencyGraph {
    let n = m.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if m.m()[(i, j)] > threshold {
                edges.push((i, j));
            }
        }
    }
    ConsistencyGraph::new(n, &edges).expect("edges are in range by construction")
}

/// Enumerate all maximal cliques with the default node cap.
pub fn enumerate_maximal_cliques(g: &ConsistencyGraph) -> Result<Vec<Clique>> {
    enumerate_maximal_cliques_capped(g, DEFAULT_ENUMERATION_CAP)
}

/// Enumerate all maximal cliques (including singletons of isolated nodes)
/// via Bron-Kerbosch with pivoting. Each clique is sorted ascending and the
/// list is sorted lexicographically.
pub fn enumerate_maximal_cliques_capped(g: &ConsistencyGraph, cap: usize) -> Result<Vec<Clique>> {
    if g.n() > cap {
        return Err(Error::GraphTooLarge { n: g.n(), cap });
    }
    let words = g.words.max(1);
    let mut p = vec![0u64; words];
    for v in 0..g.n {
        p[v / 64] |= 1 << (v % 64);
    }
    let x = vec![0u64; words];
    let mut r = Vec::new();
    let mut out = Vec::new();
    bron_kerbosch(g, &mut r, p, x, &mut out);
    let mut cliques: Vec<Clique> = out.into_iter().map(Clique::new).collect();
    cliques.sort_unstable_by(|a, b| a.indices.cmp(&b.indices));
    Ok(cliques)
}

fn bits_is_empty(b: &[u64]) -> bool {
    b.iter().all(|&w| w == 0)
}

fn bits_iter(b: &[u64]) -> impl Iterator<Item = usize> + '_ {
    b.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            }
        })
    })
}

fn bits_and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_count_and(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

fn bron_kerbosch(
    g: &ConsistencyGraph,
    r: &mut Vec<usize>,
    p: Vec<u64>,
    x: Vec<u64>,
    out: &mut Vec<Vec<usize>>,
) {
    if bits_is_empty(&p) && bits_is_empty(&x) {
        out.push(r.clone());
        return;
    }
    // pivot: vertex of P union X with the most neighbors inside P
    let pivot = bits_iter(&p)
        .chain(bits_iter(&x))
        .max_by_key(|&v| bits_count_and(g.row(v), &p))
        .expect("P union X is nonempty here");

    // candidates: P minus N(pivot)
    let mut candidates: Vec<usize> = bits_iter(&p)
        .filter(|&v| !g.is_adjacent(pivot, v))
        .collect();
    candidates.sort_unstable();

    let mut p = p;
    let mut x = x;
    for v in candidates {
        let nv = g.row(v);
        r.push(v);
        bron_kerbosch(g, r, bits_and(&p, nv), bits_and(&x, nv), out);
        r.pop();
        p[v / 64] &= !(1 << (v % 64));
        x[v / 64] |= 1 << (v % 64);
    }
}

/// How well a set of extracted cliques covers the exact maximal cliques.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Fraction of oracle maximal cliques (at or above the size filter)
    /// exactly recovered by some extracted clique.
    pub hit_rate: f64,
    /// Fraction of oracle cliques not hit but strictly containing some
    /// extracted clique.
    pub partial_rate: f64,
    /// Fraction of distinct extracted cliques (at or above the size filter)
    /// that are not contained in any oracle maximal clique.
    pub spurious_rate: f64,
    pub oracle_cliques_considered: usize,
    pub hits: usize,
    pub partials: usize,
    pub spurious: usize,
    pub extracted_distinct: usize,
    /// Per-oracle-clique coverage with the multiplicity of exact matches
    /// among the (pre-deduplication) extracted cliques.
    pub per_clique: Vec<CliqueCoverage>,
    /// Size filter applied to both sides (size-1 sets carry no pose
    /// information and are excluded by default).
    pub min_clique_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliqueCoverage {
    pub indices: Vec<usize>,
    pub hit: bool,
    pub partial: bool,
    pub multiplicity: usize,
}

/// Compare extracted cliques against the exact enumeration with the
/// default minimum clique size of 2.
pub fn coverage_report(extracted: &[Clique], oracle: &[Clique]) -> CoverageReport {
    coverage_report_filtered(extracted, oracle, 2)
}

pub fn coverage_report_filtered(
    extracted: &[Clique],
    oracle: &[Clique],
    min_clique_size: usize,
) -> CoverageReport {
    use std::collections::HashMap;

    let mut multiplicity: HashMap<&[usize], usize> = HashMap::new();
    let mut distinct: Vec<&Clique> = Vec::new();
    for c in extracted {
        if c.len() < min_clique_size {
            continue;
        }
        let entry = multiplicity.entry(c.indices.as_slice()).or_insert(0);
        if *entry == 0 {
            distinct.push(c);
        }
        *entry += 1;
    }

    let considered: Vec<&Clique> = oracle.iter().filter(|c| c.len() >= min_clique_size).collect();

    let mut hits = 0usize;
    let mut partials = 0usize;
    let mut per_clique = Vec::with_capacity(considered.len());
    for oc in &considered {
        let mult = multiplicity.get(oc.indices.as_slice()).copied().unwrap_or(0);
        let hit = mult > 0;
        let partial = !hit
            && distinct
                .iter()
                .any(|ec| ec.len() < oc.len() && ec.is_subset_of(oc));
        if hit {
            hits += 1;
        }
        if partial {
            partials += 1;
        }
        per_clique.push(CliqueCoverage {
            indices: oc.indices.clone(),
            hit,
            partial,
            multiplicity: mult,
        });
    }

    let spurious = distinct
        .iter()
        .filter(|ec| !oracle.iter().any(|oc| ec.is_subset_of(oc)))
        .count();

    let rate = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    };
    CoverageReport {
        hit_rate: rate(hits, considered.len(), 1.0),
        partial_rate: rate(partials, considered.len(), 0.0),
        spurious_rate: rate(spurious, distinct.len(), 0.0),
        oracle_cliques_considered: considered.len(),
        hits,
        partials,
        spurious,
        extracted_distinct: distinct.len(),
        per_clique,
        min_clique_size,
    }
}
