//! Exact balanced-transportation solve by network simplex on the spanning
//! tree of basic cells.
//!
//! Supplies and demands are integers (multiplicities cross-scaled so both
//! sides balance exactly), so flows stay exact throughout; only costs and
//! potentials are floating point. The entering rule is most-negative
//! reduced cost with a switch to Bland's rule after a pivot budget, which
//! guarantees termination under degeneracy.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct BasisCell {
    row: usize,
    col: usize,
    flow: u64,
}

/// Solution of one transportation problem.
pub struct TransportSolution {
    /// Basic cells (row, col, flow) in scaled integer units.
    pub flows: Vec<(usize, usize, u64)>,
    /// Row and column potentials of the optimal basis.
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    /// Objective value in scaled units: `sum flow * cost`.
    pub scaled_cost: f64,
    /// The common scaled total mass on each side.
    pub total_mass: u64,
}

/// Minimize `sum c[i][j] f[i][j]` subject to row sums `supplies`, column
/// sums `demands`, `f >= 0`. Inputs must balance: `sum supplies == sum demands`.
pub fn solve_transport(
    cost: &[Vec<f64>],
    supplies: &[u64],
    demands: &[u64],
) -> Result<TransportSolution> {
    let n = supplies.len();
    let m = demands.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("transportation problem"));
    }
    let total: u64 = supplies.iter().sum();
    if total != demands.iter().sum::<u64>() {
        return Err(Error::InvalidParameter(
            "transportation supplies and demands must balance".into(),
        ));
    }
    if supplies.iter().chain(demands).any(|&w| w == 0) {
        return Err(Error::InvalidParameter(
            "transportation masses must be positive".into(),
        ));
    }

    let mut basis = northwest_corner(supplies, demands);
    let max_cost = cost
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = 1e-12 * max_cost.max(1.0);

    let dantzig_budget = 50 * (n + m + 1);
    let hard_cap = 2000 * (n + m + 1);
    let mut pivots = 0usize;
    loop {
        let (u, v) = potentials(&basis, cost, n, m);
        let entering = if pivots < dantzig_budget {
            most_negative_entering(&basis, cost, &u, &v, n, m, tol)
        } else {
            bland_entering(&basis, cost, &u, &v, n, m, tol)
        };
        let Some((ei, ej)) = entering else {
            let scaled_cost = basis
                .iter()
                .map(|c| c.flow as f64 * cost[c.row][c.col])
                .sum();
            return Ok(TransportSolution {
                flows: basis.iter().map(|c| (c.row, c.col, c.flow)).collect(),
                row_potentials: u,
                col_potentials: v,
                scaled_cost,
                total_mass: total,
            });
        };
        pivot(&mut basis, ei, ej, n, m);
        pivots += 1;
        if pivots > hard_cap {
            return Err(Error::InvalidParameter(
                "transportation solve exceeded the pivot budget".into(),
            ));
        }
    }
}

/// Initial spanning-tree basis with exactly `n + m - 1` cells.
fn northwest_corner(supplies: &[u64], demands: &[u64]) -> Vec<BasisCell> {
    let n = supplies.len();
    let m = demands.len();
    let mut s = supplies.to_vec();
    let mut d = demands.to_vec();
    let mut basis = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let f = s[i].min(d[j]);
        basis.push(BasisCell {
            row: i,
            col: j,
            flow: f,
        });
        s[i] -= f;
        d[j] -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if s[i] == 0 && i < n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), n + m - 1);
    basis
}

/// Solve `u_i + v_j = c_ij` over the basis tree, anchored at `u_0 = 0`.
fn potentials(basis: &[BasisCell], cost: &[Vec<f64>], n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (row_adj, col_adj) = adjacency(basis, n, m);
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; m];
    u[0] = 0.0;
    // BFS over tree nodes: rows are 0..n, cols are n..n+m
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(0usize);
    while let Some(node) = queue.pop_front() {
        if node < n {
            for &ci in &row_adj[node] {
                let cell = &basis[ci];
                if v[cell.col].is_nan() {
                    v[cell.col] = cost[cell.row][cell.col] - u[cell.row];
                    queue.push_back(n + cell.col);
                }
            }
        } else {
            let col = node - n;
            for &ci in &col_adj[col] {
                let cell = &basis[ci];
                if u[cell.row].is_nan() {
                    u[cell.row] = cost[cell.row][cell.col] - v[cell.col];
                    queue.push_back(cell.row);
                }
            }
        }
    }
    (u, v)
}

fn adjacency(basis: &[BasisCell], n: usize, m: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut row_adj = vec![Vec::new(); n];
    let mut col_adj = vec![Vec::new(); m];
    for (idx, c) in basis.iter().enumerate() {
        row_adj[c.row].push(idx);
        col_adj[c.col].push(idx);
    }
    (row_adj, col_adj)
}

fn most_negative_entering(
    basis: &[BasisCell],
    cost: &[Vec<f64>],
    u: &[f64],
    v: &[f64],
    n: usize,
    m: usize,
    tol: f64,
) -> Option<(usize, usize)> {
    let in_basis = basis_set(basis, m);
    let mut best = None;
    let mut best_r = -tol;
    for i in 0..n {
        for j in 0..m {
            if in_basis.contains(&(i * m + j)) {
                continue;
            }
            let r = cost[i][j] - u[i] - v[j];
            if r < best_r {
                best_r = r;
                best = Some((i, j));
            }
        }
    }
    best
}

fn bland_entering(
    basis: &[BasisCell],
    cost: &[Vec<f64>],
    u: &[f64],
    v: &[f64],
    n: usize,
    m: usize,
    tol: f64,
) -> Option<(usize, usize)> {
    let in_basis = basis_set(basis, m);
    for i in 0..n {
        for j in 0..m {
            if in_basis.contains(&(i * m + j)) {
                continue;
            }
            if cost[i][j] - u[i] - v[j] < -tol {
                return Some((i, j));
            }
        }
    }
    None
}

fn basis_set(basis: &[BasisCell], m: usize) -> std::collections::HashSet<usize> {
    basis.iter().map(|c| c.row * m + c.col).collect()
}

/// Bring cell `(ei, ej)` into the basis: find the unique tree cycle it
/// closes, shift flow around it, and drop a zero-flow cell on the
/// decreasing side (smallest (row, col) among the minimizers, for
/// determinism and anti-cycling).
fn pivot(basis: &mut Vec<BasisCell>, ei: usize, ej: usize, n: usize, m: usize) {
    let (row_adj, col_adj) = adjacency(basis, n, m);
    // tree path from row node `ei` to col node `n + ej`
    let n_nodes = n + m;
    let mut parent_edge: Vec<Option<usize>> = vec![None; n_nodes];
    let mut parent_node: Vec<Option<usize>> = vec![None; n_nodes];
    let mut visited = vec![false; n_nodes];
    let mut queue = std::collections::VecDeque::new();
    visited[ei] = true;
    queue.push_back(ei);
    while let Some(node) = queue.pop_front() {
        if node == n + ej {
            break;
        }
        let edges = if node < n {
            &row_adj[node]
        } else {
            &col_adj[node - n]
        };
        for &ci in edges {
            let cell = &basis[ci];
            let next = if node < n { n + cell.col } else { cell.row };
            if !visited[next] {
                visited[next] = true;
                parent_edge[next] = Some(ci);
                parent_node[next] = Some(node);
                queue.push_back(next);
            }
        }
    }
    // walk back from the column node to the row node; the first path cell
    // (incident to the entering column) carries -theta, then signs alternate
    let mut path_cells = Vec::new();
    let mut node = n + ej;
    while node != ei {
        let ci = parent_edge[node].expect("tree path exists");
        path_cells.push(ci);
        node = parent_node[node].expect("tree path exists");
    }
    // cells at even positions from the entering edge decrease
    let decreasing: Vec<usize> = path_cells.iter().copied().step_by(2).collect();
    let theta = decreasing
        .iter()
        .map(|&ci| basis[ci].flow)
        .min()
        .expect("cycle has at least one decreasing cell");
    let leaving = decreasing
        .iter()
        .copied()
        .filter(|&ci| basis[ci].flow == theta)
        .min_by_key(|&ci| (basis[ci].row, basis[ci].col))
        .expect("a minimizer exists");

    for (pos, &ci) in path_cells.iter().enumerate() {
        if pos % 2 == 0 {
            basis[ci].flow -= theta;
        } else {
            basis[ci].flow += theta;
        }
    }
    basis[leaving] = BasisCell {
        row: ei,
        col: ej,
        flow: theta,
    };
}
