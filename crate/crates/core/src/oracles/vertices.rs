//! Exhaustive search over the vertices of a small transportation polytope.
//!
//! Every vertex is a basic solution supported on a spanning tree of the
//! bipartite graph rows ∪ columns; the flow on a tree is forced and is found
//! by repeatedly peeling a leaf.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transport::{TransportPlan, TransportProblem};

/// Largest number of rows or columns accepted.
pub const MAX_SIDE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexReport<S> {
    pub cost: S,
    pub plan: TransportPlan<S>,
    /// Spanning trees examined, and how many gave a nonnegative flow.
    pub trees: usize,
    pub feasible_vertices: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Forced flow on the tree with edges `cells`, or `None` if some edge would
/// carry negative mass beyond round-off.
fn tree_flow<S: Scalar>(p: &TransportProblem<S>, cells: &[(usize, usize)]) -> Option<Vec<S>> {
    let (m, n) = (p.m(), p.n());
    // node i < m is a row, m + j a column
    let mut supply: Vec<S> = p.mu().iter().chain(p.nu()).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &(i, j) in cells {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut done = vec![false; cells.len()];
    let mut flow = vec![S::zero(); cells.len()];
    let tol = S::epsilon() * S::lit(1e3);
    for _ in 0..cells.len() {
        let (e, leaf) = cells.iter().enumerate().find_map(|(e, &(i, j))| {
            if done[e] {
                None
            } else if degree[i] == 1 {
                Some((e, i))
            } else if degree[m + j] == 1 {
                Some((e, m + j))
            } else {
                None
            }
        })?;
        let (i, j) = cells[e];
        let other = if leaf == i { m + j } else { i };
        let amount = supply[leaf];
        if amount < -tol {
            return None;
        }
        let amount = amount.max(S::zero());
        flow[e] = amount;
        supply[leaf] = S::zero();
        supply[other] = supply[other] - amount;
        degree[i] -= 1;
        degree[m + j] -= 1;
        done[e] = true;
    }
    Some(flow)
}

/// Minimum cost over all basic feasible plans.
pub fn ot_oracle_vertices<S: Scalar>(p: &TransportProblem<S>) -> Result<VertexReport<S>> {
    let (m, n) = (p.m(), p.n());
    if m > MAX_SIDE || n > MAX_SIDE {
        return Err(Error::TooLarge {
            what: "vertex oracle",
            size: m.max(n),
            limit: MAX_SIDE,
        });
    }
    let cells: Vec<(usize, usize)> = (0..m).cartesian_product(0..n).collect();
    let mut best: Option<(S, Vec<S>)> = None;
    let mut trees = 0;
    let mut feasible_vertices = 0;
    for tree in cells.iter().copied().combinations(m + n - 1) {
        let mut uf = UnionFind::new(m + n);
        if !tree.iter().all(|&(i, j)| uf.union(i, m + j)) {
            continue;
        }
        trees += 1;
        let Some(flow) = tree_flow(p, &tree) else {
            continue;
        };
        feasible_vertices += 1;
        let mut pi = vec![S::zero(); m * n];
        for (&(i, j), &f) in tree.iter().zip(&flow) {
            pi[i * n + j] = f;
        }
        let cost = pi
            .iter()
            .zip(p.cost_matrix())
            .fold(S::zero(), |acc, (&a, &c)| acc + a * c);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, pi));
        }
    }
    let (cost, pi) = best.ok_or_else(|| Error::InvalidInput("transportation polytope has no vertex".into()))?;
    Ok(VertexReport {
        cost,
        plan: TransportPlan::from_row_major(m, n, pi)?,
        trees,
        feasible_vertices,
    })
}
