//! Discrete optimal transport with Kantorovich potentials.
//!
//! Plans are computed exactly by successive shortest paths on the bipartite
//! transportation network. Potentials are read off the final residual
//! network, tightened by one round of c-transforms and normalized to
//! `f_1 = 0`.

use crate::certificates::{certify_transport, Certificate, Tolerances};
use crate::error::{check_dim, Error, Result};
use crate::scalar::{dot, Scalar};

/// Marginals `μ ∈ Δ_m`, `ν ∈ Δ_n` and a finite nonnegative `m×n` cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem<S> {
    mu: Vec<S>,
    nu: Vec<S>,
    cost: Vec<S>,
}

fn check_marginal<S: Scalar>(name: &str, v: &[S]) -> Result<S> {
    if v.is_empty() {
        return Err(Error::InvalidInput(format!("{name} must be nonempty")));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::NotANumber("marginal"));
    }
    if v.iter().any(|&x| !(x >= S::zero()) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative")));
    }
    Ok(v.iter().copied().sum())
}

impl<S: Scalar> TransportProblem<S> {
    pub fn new(mu: Vec<S>, nu: Vec<S>, cost: Vec<Vec<S>>) -> Result<Self> {
        check_dim("cost rows", mu.len(), cost.len())?;
        let mut flat = Vec::with_capacity(mu.len() * nu.len());
        for row in &cost {
            check_dim("cost columns", nu.len(), row.len())?;
            flat.extend_from_slice(row);
        }
        Self::from_row_major(mu, nu, flat)
    }

    pub fn from_row_major(mu: Vec<S>, nu: Vec<S>, cost: Vec<S>) -> Result<Self> {
        let total_mu = check_marginal("mu", &mu)?;
        let total_nu = check_marginal("nu", &nu)?;
        check_dim("cost entries", mu.len() * nu.len(), cost.len())?;
        if cost.iter().any(|c| c.is_nan()) {
            return Err(Error::NotANumber("cost"));
        }
        if cost.iter().any(|&c| !(c >= S::zero()) || !c.is_finite()) {
            return Err(Error::InvalidInput("costs must be finite and nonnegative".into()));
        }
        let tol = S::lit(1e-12).max(S::epsilon() * S::lit(8.0));
        if (total_mu - total_nu).abs() > tol {
            return Err(Error::MarginalMismatch(format!(
                "sum(mu) = {total_mu}, sum(nu) = {total_nu}"
            )));
        }
        if (total_mu - S::one()).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "marginals must be probability vectors, total mass {total_mu}"
            )));
        }
        Ok(Self { mu, nu, cost })
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn nu(&self) -> &[S] {
        &self.nu
    }

    pub fn cost(&self, i: usize, j: usize) -> S {
        self.cost[i * self.nu.len() + j]
    }

    pub fn cost_matrix(&self) -> &[S] {
        &self.cost
    }

    /// `Σ_ij π_ij c_ij`, accumulated in row-major order.
    pub fn cost_of(&self, plan: &TransportPlan<S>) -> S {
        dot(&plan.pi, &self.cost)
    }

    /// The problem with rows and columns relabeled: new row `i` is old row
    /// `rows[i]`, new column `j` is old column `cols[j]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        check_dim("row permutation", self.m(), rows.len())?;
        check_dim("column permutation", self.n(), cols.len())?;
        let mu = rows.iter().map(|&i| self.mu[i]).collect();
        let nu = cols.iter().map(|&j| self.nu[j]).collect();
        let cost = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.cost(i, j))
            .collect();
        Self::from_row_major(mu, nu, cost)
    }
}

/// Row-major `m×n` coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    m: usize,
    n: usize,
    pi: Vec<S>,
}

impl<S: Scalar> TransportPlan<S> {
    pub fn from_row_major(m: usize, n: usize, pi: Vec<S>) -> Result<Self> {
        check_dim("plan entries", m * n, pi.len())?;
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("plan entries must be finite".into()));
        }
        Ok(Self { m, n, pi })
    }

    /// Independent coupling `μ ⊗ ν`.
    pub fn product(mu: &[S], nu: &[S]) -> Self {
        let pi = mu.iter().flat_map(|&a| nu.iter().map(move |&b| a * b)).collect();
        Self {
            m: mu.len(),
            n: nu.len(),
            pi,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.pi[i * self.n + j]
    }

    pub fn entries(&self) -> &[S] {
        &self.pi
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.pi.chunks_exact(self.n)
    }

    pub fn row_sums(&self) -> Vec<S> {
        self.rows().map(|r| r.iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.n];
        for row in self.rows() {
            for (acc, &v) in out.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        out
    }
}

/// Kantorovich potentials with `f ⊕ g ≤ c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials<S> {
    pub f: Vec<S>,
    pub g: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtSolution<S> {
    pub plan: TransportPlan<S>,
    pub potentials: Potentials<S>,
    pub certificate: Certificate<S>,
    /// Number of augmenting paths used.
    pub augmentations: usize,
}

struct Edge<S> {
    to: usize,
    cap: S,
    cost: S,
}

struct Network<S> {
    edges: Vec<Edge<S>>,
    adj: Vec<Vec<usize>>,
}

impl<S: Scalar> Network<S> {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: S, cost: S) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: S::zero(),
            cost: -cost,
        });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Label-correcting shortest paths from `source` on reduced costs
    /// `cost + π(u) − π(v)` over edges with residual capacity above `eps`.
    fn shortest_paths(&self, source: usize, potential: &[S], eps: S) -> (Vec<S>, Vec<Option<usize>>) {
        let nodes = self.adj.len();
        let mut dist = vec![S::infinity(); nodes];
        let mut parent = vec![None; nodes];
        let mut queued = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = S::zero();
        queue.push_back(source);
        queued[source] = true;
        let mut relaxations = 0usize;
        let limit = nodes * self.edges.len() + 16;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap <= eps {
                    continue;
                }
                let reduced = edge.cost + potential[u] - potential[edge.to];
                let cand = dist[u] + reduced;
                if cand < dist[edge.to] {
                    dist[edge.to] = cand;
                    parent[edge.to] = Some(e);
                    if !queued[edge.to] {
                        queued[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
            relaxations += 1;
            if relaxations > limit {
                break;
            }
        }
        (dist, parent)
    }
}

/// Optimal plan, potentials and certificate.
pub fn solve_ot<S: Scalar>(p: &TransportProblem<S>) -> Result<OtSolution<S>> {
    let (m, n) = (p.m(), p.n());
    // zero-mass rows and columns are left out of the flow network
    let rows: Vec<usize> = (0..m).filter(|&i| p.mu[i] > S::zero()).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| p.nu[j] > S::zero()).collect();
    let (mr, nc) = (rows.len(), cols.len());
    let source = mr + nc;
    let sink = source + 1;
    let mut net = Network::new(mr + nc + 2);
    let big = S::one() + S::one();
    for (a, &i) in rows.iter().enumerate() {
        net.add(source, a, p.mu[i], S::zero());
    }
    let mut cell_edge = vec![vec![0usize; nc]; mr];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            cell_edge[a][b] = net.add(a, mr + b, big, p.cost(i, j));
        }
    }
    for (b, &j) in cols.iter().enumerate() {
        net.add(mr + b, sink, p.nu[j], S::zero());
    }

    let eps = S::epsilon() * S::lit(16.0);
    let mut potential = vec![S::zero(); mr + nc + 2];
    let mut augmentations = 0;
    let max_aug = 4 * (mr + nc + 2) * (mr * nc + 2);
    while augmentations < max_aug {
        let (dist, parent) = net.shortest_paths(source, &potential, eps);
        if dist[sink].is_infinite() {
            break;
        }
        let mut delta = S::infinity();
        let mut v = sink;
        while let Some(e) = parent[v] {
            delta = delta.min(net.edges[e].cap);
            v = net.edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = parent[v] {
            net.edges[e].cap = net.edges[e].cap - delta;
            net.edges[e ^ 1].cap = net.edges[e ^ 1].cap + delta;
            v = net.edges[e ^ 1].to;
        }
        let reach = dist.iter().copied().filter(|d| d.is_finite()).fold(S::zero(), S::max);
        for (pi, d) in potential.iter_mut().zip(&dist) {
            *pi = *pi + if d.is_finite() { *d } else { reach };
        }
        augmentations += 1;
    }

    let mut pi = vec![S::zero(); m * n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let flow = net.edges[cell_edge[a][b] ^ 1].cap;
            pi[i * n + j] = flow.max(S::zero());
        }
    }
    let plan = TransportPlan { m, n, pi };
    let potentials = potentials_from_plan(p, &plan);
    let certificate = certify_transport(p, &plan, &potentials, Tolerances::transport())?;
    Ok(OtSolution {
        plan,
        potentials,
        certificate,
        augmentations,
    })
}

/// Dual potentials complementary to `plan`: shortest-path distances in the
/// residual graph (all cells forward at cost `c_ij`, charged cells backward
/// at `−c_ij`), then one round of c-transforms, normalization `f_1 = 0` and a
/// rounding margin that keeps `f ⊕ g ≤ c` valid in floating point.
pub fn potentials_from_plan<S: Scalar>(p: &TransportProblem<S>, plan: &TransportPlan<S>) -> Potentials<S> {
    let (m, n) = (p.m(), p.n());
    let charged = S::epsilon() * S::lit(16.0);
    // Bellman–Ford from a virtual root joined to every node at cost 0
    let mut d = vec![S::zero(); m + n];
    for _ in 0..(m + n + 1) {
        let mut changed = false;
        for i in 0..m {
            for j in 0..n {
                let c = p.cost(i, j);
                if d[i] + c < d[m + j] {
                    d[m + j] = d[i] + c;
                    changed = true;
                }
                if plan.get(i, j) > charged && d[m + j] - c < d[i] {
                    d[i] = d[m + j] - c;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let g: Vec<S> = d[m..].to_vec();
    let f = c_transform(p, &g);
    let g = c_transform_cols(p, &f);
    let f = c_transform(p, &g);
    let shift = f[0];
    let max_cost = p.cost.iter().copied().fold(S::zero(), S::max);
    let margin = S::epsilon() * S::lit(16.0) * (S::one() + max_cost);
    Potentials {
        f: f.iter().map(|&v| v - shift).collect(),
        g: g.iter().map(|&v| v + shift - margin).collect(),
    }
}

/// `f_i = min_j (c_ij − g_j)`, the largest `f` with `f ⊕ g ≤ c`.
pub fn c_transform<S: Scalar>(p: &TransportProblem<S>, g: &[S]) -> Vec<S> {
    (0..p.m())
        .map(|i| (0..p.n()).map(|j| p.cost(i, j) - g[j]).fold(S::infinity(), S::min))
        .collect()
}

/// `g_j = min_i (c_ij − f_i)`.
pub fn c_transform_cols<S: Scalar>(p: &TransportProblem<S>, f: &[S]) -> Vec<S> {
    (0..p.n())
        .map(|j| (0..p.m()).map(|i| p.cost(i, j) - f[i]).fold(S::infinity(), S::min))
        .collect()
}

/// Cells `(i, j)` with `π_ij > tol` and `c_ij − f_i − g_j > tol`.
pub fn slackness_check<S: Scalar>(
    p: &TransportProblem<S>,
    plan: &TransportPlan<S>,
    potentials: &Potentials<S>,
    tol: S,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..p.m() {
        for j in 0..p.n() {
            if plan.get(i, j) > tol && p.cost(i, j) - potentials.f[i] - potentials.g[j] > tol {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn swap_cost() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0], vec![1.0, 0.0]]
    }

    #[test]
    fn zero_cost_matching() {
        let p = TransportProblem::new(vec![0.5, 0.5], vec![0.5, 0.5], swap_cost()).unwrap();
        let s = solve_ot(&p).unwrap();
        assert_eq!(s.plan.entries(), &[0.5, 0.0, 0.0, 0.5]);
        assert!(p.cost_of(&s.plan).abs() < 1e-15);
        assert!(s.potentials.f.iter().chain(&s.potentials.g).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn three_tenths_instance() {
        let p = TransportProblem::new(vec![0.7, 0.3], vec![0.4, 0.6], swap_cost()).unwrap();
        let s = solve_ot(&p).unwrap();
        let expected = [0.4, 0.3, 0.0, 0.3];
        for (a, b) in s.plan.entries().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((s.certificate.primal_value - 0.3).abs() < 1e-15);
        assert!((s.certificate.dual_value - 0.3).abs() < 1e-12);
        let f = &s.potentials.f;
        let g = &s.potentials.g;
        assert_eq!(f[0], 0.0);
        assert!((f[1] + 1.0).abs() < 1e-12 && g[0].abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        assert!(s.certificate.gap >= 0.0 && s.certificate.gap <= 1e-9);
        assert!(slackness_check(&p, &s.plan, &s.potentials, 1e-9).is_empty());
        assert!(s.certificate.passes());
    }

    #[test]
    fn product_coupling_violates_slackness() {
        let p = TransportProblem::new(vec![0.7, 0.3], vec![0.4, 0.6], swap_cost()).unwrap();
        let s = solve_ot(&p).unwrap();
        let indep = TransportPlan::product(p.mu(), p.nu());
        assert!(!slackness_check(&p, &indep, &s.potentials, 1e-9).is_empty());
    }

    #[test]
    fn forced_plans() {
        let p = TransportProblem::new(vec![1.0f64], vec![0.5, 0.5], vec![vec![0.0, 1.0]]).unwrap();
        let s = solve_ot(&p).unwrap();
        assert_eq!(s.plan.entries(), &[0.5, 0.5]);
        assert!((s.certificate.primal_value - 0.5).abs() < 1e-15);
        let one = TransportProblem::new(vec![1.0], vec![1.0], vec![vec![3.0]]).unwrap();
        let s = solve_ot(&one).unwrap();
        assert!(slackness_check(&one, &s.plan, &s.potentials, 1e-9).is_empty());
    }

    #[test]
    fn c_transform_examples() {
        let p = TransportProblem::new(vec![0.7, 0.3], vec![0.4, 0.6], swap_cost()).unwrap();
        assert_eq!(c_transform(&p, &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(c_transform(&p, &[0.0, 1.0]), vec![0.0, -1.0]);
        let f = c_transform(&p, &[0.3, -0.2]);
        let g = c_transform_cols(&p, &f);
        assert_eq!(c_transform(&p, &g), f);
    }

    #[test]
    fn zero_mass_rows_and_columns() {
        let p = TransportProblem::new(
            vec![0.0, 1.0],
            vec![0.25, 0.0, 0.75],
            vec![vec![0.0, 0.0, 0.0], vec![2.0, 1.0, 3.0]],
        )
        .unwrap();
        let s = solve_ot(&p).unwrap();
        assert_eq!(s.plan.entries(), &[0.0, 0.0, 0.0, 0.25, 0.0, 0.75]);
        assert!(s.certificate.passes(), "{:?}", s.certificate);
    }

    #[test]
    fn marginal_mismatch() {
        let err = TransportProblem::new(vec![0.5, 0.5], vec![0.5, 0.6], swap_cost()).unwrap_err();
        assert!(matches!(err, Error::MarginalMismatch(_)));
    }

    fn normalized(raw: Vec<u32>) -> Vec<f64> {
        let total: u32 = raw.iter().sum();
        raw.iter().map(|&v| f64::from(v) / f64::from(total)).collect()
    }

    proptest! {
        #[test]
        fn permutation_equivariance(
            mu in prop::collection::vec(1u32..10, 3),
            nu in prop::collection::vec(1u32..10, 3),
            cost in prop::collection::vec(0u32..10, 9),
            rows in Just(vec![2usize, 0, 1]),
            cols in Just(vec![1usize, 2, 0]),
        ) {
            let p = TransportProblem::from_row_major(
                normalized(mu),
                normalized(nu),
                cost.iter().map(|&c| f64::from(c)).collect(),
            ).unwrap();
            let q = p.permuted(&rows, &cols).unwrap();
            let a = solve_ot(&p).unwrap();
            let b = solve_ot(&q).unwrap();
            prop_assert!((a.certificate.primal_value - b.certificate.primal_value).abs() < 1e-12);
            prop_assert!(a.certificate.passes() && b.certificate.passes());
            prop_assert!(slackness_check(&q, &b.plan, &b.potentials, 1e-9).is_empty());
        }
    }
}
