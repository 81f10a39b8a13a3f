//! Graph sums indexed by partitions of `[±m]`.
//!
//! For a partition `pi` of `[±m]` the graph `G_pi` has one vertex per block
//! and one edge `E_k` per label `k`, joining the block of `+k` to the block
//! of `-k`. Given matrices `A_1, ..., A_m`, the graph sum is
//! `sum_{ker j >= pi} prod_k A_k(j_{-k}, j_{+k})`.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::partition::{enumerate, mobius, GroundSet, PartitionError, PartitionFilter, SetPartition};

/// Default ceiling on the number of index assignments visited by a graph sum.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphSumError {
    #[error("partition must live on a signed ground set [±m]")]
    NotSignedGround,
    #[error("expected {expected} matrices, got {got}")]
    MatrixCount { expected: usize, got: usize },
    #[error("matrix {index} is {rows}x{cols}, expected {n}x{n}")]
    MatrixShape {
        index: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("graph sum needs {needed} evaluations, over the budget of {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("graph has a component that is neither a cycle nor a bouquet of loops")]
    NotCycleOrLoop,
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Whether the kernel of the summation index must refine or equal the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConstraint {
    /// `ker j >= pi`: indices on distinct blocks may coincide.
    AtLeast,
    /// `ker j = pi`: indices on distinct blocks are distinct.
    Exactly,
}

/// Number of edge labels `m` when `pi` lives on `[±m]`.
pub fn edge_count(pi: &SetPartition) -> Result<usize, GraphSumError> {
    let g = pi.ground();
    let m = g.len() / 2;
    if !g.len().is_multiple_of(2) || *g != GroundSet::signed(m) {
        return Err(GraphSumError::NotSignedGround);
    }
    Ok(m)
}

/// The directed multigraph `G_pi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairGraph {
    vertex_count: usize,
    /// `edges[k - 1] = (block of +k, block of -k)`.
    edges: Vec<(usize, usize)>,
}

impl PairGraph {
    pub fn from_partition(pi: &SetPartition) -> Result<Self, GraphSumError> {
        let m = edge_count(pi)?;
        let edges = (1..=m as i32)
            .map(|k| (pi.block_of(k).expect("in ground"), pi.block_of(-k).expect("in ground")))
            .collect();
        Ok(Self {
            vertex_count: pi.block_count(),
            edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    /// Edge indices (0-based) whose removal disconnects their endpoints.
    pub fn bridges(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let n = self.vertex_count;
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut is_bridge = vec![false; self.edges.len()];
        let mut time = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = time;
            low[root] = time;
            time += 1;
            // (vertex, edge used to enter it, next adjacency slot)
            let mut stack = vec![(root, usize::MAX, 0usize)];
            while let Some(&mut (u, parent_edge, ref mut slot)) = stack.last_mut() {
                if let Some(&(v, e)) = adj[u].get(*slot) {
                    *slot += 1;
                    if e == parent_edge {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = time;
                        low[v] = time;
                        time += 1;
                        stack.push((v, e, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[parent_edge] = true;
                        }
                    }
                }
            }
        }
        (0..self.edges.len()).filter(|&e| is_bridge[e]).collect()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }

    /// Classes as sorted vertex lists, ordered by smallest member.
    fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; n];
        for v in 0..n {
            let r = self.find(v);
            if index[r] == usize::MAX {
                index[r] = out.len();
                out.push(Vec::new());
            }
            out[index[r]].push(v);
        }
        out
    }
}

/// The forest of two-edge-connected components of `G_pi` and the growth exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSummary {
    /// Vertex (block) indices of each two-edge-connected component.
    pub components: Vec<Vec<usize>>,
    /// Bridge labels `k` (1-based), ascending.
    pub bridges: Vec<usize>,
    /// Degree of each component in the bridge forest.
    pub degrees: Vec<usize>,
    /// `tau_pi`: leaves count 1/2, isolated components count 1.
    pub exponent: Ratio<i64>,
}

pub fn forest_summary(pi: &SetPartition) -> Result<ForestSummary, GraphSumError> {
    let graph = PairGraph::from_partition(pi)?;
    let bridge_edges = graph.bridges();
    let mut uf = UnionFind::new(graph.vertex_count);
    for (e, &(u, v)) in graph.edges.iter().enumerate() {
        if !bridge_edges.contains(&e) {
            uf.union(u, v);
        }
    }
    let components = uf.classes();
    let mut component_of = vec![0; graph.vertex_count];
    for (c, vs) in components.iter().enumerate() {
        for &v in vs {
            component_of[v] = c;
        }
    }
    let mut degrees = vec![0; components.len()];
    for &e in &bridge_edges {
        let (u, v) = graph.edges[e];
        degrees[component_of[u]] += 1;
        degrees[component_of[v]] += 1;
    }
    let exponent = degrees
        .iter()
        .map(|&d| match d {
            0 => Ratio::from_integer(1),
            1 => Ratio::new(1, 2),
            _ => Ratio::from_integer(0),
        })
        .sum();
    Ok(ForestSummary {
        components,
        bridges: bridge_edges.iter().map(|e| e + 1).collect(),
        degrees,
        exponent,
    })
}

/// `tau_pi`, the exponent in `|graph sum| <= N^tau prod ||A_k||`.
pub fn graph_sum_exponent(pi: &SetPartition) -> Result<Ratio<i64>, GraphSumError> {
    Ok(forest_summary(pi)?.exponent)
}

fn check_matrices(m: usize, matrices: &[CMatrix]) -> Result<usize, GraphSumError> {
    if matrices.len() != m {
        return Err(GraphSumError::MatrixCount {
            expected: m,
            got: matrices.len(),
        });
    }
    let n = matrices.first().map_or(0, |a| a.nrows());
    for (index, a) in matrices.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(GraphSumError::MatrixShape {
                index: index + 1,
                rows: a.nrows(),
                cols: a.ncols(),
                n,
            });
        }
    }
    Ok(n)
}

fn check_budget(n: usize, blocks: usize, budget: u64) -> Result<(), GraphSumError> {
    let needed = (n as f64).powi(blocks as i32);
    if needed > budget as f64 {
        return Err(GraphSumError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Calls `visit` on every assignment of values `0..n` to `blocks` slots,
/// skipping non-injective ones when `injective` is set.
pub(crate) fn for_each_assignment(n: usize, blocks: usize, injective: bool, mut visit: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut values = vec![0usize; blocks];
    loop {
        let ok = !injective || {
            let mut seen = vec![false; n];
            values.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
        };
        if ok {
            visit(&values);
        }
        let mut i = blocks;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < n {
                break;
            }
            values[i] = 0;
        }
    }
}

/// Evaluates the graph sum of `pi` on `matrices` (one per edge label).
pub fn evaluate_graph_sum(
    pi: &SetPartition,
    matrices: &[CMatrix],
    constraint: KernelConstraint,
    budget: u64,
) -> Result<Complex64, GraphSumError> {
    let graph = PairGraph::from_partition(pi)?;
    let n = check_matrices(graph.edges.len(), matrices)?;
    check_budget(n, graph.vertex_count, budget)?;
    let mut total = Complex64::new(0.0, 0.0);
    for_each_assignment(n, graph.vertex_count, constraint == KernelConstraint::Exactly, |j| {
        let mut prod = Complex64::new(1.0, 0.0);
        for (a, &(plus, minus)) in matrices.iter().zip(&graph.edges) {
            prod *= a[(j[minus], j[plus])];
        }
        total += prod;
    });
    Ok(total)
}

/// The `ker j = pi` sum computed as `sum_{theta >= pi} mu(pi, theta) G_theta`.
pub fn evaluate_exactly_via_mobius(
    pi: &SetPartition,
    matrices: &[CMatrix],
    budget: u64,
) -> Result<Complex64, GraphSumError> {
    let mut total = Complex64::new(0.0, 0.0);
    for theta in coarsenings(pi)? {
        let mu = mobius(pi, &theta)?;
        total += mu as f64 * evaluate_graph_sum(&theta, matrices, KernelConstraint::AtLeast, budget)?;
    }
    Ok(total)
}

/// All partitions `theta >= pi` of the same ground set.
pub fn coarsenings(pi: &SetPartition) -> Result<Vec<SetPartition>, PartitionError> {
    let quotient = GroundSet::plain(pi.block_count());
    enumerate(&quotient, PartitionFilter::All)?
        .map(|q| {
            let raw: Vec<usize> = pi.labels().iter().map(|&l| q.labels()[l]).collect();
            SetPartition::from_labels(pi.ground().clone(), &raw)
        })
        .collect()
}

/// One trace factor of a factorized graph sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceFactor {
    /// `Tr(prod A_k or A_k^T)` along a cycle; entries are `(k, transposed)`.
    Cycle(Vec<(usize, bool)>),
    /// `Tr(A_{k1} ∘ A_{k2} ∘ ...)` for loops at a single vertex; a single loop is `Tr(A_k)`.
    Loops(Vec<usize>),
}

/// Product of trace factors equal to the `ker j >= pi` graph sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceExpression {
    pub factors: Vec<TraceFactor>,
}

impl TraceExpression {
    pub fn evaluate(&self, matrices: &[CMatrix]) -> Complex64 {
        self.factors
            .iter()
            .map(|f| match f {
                TraceFactor::Cycle(steps) => {
                    let mut prod: Option<CMatrix> = None;
                    for &(k, t) in steps {
                        let a = &matrices[k - 1];
                        let a = if t { a.t().to_owned() } else { a.clone() };
                        prod = Some(match prod {
                            None => a,
                            Some(p) => p.dot(&a),
                        });
                    }
                    prod.map_or(Complex64::new(1.0, 0.0), |p| p.diag().sum())
                }
                TraceFactor::Loops(ks) => {
                    let n = matrices[ks[0] - 1].nrows();
                    (0..n)
                        .map(|i| ks.iter().map(|&k| matrices[k - 1][(i, i)]).product::<Complex64>())
                        .sum()
                }
            })
            .product()
    }
}

impl fmt::Display for TraceExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match factor {
                TraceFactor::Cycle(steps) => {
                    let parts: Vec<String> = steps
                        .iter()
                        .map(|&(k, t)| if t { format!("A{k}^T") } else { format!("A{k}") })
                        .collect();
                    write!(f, "Tr({})", parts.join(" "))?;
                }
                TraceFactor::Loops(ks) => {
                    let parts: Vec<String> = ks.iter().map(|k| format!("A{k}")).collect();
                    write!(f, "Tr({})", parts.join(" ∘ "))?;
                }
            }
        }
        Ok(())
    }
}

/// Rewrites the graph sum as a product of traces when every connected
/// component of `G_pi` is a cycle or a single vertex carrying only loops.
///
/// Walking edge `k` from the block of `-k` to the block of `+k` contributes
/// `A_k`; walking it the other way contributes `A_k^T`. Each cycle starts at
/// its lowest-numbered block along its lowest-labelled edge.
pub fn factor_graph_sum(pi: &SetPartition) -> Result<TraceExpression, GraphSumError> {
    let graph = PairGraph::from_partition(pi)?;
    let mut uf = UnionFind::new(graph.vertex_count);
    for &(u, v) in &graph.edges {
        uf.union(u, v);
    }
    let adj = graph.adjacency();
    let mut factors = Vec::new();
    for vertices in uf.classes() {
        let edges: Vec<usize> = (0..graph.edges.len())
            .filter(|&e| vertices.contains(&graph.edges[e].0))
            .collect();
        if vertices.len() == 1 {
            factors.push(TraceFactor::Loops(edges.iter().map(|e| e + 1).collect()));
            continue;
        }
        let is_cycle = edges.len() == vertices.len()
            && edges.iter().all(|&e| graph.edges[e].0 != graph.edges[e].1)
            && vertices.iter().all(|&v| adj[v].len() == 2);
        if !is_cycle {
            return Err(GraphSumError::NotCycleOrLoop);
        }
        let start = vertices[0];
        let mut used = vec![false; graph.edges.len()];
        let mut steps = Vec::with_capacity(edges.len());
        let mut at = start;
        loop {
            let next = adj[at].iter().filter(|&&(_, e)| !used[e]).min_by_key(|&&(_, e)| e);
            let Some(&(to, e)) = next else { break };
            used[e] = true;
            let (plus, minus) = graph.edges[e];
            debug_assert!((at, to) == (minus, plus) || (at, to) == (plus, minus));
            steps.push((e + 1, at != minus));
            at = to;
        }
        factors.push(TraceFactor::Cycle(steps));
    }
    Ok(TraceExpression { factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_complex_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> SetPartition {
        s.parse().unwrap()
    }

    const SECTION_EXAMPLE: &str =
        "{{-3},{3,1,-2},{-5,-1,-7,-4},{7},{2,4},{6},{-6,5,8},{-8},{-10,12},{10,-12},{-11,11,-9},{9}}";

    #[test]
    fn worked_example_bridges_and_exponent() {
        let s = forest_summary(&p(SECTION_EXAMPLE)).unwrap();
        assert_eq!(s.bridges, vec![3, 5, 6, 7, 8, 9]);
        assert_eq!(s.exponent, Ratio::from_integer(4));
    }

    #[test]
    fn simple_exponents() {
        // a single loop: one isolated component
        assert_eq!(graph_sum_exponent(&p("{{-1,1}}")).unwrap(), Ratio::from_integer(1));
        // one bridge between two leaves
        assert_eq!(graph_sum_exponent(&p("{{-1},{1}}")).unwrap(), Ratio::from_integer(1));
        // path of two bridges: two leaves and one interior vertex
        assert_eq!(
            graph_sum_exponent(&p("{{1},{-1,2},{-2}}")).unwrap(),
            Ratio::from_integer(1)
        );
        // star with three leaves
        assert_eq!(
            graph_sum_exponent(&p("{{-1,-2,-3},{1},{2},{3}}")).unwrap(),
            Ratio::new(3, 2)
        );
        // double edge is not a bridge
        let s = forest_summary(&p("{{-1,-2},{1,2}}")).unwrap();
        assert!(s.bridges.is_empty());
        assert!(graph_sum_exponent(&p("{{1,2}}")).is_err());
    }

    #[test]
    fn worked_factorizations() {
        let e = factor_graph_sum(&p("{{1,-6},{6,5},{-5,7},{-7,-1},{-2,3},{-3,2},{-4,4}}")).unwrap();
        assert_eq!(e.to_string(), "Tr(A1 A6 A5^T A7^T) Tr(A2 A3) Tr(A4)");
        let e = factor_graph_sum(&p("{{-1,6},{1,-6},{-2,-7},{2,7},{-3,3,-5,5},{-4,4}}")).unwrap();
        assert_eq!(e.to_string(), "Tr(A1 A6) Tr(A2 A7^T) Tr(A3 ∘ A5) Tr(A4)");
        assert_eq!(
            factor_graph_sum(&p("{{-1,-2,-3},{1},{2},{3}}")),
            Err(GraphSumError::NotCycleOrLoop)
        );
    }

    #[test]
    fn exact_sums_agree_directly_and_via_mobius() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mats: Vec<CMatrix> = (0..3).map(|_| random_complex_matrix(&mut rng, 3)).collect();
        for pi in enumerate(&GroundSet::signed(3), PartitionFilter::All)
            .unwrap()
            .step_by(7)
        {
            let direct = evaluate_graph_sum(&pi, &mats, KernelConstraint::Exactly, DEFAULT_BUDGET).unwrap();
            let via = evaluate_exactly_via_mobius(&pi, &mats, DEFAULT_BUDGET).unwrap();
            assert!((direct - via).norm() < 1e-9 * (1.0 + direct.norm()), "{pi}");
        }
    }

    #[test]
    fn budget_and_shape_errors() {
        let pi = p("{{-1},{1},{-2},{2}}");
        let mats = vec![CMatrix::eye(10), CMatrix::eye(10)];
        assert!(matches!(
            evaluate_graph_sum(&pi, &mats, KernelConstraint::AtLeast, 1000),
            Err(GraphSumError::BudgetExceeded { .. })
        ));
        assert!(matches!(
            evaluate_graph_sum(&pi, &mats[..1], KernelConstraint::AtLeast, 1000),
            Err(GraphSumError::MatrixCount { .. })
        ));
    }

    #[test]
    fn identity_graph_sum_counts_components() {
        // with A_k = I every connected component contributes a factor N
        let mats = vec![CMatrix::eye(4); 2];
        let v = evaluate_graph_sum(&p("{{-1,2},{1,-2}}"), &mats, KernelConstraint::AtLeast, DEFAULT_BUDGET).unwrap();
        assert!((v.re - 4.0).abs() < 1e-12);
        let v = evaluate_graph_sum(&p("{{-1,1},{-2,2}}"), &mats, KernelConstraint::AtLeast, DEFAULT_BUDGET).unwrap();
        assert!((v.re - 16.0).abs() < 1e-12);
    }
}
