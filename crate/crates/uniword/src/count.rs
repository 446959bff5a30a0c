//! Exact counting: cycle counts, the removal bound and admissible lengths,
//! the 2^bound lower bound on distinct u-words, and Eulerian-circuit counts
//! via arborescences (directed matrix-tree with fraction-free elimination),
//! backed by an exhaustive search oracle on small graphs.
//!
//! Everything here is integer arithmetic over [`BigCount`]; no operation
//! exposes a non-integer intermediate.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::ClusterGraph;

/// Arbitrary-precision non-negative count.
pub type BigCount = BigUint;

fn big_factorial(k: usize) -> BigUint {
    (2..=k as u64).map(BigUint::from).fold(BigUint::one(), |a, b| a * b)
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for t in 0..k {
        num *= BigUint::from((n - t) as u64);
        den *= BigUint::from((t + 1) as u64);
    }
    num / den
}

/// Number of disjoint twin cycles with 2^i parallel edges:
/// C(d−1, i) · ((n−1)!)^i · 2^(d−1−i) / (n−1).
pub fn cycle_count(n: usize, d: usize, i: usize) -> Result<BigCount> {
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "cycle counts need n >= 3, got n={n}"
        )));
    }
    if d < 2 || i == 0 || i > d - 1 {
        return Err(Error::Unsupported(format!(
            "cycle exponent must satisfy 1 <= i <= d-1, got i={i}, d={d}"
        )));
    }
    let numerator = binomial(d - 1, i)
        * big_factorial(n - 1).pow(i as u32)
        * BigUint::from(2u32).pow((d - 1 - i) as u32);
    let divisor = BigUint::from((n - 1) as u64);
    let (quotient, remainder) = num::Integer::div_rem(&numerator, &divisor);
    if !remainder.is_zero() {
        return Err(Error::Inconsistency(format!(
            "cycle count for n={n}, d={d}, i={i} is not an integer"
        )));
    }
    Ok(quotient)
}

/// Maximum number of removal steps:
/// (2^(d−1)/(n−1)) · [(1+(n−1)!)^(d−1) − (1+(n−1)!/2)^(d−1)].
///
/// Evaluated as an exact rational; the result provably collapses to an
/// integer and, for n >= 3, equals Σ (2^i − 1) · cycle_count(n, d, i).
pub fn max_removals(n: usize, d: usize) -> Result<BigCount> {
    if n < 2 || d < 2 {
        return Err(Error::Unsupported(format!(
            "the removal bound needs n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    let fact = BigRational::from_integer(BigInt::from(big_factorial(n - 1)));
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let lhs = (one.clone() + fact.clone()).pow((d - 1) as i32);
    let rhs = (one + fact / two.clone()).pow((d - 1) as i32);
    let scale = two.pow((d - 1) as i32)
        / BigRational::from_integer(BigInt::from((n - 1) as u64));
    let value = scale * (lhs - rhs);
    if !value.is_integer() || value.is_negative() {
        return Err(Error::Inconsistency(format!(
            "removal bound for n={n}, d={d} did not evaluate to a non-negative integer"
        )));
    }
    Ok(value
        .to_integer()
        .to_biguint()
        .expect("checked non-negative"))
}

/// Attainable u-word lengths (n!)^(d−1) + n − 1 − i(n−1), for i from 0 to
/// the removal bound, in descending order.
pub fn admissible_lengths(n: usize, d: usize) -> Result<Vec<BigCount>> {
    let bound = max_removals(n, d)?;
    let bound = bound.to_u64().ok_or_else(|| {
        Error::ResourceGuard("removal bound is too large to list lengths".into())
    })?;
    if bound > 1_000_000 {
        return Err(Error::ResourceGuard(format!(
            "listing {bound} lengths exceeds the budget"
        )));
    }
    let base = big_factorial(n).pow((d - 1) as u32) + BigUint::from((n - 1) as u64);
    let step = BigUint::from((n - 1) as u64);
    Ok((0..=bound)
        .map(|i| base.clone() - step.clone() * BigUint::from(i))
        .collect())
}

/// 2^(removal bound): each subset of removable cycle steps yields a u-word
/// of its own, so at least this many distinct shortened u-words exist.
pub fn uword_lower_bound(n: usize, d: usize) -> Result<BigCount> {
    let bound = max_removals(n, d)?;
    let exponent = bound.to_u64().ok_or_else(|| {
        Error::ResourceGuard("removal bound is too large to exponentiate".into())
    })?;
    if exponent > 10_000_000 {
        return Err(Error::ResourceGuard(format!(
            "2^{exponent} exceeds the budget"
        )));
    }
    Ok(BigUint::from(2u32).pow(exponent as u32))
}

/// A directed multigraph with distinguishable edges; loops allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiDigraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
}

impl MultiDigraph {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            vertex_count,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, source: usize, target: usize) {
        assert!(source < self.vertex_count && target < self.vertex_count);
        self.edges.push((source, target));
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(s, _)| *s == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(_, t)| *t == v).count()
    }

    fn is_balanced(&self) -> bool {
        (0..self.vertex_count).all(|v| self.in_degree(v) == self.out_degree(v))
    }

    fn non_isolated_strongly_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.vertex_count];
        for &(s, t) in &self.edges {
            adjacency[s].push(t);
        }
        let comps = crate::graph::strongly_connected_components(&adjacency);
        let mut active = (0..self.vertex_count)
            .filter(|&v| self.in_degree(v) + self.out_degree(v) > 0);
        match active.next() {
            None => true,
            Some(first) => {
                let c = comps[first];
                active.all(|v| comps[v] == c)
            }
        }
    }

    fn eulerian_diagnosis(&self) -> (bool, bool) {
        (self.is_balanced(), self.non_isolated_strongly_connected())
    }
}

impl From<&ClusterGraph> for MultiDigraph {
    fn from(g: &ClusterGraph) -> Self {
        let mut m = MultiDigraph::new(g.vertex_count());
        for e in g.edges() {
            m.add_edge(e.source, e.target);
        }
        m
    }
}

/// Fraction-free (Bareiss) determinant over exact integers.
fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let size = m.len();
    if size == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..size - 1 {
        if m[k][k].is_zero() {
            match (k + 1..size).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let numerator = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = numerator / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[size - 1][size - 1].clone()
}

/// Number of spanning arborescences directed towards `root`: the principal
/// minor of the out-degree Laplacian at the root. Loops cancel out.
pub fn count_arborescences(graph: &MultiDigraph, root: usize) -> BigCount {
    let n = graph.vertex_count();
    if n == 0 {
        return BigUint::zero();
    }
    assert!(root < n, "root vertex out of range");
    if n == 1 {
        return BigUint::one();
    }
    let keep: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    let mut lap = vec![vec![BigInt::zero(); n - 1]; n - 1];
    for (i, &v) in keep.iter().enumerate() {
        let mut out_without_loops = 0i64;
        for &(s, t) in graph.edges() {
            if s == v && t != v {
                out_without_loops += 1;
            }
        }
        lap[i][i] = BigInt::from(out_without_loops);
    }
    for &(s, t) in graph.edges() {
        if s == t {
            continue;
        }
        if let (Some(i), Some(j)) = (
            keep.iter().position(|&v| v == s),
            keep.iter().position(|&v| v == t),
        ) {
            lap[i][j] -= 1;
        }
    }
    let det = bareiss_determinant(lap);
    det.to_biguint().unwrap_or_else(BigUint::zero)
}

/// Eulerian-circuit count with a fixed initial edge v→u:
/// (arborescences towards v) · Π over vertices of (out-degree − 1)!.
/// Parallel edges and loops are distinguishable individuals.
pub fn best_eulerian_count(graph: &MultiDigraph, start_edge: usize) -> Result<BigCount> {
    let (balanced, connected) = graph.eulerian_diagnosis();
    if !balanced || !connected || graph.edges().is_empty() {
        return Err(Error::NotEulerian {
            balanced,
            strongly_connected: connected,
        });
    }
    let &(v, _) = graph
        .edges()
        .get(start_edge)
        .ok_or_else(|| Error::Malformed(format!("no edge with index {start_edge}")))?;
    // isolated vertices play no part in circuits; drop them
    let active: Vec<usize> = (0..graph.vertex_count())
        .filter(|&x| graph.in_degree(x) + graph.out_degree(x) > 0)
        .collect();
    let mut relabel = vec![usize::MAX; graph.vertex_count()];
    for (i, &x) in active.iter().enumerate() {
        relabel[x] = i;
    }
    let mut reduced = MultiDigraph::new(active.len());
    for &(s, t) in graph.edges() {
        reduced.add_edge(relabel[s], relabel[t]);
    }
    let trees = count_arborescences(&reduced, relabel[v]);
    let mut product = BigUint::one();
    for x in &active {
        let deg = graph.out_degree(*x);
        if deg > 0 {
            product *= big_factorial(deg - 1);
        }
    }
    Ok(trees * product)
}

/// Exhaustive count of closed trails beginning with `start_edge` and using
/// every edge exactly once. Guarded to at most 16 edges.
pub fn brute_force_eulerian_count(graph: &MultiDigraph, start_edge: usize) -> Result<BigCount> {
    if graph.edges().len() > 16 {
        return Err(Error::ResourceGuard(
            "exhaustive circuit counting is limited to 16 edges".into(),
        ));
    }
    let &(home, first_target) = graph
        .edges()
        .get(start_edge)
        .ok_or_else(|| Error::Malformed(format!("no edge with index {start_edge}")))?;
    let all = graph.edges();
    let full: u32 = (1u32 << all.len()) - 1;

    fn walk(
        all: &[(usize, usize)],
        used: u32,
        full: u32,
        at: usize,
        home: usize,
        count: &mut u64,
    ) {
        if used == full {
            if at == home {
                *count += 1;
            }
            return;
        }
        for (idx, &(s, t)) in all.iter().enumerate() {
            if s == at && used & (1 << idx) == 0 {
                walk(all, used | (1 << idx), full, t, home, count);
            }
        }
    }

    let mut count = 0u64;
    walk(all, 1 << start_edge, full, first_target, home, &mut count);
    Ok(BigUint::from(count))
}
