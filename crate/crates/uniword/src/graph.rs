//! The clustered graph of overlapping d-dimensional n-permutations.
//!
//! Vertices are cluster signatures — the row-wise reduced forms of the first
//! n−1 columns — and every permutation contributes exactly one edge from the
//! cluster of its first n−1 columns to the cluster of its last n−1 columns.
//! On top of the raw graph this module classifies permutation types, locates
//! i-twin classes (the 2^i-member bundles of parallel edges), and chains the
//! bundles into their disjoint cycles of length n−1.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::perm::{
    adjoin_relative, enumerate_dperms, expand_window, factorial, reduce_matrix, reduce_word,
    DPermutation, Row, Side, Value,
};

/// Default ceiling on (n!)^(d−1) before graph construction refuses to run.
pub const DEFAULT_EDGE_BUDGET: u64 = 10_000_000;

/// Cluster identifier: a (d−1)×(n−1) matrix of reduced rows.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    rows: Vec<Row>,
}

impl Signature {
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        let perm = DPermutation::new(rows)?;
        Ok(Self {
            rows: perm.into_rows(),
        })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Number of columns, i.e. n−1.
    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    /// Rows joined by "/", entries by spaces: `1 2/2 1`.
    pub fn render_inline(&self) -> String {
        render_rows_inline(&self.rows, " ")
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_inline())
    }
}

fn render_rows_inline(rows: &[Row], entry_sep: &str) -> String {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(entry_sep)
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Signature of the first n−1 columns of a matrix.
pub fn signature_of(rows: &[Row]) -> Result<Signature> {
    signature_of_slice(rows, 0)
}

/// Signature of the last n−1 columns of a matrix.
pub fn target_signature_of(rows: &[Row]) -> Result<Signature> {
    signature_of_slice(rows, 1)
}

fn signature_of_slice(rows: &[Row], offset: usize) -> Result<Signature> {
    if rows.is_empty() || rows[0].len() < 2 {
        return Err(Error::Malformed(
            "signature needs a matrix with at least two columns".into(),
        ));
    }
    let n = rows[0].len();
    let slices: Vec<Row> = rows
        .iter()
        .map(|r| {
            if r.len() != n {
                return Err(Error::Malformed("matrix rows have unequal lengths".into()));
            }
            Ok(r[offset..offset + n - 1].to_vec())
        })
        .collect::<Result<_>>()?;
    let reduced = reduce_matrix(&slices)?;
    for row in &reduced {
        let mut sorted = row.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != row.len() {
            return Err(Error::Malformed(format!(
                "ties within the {} {} columns",
                if offset == 0 { "first" } else { "last" },
                n - 1
            )));
        }
    }
    Signature::new(reduced)
}

/// An edge label: a (d−1)×n matrix of reduced rows, each either a
/// permutation of 1..=n or a tied row `s1 s2 … s(n−1) s1` over 1..=n−1 whose
/// equal first and last entries stand for both ways of separating them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeWord {
    rows: Vec<Row>,
}

impl EdgeWord {
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Malformed("edge word needs at least one row".into()));
        }
        let n = rows[0].len();
        if n < 2 {
            return Err(Error::Malformed("edge word needs at least two columns".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::Malformed("edge word rows have unequal lengths".into()));
            }
            if reduce_word(row)? != *row {
                return Err(Error::Malformed(format!("row {row:?} is not reduced")));
            }
            let mut sorted = row.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() == n {
                continue; // plain permutation row
            }
            let tied_ok = sorted.len() == n - 1
                && row[0] == row[n - 1]
                && row[1..n - 1].iter().all(|v| *v != row[0]);
            if !tied_ok {
                return Err(Error::Malformed(format!(
                    "row {row:?} is neither a permutation nor tied at its two ends"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn from_dperm(p: &DPermutation) -> Self {
        Self {
            rows: p.rows().to_vec(),
        }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// Indices of rows whose first and last entries carry the tied value.
    pub fn tied_rows(&self) -> Vec<usize> {
        let n = self.n();
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r[0] == r[n - 1])
            .map(|(i, _)| i)
            .collect()
    }

    /// The 2^(#tied rows) permutations this label stands for.
    pub fn expansion(&self) -> Vec<DPermutation> {
        expand_window(&self.rows)
            .expect("edge word rows are validated")
            .covered
    }

    pub fn source_signature(&self) -> Signature {
        signature_of(&self.rows).expect("edge word rows are validated")
    }

    pub fn target_signature(&self) -> Signature {
        target_signature_of(&self.rows).expect("edge word rows are validated")
    }

    /// Rows joined by "/", entries by `sep`.
    pub fn render_inline(&self) -> String {
        render_rows_inline(&self.rows, " ")
    }

    /// Compact form with comma-separated entries, e.g. `1,2,1/1,2,3`.
    pub fn render_compact(&self) -> String {
        render_rows_inline(&self.rows, ",")
    }

    pub fn parse_compact(text: &str) -> Result<Self> {
        let rows: Vec<Row> = text
            .split('/')
            .map(|part| {
                part.split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<Value>()
                            .map_err(|_| Error::Malformed(format!("bad edge entry {tok:?}")))
                    })
                    .collect::<Result<Row>>()
            })
            .collect::<Result<_>>()?;
        EdgeWord::new(rows)
    }
}

impl fmt::Display for EdgeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_inline())
    }
}

/// A directed edge between clusters.
#[derive(Debug, Clone)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub label: EdgeWord,
}

/// The clustered overlap graph. Immutable once built; compression produces
/// new values rather than mutating shared ones.
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    n: usize,
    d: usize,
    steps_applied: usize,
    vertices: Vec<Signature>,
    vertex_index: HashMap<Signature, usize>,
    edges: Vec<Edge>,
}

/// Builds the clustered graph of overlapping d-dimensional n-permutations
/// with the default edge budget.
pub fn build_cluster_graph(n: usize, d: usize) -> Result<ClusterGraph> {
    build_cluster_graph_with_budget(n, d, DEFAULT_EDGE_BUDGET)
}

/// As [`build_cluster_graph`], refusing when (n!)^(d−1) exceeds `budget`.
pub fn build_cluster_graph_with_budget(n: usize, d: usize, budget: u64) -> Result<ClusterGraph> {
    if n < 2 || d < 2 {
        return Err(Error::Unsupported(format!(
            "cluster graph needs n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    let edge_count = checked_power(factorial(n) as u64, d as u32 - 1, budget).ok_or_else(|| {
        Error::ResourceGuard(format!(
            "(n!)^(d-1) exceeds the edge budget of {budget} for n={n}, d={d}"
        ))
    })?;

    let mut vertices = Vec::new();
    let mut sig_rows = vec![(1..=(n as Value - 1)).collect::<Row>(); d - 1];
    loop {
        vertices.push(Signature {
            rows: sig_rows.clone(),
        });
        if !advance_rows(&mut sig_rows) {
            break;
        }
    }
    let vertex_index: HashMap<Signature, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();

    let mut edges = Vec::with_capacity(edge_count as usize);
    for perm in enumerate_dperms(n, d) {
        let label = EdgeWord::from_dperm(&perm);
        let source = vertex_index[&label.source_signature()];
        let target = vertex_index[&label.target_signature()];
        edges.push(Edge {
            source,
            target,
            label,
        });
    }

    Ok(ClusterGraph {
        n,
        d,
        steps_applied: 0,
        vertices,
        vertex_index,
        edges,
    })
}

/// Odometer step over rows of identical length, last row fastest.
fn advance_rows(rows: &mut [Row]) -> bool {
    let mut pos = rows.len();
    loop {
        if pos == 0 {
            return false;
        }
        pos -= 1;
        if crate::perm::next_permutation(&mut rows[pos]) {
            return true;
        }
        let w = rows[pos].len();
        rows[pos] = (1..=w as Value).collect();
    }
}

fn checked_power(base: u64, exp: u32, limit: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

impl ClusterGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of removal steps applied so far; zero for a fresh graph.
    pub fn steps_applied(&self) -> usize {
        self.steps_applied
    }

    pub(crate) fn set_steps_applied(&mut self, steps: usize) {
        self.steps_applied = steps;
    }

    pub fn vertices(&self) -> &[Signature] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub(crate) fn edges_mut(&mut self) -> &mut Vec<Edge> {
        &mut self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_id(&self, sig: &Signature) -> Option<usize> {
        self.vertex_index.get(sig).copied()
    }

    /// In/out balance and strong connectivity, per the Eulerian criterion.
    pub fn check_eulerian(&self) -> EulerianDiagnosis {
        let mut indeg = vec![0usize; self.vertices.len()];
        let mut outdeg = vec![0usize; self.vertices.len()];
        let mut adjacency = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            outdeg[e.source] += 1;
            indeg[e.target] += 1;
            adjacency[e.source].push(e.target);
        }
        let balanced = indeg
            .iter()
            .zip(&outdeg)
            .all(|(i, o)| i == o);
        let components = strongly_connected_components(&adjacency);
        let active: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| indeg[v] + outdeg[v] > 0)
            .collect();
        let strongly_connected = if active.is_empty() {
            true
        } else {
            let comp_of_first = components[active[0]];
            active.iter().all(|&v| components[v] == comp_of_first)
        };
        EulerianDiagnosis {
            balanced,
            strongly_connected,
        }
    }

    /// DOT rendering with lexicographically ordered nodes and arcs.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph clusters {\n");
        for sig in &self.vertices {
            let label = sig.render_inline();
            out.push_str(&format!("  \"{label}\" [label=\"{label}\"];\n"));
        }
        let mut arcs: Vec<(usize, usize, String)> = self
            .edges
            .iter()
            .map(|e| (e.source, e.target, e.label.render_inline()))
            .collect();
        arcs.sort();
        for (source, target, label) in arcs {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{label}\"];\n",
                self.vertices[source].render_inline(),
                self.vertices[target].render_inline()
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Outcome of the Eulerian criterion check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerianDiagnosis {
    pub balanced: bool,
    pub strongly_connected: bool,
}

impl EulerianDiagnosis {
    pub fn is_eulerian(&self) -> bool {
        self.balanced && self.strongly_connected
    }
}

/// Iterative Tarjan; returns the component id of each vertex.
pub(crate) fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0usize;
    let mut comp_count = 0usize;

    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        // call stack of (vertex, next-neighbour cursor)
        let mut work = vec![(start, 0usize)];
        while let Some(&mut (v, ref mut cursor)) = work.last_mut() {
            if *cursor == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = adjacency[v].get(*cursor) {
                *cursor += 1;
                if index[w] == usize::MAX {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&mut (parent, _)) = work.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = comp_count;
                        if w == v {
                            break;
                        }
                    }
                    comp_count += 1;
                }
            }
        }
    }
    comp
}

/// Direction of a monotone row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mono {
    Increasing,
    Decreasing,
}

/// Type classification of a permutation: `exponent` counts the rows whose
/// end entries differ by one, provided every other row is monotone.
/// `exponent == 0` covers everything else, monotone-only matrices included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeIndex {
    pub exponent: usize,
    pub wrap_rows: Vec<usize>,
    pub mono: Vec<(usize, Mono)>,
}

/// Classifies a permutation by its row shapes. Needs n >= 3: at n = 2 the
/// monotone and end-adjacent shapes coincide and the type is ambiguous.
pub fn classify_type(p: &DPermutation) -> Result<TypeIndex> {
    let n = p.n();
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "type classification needs n >= 3, got n={n}"
        )));
    }
    let mut wrap_rows = Vec::new();
    let mut mono = Vec::new();
    for (idx, row) in p.rows().iter().enumerate() {
        if let Some(direction) = monotone_direction(row) {
            mono.push((idx, direction));
        } else if row[n - 1].abs_diff(row[0]) == 1 {
            wrap_rows.push(idx);
        } else {
            return Ok(TypeIndex {
                exponent: 0,
                wrap_rows: Vec::new(),
                mono: Vec::new(),
            });
        }
    }
    if wrap_rows.is_empty() {
        return Ok(TypeIndex {
            exponent: 0,
            wrap_rows: Vec::new(),
            mono: Vec::new(),
        });
    }
    Ok(TypeIndex {
        exponent: wrap_rows.len(),
        wrap_rows,
        mono,
    })
}

fn monotone_direction(row: &[Value]) -> Option<Mono> {
    if row.windows(2).all(|w| w[0] < w[1]) {
        Some(Mono::Increasing)
    } else if row.windows(2).all(|w| w[0] > w[1]) {
        Some(Mono::Decreasing)
    } else {
        None
    }
}

/// An i-twin class: the 2^i permutations of one cluster sharing type,
/// non-monotone row positions, and monotone rows in position and direction.
/// Its members form a bundle of parallel edges to a single target cluster.
#[derive(Debug, Clone)]
pub struct TwinClass {
    pub exponent: usize,
    pub source: usize,
    pub target: usize,
    pub signature: Signature,
    pub wrap_rows: Vec<usize>,
    pub mono: Vec<(usize, Mono)>,
    /// Indexed by sign bits: bit t (over `wrap_rows[t]`) is 0 when the row
    /// ends just above its first entry and 1 when just below.
    pub members: Vec<EdgeWord>,
}

/// Key identifying a twin class within its graph.
pub(crate) type TwinKey = (usize, Vec<usize>, Vec<(usize, Mono)>);

impl TwinClass {
    pub(crate) fn key(&self) -> TwinKey {
        (self.source, self.wrap_rows.clone(), self.mono.clone())
    }

    /// The member with the given sign bits, rebuilt from the signature.
    pub fn member_for_signs(&self, signs: usize) -> EdgeWord {
        let n = self.signature.width() + 1;
        let rows = build_member_rows(&self.signature, &self.wrap_rows, &self.mono, n, |t| {
            if signs >> t & 1 == 0 {
                RowShape::Fixed(Side::Above)
            } else {
                RowShape::Fixed(Side::Below)
            }
        });
        EdgeWord::new(rows).expect("twin member rows are valid by construction")
    }
}

pub(crate) enum RowShape {
    Fixed(Side),
    Tied,
}

/// Assembles edge-word rows for a bundle member or a merged block: wrap rows
/// come from the signature extended on the chosen side (or tied), monotone
/// rows are the full increasing/decreasing permutations.
pub(crate) fn build_member_rows(
    signature: &Signature,
    wrap_rows: &[usize],
    mono: &[(usize, Mono)],
    n: usize,
    shape_of: impl Fn(usize) -> RowShape,
) -> Vec<Row> {
    let row_count = wrap_rows.len() + mono.len();
    let mut rows: Vec<Row> = vec![Vec::new(); row_count];
    for (t, &r) in wrap_rows.iter().enumerate() {
        let sig_row = &signature.rows()[r];
        rows[r] = match shape_of(t) {
            RowShape::Fixed(side) => adjoin_relative(sig_row, sig_row[0], side)
                .expect("signature rows are permutations"),
            RowShape::Tied => {
                let mut tied = sig_row.clone();
                tied.push(sig_row[0]);
                tied
            }
        };
    }
    for &(r, direction) in mono {
        rows[r] = match direction {
            Mono::Increasing => (1..=n as Value).collect(),
            Mono::Decreasing => (1..=n as Value).rev().collect(),
        };
    }
    rows
}

/// Partitions the type-i edges (i > 0) of a fresh graph into twin classes,
/// ordered by cluster, then non-monotone row set, then monotone pattern.
pub fn twin_classes(graph: &ClusterGraph) -> Result<Vec<TwinClass>> {
    if graph.steps_applied() != 0 {
        return Err(Error::Unsupported(
            "twin classes are defined on the freshly built graph".into(),
        ));
    }
    if graph.n() < 3 {
        return Err(Error::Unsupported(format!(
            "twin discovery needs n >= 3, got n={}",
            graph.n()
        )));
    }
    let n = graph.n();
    let mut grouped: HashMap<TwinKey, Vec<(usize, EdgeWord)>> = HashMap::new();
    for edge in graph.edges() {
        let perm = DPermutation::new(edge.label.rows().to_vec())?;
        let t = classify_type(&perm)?;
        if t.exponent == 0 {
            continue;
        }
        let mut signs = 0usize;
        for (bit, &r) in t.wrap_rows.iter().enumerate() {
            let row = &edge.label.rows()[r];
            if row[n - 1] == row[0] - 1 {
                signs |= 1 << bit;
            } else if row[n - 1] != row[0] + 1 {
                return Err(Error::Inconsistency(format!(
                    "row {row:?} classified as end-adjacent but ends are not adjacent"
                )));
            }
        }
        grouped
            .entry((edge.source, t.wrap_rows, t.mono))
            .or_default()
            .push((signs, edge.label.clone()));
    }

    let mut classes = Vec::with_capacity(grouped.len());
    for ((source, wrap_rows, mono), mut entries) in grouped {
        let exponent = wrap_rows.len();
        if entries.len() != 1 << exponent {
            return Err(Error::Inconsistency(format!(
                "twin class at vertex {source} has {} members, expected {}",
                entries.len(),
                1 << exponent
            )));
        }
        entries.sort_by_key(|(signs, _)| *signs);
        if entries.iter().enumerate().any(|(k, (signs, _))| *signs != k) {
            return Err(Error::Inconsistency(
                "twin class sign patterns are not pairwise distinct".into(),
            ));
        }
        let members: Vec<EdgeWord> = entries.into_iter().map(|(_, label)| label).collect();
        let target = graph
            .vertex_id(&members[0].target_signature())
            .ok_or_else(|| Error::Inconsistency("member target outside the graph".into()))?;
        for m in &members[1..] {
            if graph.vertex_id(&m.target_signature()) != Some(target) {
                return Err(Error::Inconsistency(
                    "twin class members disagree on their target cluster".into(),
                ));
            }
        }
        classes.push(TwinClass {
            exponent,
            source,
            target,
            signature: graph.vertices()[source].clone(),
            wrap_rows,
            mono,
            members,
        });
    }
    classes.sort_by_key(|a| a.key());
    Ok(classes)
}

/// A cycle of n−1 twin-class bundles; consecutive bundles share a cluster and
/// their non-monotone signature rows advance by one cyclic rotation.
#[derive(Debug, Clone)]
pub struct TwinCycle {
    pub exponent: usize,
    pub bundles: Vec<TwinClass>,
}

impl TwinCycle {
    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}

/// Chains every twin class into its cycle of length n−1. Cycles are listed
/// by ascending exponent, then by their lexicographically smallest bundle,
/// which is also the bundle each cycle starts from.
pub fn parallel_cycles(graph: &ClusterGraph) -> Result<Vec<TwinCycle>> {
    let classes = twin_classes(graph)?;
    let n = graph.n();
    let by_key: HashMap<TwinKey, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.key(), i))
        .collect();

    let mut assigned = vec![false; classes.len()];
    let mut cycles = Vec::new();
    for start in 0..classes.len() {
        if assigned[start] {
            continue;
        }
        let mut bundles = Vec::new();
        let mut cur = start;
        loop {
            assigned[cur] = true;
            bundles.push(classes[cur].clone());
            let c = &classes[cur];
            let next_key: TwinKey = (c.target, c.wrap_rows.clone(), c.mono.clone());
            let next = *by_key.get(&next_key).ok_or_else(|| {
                Error::Inconsistency(format!(
                    "no continuation bundle at vertex {} for wrap rows {:?}",
                    c.target, c.wrap_rows
                ))
            })?;
            if next == start {
                break;
            }
            if assigned[next] {
                return Err(Error::Inconsistency(
                    "bundle chain re-entered a foreign cycle".into(),
                ));
            }
            if bundles.len() > n - 1 {
                return Err(Error::Inconsistency(format!(
                    "bundle chain exceeded the expected length {}",
                    n - 1
                )));
            }
            cur = next;
        }
        if bundles.len() != n - 1 {
            return Err(Error::Inconsistency(format!(
                "cycle has {} bundles, expected {}",
                bundles.len(),
                n - 1
            )));
        }
        // successive signatures rotate the non-monotone rows left by one
        for t in 0..bundles.len() {
            let cur = &bundles[t];
            let next = &bundles[(t + 1) % bundles.len()];
            for &r in &cur.wrap_rows {
                let mut rotated = cur.signature.rows()[r].clone();
                rotated.rotate_left(1);
                if next.signature.rows()[r] != rotated {
                    return Err(Error::Inconsistency(format!(
                        "signature row {r} does not rotate along the cycle"
                    )));
                }
            }
            for &(r, _) in &cur.mono {
                if next.signature.rows()[r] != cur.signature.rows()[r] {
                    return Err(Error::Inconsistency(format!(
                        "monotone signature row {r} changed along the cycle"
                    )));
                }
            }
        }
        cycles.push(TwinCycle {
            exponent: bundles[0].exponent,
            bundles,
        });
    }
    cycles.sort_by(|a, b| {
        (a.exponent, a.bundles[0].key()).cmp(&(b.exponent, b.bundles[0].key()))
    });
    Ok(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(rows: &[&[Value]]) -> Signature {
        Signature::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn signatures_reduce_window_edges() {
        let m = vec![vec![1, 3, 2], vec![1, 3, 2]];
        assert_eq!(signature_of(&m).unwrap(), sig(&[&[1, 2], &[1, 2]]));

        let two = vec![vec![1, 2], vec![1, 2]];
        assert_eq!(signature_of(&two).unwrap(), sig(&[&[1], &[1]]));
        assert_eq!(target_signature_of(&two).unwrap(), sig(&[&[1], &[1]]));

        let wide = vec![vec![2, 1, 5, 3, 4], vec![4, 1, 2, 5, 3]];
        assert_eq!(
            signature_of(&wide).unwrap(),
            sig(&[&[2, 1, 4, 3], &[3, 1, 2, 4]])
        );

        let m2 = vec![vec![1, 2, 3], vec![1, 3, 2]];
        assert_eq!(target_signature_of(&m2).unwrap(), sig(&[&[1, 2], &[2, 1]]));

        let tied = vec![vec![1, 2, 1], vec![1, 2, 1]];
        assert_eq!(target_signature_of(&tied).unwrap(), sig(&[&[2, 1], &[2, 1]]));
        assert_eq!(signature_of(&tied).unwrap(), sig(&[&[1, 2], &[1, 2]]));

        let head_tied = vec![vec![1, 1, 2]];
        assert!(signature_of(&head_tied).is_err());
    }

    #[test]
    fn small_graph_shapes() {
        let g = build_cluster_graph(3, 2).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 6);
        for v in 0..2 {
            let loops = g.edges().iter().filter(|e| e.source == v && e.target == v).count();
            let out = g.edges().iter().filter(|e| e.source == v && e.target != v).count();
            assert_eq!(loops, 1);
            assert_eq!(out, 2);
        }

        let g = build_cluster_graph(2, 3).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 4);
        assert!(g.edges().iter().all(|e| e.source == e.target));

        let g = build_cluster_graph(3, 3).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 36);
    }

    #[test]
    fn edges_route_between_window_signatures() {
        let g = build_cluster_graph(3, 3).unwrap();
        for e in g.edges() {
            assert_eq!(g.vertex_id(&e.label.source_signature()), Some(e.source));
            assert_eq!(g.vertex_id(&e.label.target_signature()), Some(e.target));
        }
    }

    #[test]
    fn budget_guard_refuses_large_parameters() {
        assert!(matches!(
            build_cluster_graph_with_budget(6, 3, 1000),
            Err(Error::ResourceGuard(_))
        ));
        assert!(build_cluster_graph_with_budget(3, 2, 6).is_ok());
    }

    #[test]
    fn type_classification() {
        let p = DPermutation::new(vec![
            vec![4, 3, 2, 1],
            vec![2, 1, 4, 3],
            vec![1, 4, 3, 2],
            vec![1, 2, 3, 4],
        ])
        .unwrap();
        let t = classify_type(&p).unwrap();
        assert_eq!(t.exponent, 2);
        assert_eq!(t.wrap_rows, vec![1, 2]);
        assert_eq!(t.mono, vec![(0, Mono::Decreasing), (3, Mono::Increasing)]);

        let p = DPermutation::new(vec![vec![1, 2, 3], vec![1, 3, 2]]).unwrap();
        assert_eq!(classify_type(&p).unwrap().exponent, 1);

        let p = DPermutation::new(vec![vec![3, 1, 2], vec![2, 3, 1], vec![1, 2, 3]]).unwrap();
        let t = classify_type(&p).unwrap();
        assert_eq!(t.exponent, 2);
        assert_eq!(t.wrap_rows, vec![0, 1]);

        let p = DPermutation::new(vec![vec![1, 4, 2, 3]]).unwrap();
        assert_eq!(classify_type(&p).unwrap().exponent, 0);

        // a single end-adjacent row with no other rows is type 1
        let p = DPermutation::new(vec![vec![2, 4, 1, 3]]).unwrap();
        assert_eq!(classify_type(&p).unwrap().exponent, 1);

        let p = DPermutation::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        assert!(classify_type(&p).is_err());
    }

    #[test]
    fn twin_classes_in_the_four_cluster_graph() {
        let g = build_cluster_graph(3, 3).unwrap();
        let classes = twin_classes(&g).unwrap();
        let two_classes: Vec<_> = classes.iter().filter(|c| c.exponent == 2).collect();
        assert_eq!(two_classes.len(), 4);
        for cluster in 0..4 {
            let of_cluster: Vec<_> = two_classes.iter().filter(|c| c.source == cluster).collect();
            assert_eq!(of_cluster.len(), 1);
            assert_eq!(of_cluster[0].members.len(), 4);
        }
        // the identity cluster's class is {132,231} x {132,231}
        let id_sig = sig(&[&[1, 2], &[1, 2]]);
        let cls = two_classes
            .iter()
            .find(|c| c.signature == id_sig)
            .unwrap();
        // sign-index order: bit 0 flips the first wrap row below its start
        let labels: Vec<String> = cls.members.iter().map(|m| m.render_inline()).collect();
        assert_eq!(
            labels,
            vec!["1 3 2/1 3 2", "2 3 1/1 3 2", "1 3 2/2 3 1", "2 3 1/2 3 1"]
        );
        for (signs, member) in cls.members.iter().enumerate() {
            assert_eq!(cls.member_for_signs(signs), *member);
        }
    }

    #[test]
    fn kpv_case_has_one_class_per_cluster() {
        let g = build_cluster_graph(3, 2).unwrap();
        let classes = twin_classes(&g).unwrap();
        assert_eq!(classes.len(), 2);
        for c in &classes {
            assert_eq!(c.exponent, 1);
            assert_eq!(c.members.len(), 2);
        }
        let labels: Vec<String> = classes[0].members.iter().map(|m| m.render_inline()).collect();
        assert_eq!(labels, vec!["1 3 2", "2 3 1"]);
    }

    #[test]
    fn clusters_can_lack_low_twin_classes() {
        // with several rows, a 1-twin class needs a monotone signature row
        let g = build_cluster_graph(4, 3).unwrap();
        let classes = twin_classes(&g).unwrap();
        let clusters_with_1: std::collections::HashSet<usize> = classes
            .iter()
            .filter(|c| c.exponent == 1)
            .map(|c| c.source)
            .collect();
        assert!(clusters_with_1.len() < g.vertex_count());
        // ... while each cluster still has exactly one (d-1)-twin class
        for v in 0..g.vertex_count() {
            let top: Vec<_> = classes
                .iter()
                .filter(|c| c.source == v && c.exponent == g.d() - 1)
                .collect();
            assert_eq!(top.len(), 1);
            assert_eq!(top[0].members.len(), 1 << (g.d() - 1));
        }
    }

    #[test]
    fn cycles_partition_bundles() {
        let g = build_cluster_graph(3, 3).unwrap();
        let cycles = parallel_cycles(&g).unwrap();
        assert_eq!(cycles.iter().filter(|c| c.exponent == 1).count(), 4);
        assert_eq!(cycles.iter().filter(|c| c.exponent == 2).count(), 2);
        assert!(cycles.iter().all(|c| c.len() == 2));

        let g = build_cluster_graph(3, 2).unwrap();
        let cycles = parallel_cycles(&g).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 2);

        let g = build_cluster_graph(4, 2).unwrap();
        let cycles = parallel_cycles(&g).unwrap();
        assert_eq!(cycles.len(), 2);
        assert!(cycles.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn fresh_graphs_are_eulerian() {
        for (n, d) in [
            (2, 2),
            (3, 2),
            (4, 2),
            (5, 2),
            (6, 2),
            (2, 3),
            (3, 3),
            (4, 3),
            (5, 3),
            (2, 4),
            (3, 4),
            (4, 4),
        ] {
            let g = build_cluster_graph(n, d).unwrap();
            let diag = g.check_eulerian();
            assert!(diag.is_eulerian(), "n={n} d={d}: {diag:?}");
        }
    }

    #[test]
    fn removing_an_edge_unbalances() {
        let mut g = build_cluster_graph(3, 3).unwrap();
        // drop a non-loop edge
        let idx = g
            .edges()
            .iter()
            .position(|e| e.source != e.target)
            .unwrap();
        g.edges_mut().remove(idx);
        assert!(!g.check_eulerian().balanced);
    }

    #[test]
    fn dot_export_is_stable() {
        let g = build_cluster_graph(3, 2).unwrap();
        let dot = g.to_dot();
        assert_eq!(dot, g.to_dot());
        assert!(dot.starts_with("digraph clusters {"));
        assert!(dot.contains("\"1 2\" [label=\"1 2\"];"));
        assert!(dot.contains("\"1 2\" -> \"1 2\" [label=\"1 2 3\"];"));
        assert!(dot.contains("\"1 2\" -> \"2 1\" [label=\"1 3 2\"];"));
    }

    #[test]
    fn edge_word_validation() {
        assert!(EdgeWord::new(vec![vec![1, 2, 1], vec![1, 2, 3]]).is_ok());
        assert!(EdgeWord::new(vec![vec![1, 2, 2]]).is_err()); // tie not at the ends
        assert!(EdgeWord::new(vec![vec![1, 3, 1]]).is_err()); // not reduced
        let e = EdgeWord::new(vec![vec![1, 2, 1], vec![1, 2, 3]]).unwrap();
        assert_eq!(e.tied_rows(), vec![0]);
        assert_eq!(e.expansion().len(), 2);
        assert_eq!(EdgeWord::parse_compact("1,2,1/1,2,3").unwrap(), e);
        assert_eq!(e.render_compact(), "1,2,1/1,2,3");
    }
}
