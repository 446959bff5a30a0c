//! Eulerian extraction and u-word rendering.
//!
//! An Eulerian path through the (possibly compressed) cluster graph lists
//! every edge word once, consecutive words overlapping head-to-tail. The
//! path is folded into an integer matrix one column at a time: each row
//! tries to append a value already present (or one above its maximum) whose
//! window reduces to the incoming edge row; failing that, it appends the
//! required rank from the previous window after shifting every existing
//! entry at or above it up by one, which preserves all prior comparisons.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compress::{apply_removals, plan_removals, post_removal_diagnosis, RemovalPlan};
use crate::error::{Error, Result};
use crate::graph::{build_cluster_graph, ClusterGraph, EdgeWord};
use crate::perm::{reduce_matrix, reduce_word, render_matrix, Row, Value};

/// A (d−1)×L matrix whose every n-column window reduces to one edge word of
/// the path that produced it. Values may exceed n; windows are what matter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UWordMatrix {
    n: usize,
    rows: Vec<Row>,
}

impl UWordMatrix {
    pub fn new(n: usize, rows: Vec<Row>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Malformed("u-word needs at least one row".into()));
        }
        let cols = rows[0].len();
        if cols < n || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Malformed(
                "u-word rows must be equal in length and at least n columns".into(),
            ));
        }
        if rows.iter().flatten().any(|&v| v == 0) {
            return Err(Error::Malformed("u-word entries must be positive".into()));
        }
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.rows.len() + 1
    }

    pub fn columns(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Header line `d n L`, then the rows.
    pub fn render_text(&self) -> String {
        format!(
            "{} {} {}\n{}\n",
            self.d(),
            self.n,
            self.columns(),
            render_matrix(&self.rows)
        )
    }

    /// The rows alone, no header.
    pub fn render_plain(&self) -> String {
        render_matrix(&self.rows)
    }

    pub fn to_json(&self, removals: usize, plan_digest: &str) -> String {
        serde_json::json!({
            "d": self.d(),
            "n": self.n,
            "columns": self.columns(),
            "rows": self.rows,
            "removals": removals,
            "plan_digest": plan_digest,
        })
        .to_string()
    }

    /// Row-wise reduced copy. Windows reduce identically, so this never
    /// changes what the matrix covers.
    pub fn normalized(&self) -> Self {
        Self {
            n: self.n,
            rows: reduce_matrix(&self.rows).expect("u-word rows are validated"),
        }
    }
}

/// Deterministic Eulerian path: start at the smallest signature, always
/// follow the lexicographically smallest unused edge word.
pub fn eulerian_path(graph: &ClusterGraph) -> Result<Vec<EdgeWord>> {
    eulerian_path_seeded(graph, None)
}

/// As [`eulerian_path`]; a seed permutes the edge choice instead, giving a
/// reproducible but different traversal.
pub fn eulerian_path_seeded(graph: &ClusterGraph, seed: Option<u64>) -> Result<Vec<EdgeWord>> {
    let diagnosis = graph.check_eulerian();
    if !diagnosis.is_eulerian() {
        return Err(Error::NotEulerian {
            balanced: diagnosis.balanced,
            strongly_connected: diagnosis.strongly_connected,
        });
    }
    if graph.edge_count() == 0 {
        return Err(Error::Malformed("graph has no edges to traverse".into()));
    }

    // per-vertex out-edges, ordered so that pop() yields the next choice
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); graph.vertex_count()];
    for (idx, edge) in graph.edges().iter().enumerate() {
        pending[edge.source].push(idx);
    }
    for list in &mut pending {
        list.sort_by(|&a, &b| graph.edges()[b].label.cmp(&graph.edges()[a].label));
    }
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for list in &mut pending {
            list.shuffle(&mut rng);
        }
    }

    let start = (0..graph.vertex_count())
        .find(|&v| !pending[v].is_empty())
        .expect("a non-empty graph has an edge somewhere");

    let mut stack: Vec<(usize, Option<usize>)> = vec![(start, None)];
    let mut ordered = Vec::with_capacity(graph.edge_count());
    while let Some(&(vertex, via)) = stack.last() {
        if let Some(edge_idx) = pending[vertex].pop() {
            stack.push((graph.edges()[edge_idx].target, Some(edge_idx)));
        } else {
            stack.pop();
            if let Some(edge_idx) = via {
                ordered.push(edge_idx);
            }
        }
    }
    ordered.reverse();
    if ordered.len() != graph.edge_count() {
        return Err(Error::Inconsistency(format!(
            "trail used {} of {} edges",
            ordered.len(),
            graph.edge_count()
        )));
    }
    Ok(ordered
        .into_iter()
        .map(|i| graph.edges()[i].label.clone())
        .collect())
}

/// Appends one column for the incoming edge, handling each row on its own.
pub fn extend_matrix(x: &[Row], edge: &EdgeWord) -> Result<Vec<Row>> {
    let mut rows = x.to_vec();
    extend_in_place(&mut rows, edge)?;
    Ok(rows)
}

fn extend_in_place(rows: &mut [Row], edge: &EdgeWord) -> Result<()> {
    let n = edge.n();
    if rows.len() != edge.rows().len() {
        return Err(Error::Malformed(format!(
            "matrix has {} rows but the edge has {}",
            rows.len(),
            edge.rows().len()
        )));
    }
    for (i, row) in rows.iter_mut().enumerate() {
        let b = &edge.rows()[i];
        extend_row(row, b, n).map_err(|e| match e {
            Error::InfeasibleExtension(msg) => Error::InfeasibleExtension(format!(
                "row {}: {msg}; row state {:?}, incoming {:?}",
                i + 2,
                row,
                b
            )),
            other => other,
        })?;
    }
    Ok(())
}

fn extend_row(row: &mut Row, b: &[Value], n: usize) -> Result<()> {
    let len = row.len();
    if len + 1 < n {
        return Err(Error::Malformed(format!(
            "row of {len} entries cannot host an {n}-column window"
        )));
    }
    let tail_start = len - (n - 1);
    if reduce_word(&row[tail_start..])? != reduce_word(&b[..n - 1])? {
        return Err(Error::Malformed(
            "edge is not head-to-tail compatible with the matrix".into(),
        ));
    }

    // first try: a value already in the row, or one above its maximum
    let max = *row.iter().max().expect("row is non-empty");
    let mut candidates: BTreeSet<Value> = row.iter().copied().collect();
    candidates.insert(max + 1);
    let mut window: Row = row[tail_start..].to_vec();
    window.push(0);
    for v in candidates {
        *window.last_mut().unwrap() = v;
        if reduce_word(&window)? == b {
            row.push(v);
            return Ok(());
        }
    }

    // otherwise take the required rank from the previous window and make
    // room for it by shifting everything at or above it up by one
    let rank = b[n - 1] as usize;
    if rank >= n {
        return Err(Error::InfeasibleExtension(
            "no candidate value and the incoming row ends at its maximum".into(),
        ));
    }
    let mut prior: Row = row[tail_start..].to_vec();
    prior.sort_unstable();
    let v = prior[rank - 1];
    for entry in row.iter_mut() {
        if *entry >= v {
            *entry += 1;
        }
    }
    row.push(v);
    if reduce_word(&row[row.len() - n..])? != b {
        return Err(Error::InfeasibleExtension(
            "shifted window does not reduce to the incoming row".into(),
        ));
    }
    Ok(())
}

/// Folds an Eulerian path into a u-word matrix: the first edge is the seed,
/// every later edge appends one column.
pub fn build_uword(path: &[EdgeWord]) -> Result<UWordMatrix> {
    let first = path
        .first()
        .ok_or_else(|| Error::Malformed("empty edge path".into()))?;
    let n = first.n();
    let mut rows: Vec<Row> = first.rows().to_vec();
    for edge in &path[1..] {
        if edge.n() != n || edge.rows().len() != rows.len() {
            return Err(Error::Malformed("path mixes edge shapes".into()));
        }
        extend_in_place(&mut rows, edge)?;
    }
    UWordMatrix::new(n, rows)
}

/// A generated u-word with the plan that shaped it.
#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub matrix: UWordMatrix,
    pub plan: RemovalPlan,
}

/// End-to-end generation: build the cluster graph, remove `removals` cycles
/// canonically, re-check balance/connectivity/coverage, extract the Eulerian
/// path, and fold it into a matrix of (n!)^(d−1) + n − 1 − removals·(n−1)
/// columns.
pub fn generate(n: usize, d: usize, removals: usize, seed: Option<u64>) -> Result<UWordMatrix> {
    Ok(generate_detailed(n, d, removals, seed)?.matrix)
}

/// As [`generate`], also returning the removal plan for audit or replay.
pub fn generate_detailed(
    n: usize,
    d: usize,
    removals: usize,
    seed: Option<u64>,
) -> Result<GenerateOutcome> {
    if n < 2 || d < 2 {
        return Err(Error::Unsupported(format!(
            "generation needs n >= 2 and d >= 2, got n={n}, d={d}"
        )));
    }
    if removals > 0 && n < 3 {
        return Err(Error::Unsupported(
            "removals need n >= 3; length-2 windows leave the tie ambiguous".into(),
        ));
    }
    let graph = build_cluster_graph(n, d)?;
    let plan = plan_removals(&graph, removals)?;
    generate_from_plan(&graph, &plan, seed)
}

/// Generation from an explicit plan, e.g. one replayed from its text form.
pub fn generate_from_plan(
    graph: &ClusterGraph,
    plan: &RemovalPlan,
    seed: Option<u64>,
) -> Result<GenerateOutcome> {
    let compressed = apply_removals(graph, plan)?;
    post_removal_diagnosis(&compressed).ensure()?;
    let path = eulerian_path_seeded(&compressed, seed)?;
    let matrix = build_uword(&path)?;
    let expected = compressed.edge_count() + graph.n() - 1;
    if matrix.columns() != expected {
        return Err(Error::Inconsistency(format!(
            "u-word has {} columns, expected {expected}",
            matrix.columns()
        )));
    }
    Ok(GenerateOutcome {
        matrix,
        plan: plan.clone(),
    })
}
