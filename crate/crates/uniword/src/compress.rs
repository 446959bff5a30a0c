//! Cycle removal: merging parallel twin edges into tied edge words.
//!
//! One removal step picks a twin cycle and, in every one of its n−1 bundles,
//! replaces two parallel edges by a single edge whose chosen row repeats its
//! first element at the end. The two parents differ only in that row's final
//! entry (one ends just above, one just below the row's first entry), so the
//! tied edge stands for exactly the permutations of the pair and the graph
//! stays balanced, strongly connected, and an exact cover of S^d_n while
//! shrinking by n−1 edges per step.
//!
//! Within a cycle the 2^i twins are indexed by above/below sign vectors, and
//! merges unite two sign subcubes differing in one coordinate. Any prefix of
//! the 2^i−1 merges therefore leaves blocks that are themselves subcubes,
//! each realizable as an edge word with the freed coordinates tied.

use std::collections::HashMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{
    build_member_rows, parallel_cycles, ClusterGraph, Edge, EdgeWord, Mono, RowShape, TwinClass,
    TwinCycle,
};
use crate::perm::{reduce_word, Row, Side};

/// How many removal steps a cycle supports: 2^i − 1 for exponent i.
pub fn removal_capacity(cycle: &TwinCycle) -> usize {
    (1usize << cycle.exponent) - 1
}

/// One removal step: a cycle, the row being tied, and the pair of parallel
/// edges merged in each bundle, in cycle order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalStep {
    pub cycle: String,
    pub tied_row: usize,
    pub merges: Vec<(EdgeWord, EdgeWord)>,
}

/// An ordered, replayable list of removal steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalPlan {
    pub n: usize,
    pub d: usize,
    pub steps: Vec<RemovalStep>,
}

impl RemovalPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Line-oriented text form: a header, then one step per line carrying
    /// the cycle id, the tied row (0-based), and each bundle's edge pair.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={} d={} steps={}", self.n, self.d, self.steps.len());
        for (k, step) in self.steps.iter().enumerate() {
            let _ = write!(out, "step={} cycle={} row={}", k + 1, step.cycle, step.tied_row);
            for (a, b) in &step.merges {
                let _ = write!(out, " merge={}+{}", a.render_compact(), b.render_compact());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty removal plan".into()))?;
        let fields = parse_fields(header)?;
        let n: usize = field(&fields, "n")?;
        let d: usize = field(&fields, "d")?;
        let declared: usize = field(&fields, "steps")?;
        let mut steps = Vec::new();
        for line in lines {
            let mut cycle = String::new();
            let mut tied_row = None;
            let mut merges = Vec::new();
            for token in line.split_whitespace() {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| Error::Malformed(format!("bad plan token {token:?}")))?;
                match key {
                    "step" => {}
                    "cycle" => cycle = value.to_string(),
                    "row" => {
                        tied_row = Some(value.parse::<usize>().map_err(|_| {
                            Error::Malformed(format!("bad row index {value:?}"))
                        })?)
                    }
                    "merge" => {
                        let (a, b) = value.split_once('+').ok_or_else(|| {
                            Error::Malformed(format!("merge {value:?} is not a pair"))
                        })?;
                        merges.push((EdgeWord::parse_compact(a)?, EdgeWord::parse_compact(b)?));
                    }
                    other => {
                        return Err(Error::Malformed(format!("unknown plan field {other:?}")))
                    }
                }
            }
            let tied_row =
                tied_row.ok_or_else(|| Error::Malformed("plan step lacks a row field".into()))?;
            if merges.is_empty() {
                return Err(Error::Malformed("plan step lacks merge pairs".into()));
            }
            steps.push(RemovalStep {
                cycle,
                tied_row,
                merges,
            });
        }
        if steps.len() != declared {
            return Err(Error::Malformed(format!(
                "plan declares {declared} steps but lists {}",
                steps.len()
            )));
        }
        Ok(RemovalPlan { n, d, steps })
    }

    /// SHA-256 over the serialized text, hex-encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.serialize().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_fields(line: &str) -> Result<HashMap<String, String>> {
    line.split_whitespace()
        .map(|token| {
            token
                .split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Malformed(format!("bad plan token {token:?}")))
        })
        .collect()
}

fn field(fields: &HashMap<String, String>, key: &str) -> Result<usize> {
    fields
        .get(key)
        .ok_or_else(|| Error::Malformed(format!("plan header lacks {key}")))?
        .parse()
        .map_err(|_| Error::Malformed(format!("plan header field {key} is not a number")))
}

/// Sign-cube coordinate of a block: fixed on one side or already tied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Coord {
    Fixed(Side),
    Free,
}

type Block = Vec<Coord>;

fn block_label(bundle: &TwinClass, block: &Block, n: usize) -> EdgeWord {
    let rows = build_member_rows(
        &bundle.signature,
        &bundle.wrap_rows,
        &bundle.mono,
        n,
        |t| match block[t] {
            Coord::Fixed(side) => RowShape::Fixed(side),
            Coord::Free => RowShape::Tied,
        },
    );
    EdgeWord::new(rows).expect("block rows are valid by construction")
}

fn cycle_id(cycle: &TwinCycle) -> String {
    let head = &cycle.bundles[0];
    let wrap = head
        .wrap_rows
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mono = head
        .mono
        .iter()
        .map(|(r, m)| {
            format!(
                "{r}{}",
                match m {
                    Mono::Increasing => '+',
                    Mono::Decreasing => '-',
                }
            )
        })
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "i{}:{}|w{}|m{}",
        cycle.exponent,
        head.signature
            .rows()
            .iter()
            .map(|row| row
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","))
            .collect::<Vec<_>>()
            .join("/"),
        wrap,
        mono
    )
}

/// Emits `count` merge steps for one cycle, advancing its block state.
fn steps_for_cycle(cycle: &TwinCycle, n: usize, count: usize) -> Result<Vec<RemovalStep>> {
    let arity = cycle.exponent;
    let mut blocks: Vec<Block> = (0..1usize << arity)
        .map(|signs| {
            (0..arity)
                .map(|t| {
                    Coord::Fixed(if signs >> t & 1 == 0 {
                        Side::Above
                    } else {
                        Side::Below
                    })
                })
                .collect()
        })
        .collect();
    blocks.sort();

    let id = cycle_id(cycle);
    let mut steps = Vec::with_capacity(count);
    for _ in 0..count {
        // smallest tieable coordinate first, then the smallest block pair
        let mut choice: Option<(usize, usize, usize)> = None;
        'search: for p in 0..arity {
            for a in 0..blocks.len() {
                for b in a + 1..blocks.len() {
                    let (x, y) = (&blocks[a], &blocks[b]);
                    let mergeable = (0..arity).all(|q| {
                        if q == p {
                            matches!((x[q], y[q]), (Coord::Fixed(s), Coord::Fixed(t)) if s != t)
                        } else {
                            x[q] == y[q]
                        }
                    });
                    if mergeable {
                        choice = Some((p, a, b));
                        break 'search;
                    }
                }
            }
        }
        let (p, a, b) = choice.ok_or_else(|| {
            Error::Inconsistency("cycle has no mergeable block pair left".into())
        })?;
        let merges: Vec<(EdgeWord, EdgeWord)> = cycle
            .bundles
            .iter()
            .map(|bundle| {
                (
                    block_label(bundle, &blocks[a], n),
                    block_label(bundle, &blocks[b], n),
                )
            })
            .collect();
        steps.push(RemovalStep {
            cycle: id.clone(),
            tied_row: cycle.bundles[0].wrap_rows[p],
            merges,
        });
        let mut merged = blocks[a].clone();
        merged[p] = Coord::Free;
        blocks.remove(b);
        blocks.remove(a);
        blocks.push(merged);
        blocks.sort();
    }
    Ok(steps)
}

/// Total removal capacity of the graph: the sum of 2^i − 1 over its cycles.
pub fn max_plan_steps(graph: &ClusterGraph) -> Result<usize> {
    if graph.n() < 3 {
        return Ok(0);
    }
    Ok(parallel_cycles(graph)?
        .iter()
        .map(removal_capacity)
        .sum())
}

/// The canonical plan of exactly `steps` removals: cycles are consumed in
/// order of ascending exponent then smallest signature, each exhausted up to
/// its capacity before the next begins.
pub fn plan_removals(graph: &ClusterGraph, steps: usize) -> Result<RemovalPlan> {
    if steps == 0 {
        return Ok(RemovalPlan {
            n: graph.n(),
            d: graph.d(),
            steps: Vec::new(),
        });
    }
    if graph.n() < 3 {
        return Err(Error::Unsupported(format!(
            "removals need n >= 3, got n={}",
            graph.n()
        )));
    }
    let cycles = parallel_cycles(graph)?;
    let max: usize = cycles.iter().map(removal_capacity).sum();
    if steps > max {
        return Err(Error::BoundExceeded {
            requested: steps,
            max,
            n: graph.n(),
            d: graph.d(),
        });
    }
    let mut quotas = Vec::with_capacity(cycles.len());
    let mut remaining = steps;
    for cycle in &cycles {
        let take = remaining.min(removal_capacity(cycle));
        quotas.push(take);
        remaining -= take;
    }
    plan_with_quotas(graph, &quotas)
}

/// A plan taking a prescribed number of steps from each canonical cycle.
/// `quotas` aligns with the [`parallel_cycles`] ordering.
pub fn plan_with_quotas(graph: &ClusterGraph, quotas: &[usize]) -> Result<RemovalPlan> {
    let cycles = parallel_cycles(graph)?;
    if quotas.len() != cycles.len() {
        return Err(Error::Malformed(format!(
            "{} quotas for {} cycles",
            quotas.len(),
            cycles.len()
        )));
    }
    let mut steps = Vec::new();
    for (cycle, &quota) in cycles.iter().zip(quotas) {
        if quota > removal_capacity(cycle) {
            return Err(Error::BoundExceeded {
                requested: quota,
                max: removal_capacity(cycle),
                n: graph.n(),
                d: graph.d(),
            });
        }
        steps.extend(steps_for_cycle(cycle, graph.n(), quota)?);
    }
    Ok(RemovalPlan {
        n: graph.n(),
        d: graph.d(),
        steps,
    })
}

/// The tied form of an untied wrap row: its first n−1 entries reduced, with
/// the first entry repeated at the end.
fn tie_row(row: &[crate::perm::Value]) -> Result<Row> {
    let n = row.len();
    let mut tied = reduce_word(&row[..n - 1])?;
    tied.push(tied[0]);
    Ok(tied)
}

/// Applies a plan, producing the compressed graph. Every directive must name
/// two currently present parallel edges that differ only in the final entry
/// of the tied row.
pub fn apply_removals(graph: &ClusterGraph, plan: &RemovalPlan) -> Result<ClusterGraph> {
    if plan.n != graph.n() || plan.d != graph.d() {
        return Err(Error::PlanStale(format!(
            "plan is for n={}, d={} but the graph has n={}, d={}",
            plan.n,
            plan.d,
            graph.n(),
            graph.d()
        )));
    }
    let mut out = graph.clone();
    let mut slots: Vec<Option<Edge>> = out.edges_mut().drain(..).map(Some).collect();
    let mut by_label: HashMap<EdgeWord, usize> = slots
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_ref().unwrap().label.clone(), i))
        .collect();

    let n = graph.n();
    for step in &plan.steps {
        if step.tied_row >= graph.d() - 1 {
            return Err(Error::PlanStale(format!(
                "tied row {} out of range",
                step.tied_row
            )));
        }
        for (a, b) in &step.merges {
            let ia = *by_label.get(a).ok_or_else(|| {
                Error::PlanStale(format!("edge {} is not present", a.render_inline()))
            })?;
            let ib = *by_label.get(b).ok_or_else(|| {
                Error::PlanStale(format!("edge {} is not present", b.render_inline()))
            })?;
            let ea = slots[ia].take().expect("indexed edges are present");
            let eb = slots[ib].take().expect("indexed edges are present");
            by_label.remove(a);
            by_label.remove(b);
            let merged_label = merge_labels(&ea.label, &eb.label, step.tied_row, n)?;
            if ea.source != eb.source || ea.target != eb.target {
                return Err(Error::PlanStale(format!(
                    "edges {} and {} are not parallel",
                    a.render_inline(),
                    b.render_inline()
                )));
            }
            let merged = Edge {
                source: ea.source,
                target: ea.target,
                label: merged_label.clone(),
            };
            by_label.insert(merged_label, slots.len());
            slots.push(Some(merged));
        }
    }

    let mut edges: Vec<Edge> = slots.into_iter().flatten().collect();
    edges.sort_by(|a, b| a.label.cmp(&b.label));
    *out.edges_mut() = edges;
    out.set_steps_applied(graph.steps_applied() + plan.steps.len());
    Ok(out)
}

fn merge_labels(a: &EdgeWord, b: &EdgeWord, tied_row: usize, n: usize) -> Result<EdgeWord> {
    if a == b {
        return Err(Error::PlanStale("directive merges an edge with itself".into()));
    }
    for (q, (ra, rb)) in a.rows().iter().zip(b.rows()).enumerate() {
        if q != tied_row && ra != rb {
            return Err(Error::PlanStale(format!(
                "edges differ in row {} besides the tied row {}",
                q + 2,
                tied_row + 2
            )));
        }
    }
    let ra = &a.rows()[tied_row];
    let rb = &b.rows()[tied_row];
    if ra[0] == ra[n - 1] || rb[0] == rb[n - 1] {
        return Err(Error::PlanStale(format!(
            "row {} is already tied",
            tied_row + 2
        )));
    }
    let tied = tie_row(ra)?;
    if tied != tie_row(rb)? {
        return Err(Error::PlanStale(format!(
            "edges are not twins in row {}",
            tied_row + 2
        )));
    }
    let mut rows = a.rows().to_vec();
    rows[tied_row] = tied;
    EdgeWord::new(rows)
}

/// Outcome of the post-removal checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalDiagnosis {
    pub balanced: bool,
    pub strongly_connected: bool,
    pub exact_cover: bool,
    pub detail: String,
}

impl RemovalDiagnosis {
    pub fn is_ok(&self) -> bool {
        self.balanced && self.strongly_connected && self.exact_cover
    }

    pub fn ensure(&self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::RemovalCheck {
                balanced: self.balanced,
                strongly_connected: self.strongly_connected,
                exact_cover: self.exact_cover,
                detail: self.detail.clone(),
            })
        }
    }
}

/// Re-checks the Eulerian criterion and that the edge labels still expand to
/// every permutation exactly once. Verified on every path, never assumed.
pub fn post_removal_diagnosis(graph: &ClusterGraph) -> RemovalDiagnosis {
    let euler = graph.check_eulerian();
    let mut seen = std::collections::HashSet::new();
    let mut detail = String::new();
    let mut exact = true;
    for edge in graph.edges() {
        for perm in edge.label.expansion() {
            if !seen.insert(perm.clone()) {
                exact = false;
                if detail.is_empty() {
                    detail = format!(
                        "permutation {} covered more than once",
                        perm.render().replace('\n', "/")
                    );
                }
            }
        }
    }
    let expected = crate::perm::factorial(graph.n()).pow(graph.d() as u32 - 1);
    if seen.len() != expected {
        exact = false;
        if detail.is_empty() {
            detail = format!("{} of {} permutations covered", seen.len(), expected);
        }
    }
    RemovalDiagnosis {
        balanced: euler.balanced,
        strongly_connected: euler.strongly_connected,
        exact_cover: exact,
        detail,
    }
}
