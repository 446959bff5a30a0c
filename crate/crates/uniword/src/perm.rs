//! Multi-dimensional permutations and tie-aware word reduction.
//!
//! A d-dimensional permutation of length n is stored as the d−1 rows below
//! the implicit increasing top row, each row an ordinary permutation of
//! 1..=n. Reduction relabels a word so the i-th smallest distinct value
//! becomes i; equal entries stay equal (dense ranking), which is what gives
//! repeated elements their "incomparable" meaning: a window with ties stands
//! for every permutation obtained by ordering the tied entries among
//! themselves while respecting their order against everything else.

use crate::error::{Error, Result};

/// Entry type for all matrices handled by the library.
pub type Value = u32;
/// One matrix row.
pub type Row = Vec<Value>;

/// Dense-rank reduction of a word: the i-th smallest distinct value maps to i.
///
/// Order and ties are both preserved: `out[a] < out[b]` iff `w[a] < w[b]`,
/// and `out[a] == out[b]` iff `w[a] == w[b]`.
pub fn reduce_word(w: &[Value]) -> Result<Row> {
    if w.is_empty() {
        return Err(Error::Malformed("cannot reduce an empty word".into()));
    }
    if w.contains(&0) {
        return Err(Error::Malformed("word entries must be positive".into()));
    }
    let mut distinct: Vec<Value> = w.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(w.iter()
        .map(|v| distinct.binary_search(v).unwrap() as Value + 1)
        .collect())
}

/// Row-wise reduction of a matrix.
pub fn reduce_matrix(rows: &[Row]) -> Result<Vec<Row>> {
    if rows.is_empty() {
        return Err(Error::Malformed("matrix has no rows".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Malformed("matrix rows have unequal lengths".into()));
    }
    rows.iter().map(|r| reduce_word(r)).collect()
}

/// Whether two equal-length words reduce to the same pattern.
pub fn order_isomorphic(u: &[Value], v: &[Value]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::Malformed(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    Ok(reduce_word(u)? == reduce_word(v)?)
}

/// Side on which a new element is adjoined relative to its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Above,
    Below,
}

/// Appends to the permutation `w` a new element sitting strictly between
/// `anchor` and its neighbouring value on the chosen side, then reduces.
///
/// Realized by inserting the half-integer anchor±1/2 (scaled arithmetic), so
/// the boundary cases fall out of the reduction: anchor = max with `Above`
/// appends a new maximum, anchor = 1 with `Below` a new minimum.
pub fn adjoin_relative(w: &[Value], anchor: Value, side: Side) -> Result<Row> {
    if !w.contains(&anchor) {
        return Err(Error::Malformed(format!(
            "anchor {anchor} not present in the word"
        )));
    }
    let m = w.len() as Value;
    let is_perm = {
        let mut seen = vec![false; w.len() + 1];
        w.iter().all(|&v| {
            v >= 1 && v <= m && !std::mem::replace(&mut seen[v as usize], true)
        })
    };
    if !is_perm {
        return Err(Error::Malformed(format!(
            "expected a permutation of 1..={m}"
        )));
    }
    let mut doubled: Row = w.iter().map(|&v| 2 * v).collect();
    doubled.push(match side {
        Side::Above => 2 * anchor + 1,
        Side::Below => 2 * anchor - 1,
    });
    reduce_word(&doubled)
}

/// A d-dimensional permutation of length n, stored as its d−1 nontrivial
/// rows (the increasing top row is implicit).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DPermutation {
    rows: Vec<Row>,
}

impl DPermutation {
    /// Validates that every row is a permutation of 1..=n of equal length.
    pub fn new(rows: Vec<Row>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Malformed(
                "a d-dimensional permutation needs at least one stored row".into(),
            ));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::Malformed("rows must be non-empty".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::Malformed("rows have unequal lengths".into()));
            }
            let mut seen = vec![false; n + 1];
            for &v in row {
                if v == 0 || v as usize > n || seen[v as usize] {
                    return Err(Error::Malformed(format!(
                        "row {:?} is not a permutation of 1..={n}",
                        row
                    )));
                }
                seen[v as usize] = true;
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// The dimension d; one more than the number of stored rows.
    pub fn dimension(&self) -> usize {
        self.rows.len() + 1
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Row> {
        self.rows
    }

    pub fn render(&self) -> String {
        render_matrix(&self.rows)
    }
}

/// Iterator over S^d_n in lexicographic order of concatenated rows.
pub struct DPermIter {
    rows: Vec<Row>,
    exhausted: bool,
}

/// Enumerates all (n!)^(d−1) d-dimensional n-permutations, ordered
/// lexicographically by the concatenation of their rows.
pub fn enumerate_dperms(n: usize, d: usize) -> DPermIter {
    let exhausted = n == 0 || d < 2;
    let identity: Row = (1..=n as Value).collect();
    DPermIter {
        rows: vec![identity; d.saturating_sub(1)],
        exhausted,
    }
}

impl Iterator for DPermIter {
    type Item = DPermutation;

    fn next(&mut self) -> Option<DPermutation> {
        if self.exhausted {
            return None;
        }
        let current = DPermutation {
            rows: self.rows.clone(),
        };
        // Odometer: advance the last row first, carrying leftwards.
        let mut pos = self.rows.len();
        loop {
            if pos == 0 {
                self.exhausted = true;
                break;
            }
            pos -= 1;
            if next_permutation(&mut self.rows[pos]) {
                break;
            }
            let n = self.rows[pos].len();
            self.rows[pos] = (1..=n as Value).collect();
        }
        Some(current)
    }
}

/// Advances `row` to its lexicographic successor; false once at the maximum.
pub(crate) fn next_permutation(row: &mut [Value]) -> bool {
    if row.len() < 2 {
        return false;
    }
    let mut i = row.len() - 1;
    while i > 0 && row[i - 1] >= row[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = row.len() - 1;
    while row[j] <= row[i - 1] {
        j -= 1;
    }
    row.swap(i - 1, j);
    row[i..].reverse();
    true
}

/// The set of d-dimensional permutations encoded by a window with ties.
#[derive(Debug, Clone)]
pub struct WindowExpansion {
    pub source: Vec<Row>,
    /// Sorted, pairwise distinct.
    pub covered: Vec<DPermutation>,
}

impl WindowExpansion {
    pub fn count(&self) -> usize {
        self.covered.len()
    }
}

/// Expands a window by resolving, independently per row, every tie group in
/// all possible relative orders while keeping each tied entry's order
/// against the distinct values around it.
pub fn expand_window(rows: &[Row]) -> Result<WindowExpansion> {
    if rows.is_empty() {
        return Err(Error::Malformed("window has no rows".into()));
    }
    let n = rows[0].len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Malformed("window rows must be equal and non-empty".into()));
    }
    let per_row: Vec<Vec<Row>> = rows
        .iter()
        .map(|row| row_resolutions(row))
        .collect::<Result<_>>()?;

    let mut covered = Vec::new();
    let mut picks = vec![0usize; per_row.len()];
    loop {
        let resolved: Vec<Row> = picks
            .iter()
            .zip(&per_row)
            .map(|(&k, options)| options[k].clone())
            .collect();
        covered.push(DPermutation { rows: resolved });
        let mut level = picks.len();
        loop {
            if level == 0 {
                covered.sort();
                return Ok(WindowExpansion {
                    source: rows.to_vec(),
                    covered,
                });
            }
            level -= 1;
            picks[level] += 1;
            if picks[level] < per_row[level].len() {
                break;
            }
            picks[level] = 0;
        }
    }
}

/// All permutations of 1..=n that linearly extend one row's tie pattern.
fn row_resolutions(row: &[Value]) -> Result<Vec<Row>> {
    let reduced = reduce_word(row)?;
    let n = row.len();
    let k = *reduced.iter().max().unwrap() as usize;
    // positions of each reduced value, ascending
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, &v) in reduced.iter().enumerate() {
        groups[v as usize - 1].push(pos);
    }
    // each group gets a consecutive block of final ranks
    let mut base = 1 as Value;
    let mut out: Vec<Row> = vec![vec![0; n]];
    for group in &groups {
        let block: Vec<Value> = (0..group.len() as Value).map(|t| base + t).collect();
        base += group.len() as Value;
        let mut next = Vec::with_capacity(out.len() * factorial(group.len()));
        let mut assignment = block.clone();
        loop {
            for partial in &out {
                let mut extended = partial.clone();
                for (slot, &pos) in group.iter().enumerate() {
                    extended[pos] = assignment[slot];
                }
                next.push(extended);
            }
            if !next_permutation(&mut assignment) {
                break;
            }
        }
        out = next;
    }
    Ok(out)
}

pub(crate) fn factorial(k: usize) -> usize {
    (2..=k).product::<usize>().max(1)
}

/// Canonical text rendering: rows newline-separated, entries space-separated.
pub fn render_matrix(rows: &[Row]) -> String {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses whitespace-separated positive integers, one row per line.
pub fn parse_matrix(text: &str) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<Value>()
                    .map_err(|_| Error::Malformed(format!("bad entry {tok:?}")))
                    .and_then(|v| {
                        if v == 0 {
                            Err(Error::Malformed("entries must be positive".into()))
                        } else {
                            Ok(v)
                        }
                    })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Malformed("no matrix rows found".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(word: &[Value]) -> Row {
        reduce_word(word).unwrap()
    }

    /// Rank each entry against a sorted copy; independent of the dense
    /// binary-search path above.
    fn naive_reduce(w: &[Value]) -> Row {
        w.iter()
            .map(|a| {
                let below = w.iter().filter(|&&b| b < *a).collect::<Vec<_>>();
                let mut distinct: Vec<Value> = below.iter().map(|&&b| b).collect();
                distinct.sort_unstable();
                distinct.dedup();
                distinct.len() as Value + 1
            })
            .collect()
    }

    #[test]
    fn reduce_relabels_by_rank() {
        assert_eq!(r(&[5, 2, 9, 4]), vec![3, 1, 4, 2]);
        assert_eq!(r(&[1, 2, 3]), vec![1, 2, 3]);
    }

    #[test]
    fn reduce_keeps_ties() {
        assert_eq!(r(&[1, 2, 1]), vec![1, 2, 1]);
        assert_eq!(r(&[4, 1, 4]), vec![2, 1, 2]);
        assert_eq!(r(&[4, 1, 4]), naive_reduce(&[4, 1, 4]));
    }

    #[test]
    fn reduce_rejects_bad_words() {
        assert!(reduce_word(&[]).is_err());
        assert!(reduce_word(&[1, 0, 2]).is_err());
    }

    #[test]
    fn reduce_matrix_applies_per_row() {
        let m = vec![vec![2, 1, 5, 3], vec![4, 1, 2, 5]];
        assert_eq!(
            reduce_matrix(&m).unwrap(),
            vec![vec![2, 1, 4, 3], vec![3, 1, 2, 4]]
        );
        let id = vec![vec![1, 2], vec![1, 2]];
        assert_eq!(reduce_matrix(&id).unwrap(), id);
        // already reduced, ties included
        let tied = vec![vec![2, 1, 2], vec![2, 3, 1], vec![1, 2, 1]];
        assert_eq!(reduce_matrix(&tied).unwrap(), tied);
    }

    #[test]
    fn reduce_matrix_rejects_ragged() {
        assert!(reduce_matrix(&[vec![1, 2], vec![1]]).is_err());
    }

    #[test]
    fn order_isomorphism_examples() {
        assert!(order_isomorphic(&[4, 5, 2], &[2, 3, 1]).unwrap());
        assert!(order_isomorphic(&[1, 2, 3], &[1, 2, 3]).unwrap());
        assert!(!order_isomorphic(&[1, 2, 1], &[1, 3, 2]).unwrap());
        assert!(order_isomorphic(&[1, 2], &[1, 2, 3]).is_err());
    }

    /// Insert the exact rational anchor±1/2 and rank — the definitional route.
    fn adjoin_oracle(w: &[Value], anchor: Value, side: Side) -> Row {
        let mut vals: Vec<f64> = w.iter().map(|&v| v as f64).collect();
        vals.push(match side {
            Side::Above => anchor as f64 + 0.5,
            Side::Below => anchor as f64 - 0.5,
        });
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.iter()
            .map(|v| sorted.iter().position(|s| s == v).unwrap() as Value + 1)
            .collect()
    }

    #[test]
    fn adjoin_inserts_between_neighbours() {
        assert_eq!(adjoin_relative(&[2, 1], 2, Side::Above).unwrap(), vec![2, 1, 3]);
        assert_eq!(adjoin_relative(&[2, 1], 2, Side::Below).unwrap(), vec![3, 1, 2]);
        assert_eq!(adjoin_relative(&[1, 2], 1, Side::Below).unwrap(), vec![2, 3, 1]);
        for w in [vec![1, 3, 2], vec![2, 3, 1], vec![1, 2, 3, 4]] {
            for anchor in 1..=w.len() as Value {
                for side in [Side::Above, Side::Below] {
                    assert_eq!(
                        adjoin_relative(&w, anchor, side).unwrap(),
                        adjoin_oracle(&w, anchor, side)
                    );
                }
            }
        }
    }

    #[test]
    fn adjoin_requires_anchor() {
        assert!(adjoin_relative(&[1, 2], 3, Side::Above).is_err());
    }

    #[test]
    fn adjoin_sides_differ_only_in_final_rank_and_restrict_back() {
        for p in enumerate_dperms(4, 2) {
            let w = &p.rows()[0];
            for anchor in 1..=4 {
                let up = adjoin_relative(w, anchor, Side::Above).unwrap();
                let down = adjoin_relative(w, anchor, Side::Below).unwrap();
                assert_ne!(up[4], down[4]);
                assert_eq!(reduce_word(&up[..4]).unwrap(), *w);
                assert_eq!(reduce_word(&down[..4]).unwrap(), *w);
            }
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_dperms(2, 3).count(), 4);
        assert_eq!(enumerate_dperms(3, 3).count(), 36);
        let flat: Vec<_> = enumerate_dperms(3, 2).collect();
        assert_eq!(flat.len(), 6);
        assert_eq!(flat[0].rows()[0], vec![1, 2, 3]);
        assert_eq!(flat[5].rows()[0], vec![3, 2, 1]);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_ordered() {
        for (n, d) in [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (2, 4), (3, 4), (4, 3), (4, 4)] {
            let all: Vec<_> = enumerate_dperms(n, d).collect();
            let expected = factorial(n).pow(d as u32 - 1);
            assert_eq!(all.len(), expected, "n={n} d={d}");
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), expected);
            assert_eq!(sorted, all, "lexicographic order for n={n} d={d}");
        }
    }

    #[test]
    fn expansion_of_three_row_window() {
        let window = vec![vec![2, 1, 2], vec![2, 3, 1], vec![1, 2, 1]];
        let expansion = expand_window(&window).unwrap();
        let expect: Vec<DPermutation> = [
            vec![vec![2, 1, 3], vec![2, 3, 1], vec![1, 3, 2]],
            vec![vec![3, 1, 2], vec![2, 3, 1], vec![1, 3, 2]],
            vec![vec![2, 1, 3], vec![2, 3, 1], vec![2, 3, 1]],
            vec![vec![3, 1, 2], vec![2, 3, 1], vec![2, 3, 1]],
        ]
        .into_iter()
        .map(|rows| DPermutation::new(rows).unwrap())
        .collect();
        let mut expect = expect;
        expect.sort();
        assert_eq!(expansion.covered, expect);
    }

    #[test]
    fn expansion_of_single_rows() {
        let e = expand_window(&[vec![1, 1, 2]]).unwrap();
        let rows: Vec<&Row> = e.covered.iter().map(|p| &p.rows()[0]).collect();
        assert_eq!(rows, vec![&vec![1, 2, 3], &vec![2, 1, 3]]);

        let trivial = expand_window(&[vec![1, 1, 1]]).unwrap();
        assert_eq!(trivial.count(), 6);

        let plain = expand_window(&[vec![3, 1, 2]]).unwrap();
        assert_eq!(plain.count(), 1);
    }

    #[test]
    fn expansion_respects_surrounding_order() {
        let window = vec![vec![2, 1, 2, 4, 2]];
        let e = expand_window(&window).unwrap();
        assert_eq!(e.count(), 6);
        for p in &e.covered {
            let row = &p.rows()[0];
            for a in 0..row.len() {
                for b in 0..row.len() {
                    if window[0][a] < window[0][b] {
                        assert!(row[a] < row[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn rendering_round_trips() {
        let rows = vec![vec![1, 2, 10], vec![3, 1, 2]];
        let text = render_matrix(&rows);
        assert_eq!(text, "1 2 10\n3 1 2");
        assert_eq!(parse_matrix(&text).unwrap(), rows);
        assert!(parse_matrix("1 0 2").is_err());
        assert!(parse_matrix("").is_err());
    }
}
