//! Independent exact-cover verification of u-words and u-cycles.
//!
//! The verifier expands every n-column window — ties may sit anywhere, not
//! only at window edges — and accepts exactly when the multiset union over
//! windows is S^d_n with every multiplicity one. The total cover size is
//! computed from tie-group factorials first, so a wrong-sized candidate is
//! rejected before any expansion work.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::DEFAULT_EDGE_BUDGET;
use crate::perm::{enumerate_dperms, expand_window, factorial, DPermutation, Row, Value};

/// Cap on how many missing/duplicated entries a report lists.
pub const DEFAULT_REPORT_CAP: usize = 50;

/// A permutation covered more than once, with the windows that cover it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Duplicate {
    pub perm: DPermutation,
    pub windows: Vec<usize>,
}

/// Verification outcome. `missing`/`duplicated` are capped at the report
/// limit; the `_total` fields carry the uncapped counts.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub accepted: bool,
    pub cyclic: bool,
    pub window_count: usize,
    pub cover_size: u128,
    pub expected_size: u128,
    pub missing: Vec<DPermutation>,
    pub missing_total: usize,
    pub duplicated: Vec<Duplicate>,
    pub duplicated_total: usize,
    /// Window start columns involved in duplicate coverage.
    pub fault_windows: Vec<usize>,
    /// True when the lists above were skipped or cut short.
    pub truncated: bool,
}

impl CoverageReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.accepted { "accepted\n" } else { "rejected\n" });
        out.push_str(&format!(
            "windows: {} ({})\n",
            self.window_count,
            if self.cyclic { "cyclic" } else { "linear" }
        ));
        out.push_str(&format!(
            "cover size: {} (expected {})\n",
            self.cover_size, self.expected_size
        ));
        if self.missing_total > 0 {
            out.push_str(&format!(
                "missing ({} shown of {}):\n",
                self.missing.len(),
                self.missing_total
            ));
            for p in &self.missing {
                out.push_str(&format!("  {}\n", p.render().replace('\n', "/")));
            }
        }
        if self.duplicated_total > 0 {
            out.push_str(&format!(
                "duplicated ({} shown of {}):\n",
                self.duplicated.len(),
                self.duplicated_total
            ));
            for dup in &self.duplicated {
                out.push_str(&format!(
                    "  {} at windows {:?}\n",
                    dup.perm.render().replace('\n', "/"),
                    dup.windows
                ));
            }
        }
        if !self.fault_windows.is_empty() {
            out.push_str(&format!("fault windows: {:?}\n", self.fault_windows));
        }
        if self.truncated {
            out.push_str("details truncated\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows_of = |p: &DPermutation| p.rows().to_vec();
        serde_json::json!({
            "accepted": self.accepted,
            "cyclic": self.cyclic,
            "windows": self.window_count,
            "cover_size": self.cover_size.to_string(),
            "expected_size": self.expected_size.to_string(),
            "missing": self.missing.iter().map(rows_of).collect::<Vec<_>>(),
            "missing_total": self.missing_total,
            "duplicated": self.duplicated.iter().map(|d| serde_json::json!({
                "perm": d.perm.rows(),
                "windows": d.windows,
            })).collect::<Vec<_>>(),
            "duplicated_total": self.duplicated_total,
            "fault_windows": self.fault_windows,
            "truncated": self.truncated,
        })
        .to_string()
    }
}

/// Verifies a linear u-word: all L−n+1 windows, each permutation once.
pub fn verify_uword(rows: &[Row], n: usize) -> Result<CoverageReport> {
    verify_with_options(rows, n, false, DEFAULT_REPORT_CAP, DEFAULT_EDGE_BUDGET)
}

/// Verifies a u-cycle: the L windows wrap around the matrix end.
pub fn verify_ucycle(rows: &[Row], n: usize) -> Result<CoverageReport> {
    verify_with_options(rows, n, true, DEFAULT_REPORT_CAP, DEFAULT_EDGE_BUDGET)
}

/// Full-control entry point behind both verifiers.
pub fn verify_with_options(
    rows: &[Row],
    n: usize,
    cyclic: bool,
    report_cap: usize,
    budget: u64,
) -> Result<CoverageReport> {
    let (d, length) = validate_matrix(rows, n)?;
    let expected = checked_expected(n, d, budget)?;

    let windows = window_matrices(rows, n, length, cyclic);
    let cover_size: u128 = windows.iter().map(|w| expansion_size(w)).sum();

    // size mismatch already decides the verdict; expand only when the work
    // is bounded, to fill in the details
    let can_detail = cover_size <= budget as u128;
    if !can_detail {
        return Ok(CoverageReport {
            accepted: false,
            cyclic,
            window_count: windows.len(),
            cover_size,
            expected_size: expected as u128,
            missing: Vec::new(),
            missing_total: 0,
            duplicated: Vec::new(),
            duplicated_total: 0,
            fault_windows: Vec::new(),
            truncated: true,
        });
    }

    let mut covered: BTreeMap<DPermutation, Vec<usize>> = BTreeMap::new();
    for (idx, window) in windows.iter().enumerate() {
        for perm in expand_window(window)?.covered {
            covered.entry(perm).or_default().push(idx);
        }
    }

    let mut missing = Vec::new();
    let mut missing_total = 0usize;
    for perm in enumerate_dperms(n, d) {
        if !covered.contains_key(&perm) {
            missing_total += 1;
            if missing.len() < report_cap {
                missing.push(perm);
            }
        }
    }
    let mut duplicated = Vec::new();
    let mut duplicated_total = 0usize;
    let mut fault_windows = Vec::new();
    for (perm, wins) in &covered {
        if wins.len() > 1 {
            duplicated_total += 1;
            if duplicated.len() < report_cap {
                duplicated.push(Duplicate {
                    perm: perm.clone(),
                    windows: wins.clone(),
                });
            }
            for &w in wins {
                if fault_windows.len() < report_cap && !fault_windows.contains(&w) {
                    fault_windows.push(w);
                }
            }
        }
    }
    fault_windows.sort_unstable();

    let accepted =
        missing_total == 0 && duplicated_total == 0 && cover_size == expected as u128;
    let truncated =
        missing.len() < missing_total || duplicated.len() < duplicated_total;
    Ok(CoverageReport {
        accepted,
        cyclic,
        window_count: windows.len(),
        cover_size,
        expected_size: expected as u128,
        missing,
        missing_total,
        duplicated,
        duplicated_total,
        fault_windows,
        truncated,
    })
}

/// The raw multiset of covered permutations, sorted, duplicates retained.
pub fn oracle_cover_multiset(rows: &[Row], n: usize, cyclic: bool) -> Result<Vec<DPermutation>> {
    let (_, length) = validate_matrix(rows, n)?;
    let windows = window_matrices(rows, n, length, cyclic);
    let total: u128 = windows.iter().map(|w| expansion_size(w)).sum();
    if total > DEFAULT_EDGE_BUDGET as u128 {
        return Err(Error::ResourceGuard(format!(
            "cover multiset of size {total} exceeds the work budget"
        )));
    }
    let mut multiset = Vec::new();
    for window in &windows {
        multiset.extend(expand_window(window)?.covered);
    }
    multiset.sort();
    Ok(multiset)
}

fn validate_matrix(rows: &[Row], n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::Malformed("window length must be positive".into()));
    }
    if rows.is_empty() {
        return Err(Error::Malformed("matrix has no rows".into()));
    }
    let length = rows[0].len();
    if rows.iter().any(|r| r.len() != length) {
        return Err(Error::Malformed("matrix rows have unequal lengths".into()));
    }
    if rows.iter().flatten().any(|&v| v == 0) {
        return Err(Error::Malformed("matrix entries must be positive".into()));
    }
    if length < n {
        return Err(Error::Malformed(format!(
            "matrix of {length} columns cannot hold an {n}-column window"
        )));
    }
    Ok((rows.len() + 1, length))
}

fn checked_expected(n: usize, d: usize, budget: u64) -> Result<u64> {
    let fact = factorial(n) as u64;
    let mut acc: u64 = 1;
    for _ in 0..d - 1 {
        acc = acc
            .checked_mul(fact)
            .filter(|&v| v <= budget)
            .ok_or_else(|| {
                Error::ResourceGuard(format!(
                    "(n!)^(d-1) exceeds the verification budget for n={n}, d={d}"
                ))
            })?;
    }
    Ok(acc)
}

fn window_matrices(rows: &[Row], n: usize, length: usize, cyclic: bool) -> Vec<Vec<Row>> {
    let starts: Vec<usize> = if cyclic {
        (0..length).collect()
    } else {
        (0..=length - n).collect()
    };
    starts
        .into_iter()
        .map(|s| {
            rows.iter()
                .map(|row| (0..n).map(|j| row[(s + j) % length]).collect())
                .collect()
        })
        .collect()
}

fn expansion_size(window: &[Row]) -> u128 {
    window
        .iter()
        .map(|row| {
            let mut sorted: Row = row.clone();
            sorted.sort_unstable();
            let mut product: u128 = 1;
            let mut run = 1usize;
            for pair in sorted.windows(2) {
                if pair[0] == pair[1] {
                    run += 1;
                } else {
                    product *= factorial(run) as u128;
                    run = 1;
                }
            }
            product * factorial(run) as u128
        })
        .product()
}

/// A matrix read from text or JSON input, with any declared parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixInput {
    pub rows: Vec<Row>,
    pub n: Option<usize>,
    pub d: Option<usize>,
}

/// Parses verifier input: JSON (`{"n": …, "rows": [[…]]}`), the headered
/// text form (`d n L` then d−1 rows), or a bare matrix.
pub fn parse_matrix_input(text: &str) -> Result<MatrixInput> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_json_input(trimmed);
    }
    let rows = crate::perm::parse_matrix(text)?;
    if let Some(parsed) = split_headered(&rows) {
        return Ok(parsed);
    }
    Ok(MatrixInput {
        rows,
        n: None,
        d: None,
    })
}

fn split_headered(rows: &[Row]) -> Option<MatrixInput> {
    let header = rows.first()?;
    if header.len() != 3 {
        return None;
    }
    let (d, n, length) = (header[0] as usize, header[1] as usize, header[2] as usize);
    if d < 2 || n < 1 || length < n || rows.len() != d {
        return None;
    }
    let body = &rows[1..];
    if body.iter().any(|r| r.len() != length) {
        return None;
    }
    Some(MatrixInput {
        rows: body.to_vec(),
        n: Some(n),
        d: Some(d),
    })
}

fn parse_json_input(text: &str) -> Result<MatrixInput> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Malformed(format!("bad JSON input: {e}")))?;
    let rows_value = value
        .get("rows")
        .ok_or_else(|| Error::Malformed("JSON input lacks a rows field".into()))?;
    let rows: Vec<Row> = rows_value
        .as_array()
        .ok_or_else(|| Error::Malformed("rows must be an array of arrays".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::Malformed("rows must be an array of arrays".into()))?
                .iter()
                .map(|v| {
                    v.as_u64()
                        .filter(|&x| x > 0 && x <= Value::MAX as u64)
                        .map(|x| x as Value)
                        .ok_or_else(|| {
                            Error::Malformed("matrix entries must be positive integers".into())
                        })
                })
                .collect::<Result<Row>>()
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::Malformed("JSON input has no rows".into()));
    }
    let n = value.get("n").and_then(|v| v.as_u64()).map(|v| v as usize);
    let d = value.get("d").and_then(|v| v.as_u64()).map(|v| v as usize);
    Ok(MatrixInput { rows, n, d })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(specs: &[&[Value]]) -> Vec<Row> {
        specs.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn accepts_tied_word_for_length_three() {
        let report = verify_uword(&rows(&[&[1, 1, 2, 1, 1]]), 3).unwrap();
        assert!(report.accepted);
        assert_eq!(report.window_count, 3);
        assert_eq!(report.cover_size, 6);
    }

    #[test]
    fn accepts_plain_and_mixed_words() {
        assert!(verify_uword(&rows(&[&[1, 4, 5, 2, 4, 3, 1, 4]]), 3).unwrap().accepted);
        assert!(verify_uword(&rows(&[&[1, 2, 3, 2, 1, 2]]), 3).unwrap().accepted);
        assert!(verify_uword(&rows(&[&[1, 1, 1]]), 3).unwrap().accepted);
    }

    #[test]
    fn accepts_the_two_column_tied_word_for_pairs() {
        let report = verify_uword(&rows(&[&[1, 1]]), 2).unwrap();
        assert!(report.accepted);
        assert_eq!(report.window_count, 1);
    }

    #[test]
    fn accepts_two_row_word_for_pairs() {
        let m = rows(&[&[5, 4, 1, 2, 3], &[5, 1, 4, 2, 3]]);
        let report = verify_uword(&m, 2).unwrap();
        assert!(report.accepted);
        assert_eq!(report.cover_size, 4);
    }

    #[test]
    fn accepts_distance_violating_word() {
        // repeated elements closer than n−1 apart are fine for the verifier
        let word = [3, 4, 3, 2, 1, 4, 3, 2, 3, 4, 5, 2, 3, 4, 3, 4, 3];
        assert!(verify_uword(&rows(&[&word]), 4).unwrap().accepted);
    }

    #[test]
    fn rejects_overcovered_word_with_full_report() {
        let report = verify_uword(&rows(&[&[1, 1, 1, 1, 1]]), 3).unwrap();
        assert!(!report.accepted);
        assert_eq!(report.cover_size, 18);
        assert_eq!(report.expected_size, 6);
        assert_eq!(report.duplicated_total, 6);
        assert!(report.missing_total == 0);
        assert!(report
            .duplicated
            .iter()
            .all(|d| d.windows == vec![0, 1, 2]));
    }

    #[test]
    fn cyclic_windows_wrap() {
        let report = verify_ucycle(&rows(&[&[4, 3, 1, 2], &[4, 1, 3, 2]]), 2).unwrap();
        assert!(report.accepted);
        assert_eq!(report.window_count, 4);

        let report = verify_ucycle(&rows(&[&[1, 2, 3]]), 3).unwrap();
        assert!(!report.accepted);
        assert_eq!(report.missing_total, 3);
        assert_eq!(report.duplicated_total, 0);
    }

    #[test]
    fn linear_and_cyclic_verdicts_correspond() {
        let cycle = rows(&[&[1, 2, 3, 2]]);
        let mut linear = cycle.clone();
        linear[0].extend_from_slice(&[1, 2]);
        assert!(verify_ucycle(&cycle, 3).unwrap().accepted);
        assert!(verify_uword(&linear, 3).unwrap().accepted);
    }

    #[test]
    fn malformed_inputs_are_not_rejections() {
        assert!(matches!(
            verify_uword(&rows(&[&[1, 2], &[1, 2, 3]]), 2),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            verify_uword(&rows(&[&[1, 0, 2]]), 2),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            verify_uword(&rows(&[&[1, 2]]), 3),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn multiset_oracle_lists_raw_covers() {
        let single = oracle_cover_multiset(&rows(&[&[1, 1, 2]]), 3, false).unwrap();
        let flat: Vec<&Row> = single.iter().map(|p| &p.rows()[0]).collect();
        assert_eq!(flat, vec![&vec![1, 2, 3], &vec![2, 1, 3]]);

        let full = oracle_cover_multiset(&rows(&[&[1, 4, 5, 2, 4, 3, 1, 4]]), 3, false).unwrap();
        assert_eq!(full.len(), 6);

        let exact = oracle_cover_multiset(&rows(&[&[3, 1, 2], &[2, 3, 1]]), 3, false).unwrap();
        assert_eq!(exact.len(), 1);
    }

    #[test]
    fn perturbation_changes_the_cover() {
        let base = rows(&[&[1, 4, 5, 2, 4, 3, 1, 4]]);
        let original = oracle_cover_multiset(&base, 3, false).unwrap();
        for k in 0..7 {
            let mut bent = base.clone();
            if bent[0][k] == bent[0][k + 1] {
                continue;
            }
            bent[0].swap(k, k + 1);
            let report = verify_uword(&bent, 3).unwrap();
            let changed = oracle_cover_multiset(&bent, 3, false).unwrap();
            assert!(!report.accepted || changed != original, "swap at {k}");
        }
    }

    #[test]
    fn input_parsing_variants() {
        let bare = parse_matrix_input("1 1 2 1 1\n").unwrap();
        assert_eq!(bare.rows, rows(&[&[1, 1, 2, 1, 1]]));
        assert_eq!(bare.n, None);

        let headered = parse_matrix_input("2 3 5\n1 1 2 1 1\n").unwrap();
        assert_eq!(headered.rows, rows(&[&[1, 1, 2, 1, 1]]));
        assert_eq!(headered.n, Some(3));
        assert_eq!(headered.d, Some(2));

        let json = parse_matrix_input(r#"{"n": 3, "rows": [[1,1,2,1,1]]}"#).unwrap();
        assert_eq!(json.rows, rows(&[&[1, 1, 2, 1, 1]]));
        assert_eq!(json.n, Some(3));

        // a two-row bare matrix whose first line does not form a header
        let two = parse_matrix_input("4 3 1 2\n4 1 3 2\n").unwrap();
        assert_eq!(two.rows.len(), 2);
        assert_eq!(two.n, None);

        assert!(parse_matrix_input("").is_err());
        assert!(parse_matrix_input("{\"rows\": []}").is_err());
    }
}
