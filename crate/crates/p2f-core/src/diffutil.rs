//! Minimal unified-diff rendering for patched sources.

/// Unified diff of `original` against `patched` with 3 lines of context.
pub fn unified_diff(original: &str, patched: &str, from_label: &str, to_label: &str) -> String {
    let a: Vec<&str> = original.lines().collect();
    let b: Vec<&str> = patched.lines().collect();
    let script = diff_script(&a, &b);
    if script.iter().all(|l| matches!(l, Line::Keep(..))) {
        return String::new();
    }

    const CTX: usize = 3;
    let mut out = format!("--- {from_label}\n+++ {to_label}\n");
    let mut i = 0;
    while i < script.len() {
        if matches!(script[i], Line::Keep(..)) {
            i += 1;
            continue;
        }
        // grow a hunk: back up for leading context, run forward until the
        // gap to the next change exceeds twice the context width
        let start = i.saturating_sub(CTX);
        let mut end = i;
        let mut kept_run = 0;
        while end < script.len() && kept_run <= 2 * CTX {
            if matches!(script[end], Line::Keep(..)) {
                kept_run += 1;
            } else {
                kept_run = 0;
            }
            end += 1;
        }
        let end = end.saturating_sub(kept_run.saturating_sub(CTX)).min(script.len());

        let a_start = script[start..end]
            .iter()
            .find_map(|l| match l {
                Line::Keep(x, _) | Line::Del(x) => Some(*x),
                Line::Add(_) => None,
            })
            .unwrap_or(a.len());
        let b_start = script[start..end]
            .iter()
            .find_map(|l| match l {
                Line::Keep(_, x) | Line::Add(x) => Some(*x),
                Line::Del(_) => None,
            })
            .unwrap_or(b.len());
        let a_len = script[start..end]
            .iter()
            .filter(|l| matches!(l, Line::Keep(..) | Line::Del(_)))
            .count();
        let b_len = script[start..end]
            .iter()
            .filter(|l| matches!(l, Line::Keep(..) | Line::Add(_)))
            .count();
        out.push_str(&format!(
            "@@ -{},{} +{},{} @@\n",
            a_start + 1,
            a_len,
            b_start + 1,
            b_len
        ));
        for l in &script[start..end] {
            match l {
                Line::Keep(x, _) => {
                    out.push(' ');
                    out.push_str(a[*x]);
                    out.push('\n');
                }
                Line::Del(x) => {
                    out.push('-');
                    out.push_str(a[*x]);
                    out.push('\n');
                }
                Line::Add(x) => {
                    out.push('+');
                    out.push_str(b[*x]);
                    out.push('\n');
                }
            }
        }
        i = end;
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Line {
    Keep(usize, usize),
    Del(usize),
    Add(usize),
}

/// LCS-based line diff.
fn diff_script(a: &[&str], b: &[&str]) -> Vec<Line> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut script = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            script.push(Line::Keep(i, j));
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            script.push(Line::Del(i));
            i += 1;
        } else {
            script.push(Line::Add(j));
            j += 1;
        }
    }
    while i < n {
        script.push(Line::Del(i));
        i += 1;
    }
    while j < m {
        script.push(Line::Add(j));
        j += 1;
    }
    script
}
