//! Span-based text edits, used to materialize candidate fixes as source text.

use crate::span::Span;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PatchError {
    #[error("overlapping edits at offsets {0}..{1} and {2}..{3}")]
    OverlappingEdits(usize, usize, usize, usize),
    #[error("edit span {0}..{1} exceeds source length {2}")]
    OutOfBounds(usize, usize, usize),
}

/// One replacement: the span's text is substituted by `replacement`.
/// A zero-width span is an insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub span: Span,
    pub replacement: String,
}

impl Edit {
    pub fn new(span: Span, replacement: impl Into<String>) -> Self {
        Edit {
            span,
            replacement: replacement.into(),
        }
    }
}

/// Apply pairwise-disjoint edits to `source`.
///
/// Edits may be given in any order; they are applied back-to-front so offsets
/// stay valid. An empty edit list returns the input unchanged.
pub fn render_patch(source: &str, edits: &[Edit]) -> Result<String, PatchError> {
    for edit in edits {
        if edit.span.end > source.len() {
            return Err(PatchError::OutOfBounds(
                edit.span.start,
                edit.span.end,
                source.len(),
            ));
        }
    }
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.span.start, e.span.end));
    for pair in sorted.windows(2) {
        let (a, b) = (&pair[0].span, &pair[1].span);
        // two insertions at the same point also conflict: order would be ambiguous
        let disjoint = a.end <= b.start && !(a.is_empty() && b.is_empty() && a.start == b.start);
        if !disjoint {
            return Err(PatchError::OverlappingEdits(a.start, a.end, b.start, b.end));
        }
    }
    let mut out = source.to_string();
    for edit in sorted.into_iter().rev() {
        out.replace_range(edit.span.start..edit.span.end, &edit.replacement);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_edit_list_is_identity() {
        let src = "class C feature end";
        assert_eq!(render_patch(src, &[]).unwrap(), src);
    }

    #[test]
    fn replaces_one_token() {
        let src = "if hours = 24 then";
        let at = src.find("24").unwrap();
        let out = render_patch(src, &[Edit::new(Span::new(at, at + 2), "23")]).unwrap();
        assert_eq!(out, "if hours = 23 then");
    }

    #[test]
    fn applies_edits_in_any_given_order() {
        let src = "a b c";
        let edits = [
            Edit::new(Span::new(4, 5), "Z"),
            Edit::new(Span::new(0, 1), "X"),
        ];
        assert_eq!(render_patch(src, &edits).unwrap(), "X b Z");
    }

    #[test]
    fn overlap_is_rejected() {
        let src = "abcdef";
        let edits = [
            Edit::new(Span::new(0, 3), "x"),
            Edit::new(Span::new(2, 4), "y"),
        ];
        assert!(matches!(
            render_patch(src, &edits),
            Err(PatchError::OverlappingEdits(..))
        ));
    }

    #[test]
    fn insertion_at_point() {
        let src = "require a = 0 do";
        let at = src.find("do").unwrap();
        let out = render_patch(src, &[Edit::new(Span::point(at), "not (a > 0) ")]).unwrap();
        assert_eq!(out, "require a = 0 not (a > 0) do");
    }

    #[test]
    fn out_of_bounds_is_rejected() {
        assert!(matches!(
            render_patch("ab", &[Edit::new(Span::new(1, 5), "x")]),
            Err(PatchError::OutOfBounds(..))
        ));
    }
}
