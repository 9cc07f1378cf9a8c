//! Conversion between IOB2 tag sequences and token-index entity spans.

use serde::{Deserialize, Serialize};

use crate::conll::{join_tokens, validate_tags, Tag, TaggedSentence};
use crate::error::SpanError;

/// A half-open token range `[start, end)` carrying one entity label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
    /// Source tokens of the span joined with single spaces.
    pub surface: String,
}

impl EntitySpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// One span per maximal `B-X I-X*` run, sorted by start.
pub fn extract_spans(sentence: &TaggedSentence) -> Result<Vec<EntitySpan>, SpanError> {
    let tags = sentence.tags();
    let violations = validate_tags(tags);
    if let Some(first) = violations.first() {
        return Err(SpanError::InvalidScheme {
            violations: violations.len(),
            first: first.index,
        });
    }

    let mut spans = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let Tag::Begin(label) = &tags[i] else {
            i += 1;
            continue;
        };
        let start = i;
        i += 1;
        while matches!(&tags.get(i), Some(Tag::Inside(l)) if l == label) {
            i += 1;
        }
        spans.push(EntitySpan {
            start,
            end: i,
            label: label.clone(),
            surface: join_tokens(&sentence.tokens()[start..i]),
        });
    }
    Ok(spans)
}

/// Inverse of [`extract_spans`]: renders spans as IOB2 tags over `length` tokens.
///
/// Spans must be sorted by start and must not overlap.
pub fn spans_to_tags(spans: &[EntitySpan], length: usize) -> Result<Vec<Tag>, SpanError> {
    let mut tags = vec![Tag::Outside; length];
    let mut covered_to = 0;
    for span in spans {
        if span.start >= span.end || span.end > length {
            return Err(SpanError::SpanOutOfRange {
                start: span.start,
                end: span.end,
                length,
            });
        }
        if span.start < covered_to {
            return Err(SpanError::OverlappingSpans {
                start: span.start,
                end: span.end,
            });
        }
        tags[span.start] = Tag::Begin(span.label.clone());
        for tag in &mut tags[span.start + 1..span.end] {
            *tag = Tag::Inside(span.label.clone());
        }
        covered_to = span.end;
    }
    Ok(tags)
}
