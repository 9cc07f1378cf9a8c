//! Entity masking with indexed placeholders and index-aligned reinsertion.
//!
//! Each entity span of a sentence is replaced by `[*i*]`, where `i` is the
//! 0-based position of the entity in order of appearance. The masked
//! template and the entity surfaces are translated independently; the
//! translated entities are then put back wherever placeholder `i` ended up
//! in the translated template, regardless of how the translation reordered
//! them.
//!
//! Translation engines tend to mangle bracketed markup, so detection is
//! tolerant: whitespace is allowed between every part of the placeholder,
//! and Arabic-Indic (U+0660..U+0669) as well as Extended Arabic-Indic
//! (U+06F0..U+06F9) digits are read as their ASCII values.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::conll::{validate_tags, Tag, TaggedSentence, Token};
use crate::error::{CodecError, SpanError};
use crate::spans::{extract_spans, EntitySpan};

/// The canonical placeholder for entity `index`.
pub fn placeholder(index: usize) -> String {
    format!("[*{index}*]")
}

/// A sentence with its entities replaced by placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSentence {
    pub template: String,
    /// Entity `i` belongs to placeholder `[*i*]`.
    pub entities: Vec<EntitySpan>,
}

impl MaskedSentence {
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.surface.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.label.as_str())
    }
}

/// A placeholder found in a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceholderHit {
    pub index: usize,
    /// Half-open range in code points.
    pub char_range: Range<usize>,
    /// Half-open range in bytes, for slicing the scanned `&str`.
    pub byte_range: Range<usize>,
    pub matched_text: String,
}

/// Masks every entity of `sentence` and joins the result with single spaces.
pub fn mask(sentence: &TaggedSentence) -> Result<MaskedSentence, CodecError> {
    let violations = validate_tags(sentence.tags());
    if let Some(first) = violations.first() {
        return Err(SpanError::InvalidScheme {
            violations: violations.len(),
            first: first.index,
        }
        .into());
    }

    // Anything in the source that already reads as a placeholder, alone or
    // across token boundaries, would be confused with ours after translation.
    let source = sentence.text();
    if let Some(hit) = find_placeholders(&source).into_iter().next() {
        return Err(CodecError::PatternCollision(hit.matched_text));
    }

    let entities = extract_spans(sentence)?;
    let tokens = sentence.tokens();
    let mut pieces: Vec<String> = Vec::with_capacity(tokens.len());
    let mut next = entities.iter().enumerate().peekable();
    let mut i = 0;
    while i < tokens.len() {
        match next.peek() {
            Some((index, span)) if span.start == i => {
                pieces.push(placeholder(*index));
                i = span.end;
                next.next();
            }
            _ => {
                pieces.push(tokens[i].as_str().to_string());
                i += 1;
            }
        }
    }
    let template = pieces.join(" ");

    let hits = find_placeholders(&template);
    let in_order = hits.len() == entities.len() && hits.iter().enumerate().all(|(i, h)| h.index == i);
    if !in_order {
        let culprit = hits
            .iter()
            .enumerate()
            .find(|(i, h)| h.index != *i || h.matched_text != placeholder(*i))
            .map(|(_, h)| h.matched_text.clone())
            .unwrap_or_else(|| template.clone());
        return Err(CodecError::PatternCollision(culprit));
    }

    Ok(MaskedSentence { template, entities })
}

fn ascii_digit(c: char) -> Option<u32> {
    match c {
        '0'..='9' => Some(c as u32 - '0' as u32),
        '\u{0660}'..='\u{0669}' => Some(c as u32 - 0x0660),
        '\u{06F0}'..='\u{06F9}' => Some(c as u32 - 0x06F0),
        _ => None,
    }
}

struct Scanner<'a> {
    chars: &'a [(usize, char)],
    pos: usize,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn eat(&mut self, want: char) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn skip_whitespace(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    /// Digits as a decimal index; `None` if absent or too large.
    fn number(&mut self) -> Option<usize> {
        let mut value: Option<usize> = None;
        while let Some(d) = self.peek().and_then(ascii_digit) {
            let acc = value.unwrap_or(0);
            value = Some(acc.checked_mul(10)?.checked_add(d as usize)?);
            self.pos += 1;
        }
        value
    }

    /// Tries to match one placeholder starting at the current position.
    fn placeholder(&mut self) -> Option<usize> {
        if !self.eat('[') {
            return None;
        }
        self.skip_whitespace();
        if !self.eat('*') {
            return None;
        }
        self.skip_whitespace();
        let index = self.number()?;
        self.skip_whitespace();
        if !self.eat('*') {
            return None;
        }
        self.skip_whitespace();
        if !self.eat(']') {
            return None;
        }
        Some(index)
    }
}

/// Scans `text` left to right for non-overlapping placeholders.
pub fn find_placeholders(text: &str) -> Vec<PlaceholderHit> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |pos: usize| chars.get(pos).map_or(text.len(), |&(b, _)| b);

    let mut hits = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        if chars[start].1 != '[' {
            start += 1;
            continue;
        }
        let mut scanner = Scanner {
            chars: &chars,
            pos: start,
        };
        match scanner.placeholder() {
            Some(index) => {
                let end = scanner.pos;
                let byte_range = byte_at(start)..byte_at(end);
                hits.push(PlaceholderHit {
                    index,
                    char_range: start..end,
                    matched_text: text[byte_range.clone()].to_string(),
                    byte_range,
                });
                start = end;
            }
            None => start += 1,
        }
    }
    hits
}

/// Why a translated template failed the placeholder count check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountFailure {
    PlaceholderCountMismatch,
    DuplicatePlaceholder,
}

impl fmt::Display for CountFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountFailure::PlaceholderCountMismatch => "placeholder-count-mismatch",
            CountFailure::DuplicatePlaceholder => "duplicate-placeholder",
        })
    }
}

/// Passes iff the translated template holds each index `0..n` exactly once.
///
/// A repeated index is reported as a duplicate even when other indices are
/// also missing.
pub fn count_check(masked: &MaskedSentence, translated_template: &str) -> Result<(), CountFailure> {
    check_indices(&find_placeholders(translated_template), masked.entities.len())
}

fn check_indices(hits: &[PlaceholderHit], expected: usize) -> Result<(), CountFailure> {
    let mut seen = BTreeSet::new();
    for hit in hits {
        if !seen.insert(hit.index) {
            return Err(CountFailure::DuplicatePlaceholder);
        }
    }
    let complete = seen.len() == expected && seen.iter().copied().eq(0..expected);
    if complete {
        Ok(())
    } else {
        Err(CountFailure::PlaceholderCountMismatch)
    }
}

/// Rebuilds a tagged sentence from a translated template and translated entities.
///
/// The template is split on whitespace with every placeholder treated as a
/// token of its own, so `[*0*],` yields the entity followed by `,`. Entity
/// `i` replaces placeholder `i` and is tagged `B-label_i I-label_i*`; every
/// other token is tagged `O`. The result has `origin_index` 0.
pub fn unmask<E, L>(
    translated_template: &str,
    translated_entities: &[E],
    labels: &[L],
) -> Result<TaggedSentence, CodecError>
where
    E: AsRef<str>,
    L: AsRef<str>,
{
    if translated_entities.len() != labels.len() {
        return Err(CodecError::LabelCountMismatch {
            entities: translated_entities.len(),
            labels: labels.len(),
        });
    }
    for (i, entity) in translated_entities.iter().enumerate() {
        if entity.as_ref().trim().is_empty() {
            return Err(CodecError::EmptyEntityTranslation(i));
        }
    }

    let hits = find_placeholders(translated_template);
    let mut used = vec![false; translated_entities.len()];
    for hit in &hits {
        match used.get_mut(hit.index) {
            None => {
                return Err(CodecError::UnknownIndex {
                    index: hit.index,
                    entities: translated_entities.len(),
                })
            }
            Some(true) => return Err(CodecError::DuplicateIndex(hit.index)),
            Some(slot) => *slot = true,
        }
    }
    if let Some(missing) = used.iter().position(|u| !u) {
        return Err(CodecError::MissingIndex(missing));
    }

    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let push_plain = |segment: &str, tokens: &mut Vec<Token>, tags: &mut Vec<Tag>| {
        for word in segment.split_whitespace() {
            tokens.push(Token::new(word).expect("split_whitespace yields tokens"));
            tags.push(Tag::Outside);
        }
    };

    let mut cursor = 0;
    for hit in &hits {
        push_plain(
            &translated_template[cursor..hit.byte_range.start],
            &mut tokens,
            &mut tags,
        );
        let label = labels[hit.index].as_ref();
        for (k, word) in translated_entities[hit.index].as_ref().split_whitespace().enumerate() {
            tokens.push(Token::new(word).expect("split_whitespace yields tokens"));
            tags.push(if k == 0 { Tag::begin(label) } else { Tag::inside(label) });
        }
        cursor = hit.byte_range.end;
    }
    push_plain(&translated_template[cursor..], &mut tokens, &mut tags);

    Ok(TaggedSentence::new(tokens, tags, 0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sentence(tokens: &[&str], tags: &[&str]) -> TaggedSentence {
        TaggedSentence::from_strs(tokens, tags, 0).unwrap()
    }

    #[test]
    fn masks_entities_in_order() {
        let s = sentence(&["John", "lives", "in", "Berlin"], &["B-PER", "O", "O", "B-LOC"]);
        let masked = mask(&s).unwrap();
        assert_eq!(masked.template, "[*0*] lives in [*1*]");
        assert_eq!(masked.labels().collect::<Vec<_>>(), ["PER", "LOC"]);
        assert_eq!(masked.surfaces().collect::<Vec<_>>(), ["John", "Berlin"]);
    }

    #[test]
    fn masks_zero_and_full_entity_sentences() {
        let masked = mask(&sentence(&["a", "b"], &["O", "O"])).unwrap();
        assert_eq!(masked.template, "a b");
        assert!(masked.entities.is_empty());

        let masked = mask(&sentence(&["New", "York"], &["B-LOC", "I-LOC"])).unwrap();
        assert_eq!(masked.template, "[*0*]");
        assert_eq!(masked.entities[0].surface, "New York");
    }

    #[test]
    fn multi_token_entities_collapse_to_one_placeholder() {
        let s = sentence(
            &["The", "New", "York", "Times", "met", "Ada", "Lovelace"],
            &["O", "B-ORG", "I-ORG", "I-ORG", "O", "B-PER", "I-PER"],
        );
        assert_eq!(mask(&s).unwrap().template, "The [*0*] met [*1*]");
    }

    #[test]
    fn source_placeholder_is_a_collision() {
        let s = sentence(&["see", "[*0*]"], &["O", "O"]);
        assert!(matches!(mask(&s), Err(CodecError::PatternCollision(t)) if t == "[*0*]"));

        // spread over several tokens
        let s = sentence(&["[*", "3", "*]"], &["O", "O", "O"]);
        assert!(matches!(mask(&s), Err(CodecError::PatternCollision(_))));

        // inside an entity surface
        let s = sentence(&["x", "[*1*]"], &["B-PER", "I-PER"]);
        assert!(matches!(mask(&s), Err(CodecError::PatternCollision(_))));
    }

    #[test]
    fn mask_rejects_invalid_scheme() {
        let s = sentence(&["a", "b"], &["O", "I-PER"]);
        assert!(matches!(
            mask(&s),
            Err(CodecError::Span(SpanError::InvalidScheme { .. }))
        ));
    }

    #[test]
    fn finds_exact_placeholders() {
        let hits = find_placeholders("[*0*] x [*1*]");
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].index, 0);
        assert_eq!(hits[0].char_range, 0..5);
        assert_eq!(hits[0].matched_text, "[*0*]");
        assert_eq!(hits[1].index, 1);
        assert_eq!(hits[1].char_range, 8..13);
        assert!(find_placeholders("plain text").is_empty());
    }

    #[test]
    fn finds_mangled_placeholder() {
        let hits = find_placeholders("[* \u{06F1} *]");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].index, 1);
        assert_eq!(hits[0].char_range, 0..7);
    }

    #[test]
    fn code_point_ranges_differ_from_bytes() {
        let text = "سلام [*\u{0662}*]";
        let hits = find_placeholders(text);
        assert_eq!(hits[0].index, 2);
        assert_eq!(hits[0].char_range, 5..10);
        assert_eq!(&text[hits[0].byte_range.clone()], "[*\u{0662}*]");
    }

    #[test]
    fn nested_bracket_resyncs() {
        let hits = find_placeholders("[[*4*]]");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].index, 4);
        assert_eq!(hits[0].char_range, 1..6);
    }

    #[test]
    fn huge_index_is_not_a_hit() {
        assert!(find_placeholders("[*99999999999999999999999999*]").is_empty());
    }

    #[test]
    fn unmask_follows_indices() {
        let out = unmask("[*1*] x [*0*]", &["aa", "bb cc"], &["PER", "LOC"]).unwrap();
        assert_eq!(out.text(), "bb cc x aa");
        let tags: Vec<String> = out.tags().iter().map(Tag::to_string).collect();
        assert_eq!(tags, ["B-LOC", "I-LOC", "O", "B-PER"]);
    }

    #[test]
    fn unmask_without_entities() {
        let out = unmask::<&str, &str>("a b", &[], &[]).unwrap();
        assert_eq!(out.text(), "a b");
        assert!(out.tags().iter().all(Tag::is_outside));
    }

    #[test]
    fn unmask_separates_glued_placeholders() {
        let out = unmask("«[*0*]»,[* ۱ *].", &["Ali", "Tehran"], &["PER", "LOC"]).unwrap();
        assert_eq!(out.text(), "« Ali », Tehran .");
        let tags: Vec<String> = out.tags().iter().map(Tag::to_string).collect();
        assert_eq!(tags, ["O", "B-PER", "O", "B-LOC", "O"]);
    }

    #[test]
    fn unmask_errors() {
        assert_eq!(
            unmask("[*2*]", &["a"], &["X"]).unwrap_err(),
            CodecError::UnknownIndex { index: 2, entities: 1 }
        );
        assert_eq!(
            unmask("[*0*] [*0*]", &["a"], &["X"]).unwrap_err(),
            CodecError::DuplicateIndex(0)
        );
        assert_eq!(
            unmask("[*0*]", &[" \t"], &["X"]).unwrap_err(),
            CodecError::EmptyEntityTranslation(0)
        );
        assert_eq!(
            unmask("[*0*]", &["a", "b"], &["X", "Y"]).unwrap_err(),
            CodecError::MissingIndex(1)
        );
        assert!(matches!(
            unmask("[*0*]", &["a"], &["X", "Y"]),
            Err(CodecError::LabelCountMismatch { .. })
        ));
        assert!(matches!(
            unmask::<&str, &str>("  ", &[], &[]),
            Err(CodecError::Sentence(_))
        ));
    }

    #[test]
    fn identity_round_trip() {
        let s = sentence(
            &[
                "EU", "rejects", "German", "call", "to", "boycott", "British", "lamb", ".",
            ],
            &["B-ORG", "O", "B-MISC", "O", "O", "O", "B-MISC", "O", "O"],
        );
        let masked = mask(&s).unwrap();
        let surfaces: Vec<&str> = masked.surfaces().collect();
        let labels: Vec<&str> = masked.labels().collect();
        let out = unmask(&masked.template, &surfaces, &labels).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn count_check_examples() {
        let s = sentence(&["A", "and", "B"], &["B-PER", "O", "B-PER"]);
        let masked = mask(&s).unwrap();
        assert_eq!(count_check(&masked, "[*1*] y [*0*]"), Ok(()));
        assert_eq!(
            count_check(&masked, "[*0*] y"),
            Err(CountFailure::PlaceholderCountMismatch)
        );
        assert_eq!(
            count_check(&masked, "[*0*] [*1*] [*2*]"),
            Err(CountFailure::PlaceholderCountMismatch)
        );

        let one = mask(&sentence(&["A"], &["B-PER"])).unwrap();
        assert_eq!(
            count_check(&one, "[*0*] [*0*]"),
            Err(CountFailure::DuplicatePlaceholder)
        );
        assert_eq!(count_check(&one, "[* ۰ *]"), Ok(()));

        let none = mask(&sentence(&["a"], &["O"])).unwrap();
        assert_eq!(count_check(&none, "b"), Ok(()));
        assert_eq!(count_check(&none, "[*0*]"), Err(CountFailure::PlaceholderCountMismatch));
    }
}
