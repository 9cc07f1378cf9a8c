//! Token-per-line NER corpora: parsing, serialization and IOB scheme checks.
//!
//! A document is a sequence of lines. Blank lines separate sentences, every
//! other line holds a token and a tag in whitespace-separated columns.
//! `-DOCSTART-` lines are skipped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConllError, TokenError};

/// A single whitespace-free, non-empty token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, TokenError> {
        let text = text.into();
        if text.is_empty() {
            return Err(TokenError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenError::ContainsWhitespace(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = TokenError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(token: Token) -> Self {
        token.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An IOB tag: `O`, `B-<label>` or `I-<label>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn begin(label: impl Into<String>) -> Self {
        Tag::Begin(label.into())
    }

    pub fn inside(label: impl Into<String>) -> Self {
        Tag::Inside(label.into())
    }

    /// The entity class, or `None` for `O`.
    pub fn label(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(label) | Tag::Inside(label) => Some(label),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::Outside)
    }
}

impl FromStr for Tag {
    type Err = ConllError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let malformed = || ConllError::MalformedTag {
            line: 0,
            tag: raw.to_string(),
        };
        if raw == "O" {
            return Ok(Tag::Outside);
        }
        let (prefix, label) = raw.split_once('-').ok_or_else(malformed)?;
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(malformed());
        }
        match prefix {
            "B" => Ok(Tag::Begin(label.to_string())),
            "I" => Ok(Tag::Inside(label.to_string())),
            _ => Err(malformed()),
        }
    }
}

impl TryFrom<String> for Tag {
    type Error = ConllError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Tag> for String {
    fn from(tag: Tag) -> Self {
        tag.to_string()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str("O"),
            Tag::Begin(label) => write!(f, "B-{label}"),
            Tag::Inside(label) => write!(f, "I-{label}"),
        }
    }
}

/// Parallel token and tag arrays for one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    tokens: Vec<Token>,
    tags: Vec<Tag>,
    origin_index: usize,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<Token>, tags: Vec<Tag>, origin_index: usize) -> Result<Self, ConllError> {
        if tokens.len() != tags.len() {
            return Err(ConllError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        if tokens.is_empty() {
            return Err(ConllError::EmptySentence);
        }
        Ok(TaggedSentence {
            tokens,
            tags,
            origin_index,
        })
    }

    /// Builds a sentence from string slices. Handy in tests and fixtures.
    pub fn from_strs(tokens: &[&str], tags: &[&str], origin_index: usize) -> Result<Self, ConllError> {
        let tokens = tokens.iter().map(|t| Token::new(*t)).collect::<Result<Vec<_>, _>>()?;
        let tags = tags.iter().map(|t| t.parse()).collect::<Result<Vec<_>, _>>()?;
        TaggedSentence::new(tokens, tags, origin_index)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn with_origin_index(mut self, origin_index: usize) -> Self {
        self.origin_index = origin_index;
        self
    }

    pub fn with_tags(self, tags: Vec<Tag>) -> Result<Self, ConllError> {
        TaggedSentence::new(self.tokens, tags, self.origin_index)
    }

    /// Tokens joined with single spaces.
    pub fn text(&self) -> String {
        join_tokens(&self.tokens)
    }
}

pub(crate) fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(token.as_str());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitName {
    Train,
    Dev,
    Test,
    Other(String),
}

impl SplitName {
    pub fn as_str(&self) -> &str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
            SplitName::Other(name) => name,
        }
    }
}

impl From<&str> for SplitName {
    fn from(name: &str) -> Self {
        match name {
            "train" => SplitName::Train,
            "dev" => SplitName::Dev,
            "test" => SplitName::Test,
            other => SplitName::Other(other.to_string()),
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for SplitName {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SplitName {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Ok(SplitName::from(name.as_str()))
    }
}

/// An ordered partition of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: SplitName,
    sentences: Vec<TaggedSentence>,
}

impl DatasetSplit {
    /// Fails if `origin_index` values are not strictly ascending.
    pub fn new(name: SplitName, sentences: Vec<TaggedSentence>) -> Result<Self, ConllError> {
        for pair in sentences.windows(2) {
            if pair[0].origin_index >= pair[1].origin_index {
                return Err(ConllError::OriginOrder {
                    previous: pair[0].origin_index,
                    next: pair[1].origin_index,
                });
            }
        }
        Ok(DatasetSplit { name, sentences })
    }

    pub fn sentences(&self) -> &[TaggedSentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<TaggedSentence> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Copy of the split with origin indices renumbered `0..n`.
    pub fn renumbered(&self) -> DatasetSplit {
        DatasetSplit {
            name: self.name.clone(),
            sentences: self
                .sentences
                .iter()
                .enumerate()
                .map(|(i, s)| s.clone().with_origin_index(i))
                .collect(),
        }
    }
}

/// Which whitespace-separated field of a line to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    First,
    Last,
    Index(usize),
}

impl Column {
    fn pick<'a>(&self, fields: &[&'a str]) -> Option<&'a str> {
        match self {
            Column::First => fields.first().copied(),
            Column::Last => fields.last().copied(),
            Column::Index(i) => fields.get(*i).copied(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnPolicy {
    pub token_field: Column,
    pub tag_field: Column,
}

impl Default for ColumnPolicy {
    fn default() -> Self {
        ColumnPolicy {
            token_field: Column::First,
            tag_field: Column::Last,
        }
    }
}

/// Side information collected while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseInfo {
    /// 1-based line number of every token, per sentence.
    pub token_lines: Vec<Vec<usize>>,
    /// Blank-delimited blocks that produced no tokens (e.g. only `-DOCSTART-`).
    pub dropped_empty: usize,
}

const DOCSTART: &str = "-DOCSTART-";

/// Parses a CoNLL-style document into a split.
pub fn parse_conll(text: &str, name: SplitName, policy: ColumnPolicy) -> Result<DatasetSplit, ConllError> {
    parse_conll_with_info(text, name, policy).map(|(split, _)| split)
}

/// Like [`parse_conll`], also returning per-token line numbers.
pub fn parse_conll_with_info(
    text: &str,
    name: SplitName,
    policy: ColumnPolicy,
) -> Result<(DatasetSplit, ParseInfo), ConllError> {
    let mut sentences = Vec::new();
    let mut info = ParseInfo::default();

    let mut block = Block::default();

    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            flush_block(&mut block, &mut sentences, &mut info);
            continue;
        }
        block.has_lines = true;
        if fields[0] == DOCSTART {
            continue;
        }
        if fields.len() < 2 {
            return Err(ConllError::MalformedLine {
                line: line_no,
                content: line.trim_end().to_string(),
            });
        }
        let (token, tag) = match (policy.token_field.pick(&fields), policy.tag_field.pick(&fields)) {
            (Some(token), Some(tag)) => (token, tag),
            _ => {
                return Err(ConllError::MalformedLine {
                    line: line_no,
                    content: line.trim_end().to_string(),
                })
            }
        };
        let tag: Tag = tag.parse().map_err(|_| ConllError::MalformedTag {
            line: line_no,
            tag: tag.to_string(),
        })?;
        // split_whitespace guarantees a non-empty, whitespace-free field
        block.tokens.push(Token(token.to_string()));
        block.tags.push(tag);
        block.lines.push(line_no);
    }
    flush_block(&mut block, &mut sentences, &mut info);

    Ok((DatasetSplit { name, sentences }, info))
}

#[derive(Default)]
struct Block {
    tokens: Vec<Token>,
    tags: Vec<Tag>,
    lines: Vec<usize>,
    has_lines: bool,
}

fn flush_block(block: &mut Block, sentences: &mut Vec<TaggedSentence>, info: &mut ParseInfo) {
    let block = std::mem::take(block);
    if block.tokens.is_empty() {
        if block.has_lines {
            info.dropped_empty += 1;
        }
        return;
    }
    let origin_index = sentences.len();
    sentences.push(TaggedSentence {
        tokens: block.tokens,
        tags: block.tags,
        origin_index,
    });
    info.token_lines.push(block.lines);
}

/// Writes one `token tag` line per token and a blank line after every sentence.
pub fn serialize_conll(split: &DatasetSplit) -> String {
    let mut out = String::new();
    for sentence in &split.sentences {
        for (token, tag) in sentence.tokens.iter().zip(&sentence.tags) {
            out.push_str(token.as_str());
            out.push(' ');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// An `I-` tag that does not continue an entity of the same label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub tag: Tag,
    pub previous: Option<Tag>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.previous {
            Some(prev) => write!(f, "token {}: {} follows {}", self.index, self.tag, prev),
            None => write!(f, "token {}: {} starts the sentence", self.index, self.tag),
        }
    }
}

/// Checks the IOB2 rule on a tag sequence.
pub fn validate_tags(tags: &[Tag]) -> Vec<Violation> {
    let mut violations = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        if let Tag::Inside(label) = tag {
            let previous = i.checked_sub(1).map(|p| &tags[p]);
            let continues = matches!(previous, Some(Tag::Begin(l)) | Some(Tag::Inside(l)) if l == label);
            if !continues {
                violations.push(Violation {
                    index: i,
                    tag: tag.clone(),
                    previous: previous.cloned(),
                });
            }
        }
    }
    violations
}

pub fn validate_scheme(sentence: &TaggedSentence) -> Vec<Violation> {
    validate_tags(&sentence.tags)
}

/// Rewrites IOB1 tags so that every entity starts with `B-`.
pub fn normalize_iob1_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut out = Vec::with_capacity(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let normalized = match tag {
            Tag::Inside(label) => {
                let continues = i > 0 && tags[i - 1].label() == Some(label.as_str());
                if continues {
                    tag.clone()
                } else {
                    Tag::Begin(label.clone())
                }
            }
            other => other.clone(),
        };
        out.push(normalized);
    }
    out
}

pub fn normalize_iob1_to_iob2(sentence: &TaggedSentence) -> TaggedSentence {
    TaggedSentence {
        tokens: sentence.tokens.clone(),
        tags: normalize_iob1_tags(&sentence.tags),
        origin_index: sentence.origin_index,
    }
}

pub fn normalize_split_iob1_to_iob2(split: &DatasetSplit) -> DatasetSplit {
    DatasetSplit {
        name: split.name.clone(),
        sentences: split.sentences.iter().map(normalize_iob1_to_iob2).collect(),
    }
}
