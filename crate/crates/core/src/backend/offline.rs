use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Backend;
use crate::error::{BackendError, DictionaryError};
use crate::placeholder::find_placeholders;

/// Returns every text unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl Backend for IdentityBackend {
    fn id(&self) -> &str {
        "identity"
    }

    fn translate(&self, texts: &[String], _source: &str, _target: &str) -> Result<Vec<String>, BackendError> {
        Ok(texts.to_vec())
    }
}

/// Word-by-word lookup in a fixed table; unknown words pass through.
///
/// Placeholders are never looked up, even when they contain inner spaces.
/// An entry with an empty target deletes the word.
#[derive(Debug, Clone, Default)]
pub struct DictionaryBackend {
    id: String,
    entries: HashMap<String, String>,
}

impl DictionaryBackend {
    pub fn from_entries<I, S, T>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        DictionaryBackend {
            id: "dict".to_string(),
            entries: entries.into_iter().map(|(s, t)| (s.into(), t.into())).collect(),
        }
    }

    /// Parses `source<TAB>target` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self, DictionaryError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (source, target) = line
                .split_once('\t')
                .ok_or(DictionaryError::MalformedLine { line: i + 1 })?;
            if source.is_empty() {
                return Err(DictionaryError::MalformedLine { line: i + 1 });
            }
            entries.insert(source.to_string(), target.trim_end_matches('\r').to_string());
        }
        Ok(DictionaryBackend {
            id: "dict".to_string(),
            entries,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DictionaryError> {
        let path = path.as_ref();
        let mut backend = Self::parse_tsv(&fs::read_to_string(path)?)?;
        backend.id = format!("dict:{}", path.display());
        Ok(backend)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn translate_segment(&self, segment: &str, out: &mut String) {
        let mut word_start = None;
        for (i, c) in segment.char_indices() {
            if c.is_whitespace() {
                if let Some(start) = word_start.take() {
                    self.push_word(&segment[start..i], out);
                }
                out.push(c);
            } else if word_start.is_none() {
                word_start = Some(i);
            }
        }
        if let Some(start) = word_start {
            self.push_word(&segment[start..], out);
        }
    }

    fn push_word(&self, word: &str, out: &mut String) {
        out.push_str(self.entries.get(word).map_or(word, String::as_str));
    }

    pub fn translate_text(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut cursor = 0;
        for hit in find_placeholders(text) {
            self.translate_segment(&text[cursor..hit.byte_range.start], &mut out);
            out.push_str(&hit.matched_text);
            cursor = hit.byte_range.end;
        }
        self.translate_segment(&text[cursor..], &mut out);
        out
    }
}

impl Backend for DictionaryBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, texts: &[String], _source: &str, _target: &str) -> Result<Vec<String>, BackendError> {
        Ok(texts.iter().map(|t| self.translate_text(t)).collect())
    }
}

/// How [`ScramblerBackend`] reorders the words of a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrambleMode {
    Reverse,
    /// Moves the first `k` words (mod length) to the end.
    Rotate(usize),
    /// A pseudo-random permutation that depends only on the seed and word count.
    Shuffle(u64),
}

/// Reorders whitespace-separated words and rejoins them with single spaces.
#[derive(Debug, Clone)]
pub struct ScramblerBackend {
    mode: ScrambleMode,
    id: String,
}

impl ScramblerBackend {
    pub fn new(mode: ScrambleMode) -> Self {
        let id = match mode {
            ScrambleMode::Reverse => "scramble:reverse".to_string(),
            ScrambleMode::Rotate(k) => format!("scramble:rotate:{k}"),
            ScrambleMode::Shuffle(seed) => format!("scramble:{seed}"),
        };
        ScramblerBackend { mode, id }
    }

    pub fn mode(&self) -> ScrambleMode {
        self.mode
    }

    /// Output word `j` is input word `perm[j]`.
    pub fn permutation(&self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        match self.mode {
            ScrambleMode::Reverse => perm.reverse(),
            ScrambleMode::Rotate(k) if n > 0 => perm.rotate_left(k % n),
            ScrambleMode::Rotate(_) => {}
            ScrambleMode::Shuffle(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                perm.shuffle(&mut rng);
            }
        }
        perm
    }

    pub fn scramble(&self, text: &str) -> String {
        let words: Vec<&str> = text.split_whitespace().collect();
        self.permutation(words.len())
            .into_iter()
            .map(|i| words[i])
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Backend for ScramblerBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn translate(&self, texts: &[String], _source: &str, _target: &str) -> Result<Vec<String>, BackendError> {
        Ok(texts.iter().map(|t| self.scramble(t)).collect())
    }
}
