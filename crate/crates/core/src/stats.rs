//! Corpus statistics: sentence counts, average sentence length and entity
//! label counts per split, plus target-minus-source deltas.
//!
//! Averages are kept as exact ratios (total tokens over sentences) and only
//! rounded for display, half away from zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::conll::{DatasetSplit, Tag};
use crate::spans::extract_spans;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitStats {
    pub split_name: String,
    pub n_sentences: usize,
    pub total_tokens: usize,
    pub label_counts: BTreeMap<String, usize>,
}

/// `numerator / denominator` rounded half away from zero, for non-negative inputs.
fn round_ratio(numerator: u128, denominator: u128) -> u128 {
    (2 * numerator + denominator) / (2 * denominator)
}

impl SplitStats {
    pub fn empty(split_name: impl Into<String>) -> Self {
        SplitStats {
            split_name: split_name.into(),
            n_sentences: 0,
            total_tokens: 0,
            label_counts: BTreeMap::new(),
        }
    }

    pub fn avg_tokens(&self) -> Option<f64> {
        (self.n_sentences > 0).then(|| self.total_tokens as f64 / self.n_sentences as f64)
    }

    /// Average tokens per sentence with two decimals, e.g. `"9.38"`.
    pub fn avg_tokens_2dp(&self) -> Option<String> {
        if self.n_sentences == 0 {
            return None;
        }
        let hundredths = round_ratio(self.total_tokens as u128 * 100, self.n_sentences as u128);
        Some(format!("{}.{:02}", hundredths / 100, hundredths % 100))
    }

    pub fn avg_tokens_rounded(&self) -> Option<i64> {
        if self.n_sentences == 0 {
            return None;
        }
        Some(round_ratio(self.total_tokens as u128, self.n_sentences as u128) as i64)
    }

    pub fn entity_count(&self) -> usize {
        self.label_counts.values().sum()
    }

    /// Adds another split's counts into this one.
    pub fn absorb(&mut self, other: &SplitStats) {
        self.n_sentences += other.n_sentences;
        self.total_tokens += other.total_tokens;
        for (label, n) in &other.label_counts {
            *self.label_counts.entry(label.clone()).or_default() += n;
        }
    }
}

pub fn split_stats(split: &DatasetSplit) -> SplitStats {
    let mut stats = SplitStats::empty(split.name.as_str());
    for sentence in split.sentences() {
        stats.n_sentences += 1;
        stats.total_tokens += sentence.len();
        match extract_spans(sentence) {
            Ok(spans) => {
                for span in spans {
                    *stats.label_counts.entry(span.label).or_default() += 1;
                }
            }
            // not valid IOB2: count one entity per B- tag
            Err(_) => {
                for tag in sentence.tags() {
                    if let Tag::Begin(label) = tag {
                        *stats.label_counts.entry(label.clone()).or_default() += 1;
                    }
                }
            }
        }
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaStats {
    pub split_name: String,
    pub n_sentences: i64,
    /// `None` when either side has no sentences.
    pub avg_tokens_rounded: Option<i64>,
}

/// Componentwise `target - source`.
pub fn delta_stats(source: &SplitStats, target: &SplitStats) -> DeltaStats {
    DeltaStats {
        split_name: target.split_name.clone(),
        n_sentences: target.n_sentences as i64 - source.n_sentences as i64,
        avg_tokens_rounded: match (source.avg_tokens_rounded(), target.avg_tokens_rounded()) {
            (Some(s), Some(t)) => Some(t - s),
            _ => None,
        },
    }
}

/// Statistics for every split of one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub name: String,
    pub splits: Vec<SplitStats>,
    /// All splits pooled.
    pub overall: SplitStats,
}

impl CorpusStats {
    pub fn new(name: impl Into<String>, splits: Vec<SplitStats>) -> Self {
        let mut overall = SplitStats::empty("all");
        for split in &splits {
            overall.absorb(split);
        }
        CorpusStats {
            name: name.into(),
            splits,
            overall,
        }
    }

    pub fn split(&self, name: &str) -> Option<&SplitStats> {
        self.splits.iter().find(|s| s.split_name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusDelta {
    pub source: String,
    pub target: String,
    pub splits: Vec<DeltaStats>,
    pub overall: DeltaStats,
}

pub fn corpus_delta(source: &CorpusStats, target: &CorpusStats) -> CorpusDelta {
    let empty = SplitStats::empty("");
    let mut splits = Vec::new();
    for t in &target.splits {
        let s = source.split(&t.split_name).unwrap_or(&empty);
        splits.push(delta_stats(s, t));
    }
    for s in &source.splits {
        if target.split(&s.split_name).is_none() {
            splits.push(delta_stats(s, &SplitStats::empty(s.split_name.clone())));
        }
    }
    CorpusDelta {
        source: source.name.clone(),
        target: target.name.clone(),
        splits,
        overall: delta_stats(&source.overall, &target.overall),
    }
}

fn split_order(corpora: &[&CorpusStats]) -> Vec<String> {
    let mut names: Vec<String> = vec!["train".into(), "dev".into(), "test".into()];
    for corpus in corpora {
        for split in &corpus.splits {
            if !names.contains(&split.split_name) {
                names.push(split.split_name.clone());
            }
        }
    }
    names.retain(|name| corpora.iter().any(|c| c.split(name).is_some()));
    names
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Aligns cells into columns: the first `text_columns` left-aligned, the rest right-aligned.
fn render_rows(rows: &[Vec<String>], text_columns: usize) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c > 0 {
                line.push_str("  ");
            }
            if c < text_columns {
                line.push_str(cell);
                line.extend(std::iter::repeat_n(' ', pad));
            } else {
                line.extend(std::iter::repeat_n(' ', pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Renders the instance-count table: one row per corpus, then one delta row
/// per target against `source`, followed by a per-split detail block.
pub fn render_table(source: &CorpusStats, targets: &[CorpusStats]) -> String {
    let mut all: Vec<&CorpusStats> = vec![source];
    all.extend(targets);
    let order = split_order(&all);

    let mut header = vec!["dataset".to_string()];
    header.extend(order.iter().cloned());
    header.push("avg".to_string());

    let corpus_row = |corpus: &CorpusStats| {
        let mut row = vec![corpus.name.clone()];
        for name in &order {
            row.push(opt(corpus.split(name).map(|s| s.n_sentences)));
        }
        row.push(opt(corpus.overall.avg_tokens_rounded()));
        row
    };

    let mut rows = vec![header, corpus_row(source)];
    for target in targets {
        rows.push(corpus_row(target));
        let delta = corpus_delta(source, target);
        let mut row = vec![format!("Δ {}-{}", target.name, source.name)];
        for name in &order {
            let d = delta.splits.iter().find(|d| &d.split_name == name);
            row.push(opt(d.map(|d| d.n_sentences)));
        }
        row.push(opt(delta.overall.avg_tokens_rounded));
        rows.push(row);
    }

    let mut out = render_rows(&rows, 1);
    out.push('\n');

    let mut detail = vec![vec![
        "corpus".to_string(),
        "split".to_string(),
        "sentences".to_string(),
        "tokens".to_string(),
        "avg".to_string(),
        "entities".to_string(),
    ]];
    for corpus in &all {
        for split in corpus.splits.iter().chain(std::iter::once(&corpus.overall)) {
            detail.push(vec![
                corpus.name.clone(),
                split.split_name.clone(),
                split.n_sentences.to_string(),
                split.total_tokens.to_string(),
                opt(split.avg_tokens_2dp()),
                split.entity_count().to_string(),
            ]);
        }
    }
    out.push_str(&render_rows(&detail, 2));
    out
}

/// Entity counts per label, one `label count` line each.
pub fn render_labels(stats: &SplitStats) -> String {
    let mut out = String::new();
    for (label, n) in &stats.label_counts {
        let _ = writeln!(out, "{label} {n}");
    }
    out
}
