//! End-to-end projection of tagged sentences through a translation backend.
//!
//! For each sentence: check the tag scheme, mask its entities, translate
//! the template and every entity surface, check that the placeholders
//! survived, reinsert the translated entities and re-check the result. The
//! first stage that fails decides the exclusion reason.
//!
//! [`project_split`] runs the same stages over a whole split, but collects
//! every distinct text first so that each is translated once, in batches,
//! with bounded concurrency. Output order never depends on scheduling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendCounters};
use crate::conll::{validate_tags, DatasetSplit, TaggedSentence};
use crate::error::{BackendError, CodecError, PipelineError, SpanError};
use crate::placeholder::{count_check, mask, unmask, CountFailure, MaskedSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionReason {
    PatternCollision,
    PlaceholderCountMismatch,
    DuplicatePlaceholder,
    EmptyEntityTranslation,
    InvalidScheme,
    TokenTagMismatch,
    BackendFailure,
}

impl ExclusionReason {
    pub const ALL: [ExclusionReason; 7] = [
        ExclusionReason::PatternCollision,
        ExclusionReason::PlaceholderCountMismatch,
        ExclusionReason::DuplicatePlaceholder,
        ExclusionReason::EmptyEntityTranslation,
        ExclusionReason::InvalidScheme,
        ExclusionReason::TokenTagMismatch,
        ExclusionReason::BackendFailure,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExclusionReason::PatternCollision => "pattern-collision",
            ExclusionReason::PlaceholderCountMismatch => "placeholder-count-mismatch",
            ExclusionReason::DuplicatePlaceholder => "duplicate-placeholder",
            ExclusionReason::EmptyEntityTranslation => "empty-entity-translation",
            ExclusionReason::InvalidScheme => "invalid-scheme",
            ExclusionReason::TokenTagMismatch => "token-tag-mismatch",
            ExclusionReason::BackendFailure => "backend-failure",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<CountFailure> for ExclusionReason {
    fn from(failure: CountFailure) -> Self {
        match failure {
            CountFailure::PlaceholderCountMismatch => ExclusionReason::PlaceholderCountMismatch,
            CountFailure::DuplicatePlaceholder => ExclusionReason::DuplicatePlaceholder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Projected(TaggedSentence),
    Excluded {
        reason: ExclusionReason,
        detail: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionOutcome {
    pub origin_index: usize,
    pub result: Projection,
}

impl ProjectionOutcome {
    pub fn projected(&self) -> Option<&TaggedSentence> {
        match &self.result {
            Projection::Projected(sentence) => Some(sentence),
            Projection::Excluded { .. } => None,
        }
    }

    pub fn reason(&self) -> Option<ExclusionReason> {
        match &self.result {
            Projection::Projected(_) => None,
            Projection::Excluded { reason, .. } => Some(*reason),
        }
    }
}

/// One line of the exclusion report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionRecord {
    pub origin_index: usize,
    pub split: String,
    pub reason: ExclusionReason,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailurePolicy {
    /// Backend failures exclude the affected sentences.
    #[default]
    Lenient,
    /// Any backend failure aborts the run.
    Strict,
}

impl FromStr for FailurePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lenient" => Ok(FailurePolicy::Lenient),
            "strict" => Ok(FailurePolicy::Strict),
            other => Err(format!("unknown failure policy {other:?} (expected lenient or strict)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Languages {
    pub source: String,
    pub target: String,
}

impl Languages {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Languages {
            source: source.into(),
            target: target.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub languages: Languages,
    /// Maximum number of distinct texts per backend call.
    pub batch_size: usize,
    /// Maximum number of concurrent backend calls and worker threads.
    pub parallelism: usize,
    pub failure_policy: FailurePolicy,
}

impl PipelineConfig {
    pub fn new(languages: Languages) -> Self {
        PipelineConfig {
            languages,
            batch_size: 32,
            parallelism: 1,
            failure_policy: FailurePolicy::Lenient,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SplitReport {
    pub split: String,
    pub source: usize,
    pub projected: usize,
    pub excluded: usize,
    /// Blank-delimited blocks without tokens, dropped while parsing.
    pub dropped_empty: usize,
    pub reasons: BTreeMap<ExclusionReason, usize>,
}

impl SplitReport {
    /// Target minus source sentence count.
    pub fn delta(&self) -> i64 {
        self.projected as i64 - self.source as i64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub splits: Vec<SplitReport>,
    pub totals: BTreeMap<ExclusionReason, usize>,
    pub backend: BackendCounters,
    /// Distinct texts handed to the backend, cached or not.
    pub unique_texts: usize,
    #[serde(serialize_with = "serialize_millis")]
    pub duration: Duration,
}

fn serialize_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u128(d.as_millis())
}

impl RunReport {
    pub fn merge(&mut self, other: RunReport) {
        for (reason, n) in other.totals {
            *self.totals.entry(reason).or_default() += n;
        }
        self.splits.extend(other.splits);
        self.backend.backend_calls += other.backend.backend_calls;
        self.backend.texts_translated += other.backend.texts_translated;
        self.backend.cache_hits += other.backend.cache_hits;
        self.unique_texts += other.unique_texts;
        self.duration += other.duration;
    }

    pub fn excluded(&self) -> usize {
        self.splits.iter().map(|s| s.excluded).sum()
    }

    pub fn projected(&self) -> usize {
        self.splits.iter().map(|s| s.projected).sum()
    }

    /// Plain-text summary.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for split in &self.splits {
            out.push_str(&format!(
                "{}: {} source, {} projected, {} excluded (delta {})",
                split.split,
                split.source,
                split.projected,
                split.excluded,
                split.delta()
            ));
            if split.dropped_empty > 0 {
                out.push_str(&format!(", {} empty blocks dropped", split.dropped_empty));
            }
            out.push('\n');
            for (reason, n) in &split.reasons {
                out.push_str(&format!("  {reason}: {n}\n"));
            }
        }
        out.push_str(&format!(
            "backend: {} calls, {} texts translated, {} cache hits, {} unique texts\n",
            self.backend.backend_calls, self.backend.texts_translated, self.backend.cache_hits, self.unique_texts
        ));
        out.push_str(&format!("elapsed: {:.3}s\n", self.duration.as_secs_f64()));
        out
    }
}

struct Excluded {
    reason: ExclusionReason,
    detail: String,
}

impl Excluded {
    fn new(reason: ExclusionReason, detail: impl fmt::Display) -> Self {
        Excluded {
            reason,
            detail: detail.to_string(),
        }
    }
}

fn prepare(sentence: &TaggedSentence) -> Result<MaskedSentence, Excluded> {
    mask(sentence).map_err(|e| match e {
        CodecError::PatternCollision(_) => Excluded::new(ExclusionReason::PatternCollision, e),
        CodecError::Span(SpanError::InvalidScheme { .. }) => Excluded::new(ExclusionReason::InvalidScheme, e),
        other => Excluded::new(ExclusionReason::InvalidScheme, other),
    })
}

fn texts_for(masked: &MaskedSentence) -> impl Iterator<Item = &str> {
    std::iter::once(masked.template.as_str()).chain(masked.surfaces())
}

fn finish(
    masked: &MaskedSentence,
    translated_template: &str,
    translated_entities: &[String],
    origin_index: usize,
) -> Result<TaggedSentence, Excluded> {
    count_check(masked, translated_template)
        .map_err(|f| Excluded::new(f.into(), format!("translated template {translated_template:?}")))?;
    let labels: Vec<&str> = masked.labels().collect();
    let sentence = unmask(translated_template, translated_entities, &labels).map_err(|e| match e {
        CodecError::EmptyEntityTranslation(_) => Excluded::new(ExclusionReason::EmptyEntityTranslation, e),
        CodecError::DuplicateIndex(_) => Excluded::new(ExclusionReason::DuplicatePlaceholder, e),
        CodecError::UnknownIndex { .. } | CodecError::MissingIndex(_) => {
            Excluded::new(ExclusionReason::PlaceholderCountMismatch, e)
        }
        other => Excluded::new(ExclusionReason::TokenTagMismatch, other),
    })?;
    // unmask builds a consistent sentence by construction; re-check anyway
    // since this is the last gate before output
    if sentence.tokens().len() != sentence.tags().len() || sentence.is_empty() {
        return Err(Excluded::new(
            ExclusionReason::TokenTagMismatch,
            "token and tag counts differ",
        ));
    }
    if let Some(v) = validate_tags(sentence.tags()).first() {
        return Err(Excluded::new(ExclusionReason::InvalidScheme, v));
    }
    Ok(sentence.with_origin_index(origin_index))
}

fn outcome(origin_index: usize, result: Result<TaggedSentence, Excluded>) -> ProjectionOutcome {
    ProjectionOutcome {
        origin_index,
        result: match result {
            Ok(sentence) => Projection::Projected(sentence),
            Err(Excluded { reason, detail }) => Projection::Excluded {
                reason,
                detail: Some(detail),
            },
        },
    }
}

/// Projects one sentence with a dedicated backend call.
///
/// Backend failures become `backend-failure` exclusions.
pub fn project_sentence(sentence: &TaggedSentence, backend: &dyn Backend, languages: &Languages) -> ProjectionOutcome {
    let origin_index = sentence.origin_index();
    let result = prepare(sentence).and_then(|masked| {
        let texts: Vec<String> = texts_for(&masked).map(str::to_string).collect();
        let translated = backend
            .translate(&texts, &languages.source, &languages.target)
            .and_then(|out| {
                if out.len() == texts.len() {
                    Ok(out)
                } else {
                    Err(BackendError::Protocol(format!(
                        "{} translations for {} texts",
                        out.len(),
                        texts.len()
                    )))
                }
            })
            .map_err(|e| Excluded::new(ExclusionReason::BackendFailure, e))?;
        finish(&masked, &translated[0], &translated[1..], origin_index)
    });
    outcome(origin_index, result)
}

/// Maps `f` over `items` on up to `workers` threads, keeping input order.
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Projects every sentence of `split`.
///
/// Returns the projected split (sentences keep their source `origin_index`),
/// one outcome per source sentence in source order, and the run report.
pub fn project_split(
    split: &DatasetSplit,
    backend: &dyn Backend,
    config: &PipelineConfig,
) -> Result<(DatasetSplit, Vec<ProjectionOutcome>, RunReport), PipelineError> {
    if config.parallelism == 0 {
        return Err(PipelineError::ZeroParallelism);
    }
    if config.batch_size == 0 {
        return Err(PipelineError::ZeroBatch);
    }
    let started = Instant::now();
    let counters_before = backend.counters();
    let sentences = split.sentences();

    let prepared: Vec<Result<MaskedSentence, Excluded>> = parallel_map(sentences, config.parallelism, prepare);

    let mut unique: Vec<String> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for masked in prepared.iter().flatten() {
        for text in texts_for(masked) {
            if seen.insert(text) {
                unique.push(text.to_string());
            }
        }
    }

    let batches: Vec<&[String]> = unique.chunks(config.batch_size).collect();
    let languages = &config.languages;
    let translated_batches = parallel_map(&batches, config.parallelism, |batch| {
        let result = backend.translate(batch, &languages.source, &languages.target);
        match result {
            Ok(out) if out.len() != batch.len() => Err(BackendError::Protocol(format!(
                "{} translations for {} texts",
                out.len(),
                batch.len()
            ))),
            other => other,
        }
    });
    let mut own_calls = 0;
    let mut translations: HashMap<&str, Result<&str, &BackendError>> = HashMap::with_capacity(unique.len());
    for (batch, result) in batches.iter().zip(&translated_batches) {
        own_calls += 1;
        match result {
            Ok(out) => {
                for (source, target) in batch.iter().zip(out) {
                    translations.insert(source, Ok(target));
                }
            }
            Err(e) => {
                for source in batch.iter() {
                    translations.insert(source, Err(e));
                }
            }
        }
    }

    if config.failure_policy == FailurePolicy::Strict {
        for (sentence, prep) in sentences.iter().zip(&prepared) {
            let Ok(masked) = prep else { continue };
            if let Some(Err(e)) = texts_for(masked).map(|t| translations[t]).find(Result::is_err) {
                return Err(PipelineError::AbortedRun {
                    origin_index: sentence.origin_index(),
                    source: e.clone(),
                });
            }
        }
    }

    let items: Vec<(&TaggedSentence, &Result<MaskedSentence, Excluded>)> = sentences.iter().zip(&prepared).collect();
    let finished: Vec<Result<TaggedSentence, Excluded>> =
        parallel_map(&items, config.parallelism, |(sentence, prep)| {
            let masked = match prep {
                Ok(masked) => masked,
                Err(e) => {
                    return Err(Excluded {
                        reason: e.reason,
                        detail: e.detail.clone(),
                    })
                }
            };
            let mut texts = Vec::with_capacity(masked.entities.len() + 1);
            for text in texts_for(masked) {
                match translations[text] {
                    Ok(t) => texts.push(t.to_string()),
                    Err(e) => return Err(Excluded::new(ExclusionReason::BackendFailure, e)),
                }
            }
            finish(masked, &texts[0], &texts[1..], sentence.origin_index())
        });

    let mut outcomes = Vec::with_capacity(sentences.len());
    let mut projected = Vec::new();
    let mut report = SplitReport {
        split: split.name.to_string(),
        source: sentences.len(),
        ..SplitReport::default()
    };
    for (sentence, result) in sentences.iter().zip(finished) {
        let outcome = outcome(sentence.origin_index(), result);
        match &outcome.result {
            Projection::Projected(s) => {
                report.projected += 1;
                projected.push(s.clone());
            }
            Projection::Excluded { reason, .. } => {
                report.excluded += 1;
                *report.reasons.entry(*reason).or_default() += 1;
            }
        }
        outcomes.push(outcome);
    }

    let mut backend_counters = backend.counters().since(counters_before);
    if backend_counters == BackendCounters::default() {
        // plain backends keep no counters; report the calls made here
        backend_counters.backend_calls = own_calls;
        backend_counters.texts_translated = unique.len();
    }

    let run = RunReport {
        totals: report.reasons.clone(),
        splits: vec![report],
        backend: backend_counters,
        unique_texts: unique.len(),
        duration: started.elapsed(),
    };
    let projected = DatasetSplit::new(split.name.clone(), projected).expect("source order is preserved");
    Ok((projected, outcomes, run))
}

/// Exclusion report records for one split, in source order.
pub fn exclusion_records(split: &str, outcomes: &[ProjectionOutcome]) -> Vec<ExclusionRecord> {
    outcomes
        .iter()
        .filter_map(|o| match &o.result {
            Projection::Projected(_) => None,
            Projection::Excluded { reason, detail } => Some(ExclusionRecord {
                origin_index: o.origin_index,
                split: split.to_string(),
                reason: *reason,
                detail: detail.clone(),
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{IdentityBackend, ScrambleMode, ScramblerBackend};
    use crate::conll::{SplitName, Tag};

    fn sentence(tokens: &[&str], tags: &[&str], origin: usize) -> TaggedSentence {
        TaggedSentence::from_strs(tokens, tags, origin).unwrap()
    }

    fn en_fa() -> Languages {
        Languages::new("en", "fa")
    }

    #[test]
    fn identity_projects_unchanged() {
        let s = sentence(
            &["John", "lives", "in", "New", "York"],
            &["B-PER", "O", "O", "B-LOC", "I-LOC"],
            4,
        );
        let out = project_sentence(&s, &IdentityBackend, &en_fa());
        assert_eq!(out.origin_index, 4);
        assert_eq!(out.projected(), Some(&s));
    }

    #[test]
    fn zero_entity_sentence_is_kept() {
        let s = sentence(&["nothing", "here"], &["O", "O"], 0);
        let out = project_sentence(&s, &ScramblerBackend::new(ScrambleMode::Reverse), &en_fa());
        let projected = out.projected().unwrap();
        assert_eq!(projected.text(), "here nothing");
        assert!(projected.tags().iter().all(Tag::is_outside));
    }

    #[test]
    fn reversal_moves_entities() {
        let s = sentence(&["John", "lives", "in", "Berlin"], &["B-PER", "O", "O", "B-LOC"], 0);
        let out = project_sentence(&s, &ScramblerBackend::new(ScrambleMode::Reverse), &en_fa());
        let projected = out.projected().unwrap();
        assert_eq!(projected.text(), "Berlin in lives John");
        let tags: Vec<String> = projected.tags().iter().map(Tag::to_string).collect();
        assert_eq!(tags, ["B-LOC", "O", "O", "B-PER"]);
    }

    #[test]
    fn invalid_scheme_is_excluded() {
        let s = sentence(&["a", "b"], &["O", "I-PER"], 0);
        let out = project_sentence(&s, &IdentityBackend, &en_fa());
        assert_eq!(out.reason(), Some(ExclusionReason::InvalidScheme));
    }

    #[test]
    fn zero_parallelism_is_rejected() {
        let split = DatasetSplit::new(SplitName::Train, vec![]).unwrap();
        let mut config = PipelineConfig::new(en_fa());
        config.parallelism = 0;
        assert_eq!(
            project_split(&split, &IdentityBackend, &config).unwrap_err(),
            PipelineError::ZeroParallelism
        );
        config.parallelism = 1;
        config.batch_size = 0;
        assert_eq!(
            project_split(&split, &IdentityBackend, &config).unwrap_err(),
            PipelineError::ZeroBatch
        );
    }

    #[test]
    fn empty_split_projects_to_empty() {
        let split = DatasetSplit::new(SplitName::Dev, vec![]).unwrap();
        let (out, outcomes, report) = project_split(&split, &IdentityBackend, &PipelineConfig::new(en_fa())).unwrap();
        assert!(out.is_empty());
        assert!(outcomes.is_empty());
        assert_eq!(report.splits[0].source, 0);
        assert_eq!(report.backend.backend_calls, 0);
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..100).collect();
        assert_eq!(
            parallel_map(&items, 7, |x| x * 2),
            items.iter().map(|x| x * 2).collect::<Vec<_>>()
        );
    }
}
