//! Cross-lingual projection of token-level NER annotations.
//!
//! Entity spans of a tagged source sentence are masked with indexed
//! placeholders (`[*0*]`, `[*1*]`, ...), the masked sentence and the entity
//! surfaces are translated separately, and the translated entities are put
//! back by placeholder index. Sentences whose placeholders do not survive
//! translation, or whose rebuilt token/tag arrays are inconsistent, are
//! excluded with a machine-readable reason.
//!
//! ```
//! use transproj_core::conll::TaggedSentence;
//! use transproj_core::placeholder::{mask, unmask};
//!
//! let s = TaggedSentence::from_strs(&["John", "lives", "in", "Berlin"], &["B-PER", "O", "O", "B-LOC"], 0)?;
//! let masked = mask(&s)?;
//! assert_eq!(masked.template, "[*0*] lives in [*1*]");
//!
//! // a translation that swapped the entities around
//! let out = unmask("[*1*] zendegi [*0*]", &["Berlin", "John"], &["PER", "LOC"])?;
//! assert_eq!(out.text(), "John zendegi Berlin");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod backend;
pub mod conll;
pub mod error;
pub mod pipeline;
pub mod placeholder;
pub mod spans;
pub mod stats;

pub use conll::{DatasetSplit, SplitName, Tag, TaggedSentence, Token};
pub use error::{BackendError, CodecError, ConllError, PipelineError, SpanError};
pub use pipeline::{ExclusionReason, Projection, ProjectionOutcome, RunReport};
pub use spans::EntitySpan;
