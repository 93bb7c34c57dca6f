//! Identify internet memes among social-media image posts by exact
//! embedding search against template exemplars, then report prevalence,
//! popularity and knowledge-graph context for what matched.
//!
//! The stages follow the data flow: [`ingest`] builds a local lake from
//! platform exports, [`embedding`] defines the vector contract and the
//! EMB1 file, [`index`] searches template exemplars, [`pipeline`]
//! classifies the lake, [`eval`] tunes the threshold against labels,
//! [`analytics`] aggregates results and [`kg`] supplies context cards.

pub mod analytics;
pub mod embedding;
mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod kg;
pub mod pipeline;

pub use embedding::{normalize, reference_embed, EmbeddingBatch, EmbeddingVector};
pub use error::{Error, Result};
pub use index::{build_index, Classification, FlatIndex, MatchResult, TemplateExemplar};
pub use ingest::{CanonicalPost, ImageFormat, ImageObject, Platform, RecordError};
pub use kg::{context_card, ContextCard, MemeKg};
pub use pipeline::MatchRecord;
