//! Influencer-marketing analytics and sponsored-post detection.
//!
//! The crate covers the full offline pipeline: JSONL ingestion, rule-based
//! sponsorship labels and follower tiers, engagement analytics, text and
//! metadata features, balanced dataset construction, two classifiers (a
//! random forest and a recurrent text+metadata network), evaluation, the
//! hidden-advertisement audit, and a synthetic corpus generator.

pub mod analytics;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod labeling;
pub mod model;
pub mod signals;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
