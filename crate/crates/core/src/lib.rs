//! Linguistic style coordination in conversations and its relation to power.
//!
//! The crate measures how much a person's reply echoes the function-word
//! style of the utterance it answers, averages that over people and groups,
//! tests group differences, and uses pairwise coordination asymmetries as
//! features for predicting who holds the higher status.
//!
//! Module map:
//!
//! * [`lexicon`]: marker categories, tokenizer, exhibit predicate
//! * [`corpus`]: JSONL ingestion, exchanges, filters, group partitions
//! * [`coordination`]: per-marker and aggregated coordination profiles
//! * [`stats`]: t-tests, bootstrap, group comparison, hypotheses, timelines
//! * [`prediction`]: pair datasets, features, linear SVM, evaluation grid
//! * [`synth`]: generator with closed-form expected coordination
//! * [`report`]: CSV / JSON / SVG exports

pub mod coordination;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod lexicon;
pub mod prediction;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Parallelism;
