//! Significance tests, bootstrap variability, group comparisons, power
//! hypotheses, and status-change timelines.

mod bootstrap;
mod compare;
mod hypotheses;
pub mod special;
mod timeline;
mod ttest;

pub use bootstrap::{bootstrap_std, bootstrap_std_of_mean, sample_mean};
pub use compare::{compare_groups, CompareOptions, ComparisonEntry, ComparisonReport};
pub use hypotheses::{
    evaluate_hypotheses, verdict, EntryVerdict, Hypothesis, HypothesisOptions, HypothesisReport, HypothesisResult,
    Verdict, ALPHA,
};
pub use timeline::{month_bucket, timeline, TimelineBucket, TimelineOptions, TimelineSeries};
pub use ttest::{stars, t_test, Direction, Tails, TestKind, TestResult};
