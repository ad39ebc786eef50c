use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bootstrap::bootstrap_std_of_mean;
use super::ttest::{t_test, Direction, Tails, TestKind, TestResult};
use crate::coordination::{GroupProfile, Metric};
use crate::exec::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub tails: Tails,
    pub kind: TestKind,
    pub resamples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            tails: Tails::One,
            kind: TestKind::Student,
            resamples: 1000,
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub metric: Metric,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub n_a: usize,
    pub n_b: usize,
    pub test: Option<TestResult>,
    /// Why no test was run, when `test` is absent.
    pub untestable: Option<String>,
    pub boot_std_a: Option<f64>,
    pub boot_std_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub group_a: String,
    pub group_b: String,
    /// Expected sign of `mean_a - mean_b`.
    pub direction: Direction,
    pub options: CompareOptions,
    /// Speakers present in both profiles; the test assumes this is zero.
    pub overlapping_speakers: usize,
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    pub fn entry(&self, metric: Metric) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.metric == metric)
    }
}

fn label(p: &GroupProfile) -> String {
    format!("{}->{}", p.speaker_group, p.target_group)
}

/// Per-marker and per-aggregate t-tests between two profiles, using the
/// per-speaker values as samples.
pub fn compare_groups(a: &GroupProfile, b: &GroupProfile, direction: Direction, options: CompareOptions) -> ComparisonReport {
    let ids_a: BTreeSet<&str> = a.speakers.iter().map(|s| s.speaker_id.as_str()).collect();
    let overlapping = b
        .speakers
        .iter()
        .filter(|s| ids_a.contains(s.speaker_id.as_str()))
        .count();

    let entries = Metric::all()
        .enumerate()
        .map(|(i, metric)| {
            let sa = a.samples(metric);
            let sb = b.samples(metric);
            let (test, untestable) = match t_test(&sa, &sb, options.tails, Some(direction), options.kind) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let boot = |xs: &[f64], salt: u64| {
                (!xs.is_empty()).then(|| {
                    let seed = options.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
                    bootstrap_std_of_mean(xs, options.resamples, seed, options.parallelism)
                })
            };
            ComparisonEntry {
                metric,
                mean_a: a.value(metric).mean,
                mean_b: b.value(metric).mean,
                n_a: sa.len(),
                n_b: sb.len(),
                test,
                untestable,
                boot_std_a: boot(&sa, 0xA),
                boot_std_b: boot(&sb, 0xB),
            }
        })
        .collect();

    ComparisonReport {
        group_a: label(a),
        group_b: label(b),
        direction,
        options,
        overlapping_speakers: overlapping,
        entries,
    }
}
