use serde::{Deserialize, Serialize};

use super::special::student_t_sf;
use crate::error::{Error, Result};

/// Expected sign of `mean(a) - mean(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    Less,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Greater => Direction::Less,
            Direction::Less => Direction::Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tails {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Pooled-variance Student test.
    #[default]
    Student,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub t_stat: f64,
    pub df: f64,
    /// p-value under `tails` (and `direction` when one-tailed).
    pub p_value: f64,
    pub tails: Tails,
    pub direction: Option<Direction>,
    pub stars: u8,
    pub kind: TestKind,
    /// `P(T >= t)`.
    pub p_greater: f64,
    /// `P(T <= t)`.
    pub p_less: f64,
    pub p_two_tailed: f64,
}

impl TestResult {
    pub fn p_for(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Greater => self.p_greater,
            Direction::Less => self.p_less,
        }
    }
}

/// Significance stars: 1 below 0.05, 2 below 0.01, 3 below 0.001.
pub fn stars(p: f64) -> u8 {
    match p {
        p if p < 0.001 => 3,
        p if p < 0.01 => 2,
        p if p < 0.05 => 1,
        _ => 0,
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Independent two-sample t-test of `a` against `b`.
///
/// A one-tailed test needs a `direction`; without one the two-tailed p is reported.
pub fn t_test(a: &[f64], b: &[f64], tails: Tails, direction: Option<Direction>, kind: TestKind) -> Result<TestResult> {
    if a.len() < 2 {
        return Err(Error::TooFewSamples(a.len()));
    }
    if b.len() < 2 {
        return Err(Error::TooFewSamples(b.len()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (t, df) = match kind {
        TestKind::Student => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TestKind::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se2 = sa + sb;
            let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            ((ma - mb) / se2.sqrt(), df)
        }
    };
    let p_greater = student_t_sf(t, df);
    let p_less = student_t_sf(-t, df);
    let p_two_tailed = (2.0 * student_t_sf(t.abs(), df)).min(1.0);
    let (p_value, direction) = match (tails, direction) {
        (Tails::One, Some(Direction::Greater)) => (p_greater, Some(Direction::Greater)),
        (Tails::One, Some(Direction::Less)) => (p_less, Some(Direction::Less)),
        (_, dir) => (p_two_tailed, dir),
    };
    let tails = if direction.is_none() { Tails::Two } else { tails };
    Ok(TestResult {
        t_stat: t,
        df,
        p_value,
        tails,
        direction,
        stars: stars(p_value),
        kind,
        p_greater,
        p_less,
        p_two_tailed,
    })
}
