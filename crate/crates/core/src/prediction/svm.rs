//! Linear SVM trained by dual coordinate descent on the L2-regularized hinge
//! loss. The bias is learned as the weight of a constant extra feature.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SparseRow = Vec<(u32, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Hinge loss weight C; larger means weaker regularization.
    pub c: f64,
    /// Cap on passes over the data.
    pub max_iter: usize,
    /// Stop once the projected-gradient spread falls below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_iter: 100_000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub params: SvmParams,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn decision(&self, x: &[(u32, f64)]) -> f64 {
        let dot: f64 = x
            .iter()
            .filter_map(|&(i, v)| self.weights.get(i as usize).map(|w| w * v))
            .sum();
        dot + self.bias
    }

    pub fn predict(&self, x: &[(u32, f64)]) -> bool {
        self.decision(x) > 0.0
    }
}

/// Fits a linear max-margin classifier. Features beyond `dimension` are ignored.
pub fn train(rows: &[SparseRow], labels: &[bool], dimension: usize, params: SvmParams) -> Result<LinearModel> {
    if rows.len() != labels.len() {
        return Err(Error::InvalidDataset(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    if rows.is_empty() || labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClassDataset);
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidDataset(format!("regularization weight must be positive, got {}", params.c)));
    }
    let rows: Vec<SparseRow> = rows
        .iter()
        .map(|r| r.iter().copied().filter(|&(i, _)| (i as usize) < dimension).collect())
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let qii: Vec<f64> = rows.iter().map(|r| r.iter().map(|(_, v)| v * v).sum::<f64>() + 1.0).collect();

    let n = rows.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dimension];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        iterations += 1;
        order.shuffle(&mut rng);
        let mut max_pg = f64::NEG_INFINITY;
        let mut min_pg = f64::INFINITY;
        for &i in &order {
            let xi = &rows[i];
            let margin: f64 = xi.iter().map(|&(j, v)| w[j as usize] * v).sum::<f64>() + b;
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg.abs() > 1e-15 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                for &(j, v) in xi {
                    w[j as usize] += step * v;
                }
                b += step;
            }
        }
        if max_pg - min_pg < params.tolerance {
            converged = true;
            break;
        }
    }

    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::InvalidDataset("training diverged".into()));
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        params,
        iterations,
        converged,
    })
}
