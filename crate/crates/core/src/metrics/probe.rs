//! Logistic-regression probe scored by AUC.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::stats::auc;
use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    /// Fraction of each class held out for scoring; `None` scores in-sample.
    pub holdout: Option<f64>,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
            holdout: Some(0.3),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    /// Weights on standardised features.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub auc: f64,
}

impl ProbeResult {
    /// Logit for a raw (unstandardised) feature row.
    pub fn logit(&self, row: &[f32]) -> f64 {
        row.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_std)
            .zip(&self.weights)
            .map(|(((&x, m), s), w)| w * (f64::from(x) - m) / s)
            .sum::<f64>()
            + self.bias
    }
}

fn stratified_split(labels: &[bool], frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = ((idx.len() as f64) * frac).round() as usize;
        if k == 0 || k >= idx.len() {
            return Err(Error::Degenerate(format!(
                "class {class} has {} samples, too few for a held-out split",
                idx.len()
            )));
        }
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Fits logistic regression by full-batch gradient descent on standardised
/// features and reports AUC of the logits.
pub fn linear_probe(features: &EmbeddingSet, labels: &[bool], opts: &ProbeOptions) -> Result<ProbeResult> {
    if features.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} rows for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::Degenerate("probe needs both classes".into()));
    }
    let (train, test) = match opts.holdout {
        Some(f) => stratified_split(labels, f, opts.seed)?,
        None => ((0..labels.len()).collect(), (0..labels.len()).collect()),
    };
    let d = features.dim();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for &i in &train {
        for (m, &x) in mean.iter_mut().zip(features.row(i)) {
            *m += f64::from(x) / n;
        }
    }
    let mut std = vec![0.0; d];
    for &i in &train {
        for ((s, &x), m) in std.iter_mut().zip(features.row(i)).zip(&mean) {
            *s += (f64::from(x) - m).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let standardize = |i: usize| -> Vec<f64> {
        features
            .row(i)
            .iter()
            .zip(&mean)
            .zip(&std)
            .map(|((&x, m), s)| (f64::from(x) - m) / s)
            .collect()
    };
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| standardize(i)).collect();
    let ys: Vec<f64> = train.iter().map(|&i| if labels[i] { 1.0 } else { 0.0 }).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut gw = vec![0.0; d];
    for _ in 0..opts.iterations {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let err = 1.0 / (1.0 + (-z).exp()) - y;
            for (g, a) in gw.iter_mut().zip(x) {
                *g += err * a;
            }
            gb += err;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= opts.learning_rate * (g / n + opts.l2 * *wi);
        }
        b -= opts.learning_rate * gb / n;
    }
    let result = ProbeResult {
        weights: w,
        bias: b,
        feature_mean: mean,
        feature_std: std,
        auc: 0.0,
    };
    let scores: Vec<f64> = test.iter().map(|&i| result.logit(features.row(i))).collect();
    let test_labels: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
    let auc = auc(&scores, &test_labels)?;
    Ok(ProbeResult { auc, ..result })
}
