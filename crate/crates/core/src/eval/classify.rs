//! Supervised evaluation: frozen sentence vectors feed a logistic regression.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::data::{ClassificationDataset, ClassificationInput, LabeledSentence};
use super::logreg::{train_logreg, LogRegOptions};
use crate::encoder::SentenceEncoder;
use crate::error::{Error, Result};
use crate::numeric::seeded_rng;

pub const L2_GRID: [f64; 6] = [1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1];

#[derive(Clone, Debug, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub l2_grid: Vec<f64>,
    /// Folds of the training portion used to pick the penalty; one of them
    /// is held out for validation.
    pub inner_folds: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            folds: 10,
            seed: 1,
            l2_grid: L2_GRID.to_vec(),
            inner_folds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationResult {
    /// Mean accuracy over folds, or test accuracy for a predefined split.
    pub accuracy: f64,
    /// F1 of class 1 for binary pair tasks, over all held-out predictions.
    pub f1: Option<f64>,
    pub fold_accuracies: Vec<f64>,
    pub chosen_l2: Vec<f64>,
}

/// Fold index for every item. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped, so fold sizes differ by
/// at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot split {} items into {k} folds",
            labels.len()
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = seeded_rng(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// F1 of `positive` class.
pub fn f1_score(predicted: &[usize], gold: &[usize], positive: usize) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &g) in predicted.iter().zip(gold) {
        match (p == positive, g == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fneg) as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Encodes every example. Pair inputs become `[u, v, |u−v|, u∗v]`.
pub fn featurize<E: SentenceEncoder + ?Sized>(encoder: &E, examples: &[LabeledSentence]) -> Vec<Vec<f64>> {
    let dense = |text: &str| -> Vec<f64> { encoder.encode(text).repr.to_dense().iter().map(|&v| v as f64).collect() };
    examples
        .par_iter()
        .map(|e| match &e.input {
            ClassificationInput::Single(s) => dense(s),
            ClassificationInput::Pair(a, b) => {
                let (u, v) = (dense(a), dense(b));
                let mut f = Vec::with_capacity(4 * u.len());
                f.extend_from_slice(&u);
                f.extend_from_slice(&v);
                f.extend(u.iter().zip(&v).map(|(x, y)| (x - y).abs()));
                f.extend(u.iter().zip(&v).map(|(x, y)| x * y));
                f
            }
        })
        .collect()
}

fn subset<T: Clone>(xs: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| xs[i].clone()).collect()
}

fn check_classes(labels: &[usize], what: &str) -> Result<()> {
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Eval(format!("{what} contains a single class")));
    }
    Ok(())
}

/// Picks the penalty with the best accuracy on an inner stratified holdout
/// (ties go to the stronger penalty), then refits on all of `x`.
fn fit_with_selection(
    x: &[Vec<f64>],
    y: &[usize],
    opts: &CvOptions,
    seed: u64,
) -> Result<(super::logreg::LogisticRegression, f64)> {
    check_classes(y, "training split")?;
    let mut best_l2 = *opts
        .l2_grid
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty l2 grid".into()))?;
    if opts.l2_grid.len() > 1 && y.len() >= opts.inner_folds.max(2) {
        let inner = stratified_folds(y, opts.inner_folds.max(2), seed)?;
        let (tr, va): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| inner[i] != 0);
        let (ytr, yva) = (subset(y, &tr), subset(y, &va));
        if check_classes(&ytr, "inner split").is_ok() && !va.is_empty() {
            let (xtr, xva) = (subset(x, &tr), subset(x, &va));
            let mut best_acc = f64::NEG_INFINITY;
            for &l2 in &opts.l2_grid {
                let m = train_logreg(&xtr, &ytr, &LogRegOptions { l2, ..Default::default() })?;
                let acc = m.accuracy(&xva, &yva);
                if acc >= best_acc {
                    best_acc = acc;
                    best_l2 = l2;
                }
            }
        }
    }
    let model = train_logreg(x, y, &LogRegOptions { l2: best_l2, ..Default::default() })?;
    Ok((model, best_l2))
}

/// Predefined split: one train/test run. Otherwise stratified k-fold
/// cross-validation reporting mean fold accuracy.
pub fn classification_eval<E: SentenceEncoder + ?Sized>(
    encoder: &E,
    dataset: &ClassificationDataset,
    opts: &CvOptions,
) -> Result<ClassificationResult> {
    let report_f1 = dataset.is_pair_task() && dataset.n_classes() == 2;
    let x = featurize(encoder, &dataset.train);
    let y: Vec<usize> = dataset.train.iter().map(|e| e.label).collect();
    if let Some(test) = &dataset.test {
        let xt = featurize(encoder, test);
        let yt: Vec<usize> = test.iter().map(|e| e.label).collect();
        let (model, l2) = fit_with_selection(&x, &y, opts, opts.seed)?;
        let pred: Vec<usize> = xt.iter().map(|f| model.predict(f)).collect();
        let acc = pred.iter().zip(&yt).filter(|(p, g)| p == g).count() as f64 / yt.len().max(1) as f64;
        return Ok(ClassificationResult {
            accuracy: acc,
            f1: report_f1.then(|| f1_score(&pred, &yt, 1)),
            fold_accuracies: vec![acc],
            chosen_l2: vec![l2],
        });
    }
    labeled_cv(&x, &y, opts, report_f1)
}

/// Cross-validation over precomputed features.
pub fn labeled_cv(x: &[Vec<f64>], y: &[usize], opts: &CvOptions, report_f1: bool) -> Result<ClassificationResult> {
    let folds = stratified_folds(y, opts.folds, opts.seed)?;
    let per_fold: Vec<(f64, f64, Vec<(usize, usize)>)> = (0..opts.folds)
        .into_par_iter()
        .map(|f| {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] != f);
            let (model, l2) = fit_with_selection(&subset(x, &tr), &subset(y, &tr), opts, opts.seed ^ (f as u64 + 1))?;
            let preds: Vec<(usize, usize)> = te.iter().map(|&i| (model.predict(&x[i]), y[i])).collect();
            let acc = preds.iter().filter(|(p, g)| p == g).count() as f64 / preds.len() as f64;
            Ok((acc, l2, preds))
        })
        .collect::<Result<_>>()?;
    let fold_accuracies: Vec<f64> = per_fold.iter().map(|f| f.0).collect();
    let (pred, gold): (Vec<usize>, Vec<usize>) = per_fold.iter().flat_map(|f| f.2.iter().copied()).unzip();
    Ok(ClassificationResult {
        accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
        f1: report_f1.then(|| f1_score(&pred, &gold, 1)),
        chosen_l2: per_fold.iter().map(|f| f.1).collect(),
        fold_accuracies,
    })
}
