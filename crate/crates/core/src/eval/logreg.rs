//! Multinomial logistic regression fit by L-BFGS on standardized features.

use std::collections::VecDeque;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::numeric::seeded_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegOptions {
    /// Penalty on weights (not biases): `l2/2 · ||W||²` added to the mean NLL.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient's infinity norm falls below this.
    pub tol: f64,
    /// Random initial weights in `[-0.01, 0.01]`; zero when `None`.
    pub init_seed: Option<u64>,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            l2: 1e-3,
            max_iter: 500,
            tol: 1e-5,
            init_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegression {
    /// `n_classes × n_features`, in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Objective value at the returned parameters.
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [usize],
    d: usize,
    c: usize,
    l2: f64,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.c * (self.d + 1)
    }

    /// Parameters are `[W (c×d) | b (c)]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (d, c) = (self.d, self.c);
        let (w, b) = theta.split_at(c * d);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = self.y.len();
        let mut loss = 0.0;
        let mut p = vec![0.0; c];
        for (row, &label) in self.x.chunks_exact(d).zip(self.y) {
            for k in 0..c {
                p[k] = b[k] + crate::numeric::dot(&w[k * d..(k + 1) * d], row);
            }
            let z = p[label];
            loss += crate::numeric::softmax_in_place(&mut p) - z;
            p[label] -= 1.0;
            let (gw, gb) = grad.split_at_mut(c * d);
            for k in 0..c {
                gb[k] += p[k];
                crate::numeric::axpy(p[k], row, &mut gw[k * d..(k + 1) * d]);
            }
        }
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        let mut penalty = 0.0;
        for (g, &wi) in grad[..c * d].iter_mut().zip(w) {
            *g += self.l2 * wi;
            penalty += wi * wi;
        }
        loss * inv + 0.5 * self.l2 * penalty
    }
}

fn minimize(problem: &Problem<'_>, mut theta: Vec<f64>, opts: &LogRegOptions) -> (Vec<f64>, f64, usize, bool) {
    const MEMORY: usize = 10;
    let n = theta.len();
    let mut grad = vec![0.0; n];
    let mut f = problem.eval(&theta, &mut grad);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut new_theta = vec![0.0; n];
    let mut new_grad = vec![0.0; n];
    let inf_norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    for iter in 0..opts.max_iter {
        if inf_norm(&grad) < opts.tol {
            return (theta, f, iter, true);
        }
        // two-loop recursion
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * crate::numeric::dot(s, &dir);
            crate::numeric::axpy(-a, y, &mut dir);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = crate::numeric::dot(s, y) / crate::numeric::dot(y, y);
            dir.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let g = crate::numeric::l2_norm(&grad);
            dir.iter_mut().for_each(|v| *v /= g.max(1.0));
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * crate::numeric::dot(y, &dir);
            crate::numeric::axpy(a - b, s, &mut dir);
        }
        let mut slope = crate::numeric::dot(&grad, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -crate::numeric::dot(&grad, &grad);
        }

        // backtracking Armijo search
        let mut step = 1.0;
        let mut new_f;
        loop {
            for i in 0..n {
                new_theta[i] = theta[i] + step * dir[i];
            }
            new_f = problem.eval(&new_theta, &mut new_grad);
            if new_f <= f + 1e-4 * step * slope || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        if new_f > f {
            return (theta, f, iter, false);
        }
        let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = crate::numeric::dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut theta, &mut new_theta);
        std::mem::swap(&mut grad, &mut new_grad);
        let converged_f = (f - new_f).abs() <= 1e-15 * f.abs().max(1.0);
        f = new_f;
        if converged_f {
            return (theta, f, iter + 1, inf_norm(&grad) < opts.tol);
        }
    }
    let done = inf_norm(&grad) < opts.tol;
    (theta, f, opts.max_iter, done)
}

/// Fits a multinomial model on `features` (rows of equal length) and class
/// labels in `0..n_classes`, where `n_classes = max label + 1`.
pub fn train_logreg(features: &[Vec<f64>], labels: &[usize], opts: &LogRegOptions) -> Result<LogisticRegression> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(Error::Eval("no training examples".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n_classes];
    labels.iter().for_each(|&l| seen[l] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Eval("logistic regression needs at least two classes".into()));
    }
    if !(opts.l2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("l2 must be non-negative, got {}", opts.l2)));
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier features"));
    }

    let n = features.len() as f64;
    let mut mean = vec![0.0; d];
    for f in features {
        crate::numeric::axpy(1.0 / n, f, &mut mean);
    }
    let mut scale = vec![0.0; d];
    for f in features {
        for j in 0..d {
            scale[j] += (f[j] - mean[j]).powi(2) / n;
        }
    }
    scale.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });
    let mut x = Vec::with_capacity(features.len() * d);
    for f in features {
        x.extend(f.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s));
    }

    let problem = Problem {
        x: &x,
        y: labels,
        d,
        c: n_classes,
        l2: opts.l2,
    };
    let mut theta = vec![0.0; problem.n_params()];
    if let Some(seed) = opts.init_seed {
        let mut rng = seeded_rng(seed);
        theta.iter_mut().for_each(|t| *t = rng.gen_range(-0.01..0.01));
    }
    let (theta, final_loss, iterations, converged) = minimize(&problem, theta, opts);
    if !final_loss.is_finite() {
        return Err(Error::NonFinite("logistic regression objective"));
    }
    let (w, b) = theta.split_at(n_classes * d);
    Ok(LogisticRegression {
        weights: w.to_vec(),
        bias: b.to_vec(),
        mean,
        scale,
        n_classes,
        n_features: d,
        final_loss,
        iterations,
        converged,
    })
}

impl LogisticRegression {
    pub fn scores(&self, features: &[f64]) -> Vec<f64> {
        let d = self.n_features;
        let z: Vec<f64> = features
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        (0..self.n_classes)
            .map(|k| self.bias[k] + crate::numeric::dot(&self.weights[k * d..(k + 1) * d], &z))
            .collect()
    }

    /// Highest-scoring class; ties go to the lower label.
    pub fn predict(&self, features: &[f64]) -> usize {
        let s = self.scores(features);
        let mut best = 0;
        for k in 1..s.len() {
            if s[k] > s[best] {
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| self.predict(f) == l)
            .count();
        correct as f64 / labels.len().max(1) as f64
    }
}
