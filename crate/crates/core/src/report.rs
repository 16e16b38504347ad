use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Examples per reported loss window.
pub const REPORT_WINDOW: u64 = 10_000;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub examples: u64,
    pub skipped: u64,
    pub mean_loss: f64,
    /// Mean loss over consecutive windows of [`REPORT_WINDOW`] examples.
    pub window_losses: Vec<f64>,
    /// Mean loss within each tenth of training progress.
    pub decile_losses: [f64; 10],
    pub wall_time: Duration,
}

impl TrainingReport {
    pub fn first_decile_loss(&self) -> f64 {
        self.decile_losses[0]
    }

    pub fn last_decile_loss(&self) -> f64 {
        self.decile_losses[9]
    }
}

/// Accumulates per-example losses for one training stream.
#[derive(Clone, Debug)]
pub(crate) struct LossTracker {
    expected: u64,
    seen: u64,
    examples: u64,
    skipped: u64,
    total: f64,
    window_sum: f64,
    window_count: u64,
    windows: Vec<f64>,
    decile_sum: [f64; 10],
    decile_count: [u64; 10],
}

impl LossTracker {
    pub fn new(expected: u64) -> Self {
        LossTracker {
            expected: expected.max(1),
            seen: 0,
            examples: 0,
            skipped: 0,
            total: 0.0,
            window_sum: 0.0,
            window_count: 0,
            windows: Vec::new(),
            decile_sum: [0.0; 10],
            decile_count: [0; 10],
        }
    }

    fn decile(&self) -> usize {
        ((self.seen * 10 / self.expected) as usize).min(9)
    }

    pub fn record(&mut self, loss: f64) {
        let d = self.decile();
        self.decile_sum[d] += loss;
        self.decile_count[d] += 1;
        self.total += loss;
        self.examples += 1;
        self.seen += 1;
        self.window_sum += loss;
        self.window_count += 1;
        if self.window_count == REPORT_WINDOW {
            self.windows.push(self.window_sum / REPORT_WINDOW as f64);
            self.window_sum = 0.0;
            self.window_count = 0;
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
        self.seen += 1;
    }

    /// Combines per-worker trackers; window and decile means are averaged
    /// across workers weighted by their example counts.
    pub fn finish(trackers: Vec<LossTracker>, wall_time: Duration) -> TrainingReport {
        let mut report = TrainingReport {
            wall_time,
            ..TrainingReport::default()
        };
        let mut total = 0.0;
        let mut dsum = [0.0; 10];
        let mut dcount = [0u64; 10];
        let mut wsum: Vec<f64> = Vec::new();
        let mut wcount: Vec<u64> = Vec::new();
        for mut t in trackers {
            if t.window_count > 0 {
                t.windows.push(t.window_sum / t.window_count as f64);
            }
            report.examples += t.examples;
            report.skipped += t.skipped;
            total += t.total;
            for d in 0..10 {
                dsum[d] += t.decile_sum[d];
                dcount[d] += t.decile_count[d];
            }
            for (i, w) in t.windows.iter().enumerate() {
                if wsum.len() <= i {
                    wsum.push(0.0);
                    wcount.push(0);
                }
                wsum[i] += w;
                wcount[i] += 1;
            }
        }
        report.mean_loss = if report.examples > 0 { total / report.examples as f64 } else { 0.0 };
        for d in 0..10 {
            report.decile_losses[d] = if dcount[d] > 0 { dsum[d] / dcount[d] as f64 } else { f64::NAN };
        }
        report.window_losses = wsum.iter().zip(&wcount).map(|(s, &c)| s / c as f64).collect();
        report
    }
}
