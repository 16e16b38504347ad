//! Internal consistency (Cronbach's α) of benchmark score matrices.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published scores of 21 sentence models on 7 supervised and 8
/// unsupervised benchmarks, with a cohort row and a metric row.
pub const PUBLISHED_SCORES: &str = include_str!("../../data/published_scores.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Supervised,
    Unsupervised,
}

impl std::str::FromStr for Cohort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "supervised" => Ok(Cohort::Supervised),
            "unsupervised" => Ok(Cohort::Unsupervised),
            other => Err(Error::parse("cohort row", format!("unknown cohort `{other}`"))),
        }
    }
}

/// Rows are models, columns are benchmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    pub models: Vec<String>,
    pub benchmarks: Vec<String>,
    pub cohorts: Vec<Cohort>,
    /// Metric name per column (`accuracy`, `f1`, `spearman`, ...); empty when absent.
    pub metrics: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// `k/(k−1) · (1 − Σσ²_col / σ²_rowsum)` with population variances.
/// `rows` are models and every row must have the same number of columns.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.len() < 2 || k < 2 {
        return Err(Error::Eval(format!(
            "alpha needs at least 2 rows and 2 columns, got {}×{k}",
            rows.len()
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: r.len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Eval("score matrix has missing or non-finite cells".into()));
    }
    let column_var: f64 = (0..k)
        .map(|j| variance(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let total_var = variance(&rows.iter().map(|r| r.iter().sum()).collect::<Vec<_>>());
    if total_var == 0.0 {
        return Err(Error::Eval("total score variance is zero".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - column_var / total_var))
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

impl ScoreMatrix {
    /// CSV with a header of benchmark names, a `cohort` row, an optional
    /// `metric` row, then one row per model. Lines starting with `#` are
    /// comments.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let benchmarks: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut cohorts = None;
        let mut metrics = vec![String::new(); benchmarks.len()];
        let mut models = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let loc = format!("record {}", i + 2);
            if rec.len() != benchmarks.len() + 1 {
                return Err(Error::parse(
                    loc,
                    format!("expected {} fields, found {}", benchmarks.len() + 1, rec.len()),
                ));
            }
            let label = &rec[0];
            let cells = rec.iter().skip(1);
            match label {
                "cohort" => cohorts = Some(cells.map(str::parse).collect::<Result<Vec<Cohort>>>()?),
                "metric" => metrics = cells.map(str::to_string).collect(),
                _ => {
                    let row = cells
                        .map(|c| c.parse::<f64>().map_err(|e| Error::parse(&loc, format!("`{c}`: {e}"))))
                        .collect::<Result<Vec<f64>>>()?;
                    models.push(label.to_string());
                    values.push(row);
                }
            }
        }
        let cohorts = cohorts.ok_or_else(|| Error::parse("score matrix", "missing cohort row"))?;
        Ok(ScoreMatrix {
            models,
            benchmarks,
            cohorts,
            metrics,
            values,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(f)
    }

    /// Columns satisfying `keep`, in their original order.
    pub fn select(&self, keep: impl Fn(Cohort, &str) -> bool) -> ScoreMatrix {
        let cols: Vec<usize> = (0..self.benchmarks.len())
            .filter(|&j| keep(self.cohorts[j], &self.metrics[j]))
            .collect();
        ScoreMatrix {
            models: self.models.clone(),
            benchmarks: cols.iter().map(|&j| self.benchmarks[j].clone()).collect(),
            cohorts: cols.iter().map(|&j| self.cohorts[j]).collect(),
            metrics: cols.iter().map(|&j| self.metrics[j].clone()).collect(),
            values: self.values.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
        }
    }

    pub fn alpha(&self) -> Result<f64> {
        cronbach_alpha(&self.values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse("score matrix", e.to_string())
}

/// α for the supervised cohort, the unsupervised cohort and both together.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub supervised: f64,
    pub unsupervised: f64,
    pub combined: f64,
    pub supervised_columns: usize,
    pub unsupervised_columns: usize,
}

/// Uses one metric per benchmark: accuracy for supervised tasks and Spearman
/// correlation for unsupervised ones. Columns without a metric are kept.
pub fn consistency_report(m: &ScoreMatrix) -> Result<ConsistencyReport> {
    let primary = |c: Cohort, metric: &str| match c {
        Cohort::Supervised => metric.is_empty() || metric == "accuracy",
        Cohort::Unsupervised => metric.is_empty() || metric == "spearman",
    };
    let sup = m.select(|c, metric| c == Cohort::Supervised && primary(c, metric));
    let uns = m.select(|c, metric| c == Cohort::Unsupervised && primary(c, metric));
    let all = m.select(primary);
    Ok(ConsistencyReport {
        supervised: sup.alpha()?,
        unsupervised: uns.alpha()?,
        combined: all.alpha()?,
        supervised_columns: sup.benchmarks.len(),
        unsupervised_columns: uns.benchmarks.len(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;
    use crate::numeric::seeded_rng;

    #[test]
    fn identical_columns_give_one() {
        let rows: Vec<Vec<f64>> = [1.0, 4.0, 2.0, 8.0].iter().map(|&v| vec![v, v]).collect();
        assert!((cronbach_alpha(&rows).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_give_near_zero() {
        let mut rng = seeded_rng(4);
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        assert!(cronbach_alpha(&rows).unwrap().abs() < 0.05);
    }

    #[test]
    fn degenerate_matrices() {
        assert!(cronbach_alpha(&[vec![1.0, 2.0]]).is_err());
        assert!(cronbach_alpha(&[vec![1.0], vec![2.0]]).is_err());
        assert!(cronbach_alpha(&[vec![1.0, 1.0], vec![1.0, 1.0]]).is_err());
        assert!(cronbach_alpha(&[vec![1.0, f64::NAN], vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn parses_csv_with_comments() {
        let text = "# note\nmodel,a,b\ncohort,supervised,unsupervised\nmetric,accuracy,spearman\nm1,1,0.5\n# x\nm2,2,.25\n";
        let m = ScoreMatrix::from_reader(text.as_bytes()).unwrap();
        assert_eq!(m.models, vec!["m1", "m2"]);
        assert_eq!(m.cohorts, vec![Cohort::Supervised, Cohort::Unsupervised]);
        assert_eq!(m.values, vec![vec![1.0, 0.5], vec![2.0, 0.25]]);
        assert!(ScoreMatrix::from_reader("model,a\nm1,1\n".as_bytes()).is_err());
        assert!(ScoreMatrix::from_reader("model,a\ncohort,supervised\nm1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn published_fixture_parses() {
        let m = ScoreMatrix::from_reader(PUBLISHED_SCORES.as_bytes()).unwrap();
        assert_eq!(m.models.len(), 21);
        assert_eq!(m.benchmarks.len(), 23);
        assert!(m.values.iter().all(|r| r.len() == 23));
        let r = consistency_report(&m).unwrap();
        assert_eq!((r.supervised_columns, r.unsupervised_columns), (6, 8));
    }

    proptest! {
        #[test]
        fn column_shift_invariance(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 4..20),
            col in 0usize..3,
            shift in -100.0f64..100.0,
        ) {
            let Ok(a) = cronbach_alpha(&rows) else { return Ok(()); };
            let shifted: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().enumerate().map(|(j, &v)| if j == col { v + shift } else { v }).collect())
                .collect();
            let b = cronbach_alpha(&shifted).unwrap();
            prop_assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }
}
