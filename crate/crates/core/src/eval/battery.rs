//! Runs every benchmark found in a directory against a list of models and
//! lays the results out as a model × benchmark CSV.
//!
//! Expected files, all optional: `<NAME>.tsv` for each name in
//! [`RELATEDNESS`] (pair format) and [`CLASSIFICATION`] (labelled format),
//! plus `<NAME>.test.tsv` for classification tasks with a predefined split.
//! Validation mode reads only `SICK.trial.tsv`.

use std::io::Write;
use std::path::Path;

use super::classify::{classification_eval, CvOptions};
use super::data::{load_classification, load_pairs, ClassificationDataset, EvalPair};
use super::relatedness::relatedness_eval;
use crate::encoder::SentenceEncoder;
use crate::error::{Error, Result};

pub const RELATEDNESS: [&str; 7] = [
    "STS14-News",
    "STS14-Forum",
    "STS14-WordNet",
    "STS14-Twitter",
    "STS14-Images",
    "STS14-Headlines",
    "SICK",
];
pub const CLASSIFICATION: [&str; 6] = ["MSRP", "MR", "CR", "SUBJ", "MPQA", "TREC"];
pub const VALIDATION_FILE: &str = "SICK.trial.tsv";

pub enum Benchmark {
    Relatedness(String, Vec<EvalPair>),
    Classification(ClassificationDataset),
}

impl Benchmark {
    pub fn name(&self) -> &str {
        match self {
            Benchmark::Relatedness(n, _) => n,
            Benchmark::Classification(d) => &d.name,
        }
    }

    fn columns(&self) -> Vec<String> {
        match self {
            Benchmark::Relatedness(n, _) => vec![format!("{n}-spearman"), format!("{n}-pearson")],
            Benchmark::Classification(d) if d.is_pair_task() && d.n_classes() == 2 => {
                vec![format!("{}-acc", d.name), format!("{}-f1", d.name)]
            }
            Benchmark::Classification(d) => vec![format!("{}-acc", d.name)],
        }
    }
}

/// Loads the benchmarks present in `dir`, warning about each missing one.
pub fn load_benchmarks(dir: &Path, validation: bool) -> Result<(Vec<Benchmark>, Vec<String>)> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let mut found = Vec::new();
    let mut missing = Vec::new();
    if validation {
        let path = dir.join(VALIDATION_FILE);
        if !path.is_file() {
            return Err(Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "missing")));
        }
        found.push(Benchmark::Relatedness("SICK-trial".into(), load_pairs(&path)?));
        return Ok((found, missing));
    }
    for name in RELATEDNESS {
        let path = dir.join(format!("{name}.tsv"));
        if path.is_file() {
            found.push(Benchmark::Relatedness(name.to_string(), load_pairs(&path)?));
        } else {
            log::warn!("{name}: {} not found, column skipped", path.display());
            missing.push(name.to_string());
        }
    }
    for name in CLASSIFICATION {
        let path = dir.join(format!("{name}.tsv"));
        if path.is_file() {
            let test = dir.join(format!("{name}.test.tsv"));
            let test = test.is_file().then_some(test);
            found.push(Benchmark::Classification(load_classification(name, &path, test.as_deref())?));
        } else {
            log::warn!("{name}: {} not found, column skipped", path.display());
            missing.push(name.to_string());
        }
    }
    Ok((found, missing))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryReport {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    pub skipped: Vec<String>,
}

pub fn run_battery(
    models: &[(String, &dyn SentenceEncoder)],
    benchmarks: &[Benchmark],
    skipped: Vec<String>,
    cv: &CvOptions,
) -> Result<BatteryReport> {
    let columns = benchmarks.iter().flat_map(Benchmark::columns).collect();
    let mut rows = Vec::with_capacity(models.len());
    for (name, encoder) in models {
        let mut cells = Vec::new();
        for b in benchmarks {
            match b {
                Benchmark::Relatedness(_, pairs) => {
                    let r = relatedness_eval(*encoder, pairs)?;
                    cells.extend([r.spearman, r.pearson]);
                }
                Benchmark::Classification(d) => {
                    let r = classification_eval(*encoder, d, cv)?;
                    cells.push(r.accuracy);
                    cells.extend(r.f1);
                }
            }
        }
        rows.push((name.clone(), cells));
    }
    Ok(BatteryReport { columns, rows, skipped })
}

impl BatteryReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Eval(format!("writing report: {e}"));
        out.write_record(std::iter::once("model").chain(self.columns.iter().map(String::as_str)))
            .map_err(err)?;
        for (name, cells) in &self.rows {
            let cells: Vec<String> = cells.iter().map(|v| format!("{v:.4}")).collect();
            out.write_record(std::iter::once(name.as_str()).chain(cells.iter().map(String::as_str)))
                .map_err(err)?;
        }
        out.flush().map_err(Error::Stream)
    }
}
