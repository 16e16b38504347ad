//! Benchmark file loaders.
//!
//! * Relatedness pairs: `sentence1<TAB>sentence2<TAB>gold`.
//! * Classification: `label<TAB>sentence` or `label<TAB>s1<TAB>s2` for pair
//!   tasks. Labels are non-negative integers covering `0..n_classes`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalPair {
    pub s1: String,
    pub s2: String,
    pub gold: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassificationInput {
    Single(String),
    Pair(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSentence {
    pub input: ClassificationInput,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationDataset {
    pub name: String,
    pub train: Vec<LabeledSentence>,
    /// Predefined test split; cross-validation is used when absent.
    pub test: Option<Vec<LabeledSentence>>,
}

impl ClassificationDataset {
    pub fn is_pair_task(&self) -> bool {
        self.train
            .first()
            .is_some_and(|e| matches!(e.input, ClassificationInput::Pair(..)))
    }

    pub fn n_classes(&self) -> usize {
        self.train
            .iter()
            .chain(self.test.iter().flatten())
            .map(|e| e.label + 1)
            .max()
            .unwrap_or(0)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn tsv_lines<R: BufRead>(r: R, name: &str) -> impl Iterator<Item = Result<(String, Vec<String>)>> {
    let name = name.to_string();
    r.lines().enumerate().filter_map(move |(i, line)| {
        let loc = format!("{name}:{}", i + 1);
        match line {
            Err(e) => Some(Err(Error::Stream(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((loc, l.trim_end_matches('\r').split('\t').map(str::to_string).collect()))),
        }
    })
}

pub fn read_pairs<R: BufRead>(r: R, name: &str) -> Result<Vec<EvalPair>> {
    let mut out = Vec::new();
    for line in tsv_lines(r, name) {
        let (loc, f) = line?;
        if f.len() != 3 {
            return Err(Error::parse(loc, format!("expected 3 tab-separated fields, found {}", f.len())));
        }
        let gold: f64 = f[2].trim().parse().map_err(|e| Error::parse(&loc, format!("gold score: {e}")))?;
        if !gold.is_finite() {
            return Err(Error::parse(loc, "gold score is not finite"));
        }
        let mut f = f.into_iter();
        out.push(EvalPair {
            s1: f.next().expect("3 fields"),
            s2: f.next().expect("3 fields"),
            gold,
        });
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<EvalPair>> {
    read_pairs(open(path)?, &path.display().to_string())
}

pub fn read_labeled<R: BufRead>(r: R, name: &str) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    let mut width = None;
    for line in tsv_lines(r, name) {
        let (loc, f) = line?;
        if !(2..=3).contains(&f.len()) {
            return Err(Error::parse(loc, format!("expected 2 or 3 tab-separated fields, found {}", f.len())));
        }
        if *width.get_or_insert(f.len()) != f.len() {
            return Err(Error::parse(loc, "mixed single-sentence and pair lines"));
        }
        let label: usize = f[0].trim().parse().map_err(|e| Error::parse(&loc, format!("label: {e}")))?;
        let mut f = f.into_iter().skip(1);
        let first = f.next().expect("checked width");
        let input = match f.next() {
            Some(second) => ClassificationInput::Pair(first, second),
            None => ClassificationInput::Single(first),
        };
        out.push(LabeledSentence { input, label });
    }
    Ok(out)
}

pub fn load_labeled(path: &Path) -> Result<Vec<LabeledSentence>> {
    read_labeled(open(path)?, &path.display().to_string())
}

/// Loads `train`, and `test` if given, checking that labels are dense.
pub fn load_classification(name: &str, train: &Path, test: Option<&Path>) -> Result<ClassificationDataset> {
    let ds = ClassificationDataset {
        name: name.to_string(),
        train: load_labeled(train)?,
        test: test.map(load_labeled).transpose()?,
    };
    validate_labels(&ds)?;
    Ok(ds)
}

pub fn validate_labels(ds: &ClassificationDataset) -> Result<()> {
    let n = ds.n_classes();
    let mut seen = vec![false; n];
    for e in ds.train.iter().chain(ds.test.iter().flatten()) {
        seen[e.label] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::parse(&ds.name, format!("labels must cover 0..{n}; {missing} never occurs")));
    }
    if n < 2 {
        return Err(Error::Eval(format!("{}: needs at least two classes", ds.name)));
    }
    if let Some(test) = &ds.test {
        let pair = ds.is_pair_task();
        if test.iter().any(|e| matches!(e.input, ClassificationInput::Pair(..)) != pair) {
            return Err(Error::parse(&ds.name, "train and test splits disagree on pair format"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        let p = read_pairs("a b\tc d\t4.5\n\nx\ty\t0\n".as_bytes(), "t").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].gold, 4.5);
        assert_eq!(p[1].s2, "y");
        assert!(read_pairs("a\tb\n".as_bytes(), "t").is_err());
        assert!(read_pairs("a\tb\tnan\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn labeled() {
        let l = read_labeled("1\tgood film\n0\tbad film\n".as_bytes(), "t").unwrap();
        assert_eq!(l[0].label, 1);
        assert_eq!(l[1].input, ClassificationInput::Single("bad film".into()));
        let p = read_labeled("1\ta\tb\n".as_bytes(), "t").unwrap();
        assert_eq!(p[0].input, ClassificationInput::Pair("a".into(), "b".into()));
        assert!(read_labeled("1\ta\tb\n0\tc\n".as_bytes(), "t").is_err());
        assert!(read_labeled("x\ta\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn label_density() {
        let mk = |labels: &[usize]| ClassificationDataset {
            name: "d".into(),
            train: labels
                .iter()
                .map(|&label| LabeledSentence {
                    input: ClassificationInput::Single("s".into()),
                    label,
                })
                .collect(),
            test: None,
        };
        assert!(validate_labels(&mk(&[0, 1, 2])).is_ok());
        assert!(validate_labels(&mk(&[0, 2])).is_err());
        assert!(validate_labels(&mk(&[0, 0])).is_err());
    }
}
