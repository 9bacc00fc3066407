//! Feature files: headerless UTF-8 CSV rows `true_label,predicted_label,f_1,...,f_n`.
//!
//! A true label of `-1` marks an input from outside the known classes.
//! Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::monitor::{FeatureRecord, UNKNOWN_LABEL};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub path: Option<PathBuf>,
    pub records: Vec<FeatureRecord>,
    /// Feature arity; `None` for an empty file.
    pub dim: Option<usize>,
    pub class_count: usize,
}

impl FeatureFile {
    pub fn open(path: impl AsRef<Path>, class_count: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = FeatureFile::parse(BufReader::new(File::open(path)?), class_count)?;
        file.path = Some(path.to_path_buf());
        Ok(file)
    }

    /// Parses rows; `class_count` defaults to one more than the largest label.
    pub fn parse<R: Read>(reader: R, class_count: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = Vec::new();
        let mut dim: Option<usize> = None;
        let mut max_label: i64 = -1;
        for row in rdr.records() {
            let row = row.map_err(|e| Error::FeatureParse {
                row: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = row.position().map_or(0, |p| p.line());
            let fail = |message: String| Error::FeatureParse { row: line, message };
            if row.len() < 3 {
                return Err(fail(format!("expected at least 3 columns, found {}", row.len())));
            }
            let arity = row.len() - 2;
            match dim {
                None => dim = Some(arity),
                Some(d) if d != arity => {
                    return Err(fail(format!("{arity} features, expected {d}")));
                }
                _ => {}
            }
            let true_label: i64 = row[0]
                .parse()
                .map_err(|_| fail(format!("bad true label {:?}", &row[0])))?;
            if true_label < UNKNOWN_LABEL {
                return Err(fail(format!("true label {true_label} below -1")));
            }
            let predicted_label: usize = row[1]
                .parse()
                .map_err(|_| fail(format!("bad predicted label {:?}", &row[1])))?;
            let coords = row
                .iter()
                .skip(2)
                .enumerate()
                .map(|(i, s)| {
                    s.parse::<f64>()
                        .map_err(|_| fail(format!("feature {} is not a number: {s:?}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            let features = Vector::new(coords).map_err(|e| fail(e.to_string()))?;
            max_label = max_label.max(true_label).max(predicted_label as i64);
            records.push(FeatureRecord::new(features, true_label, predicted_label));
        }
        let inferred = (max_label + 1) as usize;
        let class_count = match class_count {
            Some(n) if n < inferred => {
                return Err(Error::FeatureParse {
                    row: 0,
                    message: format!("label {max_label} outside the {n} declared classes"),
                })
            }
            Some(n) => n,
            None => inferred,
        };
        Ok(FeatureFile {
            path: None,
            records,
            dim,
            class_count,
        })
    }

    pub fn classes_present(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.records.iter().map(|r| r.predicted_label).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Writes records in feature-file format with shortest round-trip floats.
pub fn write_feature_csv<W: Write>(mut out: W, records: &[FeatureRecord]) -> Result<()> {
    for r in records {
        write!(out, "{},{}", r.true_label, r.predicted_label)?;
        for x in r.features.iter() {
            write!(out, ",{x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
