//! Labeled dataset ingestion: CSV (`label,f1,...,fd`) and the IDX layout used by MNIST.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Samples grouped by label, features scaled so the largest row norm is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    labels: Vec<i64>,
    groups: Vec<Vec<Vec<f64>>>,
}

impl Dataset {
    /// Groups `(label, features)` pairs and rescales by the global max norm.
    pub fn from_samples(samples: Vec<(i64, Vec<f64>)>) -> Result<Self> {
        let dim = samples
            .first()
            .map(|(_, x)| x.len())
            .ok_or_else(|| HarnessError::Dataset("dataset is empty".into()))?;
        if dim == 0 {
            return Err(HarnessError::Dataset("samples have no features".into()));
        }
        let mut max_norm = 0.0f64;
        for (i, (_, x)) in samples.iter().enumerate() {
            if x.len() != dim {
                return Err(HarnessError::Dataset(format!(
                    "sample {i} has {} features, expected {dim}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::Dataset(format!("sample {i} has a non-finite feature")));
            }
            max_norm = max_norm.max(x.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let scale = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
        let mut grouped: BTreeMap<i64, Vec<Vec<f64>>> = BTreeMap::new();
        for (label, x) in samples {
            grouped
                .entry(label)
                .or_default()
                .push(x.into_iter().map(|v| v * scale).collect());
        }
        let (labels, groups) = grouped.into_iter().unzip();
        Ok(Self { dim, labels, groups })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinct labels in ascending order.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Samples of the `i`-th label.
    pub fn group(&self, i: usize) -> &[Vec<f64>] {
        &self.groups[i]
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Loads a CSV file, or an IDX image file when `labels` names its IDX label file.
pub fn load_dataset(path: &Path, labels: Option<&Path>) -> Result<Dataset> {
    match labels {
        Some(lp) => load_idx(path, lp),
        None => load_csv(path),
    }
}

/// Reads `label,f1,...,fd` rows. A first line whose label does not parse is taken as a header.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| HarnessError::Dataset(format!("{}: {e}", path.display())))?;
        let mut fields = record.iter();
        let Some(label) = fields.next() else { continue };
        let label = match parse_label(label) {
            Some(l) => l,
            None if line == 0 => continue,
            None => {
                return Err(HarnessError::Dataset(format!(
                    "line {}: bad label {label:?}",
                    line + 1
                )))
            }
        };
        let features = fields
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    HarnessError::Dataset(format!("line {}: bad feature {f:?}", line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push((label, features));
    }
    Dataset::from_samples(samples)
}

fn parse_label(s: &str) -> Option<i64> {
    s.parse::<i64>().ok().or_else(|| {
        let f = s.parse::<f64>().ok()?;
        (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
    })
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], at: usize) -> Option<usize> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
}

/// Parses an unsigned-byte IDX file; returns the dimensions and the payload.
fn parse_idx(bytes: &[u8], path: &Path) -> Result<(Vec<usize>, Vec<u8>)> {
    let bad = |msg: &str| HarnessError::Dataset(format!("{}: {msg}", path.display()));
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(bad("not an IDX file"));
    }
    if bytes[2] != 0x08 {
        return Err(bad("only unsigned-byte IDX data is supported"));
    }
    let ndim = bytes[3] as usize;
    let dims = (0..ndim)
        .map(|i| be_u32(bytes, 4 + 4 * i).ok_or_else(|| bad("truncated header")))
        .collect::<Result<Vec<_>>>()?;
    let start = 4 + 4 * ndim;
    let count: usize = dims.iter().product();
    let payload = bytes
        .get(start..start + count)
        .ok_or_else(|| bad("truncated payload"))?;
    Ok((dims, payload.to_vec()))
}

/// Reads an IDX image file and its IDX label file.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let (idims, pixels) = parse_idx(&read_all(images)?, images)?;
    let (ldims, labs) = parse_idx(&read_all(labels)?, labels)?;
    if idims.is_empty() || ldims.len() != 1 || idims[0] != ldims[0] {
        return Err(HarnessError::Dataset(
            "image and label files disagree on the sample count".into(),
        ));
    }
    let n = idims[0];
    let dim: usize = idims[1..].iter().product();
    let samples = (0..n)
        .map(|i| {
            let x = pixels[i * dim..(i + 1) * dim].iter().map(|&p| p as f64).collect();
            (labs[i] as i64, x)
        })
        .collect();
    Dataset::from_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn csv_with_header_and_scaling() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "label,a,b").unwrap();
        writeln!(f, "1,3,4").unwrap();
        writeln!(f, "0,0,1").unwrap();
        writeln!(f, "1,0,0").unwrap();
        let ds = load_csv(f.path()).unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.dim(), 2);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(&ds.group(1)[0], &[0.6, 0.8]));
        assert!(close(&ds.group(0)[0], &[0.0, 0.2]));
    }

    #[test]
    fn ragged_csv_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "1,3,4").unwrap();
        writeln!(f, "0,1").unwrap();
        assert!(load_csv(f.path()).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv(Path::new("/nonexistent/x.csv")),
            Err(HarnessError::Io(_))
        ));
    }

    #[test]
    fn idx_roundtrip() {
        let mut img = tempfile::NamedTempFile::new().unwrap();
        img.write_all(&[0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2, 10, 0, 0, 5]).unwrap();
        let mut lab = tempfile::NamedTempFile::new().unwrap();
        lab.write_all(&[0, 0, 8, 1, 0, 0, 0, 2, 7, 3]).unwrap();
        let ds = load_idx(img.path(), lab.path()).unwrap();
        assert_eq!(ds.labels(), &[3, 7]);
        assert_eq!(ds.group(1)[0], vec![1.0, 0.0]);
        assert_eq!(ds.group(0)[0], vec![0.0, 0.5]);
    }
}
