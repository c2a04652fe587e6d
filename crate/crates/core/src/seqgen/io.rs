//! CSV (`n,re,im`) and binary (`OLAB1SEQ`, u64 LE length, f64 LE pairs) formats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{distinct_values, SequenceSample, MAX_ALPHABET};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"OLAB1SEQ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceFormat {
    Csv,
    Binary,
}

impl SequenceFormat {
    /// `.csv` means CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SequenceFormat::Csv,
            _ => SequenceFormat::Binary,
        }
    }
}

pub fn save_sequence(u: &SequenceSample, path: &Path, format: SequenceFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        SequenceFormat::Binary => {
            w.write_all(BINARY_MAGIC)?;
            w.write_all(&(u.len() as u64).to_le_bytes())?;
            for v in u.values() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        SequenceFormat::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            cw.write_record(["n", "re", "im"]).map_err(csv_io)?;
            for (i, v) in u.values().iter().enumerate() {
                cw.write_record([(i + 1).to_string(), v.re.to_string(), v.im.to_string()])
                    .map_err(csv_io)?;
            }
            cw.flush()?;
            return Ok(());
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Loads a sample. With `bound = None` the tightest bound is used; alphabets
/// are inferred when there are at most 256 distinct values.
pub fn load_sequence(path: &Path, format: SequenceFormat, bound: Option<f64>) -> Result<SequenceSample> {
    let values = match format {
        SequenceFormat::Binary => read_binary(path)?,
        SequenceFormat::Csv => read_csv(path)?,
    };
    let label = path.display().to_string();
    let bound = bound.unwrap_or_else(|| values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    let alphabet = distinct_values(&values, MAX_ALPHABET);
    SequenceSample::new(values, bound, alphabet, label)
}

fn read_binary(path: &Path) -> Result<Vec<Complex64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse { line: 0, message: "missing OLAB1SEQ magic".into() });
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word);
    let expected = n.checked_mul(16).and_then(|b| b.checked_add(16));
    let actual = std::fs::metadata(path)?.len();
    if expected != Some(actual) {
        return Err(Error::Parse {
            line: 0,
            message: format!("header declares {n} values but the file has {actual} bytes"),
        });
    }
    let mut values = Vec::with_capacity(n as usize);
    for _ in 0..n {
        r.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        values.push(Complex64::new(re, f64::from_le_bytes(word)));
    }
    Ok(values)
}

fn read_csv(path: &Path) -> Result<Vec<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(csv_io)?;
    let mut values = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", rec.len()) });
        }
        let field = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| Error::Parse { line, message: format!("field {}: {e}", i + 1) })
        };
        let n: u64 = rec[0]
            .parse()
            .map_err(|e| Error::Parse { line, message: format!("index: {e}") })?;
        let expected = values.len() as u64 + 1;
        if n != expected {
            return Err(Error::validation(format!(
                "line {line}: index {n} out of sequence (expected {expected}); indices must run 1, 2, 3, …"
            )));
        }
        values.push(Complex64::new(field(1)?, field(2)?));
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::mobius;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mu.bin");
        let mu = mobius(1000).unwrap();
        save_sequence(&mu, &p, SequenceFormat::Binary).unwrap();
        let back = load_sequence(&p, SequenceFormat::Binary, Some(1.0)).unwrap();
        assert_eq!(back.values(), mu.values());
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"OLAB1SEQ");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1000);
        assert_eq!(bytes.len(), 16 + 16 * 1000);
    }

    #[test]
    fn csv_with_header_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "n,re,im\n1, 1.0, 0.0\n2,-1.0,0.0\n3, 0.0, 1.0\n").unwrap();
        let u = load_sequence(&p, SequenceFormat::Csv, None).unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u.get(3), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn csv_bound_violation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "1,0.5,0.0\n2,0.5,0.0\n3, 2.0, 0.0\n").unwrap();
        let err = load_sequence(&p, SequenceFormat::Csv, Some(1.0)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        std::fs::write(&p, "n,re,im\n1,1.0,0.0\n2,abc,0.0\n").unwrap();
        match load_sequence(&p, SequenceFormat::Csv, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        std::fs::write(&p, "1,1.0,0.0\n3,1.0,0.0\n").unwrap();
        let err = load_sequence(&p, SequenceFormat::Csv, None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        let u = crate::seqgen::linear_phase(50, 0.1234).unwrap();
        save_sequence(&u, &p, SequenceFormat::Csv).unwrap();
        let back = load_sequence(&p, SequenceFormat::from_path(&p), Some(1.0)).unwrap();
        assert_eq!(back.values(), u.values());
    }
}
