//! JSON-lines count files: one `CountRecord` per line.
//!
//! ```text
//! {"schema_version":1,"example_id":"ex-0001","label":3,"predicted":3,
//!  "n_selection":1000,"count_p":49811,"count_q":49967,"n_samples":50000,
//!  "noise":{"kind":"general-gaussian","sigma_p":0.5,"sigma_q":0.4,"k":380,"d":784},
//!  "seed":17}
//! ```

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use dsrs_core::pipeline::{CountRecord, NoiseConfig};
use dsrs_core::NoiseKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Version written to, and required in, every count line.
pub const COUNTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NoiseJson {
    kind: String,
    sigma_p: f64,
    sigma_q: f64,
    k: u32,
    d: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CountLine {
    schema_version: u32,
    example_id: String,
    label: u32,
    predicted: u32,
    n_selection: u64,
    count_p: u64,
    count_q: u64,
    n_samples: u64,
    noise: NoiseJson,
    seed: u64,
}

impl From<&CountRecord> for CountLine {
    fn from(r: &CountRecord) -> Self {
        CountLine {
            schema_version: COUNTS_SCHEMA_VERSION,
            example_id: r.example_id.clone(),
            label: r.label,
            predicted: r.predicted,
            n_selection: r.n_selection,
            count_p: r.count_p,
            count_q: r.count_q,
            n_samples: r.n_samples,
            noise: NoiseJson {
                kind: r.noise.kind.as_str().to_owned(),
                sigma_p: r.noise.sigma_p,
                sigma_q: r.noise.sigma_q,
                k: r.noise.k,
                d: r.noise.d,
            },
            seed: r.seed,
        }
    }
}

impl TryFrom<CountLine> for CountRecord {
    type Error = String;

    fn try_from(l: CountLine) -> Result<Self, String> {
        if l.schema_version != COUNTS_SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {COUNTS_SCHEMA_VERSION})",
                l.schema_version
            ));
        }
        let kind = NoiseKind::parse(&l.noise.kind).ok_or_else(|| format!("unknown noise kind {:?}", l.noise.kind))?;
        let rec = CountRecord {
            example_id: l.example_id,
            label: l.label,
            predicted: l.predicted,
            n_selection: l.n_selection,
            count_p: l.count_p,
            count_q: l.count_q,
            n_samples: l.n_samples,
            noise: NoiseConfig { kind, sigma_p: l.noise.sigma_p, sigma_q: l.noise.sigma_q, k: l.noise.k, d: l.noise.d },
            seed: l.seed,
        };
        rec.validate().map_err(|e| e.to_string())?;
        Ok(rec)
    }
}

/// A malformed line, numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parses and validates one line.
pub fn parse_line(line: &str) -> Result<CountRecord, String> {
    let raw: CountLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    CountRecord::try_from(raw)
}

/// Serializes one record without the trailing newline.
pub fn to_line(record: &CountRecord) -> String {
    serde_json::to_string(&CountLine::from(record)).expect("count lines always serialize")
}

/// Streaming reader: yields each record or the error for its line, skipping
/// blank lines. Read failures end the stream with an error item.
pub struct CountReader<R> {
    inner: R,
    line: usize,
    buf: String,
    done: bool,
}

impl<R: BufRead> CountReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, line: 0, buf: String::new(), done: false }
    }
}

impl<R: BufRead> Iterator for CountReader<R> {
    type Item = Result<CountRecord, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            self.line += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    let text = self.buf.trim();
                    if text.is_empty() {
                        continue;
                    }
                    return Some(parse_line(text).map_err(|message| LineError { line: self.line, message }));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(LineError { line: self.line, message: format!("read failed: {e}") }));
                }
            }
        }
        None
    }
}

/// Opens a count file for streaming.
pub fn parse_counts(path: &Path) -> CliResult<CountReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(CountReader::new(BufReader::new(file)))
}

pub fn write_counts<W: Write>(mut out: W, records: &[CountRecord]) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", to_line(r))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> CountRecord {
        CountRecord {
            example_id: "a\"b".into(),
            label: 2,
            predicted: 2,
            n_selection: 1000,
            count_p: 40,
            count_q: 41,
            n_samples: 50,
            noise: NoiseConfig { kind: NoiseKind::GeneralGaussian, sigma_p: 0.1 + 0.2, sigma_q: 0.4, k: 3, d: 10 },
            seed: u64::MAX,
        }
    }

    #[test]
    fn line_round_trip() {
        let r = record();
        assert_eq!(parse_line(&to_line(&r)).unwrap(), r);
    }

    #[test]
    fn rejects_bad_lines() {
        let good = to_line(&record());
        assert!(parse_line(&good.replace("\"count_p\":40", "\"count_p\":51")).unwrap_err().contains("exceed"));
        assert!(parse_line(&good.replace("general-gaussian", "laplace")).unwrap_err().contains("unknown noise kind"));
        assert!(parse_line(&good.replace("\"schema_version\":1", "\"schema_version\":9")).is_err());
        assert!(parse_line(&good.replace("\"label\":2,", "")).unwrap_err().contains("missing field `label`"));
        assert!(parse_line("{").is_err());
    }

    #[test]
    fn reader_numbers_lines_and_continues() {
        let good = to_line(&record());
        let text = format!("{good}\n\n{{\"oops\":1}}\n{good}\n");
        let items: Vec<_> = CountReader::new(text.as_bytes()).collect();
        assert_eq!(items.len(), 3);
        assert!(items[0].is_ok() && items[2].is_ok());
        assert_eq!(items[1].as_ref().unwrap_err().line, 3);
        assert_eq!(CountReader::new(&b""[..]).count(), 0);
    }
}
