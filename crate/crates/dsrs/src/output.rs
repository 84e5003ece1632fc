//! Results files, certified-accuracy tables and curve files.

use std::io::{self, Read, Write};

use dsrs_core::pipeline::{acr, certified_accuracy, AccuracyRow, CertResult, CurveRow, Method};
use dsrs_core::special::student_t_quantile;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Version column appended to results and table files.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

pub const RESULTS_COLUMNS: [&str; 9] = [
    "example_id",
    "method",
    "radius",
    "abstained",
    "correct",
    "pa_low",
    "qa_low",
    "qa_high",
    "schema_version",
];

pub const CURVE_COLUMNS: [&str; 3] = ["x", "np_value", "dsrs_value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ResultsFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Csv,
    Jsonl,
    Markdown,
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    example_id: String,
    method: String,
    radius: f64,
    abstained: bool,
    correct: bool,
    pa_low: f64,
    qa_low: f64,
    qa_high: f64,
    schema_version: u32,
}

impl From<&CertResult> for ResultRow {
    fn from(c: &CertResult) -> Self {
        ResultRow {
            example_id: c.example_id.clone(),
            method: c.method.as_str().to_owned(),
            radius: c.radius,
            abstained: c.abstained,
            correct: c.correct,
            pa_low: c.pa_low,
            qa_low: c.qa_low,
            qa_high: c.qa_high,
            schema_version: RESULTS_SCHEMA_VERSION,
        }
    }
}

impl TryFrom<ResultRow> for CertResult {
    type Error = String;

    fn try_from(r: ResultRow) -> Result<Self, String> {
        let method = Method::parse(&r.method).ok_or_else(|| format!("unknown method {:?}", r.method))?;
        if r.schema_version != RESULTS_SCHEMA_VERSION {
            return Err(format!("unsupported schema_version {}", r.schema_version));
        }
        if !(r.radius >= 0.0) || (r.abstained && r.radius != 0.0) {
            return Err(format!("invalid radius {} (abstained = {})", r.radius, r.abstained));
        }
        Ok(CertResult {
            example_id: r.example_id,
            method,
            radius: r.radius,
            abstained: r.abstained,
            correct: r.correct,
            pa_low: r.pa_low,
            qa_low: r.qa_low,
            qa_high: r.qa_high,
            wall_time: 0.0,
        })
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Per-example results. The header is always written, so an empty slice
/// gives a header-only CSV (and an empty JSONL file).
pub fn write_results<W: Write>(out: W, results: &[CertResult], format: ResultsFormat) -> io::Result<()> {
    match format {
        ResultsFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(RESULTS_COLUMNS).map_err(csv_err)?;
            for c in results {
                w.serialize(ResultRow::from(c)).map_err(csv_err)?;
            }
            w.flush()
        }
        ResultsFormat::Jsonl => {
            let mut out = out;
            for c in results {
                serde_json::to_writer(&mut out, &ResultRow::from(c))?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

/// Reads a results CSV written by [`write_results`].
pub fn read_results_csv<R: Read>(input: R) -> CliResult<Vec<CertResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ResultRow>().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let row = row.map_err(|e| CliError::validation(format!("line {line}: {e}")))?;
        out.push(CertResult::try_from(row).map_err(|e| CliError::validation(format!("line {line}: {e}")))?);
    }
    Ok(out)
}

pub fn write_curve<W: Write>(out: W, rows: &[CurveRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.x.to_string(), r.np_value.to_string(), r.dsrs_value.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()
}

/// One line of a certified-accuracy table: a setting, a method, and its
/// accuracy along the grid plus ACR, aggregated over `runs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub setting: String,
    pub method: Method,
    /// Empty for an aggregate row; the run's name otherwise.
    pub run: String,
    pub runs: usize,
    pub cells: Vec<AccuracyRow>,
    pub acr: f64,
    pub acr_half_width: Option<f64>,
}

/// Rows per method present in `runs`. With `per_run` each run gets its own
/// row; otherwise runs are pooled into mean and 95% interval.
pub fn build_table(
    setting: &str,
    runs: &[(String, Vec<CertResult>)],
    grid: &[f64],
    per_run: bool,
) -> CliResult<Vec<TableRow>> {
    let mut methods: Vec<Method> = runs.iter().flat_map(|(_, r)| r.iter().map(|c| c.method)).collect();
    methods.sort();
    methods.dedup();
    let mut rows = Vec::new();
    for method in methods {
        let split: Vec<(String, Vec<CertResult>)> = runs
            .iter()
            .map(|(name, r)| (name.clone(), r.iter().filter(|c| c.method == method).cloned().collect()))
            .collect();
        if per_run {
            for (name, r) in &split {
                rows.push(TableRow {
                    setting: setting.to_owned(),
                    method,
                    run: name.clone(),
                    runs: 1,
                    cells: certified_accuracy(&[r.as_slice()], grid)?,
                    acr: acr(r),
                    acr_half_width: None,
                });
            }
        } else {
            let slices: Vec<&[CertResult]> = split.iter().map(|(_, r)| r.as_slice()).collect();
            let acrs: Vec<f64> = slices.iter().map(|r| acr(r)).collect();
            let n = acrs.len();
            let mean = acrs.iter().sum::<f64>() / n.max(1) as f64;
            let acr_half_width = (n > 1).then(|| {
                let var = acrs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
                student_t_quantile(0.975, (n - 1) as f64) * (var / n as f64).sqrt()
            });
            rows.push(TableRow {
                setting: setting.to_owned(),
                method,
                run: String::new(),
                runs: n,
                cells: certified_accuracy(&slices, grid)?,
                acr: mean,
                acr_half_width,
            });
        }
    }
    Ok(rows)
}

fn percent(mean: f64, half: Option<f64>) -> String {
    match half {
        Some(h) => format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * h),
        None => format!("{:.2}", 100.0 * mean),
    }
}

fn plain(mean: f64, half: Option<f64>) -> String {
    match half {
        Some(h) => format!("{mean:.4} ± {h:.4}"),
        None => format!("{mean:.4}"),
    }
}

#[derive(Serialize)]
struct TableJson<'a> {
    setting: &'a str,
    method: &'a str,
    run: &'a str,
    runs: usize,
    radii: Vec<f64>,
    accuracy: Vec<f64>,
    half_width: Option<Vec<f64>>,
    acr: f64,
    acr_half_width: Option<f64>,
    schema_version: u32,
}

/// Writes table rows. Columns are the setting, method and run labels, one
/// column per grid radius (certified accuracy in percent), then ACR.
pub fn write_table<W: Write>(mut out: W, rows: &[TableRow], grid: &[f64], format: TableFormat) -> io::Result<()> {
    let radius_headers: Vec<String> = grid.iter().map(|r| format!("{r:.2}")).collect();
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["setting".to_owned(), "method".to_owned(), "run".to_owned()];
            header.extend(radius_headers);
            header.extend(["acr".to_owned(), "schema_version".to_owned()]);
            w.write_record(&header).map_err(csv_err)?;
            for row in rows {
                let mut rec = vec![row.setting.clone(), row.method.as_str().to_owned(), row.run.clone()];
                rec.extend(row.cells.iter().map(|c| percent(c.accuracy, c.half_width)));
                rec.push(plain(row.acr, row.acr_half_width));
                rec.push(RESULTS_SCHEMA_VERSION.to_string());
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()
        }
        TableFormat::Jsonl => {
            for row in rows {
                let json = TableJson {
                    setting: &row.setting,
                    method: row.method.as_str(),
                    run: &row.run,
                    runs: row.runs,
                    radii: row.cells.iter().map(|c| c.radius).collect(),
                    accuracy: row.cells.iter().map(|c| c.accuracy).collect(),
                    half_width: row.cells.iter().map(|c| c.half_width).collect(),
                    acr: row.acr,
                    acr_half_width: row.acr_half_width,
                    schema_version: RESULTS_SCHEMA_VERSION,
                };
                serde_json::to_writer(&mut out, &json)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
        TableFormat::Markdown => {
            let cols: Vec<String> = radius_headers.iter().map(|r| format!("r = {r}")).collect();
            writeln!(out, "| Setting | Method | Run | {} | ACR |", cols.join(" | "))?;
            writeln!(out, "|---|---|---|{}---|", "---|".repeat(cols.len()))?;
            for row in rows {
                let cells: Vec<String> = row.cells.iter().map(|c| percent(c.accuracy, c.half_width)).collect();
                let run = if row.run.is_empty() { format!("mean of {}", row.runs) } else { row.run.clone() };
                writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    row.setting,
                    row.method.as_str(),
                    run,
                    cells.join(" | "),
                    plain(row.acr, row.acr_half_width)
                )?;
            }
            out.flush()
        }
    }
}
