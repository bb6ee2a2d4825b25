use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact column order of the CSV report.
pub const CSV_COLUMNS: [&str; 9] = [
    "env_id",
    "algorithm",
    "seed",
    "iteration",
    "simple_regret",
    "joint_score",
    "pr1",
    "pr2",
    "wallclock_ms",
];

/// One metrics row: a trial evaluated at one cadence point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub env_id: String,
    pub algorithm: String,
    pub seed: u64,
    pub iteration: usize,
    /// Normalized simple regret; absent when no reference optimum exists.
    pub simple_regret: Option<f64>,
    /// Raw joint utility of the recommended (or executed) plan.
    pub joint_score: f64,
    pub pr1: u8,
    pub pr2: u8,
    /// Wallclock of the whole trial in milliseconds.
    pub wallclock_ms: u64,
}

/// Mean with a 95% normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let half = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            lower: mean - half,
            upper: mean + half,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Aggregate of all trials of one planner at one cadence point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub env_id: String,
    pub algorithm: String,
    pub iteration: usize,
    pub trials: usize,
    pub simple_regret: Option<Stat>,
    pub joint_score: Stat,
    pub pr1: Stat,
    pub pr2: Stat,
}

/// Per-(environment, algorithm, iteration) summaries, in first-seen
/// algorithm order and ascending iteration.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.env_id.clone(), r.algorithm.clone());
        let idx = order.iter().position(|k| *k == key).unwrap_or_else(|| {
            order.push(key);
            order.len() - 1
        });
        groups.entry((idx, r.iteration)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((idx, iteration), rows)| {
            let regrets: Option<Vec<f64>> = rows.iter().map(|r| r.simple_regret).collect();
            let col = |f: fn(&TrialRecord) -> f64| {
                Stat::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                env_id: order[idx].0.clone(),
                algorithm: order[idx].1.clone(),
                iteration,
                trials: rows.len(),
                simple_regret: regrets.map(|v| Stat::of(&v)),
                joint_score: col(|r| r.joint_score),
                pr1: col(|r| r.pr1 as f64),
                pr2: col(|r| r.pr2 as f64),
            }
        })
        .collect()
}

/// How the regret reference optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Exhaustive enumeration.
    Exact,
    /// Best known joint plan; regret is relative to a lower bound on the optimum.
    LowerBound,
    /// No reference; regret column is empty.
    None,
}

/// Records plus their summary, as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub reference: Reference,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

impl Report {
    pub fn new(records: Vec<TrialRecord>, reference: Reference) -> Self {
        let summary = summarize(&records);
        Self {
            reference,
            records,
            summary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown report format {other:?}"))),
        }
    }
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_string(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_json<W: Write>(report: &Report, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Report> {
    Ok(serde_json::from_reader(input)?)
}

/// Writes the report in the requested format. Empty record sets are rejected.
pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    if report.records.is_empty() {
        return Err(Error::InvalidConfig("no records to report".into()));
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Csv => write_csv(&report.records, &mut file)?,
        Format::Json => write_json(report, &mut file)?,
    }
    file.flush()?;
    Ok(())
}

/// Loads a CSV or JSON report, chosen by file extension (JSON otherwise
/// detected by a leading `{`).
pub fn load_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        read_json(text.as_bytes())
    } else {
        let records = read_csv(text.as_bytes())?;
        let reference = if records.iter().all(|r| r.simple_regret.is_none()) {
            Reference::None
        } else {
            Reference::Exact
        };
        Ok(Report::new(records, reference))
    }
}
