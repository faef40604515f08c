//! CSV artifacts. Every file starts with a comment header: `# twolevel <command> <version>`,
//! then `# key = value` for each effective setting, then `## key = value` for derived facts.

use std::fmt::Display;
use std::path::Path;

use twolevel_core::design::{DesignPoint, Surface};
use twolevel_core::estimators::ThresholdSelection;
use twolevel_core::risk::RiskReport;
use twolevel_core::sim::RegressionDataset;
use twolevel_core::FunctionSeries;

use crate::config::ConfigFile;
use crate::error::{AppError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub command: String,
    pub settings: Vec<(String, String)>,
    pub derived: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: impl Into<String>, settings: &[(String, String)]) -> Self {
        Header { command: command.into(), settings: settings.to_vec(), derived: Vec::new() }
    }

    pub fn derive(mut self, key: &str, value: impl Display) -> Self {
        self.derived.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = format!("# twolevel {} {VERSION}\n", self.command);
        for (k, v) in &self.settings {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for (k, v) in &self.derived {
            out.push_str(&format!("## {k} = {v}\n"));
        }
        out
    }
}

/// Reads the settings echoed in an artifact header: `(command, settings)`.
/// Returns `None` when the text does not start with an artifact header.
pub fn header_config(text: &str) -> Result<Option<(String, ConfigFile)>> {
    let mut lines = text.lines();
    let Some(first) = lines.next().and_then(|l| l.strip_prefix("# twolevel ")) else {
        return Ok(None);
    };
    let command = first.split_whitespace().next().unwrap_or("").to_string();
    let mut body = String::new();
    for line in lines {
        if line.starts_with("##") {
            continue;
        }
        match line.strip_prefix("# ") {
            Some(kv) => {
                body.push_str(kv);
                body.push('\n');
            }
            None => break,
        }
    }
    Ok(Some((command, ConfigFile::parse(&body)?)))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// Header followed by a CSV body.
fn csv_doc<I, R>(header: &Header, columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    header.render() + &body
}

/// Reader over a CSV body with `#` comments; checks the header names.
pub(crate) struct CsvRows {
    reader: csv::Reader<std::io::Cursor<Vec<u8>>>,
    positions: Vec<usize>,
}

impl CsvRows {
    pub(crate) fn new(text: &str, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(std::io::Cursor::new(text.as_bytes().to_vec()));
        let headers = reader.headers().map_err(csv_error)?.clone();
        let line = reader.position().line().max(1) as usize;
        let mut positions = Vec::with_capacity(required.len());
        let mut missing = Vec::new();
        for name in required {
            match headers.iter().position(|h| h == *name) {
                Some(p) => positions.push(p),
                None => missing.push(*name),
            }
        }
        if !missing.is_empty() {
            return Err(AppError::data(line, format!("missing columns: {}", missing.join(", "))));
        }
        Ok(CsvRows { reader, positions })
    }

    /// Next record as `(line, fields in required order)`.
    pub(crate) fn next_row(&mut self) -> Result<Option<(usize, Vec<String>)>> {
        let mut rec = csv::StringRecord::new();
        if !self.reader.read_record(&mut rec).map_err(csv_error)? {
            return Ok(None);
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fields = self
            .positions
            .iter()
            .map(|&p| {
                rec.get(p)
                    .map(str::to_string)
                    .ok_or_else(|| AppError::data(line, format!("expected at least {} fields", p + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((line, fields)))
    }
}

fn csv_error(e: csv::Error) -> AppError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    AppError::data(line, e.to_string())
}

pub(crate) fn parse_field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T>
where
    T::Err: Display,
{
    raw.parse().map_err(|e| AppError::data(line, format!("column `{name}`: cannot parse `{raw}`: {e}")))
}

pub(crate) fn parse_finite(line: usize, name: &str, raw: &str) -> Result<f64> {
    let v: f64 = parse_field(line, name, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AppError::data(line, format!("column `{name}`: value `{raw}` is not finite")))
    }
}

pub fn series_csv(header: &Header, series: &FunctionSeries) -> String {
    let rows = series
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| [(i + 1).to_string(), c.to_string()]);
    csv_doc(header, &["k", "coeff"], rows)
}

pub fn parse_series(text: &str) -> Result<FunctionSeries> {
    let mut rows = CsvRows::new(text, &["k", "coeff"])?;
    let mut coeffs: Vec<f64> = Vec::new();
    let mut last = 0usize;
    while let Some((line, f)) = rows.next_row()? {
        let k: usize = parse_field(line, "k", &f[0])?;
        if k <= last {
            return Err(AppError::data(line, "indices must be positive and strictly increasing"));
        }
        coeffs.resize(k, 0.0);
        coeffs[k - 1] = parse_finite(line, "coeff", &f[1])?;
        last = k;
    }
    Ok(FunctionSeries::new(coeffs)?)
}

pub fn threshold_csv(header: &Header, sel: &ThresholdSelection) -> String {
    let header = header.clone().derive("bound_inner", sel.bound_inner);
    let row = [
        sel.kind.as_str().to_string(),
        sel.k1.to_string(),
        sel.k2.to_string(),
        sel.tau1.to_string(),
        sel.tau2.to_string(),
        sel.bound_outer.to_string(),
    ];
    csv_doc(&header, &["kind", "k1", "k2", "tau1", "tau2", "bound"], [row])
}

pub fn dataset_csv(header: &Header, subjects: &[String], data: &RegressionDataset) -> String {
    let rows = data.subjects().zip(subjects).flat_map(|((t, y), id)| {
        t.iter().zip(y).map(move |(t, y)| [id.clone(), t.to_string(), y.to_string()])
    });
    csv_doc(header, &["subject", "t", "y"], rows)
}

/// Sequence-model rows `Y_k^{(j)}`.
pub fn sequence_csv(header: &Header, rows: &[Vec<f64>]) -> String {
    let body = rows.iter().enumerate().flat_map(|(j, r)| {
        r.iter().enumerate().map(move |(k, y)| [(j + 1).to_string(), (k + 1).to_string(), y.to_string()])
    });
    csv_doc(header, &["subject", "k", "y"], body)
}

/// Several series stacked as `subject,k,coeff`.
pub fn series_table_csv(header: &Header, series: &[FunctionSeries]) -> String {
    let body = series.iter().enumerate().flat_map(|(j, s)| {
        s.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(k, c)| [(j + 1).to_string(), (k + 1).to_string(), c.to_string()])
    });
    csv_doc(header, &["subject", "k", "coeff"], body)
}

pub fn reports_csv(header: &Header, reports: &[RiskReport]) -> String {
    let mut rows: Vec<(u64, usize, f64)> = reports
        .iter()
        .enumerate()
        .flat_map(|(e, r)| r.values.iter().map(move |&(rep, v)| (rep, e, v)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let body = rows
        .into_iter()
        .map(|(rep, e, v)| [rep.to_string(), reports[e].label.clone(), v.to_string()]);
    csv_doc(header, &["replicate", "estimator", "mise"], body)
}

pub const SUMMARY_COLUMNS: [&str; 10] =
    ["n", "m", "estimator", "count", "failures", "median", "mean", "q1", "q3", "mean_log"];

/// Summary fields of one report, aligned with [`SUMMARY_COLUMNS`].
pub fn summary_row(report: &RiskReport) -> Vec<String> {
    let mut row = vec![
        report.config.n.to_string(),
        report.config.m.to_string(),
        report.label.clone(),
        report.values.len().to_string(),
        report.failures.len().to_string(),
    ];
    match report.summary() {
        Some(s) => row.extend([s.median, s.mean, s.q1, s.q3, s.mean_log].map(|v| v.to_string())),
        None => row.extend(std::iter::repeat_n("NaN".to_string(), 5)),
    }
    row
}

pub fn summary_csv(header: &Header, reports: &[RiskReport]) -> String {
    csv_doc(header, &SUMMARY_COLUMNS, reports.iter().map(summary_row))
}

/// One summary record read back from a summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub n: u64,
    pub m: u64,
    pub estimator: String,
    pub median: f64,
    pub mean_log: f64,
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRecord>> {
    let mut rows = CsvRows::new(text, &["n", "m", "estimator", "median", "mean_log"])?;
    let mut out = Vec::new();
    while let Some((line, f)) = rows.next_row()? {
        out.push(SummaryRecord {
            n: parse_field(line, "n", &f[0])?,
            m: parse_field(line, "m", &f[1])?,
            estimator: f[2].clone(),
            median: parse_field(line, "median", &f[3])?,
            mean_log: parse_field(line, "mean_log", &f[4])?,
        });
    }
    Ok(out)
}

pub fn gradient_csv(header: &Header, points: &[DesignPoint]) -> String {
    let body = points.iter().map(|p| {
        [
            p.n.to_string(),
            p.m.to_string(),
            p.rate_g.to_string(),
            p.rate_f.to_string(),
            p.grad_g.d_n.to_string(),
            p.grad_g.d_m.to_string(),
            p.grad_f.d_n.to_string(),
            p.grad_f.d_m.to_string(),
            p.grad_g.steeper.as_str().to_string(),
            p.grad_f.steeper.as_str().to_string(),
        ]
    });
    csv_doc(
        header,
        &["n", "m", "rate_g", "rate_f", "dgdn", "dgdm", "dfdn", "dfdm", "steeper_g", "steeper_f"],
        body,
    )
}

/// Heatmap cells with their bin and the bin's edges.
pub fn heatmap_csv(header: &Header, surface: &Surface, bins: &twolevel_core::design::Bins) -> String {
    let body = surface.present().map(|(n, m, v)| {
        let c = bins.class_of(v);
        [
            n.to_string(),
            m.to_string(),
            v.to_string(),
            c.to_string(),
            bins.edges[c].to_string(),
            bins.edges[c + 1].to_string(),
        ]
    });
    csv_doc(header, &["n", "m", "value", "bin", "bin_lo", "bin_hi"], body)
}

/// Per-subject prediction errors of the two subject-level estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct RmspeRow {
    pub subject: String,
    pub single: f64,
    pub double: f64,
}

impl RmspeRow {
    /// Positive when the two-threshold estimator predicts better.
    pub fn diff(&self) -> f64 {
        self.single - self.double
    }
}

pub fn rmspe_csv(header: &Header, rows: &[RmspeRow]) -> String {
    let body = rows.iter().map(|r| {
        [r.subject.clone(), r.single.to_string(), r.double.to_string(), r.diff().to_string()]
    });
    csv_doc(header, &["subject", "rmspe_single", "rmspe_double", "diff"], body)
}

/// One-line digest of a comparison: size, wins of the two-threshold estimator, medians.
pub fn compare_summary_csv(header: &Header, rows: &[RmspeRow]) -> String {
    let med = |f: &dyn Fn(&RmspeRow) -> f64| {
        twolevel_core::risk::median(&rows.iter().map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN)
    };
    let wins = rows.iter().filter(|r| r.double < r.single).count();
    let frac = if rows.is_empty() { f64::NAN } else { wins as f64 / rows.len() as f64 };
    let row = [
        rows.len().to_string(),
        wins.to_string(),
        frac.to_string(),
        med(&|r| r.single).to_string(),
        med(&|r| r.double).to_string(),
        med(&|r| r.diff()).to_string(),
    ];
    csv_doc(
        header,
        &["subjects", "wins_double", "win_fraction", "median_single", "median_double", "median_diff"],
        [row],
    )
}

/// Generic CSV with a header, for tables that have no dedicated writer.
pub fn plain_csv<I, R>(header: &Header, columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    csv_doc(header, columns, rows)
}
