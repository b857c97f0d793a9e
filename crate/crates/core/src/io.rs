//! File formats: scenario documents (JSON), series and matrix tables (CSV), traces in table or
//! structured form, and the machine output of the calibration and analysis commands.
//!
//! Numbers are written in the shortest decimal form that parses back to the identical `f64`.

use crate::analysis::{InfluenceRanking, ObservationDesign, QualityPoint};
use crate::calibration::{CalibrationReport, RowNote};
use crate::error::{Error, ParseKind, Result};
use crate::model::{BranchCounts, SimulationTrace, TraceStep};
use crate::scenario::{Scenario, UtilitySpec, DEFAULT_HORIZON};
use crate::types::{
    influence_violations, InfluenceMatrix, ModelOptions, PerformanceVector, PolicyIntervention,
    SubsystemSet, UtilityMatrix,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

fn num(x: f64) -> String {
    format!("{x}")
}

fn syntax(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum UtilityDoc {
    Matrix(Vec<Vec<f64>>),
    Directive(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clamp: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eps_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalize_w: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subsystems: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r1: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<UtilityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<OptionsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<usize>,
}

/// Parses and fully validates a scenario document. Syntax errors carry line and column; every
/// semantic violation is collected into one [`Error::Validation`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(syntax)?;
    let mut errs = Vec::new();

    if doc.w0.is_none() {
        errs.push(
            "missing field w0: the strength update needs two consecutive performance snapshots (w0 and w1)"
                .to_string(),
        );
    }
    if doc.w1.is_none() {
        errs.push(
            "missing field w1: the strength update needs two consecutive performance snapshots (w0 and w1)"
                .to_string(),
        );
    }
    if doc.r1.is_none() {
        errs.push("missing field r1: the seed influence matrix is required".to_string());
    }

    let n = doc
        .r1
        .as_ref()
        .map(Vec::len)
        .or(doc.subsystems.as_ref().map(Vec::len))
        .or(doc.w1.as_ref().map(Vec::len))
        .or(doc.w0.as_ref().map(Vec::len))
        .unwrap_or(5);

    if let Some(r1) = &doc.r1 {
        for (i, row) in r1.iter().enumerate() {
            if row.len() != n {
                errs.push(format!(
                    "r1 row {i} has {} entries, expected {n}",
                    row.len()
                ));
            }
        }
    }
    let utility = match &doc.u {
        None => UtilitySpec::Calibrate,
        Some(UtilityDoc::Directive(s)) if s == "calibrate" => UtilitySpec::Calibrate,
        Some(UtilityDoc::Directive(s)) => {
            errs.push(format!("u must be a matrix or \"calibrate\", got {s:?}"));
            UtilitySpec::Calibrate
        }
        Some(UtilityDoc::Matrix(rows)) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                errs.push(format!("u must be {n}x{n}"));
                UtilitySpec::Calibrate
            } else {
                UtilitySpec::Fixed(UtilityMatrix::new(rows.clone())?)
            }
        }
    };

    let defaults = ModelOptions::default();
    let o = doc.options.unwrap_or_default();
    let options = ModelOptions {
        clamp: o.clamp.unwrap_or(defaults.clamp),
        eps_delta: o.eps_delta.unwrap_or(defaults.eps_delta),
        normalize_w: o.normalize_w.unwrap_or(defaults.normalize_w),
    };

    let mut policy = BTreeMap::new();
    for (key, emphasis) in doc.policy.unwrap_or_default() {
        match key.trim().parse::<u64>() {
            Ok(k) => {
                policy.insert(k, PolicyIntervention::new(emphasis, k as i64)?);
            }
            Err(_) => errs.push(format!("policy key {key:?} is not a step number")),
        }
    }

    let subsystems = match doc.subsystems {
        Some(names) => SubsystemSet::from_names_unchecked(names),
        None => SubsystemSet::default_sized(n),
    };

    if !errs.is_empty() {
        // Structural problems: still report value ranges of whatever is present.
        for (label, w) in [("w0", &doc.w0), ("w1", &doc.w1)] {
            if let Some(w) = w {
                if options.normalize_w {
                    for (i, x) in w.iter().enumerate() {
                        if !(0.0..=1.0).contains(x) {
                            errs.push(format!("{label}[{i}] = {x} is out of range [0, 1]"));
                        }
                    }
                }
            }
        }
        if let Some(r1) = &doc.r1 {
            errs.extend(influence_violations(r1, options.clamp, "r1"));
        }
        errs.extend(SubsystemSet::violations(subsystems.names()));
        return Err(Error::Validation(errs));
    }

    let r1 = doc.r1.unwrap_or_default();
    let scenario = Scenario {
        subsystems,
        w0: PerformanceVector::new(doc.w0.unwrap_or_default(), 0)?,
        w1: PerformanceVector::new(doc.w1.unwrap_or_default(), 1)?,
        r1: InfluenceMatrix::from_flat_unchecked(n, r1.into_iter().flatten().collect(), 1),
        utility,
        policy,
        options,
        horizon: doc.horizon.unwrap_or(DEFAULT_HORIZON),
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn write_scenario(s: &Scenario) -> String {
    let doc = ScenarioDoc {
        subsystems: Some(s.subsystems.names().to_vec()),
        w0: Some(s.w0.values().to_vec()),
        w1: Some(s.w1.values().to_vec()),
        r1: Some(s.r1.rows()),
        u: Some(match &s.utility {
            UtilitySpec::Fixed(u) => UtilityDoc::Matrix(u.rows()),
            UtilitySpec::Calibrate => UtilityDoc::Directive("calibrate".into()),
        }),
        policy: Some(
            s.policy
                .iter()
                .map(|(k, p)| (k.to_string(), p.emphasis().to_vec()))
                .collect(),
        ),
        options: Some(OptionsDoc {
            clamp: Some(s.options.clamp),
            eps_delta: Some(s.options.eps_delta),
            normalize_w: Some(s.options.normalize_w),
        }),
        horizon: Some(s.horizon),
    };
    to_json(&doc)
}

// ---------------------------------------------------------------------------
// Series table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: i64,
    pub w: Vec<f64>,
    pub ihdi: Option<f64>,
}

/// Observed performance per time step, optionally with the external index.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub names: Vec<String>,
    pub has_ihdi: bool,
    pub rows: Vec<SeriesRow>,
}

impl SeriesTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn performance(&self, k: usize) -> Result<PerformanceVector> {
        let row = &self.rows[k];
        PerformanceVector::new(row.w.clone(), row.t)
    }

    pub fn quality_points(&self) -> Result<Vec<QualityPoint>> {
        if !self.has_ihdi {
            return Err(Error::Invalid(
                "series has no IHDI column; the quality coefficient needs one".into(),
            ));
        }
        self.rows
            .iter()
            .map(|row| {
                let w = PerformanceVector::new(row.w.clone(), row.t)?;
                crate::analysis::quality_coefficient(&w, row.ihdi.unwrap_or(f64::NAN))
            })
            .collect()
    }
}

fn parse_err(kind: ParseKind, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        kind,
        line,
        message: message.into(),
    }
}

/// Reads CSV records with trimmed fields, returning `(line, fields)` pairs.
fn csv_records(text: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(ParseKind::Shape, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn cell_f64(s: &str, line: usize, column: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| {
            parse_err(
                ParseKind::NonNumeric,
                line,
                format!("column {column}: {s:?} is not a finite number"),
            )
        })
}

fn cell_t(s: &str, line: usize) -> Result<i64> {
    s.parse::<i64>().map_err(|_| {
        parse_err(
            ParseKind::NonNumeric,
            line,
            format!("column t: {s:?} is not an integer step"),
        )
    })
}

/// Parses a normalized series table `t,S1,...,Sn[,IHDI]`.
pub fn parse_series(text: &str) -> Result<SeriesTable> {
    parse_series_with(text, true)
}

pub fn parse_series_with(text: &str, normalized: bool) -> Result<SeriesTable> {
    let records = csv_records(text)?;
    let (header_line, header) = records.first().ok_or_else(|| {
        parse_err(
            ParseKind::MissingHeader,
            1,
            "empty input, expected a header",
        )
    })?;
    if !header[0].eq_ignore_ascii_case("t") {
        return Err(parse_err(
            ParseKind::MissingHeader,
            *header_line,
            format!("header must start with column t, found {:?}", header[0]),
        ));
    }
    let has_ihdi = header
        .last()
        .is_some_and(|c| c.eq_ignore_ascii_case("ihdi"));
    let names: Vec<String> = header[1..header.len() - usize::from(has_ihdi)].to_vec();
    if names.len() < 2 || names.iter().any(String::is_empty) {
        return Err(parse_err(
            ParseKind::MissingHeader,
            *header_line,
            "header needs at least two named subsystem columns",
        ));
    }
    let width = header.len();

    let mut rows: Vec<SeriesRow> = Vec::new();
    for (line, fields) in &records[1..] {
        if fields.len() != width {
            return Err(parse_err(
                ParseKind::Shape,
                *line,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let t = cell_t(&fields[0], *line)?;
        if let Some(prev) = rows.last() {
            if t <= prev.t {
                return Err(parse_err(
                    ParseKind::NonMonotone,
                    *line,
                    format!("t = {t} does not increase on t = {}", prev.t),
                ));
            }
        }
        let mut w = Vec::with_capacity(names.len());
        for (k, cell) in fields[1..=names.len()].iter().enumerate() {
            let x = cell_f64(cell, *line, &names[k])?;
            if normalized && !(0.0..=1.0).contains(&x) {
                return Err(parse_err(
                    ParseKind::Range,
                    *line,
                    format!("column {}: {x} is out of range [0, 1]", names[k]),
                ));
            }
            w.push(x);
        }
        let ihdi = if has_ihdi {
            let x = cell_f64(&fields[width - 1], *line, "IHDI")?;
            if !(x > 0.0 && x <= 1.0) {
                return Err(parse_err(
                    ParseKind::Range,
                    *line,
                    format!("column IHDI: {x} is out of range (0, 1]"),
                ));
            }
            Some(x)
        } else {
            None
        };
        rows.push(SeriesRow { t, w, ihdi });
    }
    Ok(SeriesTable {
        names,
        has_ihdi,
        rows,
    })
}

pub fn write_series(table: &SeriesTable) -> String {
    let mut out = String::from("t");
    for n in &table.names {
        out.push(',');
        out.push_str(n);
    }
    if table.has_ihdi {
        out.push_str(",IHDI");
    }
    out.push('\n');
    for row in &table.rows {
        let _ = write!(out, "{}", row.t);
        for x in &row.w {
            let _ = write!(out, ",{}", num(*x));
        }
        if let Some(i) = row.ihdi {
            let _ = write!(out, ",{}", num(i));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Matrix table
// ---------------------------------------------------------------------------

/// A square matrix as CSV: one header row of column labels, then one row per subsystem.
pub fn write_matrix(names: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = names.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| num(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a matrix table, returning the header labels and the rows.
pub fn parse_matrix(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let records = csv_records(text)?;
    let (header_line, header) = records.first().ok_or_else(|| {
        parse_err(
            ParseKind::MissingHeader,
            1,
            "empty input, expected a header",
        )
    })?;
    if header.iter().any(|c| c.parse::<f64>().is_ok()) {
        return Err(parse_err(
            ParseKind::MissingHeader,
            *header_line,
            "first row must hold column labels",
        ));
    }
    let n = header.len();
    let body = &records[1..];
    if body.len() != n {
        return Err(parse_err(
            ParseKind::Shape,
            *header_line,
            format!("matrix has {n} columns but {} rows", body.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (line, fields) in body {
        if fields.len() != n {
            return Err(parse_err(
                ParseKind::Shape,
                *line,
                format!("expected {n} fields, found {}", fields.len()),
            ));
        }
        rows.push(
            fields
                .iter()
                .zip(header)
                .map(|(c, h)| cell_f64(c, *line, h))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok((header.clone(), rows))
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// CSV, one row per step: `t,W1..Wn,R11..Rnn` in row-major order.
    Table,
    /// JSON with names, full matrices and branch diagnostics.
    Structured,
}

impl std::str::FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(TraceFormat::Table),
            "structured" => Ok(TraceFormat::Structured),
            other => Err(Error::Invalid(format!(
                "unknown trace format {other:?}, expected table or structured"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    one_zero: usize,
    equal: usize,
    ratio: usize,
    degenerate: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    t: i64,
    w: Vec<f64>,
    r: Vec<Vec<f64>>,
    branches: BranchDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    subsystems: Vec<String>,
    steps: Vec<StepDoc>,
}

pub fn trace_table_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=n {
        let _ = write!(h, ",W{i}");
    }
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(h, ",R{i}{j}");
        }
    }
    h
}

pub fn write_trace(trace: &SimulationTrace, format: TraceFormat) -> String {
    match format {
        TraceFormat::Table => {
            let mut out = trace_table_header(trace.subsystems().len());
            out.push('\n');
            for s in trace.steps() {
                let _ = write!(out, "{}", s.timestamp());
                for x in s.w.values().iter().chain(s.r.as_slice()) {
                    let _ = write!(out, ",{}", num(*x));
                }
                out.push('\n');
            }
            out
        }
        TraceFormat::Structured => to_json(&TraceDoc {
            subsystems: trace.subsystems().names().to_vec(),
            steps: trace
                .steps()
                .iter()
                .map(|s| StepDoc {
                    t: s.timestamp(),
                    w: s.w.values().to_vec(),
                    r: s.r.rows(),
                    branches: BranchDoc {
                        one_zero: s.branches.one_zero,
                        equal: s.branches.equal,
                        ratio: s.branches.ratio,
                        degenerate: s.branches.degenerate,
                    },
                })
                .collect(),
        }),
    }
}

/// Parses either trace format, detected from the first non-blank character.
pub fn parse_trace(text: &str) -> Result<SimulationTrace> {
    if text.trim_start().starts_with('{') {
        parse_trace_structured(text)
    } else {
        parse_trace_table(text)
    }
}

pub fn parse_trace_structured(text: &str) -> Result<SimulationTrace> {
    let doc: TraceDoc = serde_json::from_str(text).map_err(syntax)?;
    let subsystems = SubsystemSet::new(doc.subsystems)?;
    let steps = doc
        .steps
        .into_iter()
        .map(|s| {
            Ok(TraceStep {
                w: PerformanceVector::new(s.w, s.t)?,
                r: InfluenceMatrix::new(s.r, s.t)?,
                branches: BranchCounts {
                    one_zero: s.branches.one_zero,
                    equal: s.branches.equal,
                    ratio: s.branches.ratio,
                    degenerate: s.branches.degenerate,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SimulationTrace::new(subsystems, steps)
}

/// Parses the table form. Branch diagnostics are not part of the table and come back as zero;
/// subsystem names are the defaults for the detected size.
pub fn parse_trace_table(text: &str) -> Result<SimulationTrace> {
    let records = csv_records(text)?;
    let (header_line, header) = records.first().ok_or_else(|| {
        parse_err(
            ParseKind::MissingHeader,
            1,
            "empty input, expected a header",
        )
    })?;
    let cols = header.len();
    // cols = 1 + n + n²
    let n = (1..=64).find(|n| 1 + n + n * n == cols).ok_or_else(|| {
        parse_err(
            ParseKind::MissingHeader,
            *header_line,
            format!("{cols} columns do not match t,W1..Wn,R11..Rnn for any n"),
        )
    })?;
    let expected = trace_table_header(n);
    if header.join(",") != expected {
        return Err(parse_err(
            ParseKind::MissingHeader,
            *header_line,
            format!("header must be {expected}"),
        ));
    }
    let mut steps = Vec::with_capacity(records.len() - 1);
    for (line, fields) in &records[1..] {
        if fields.len() != cols {
            return Err(parse_err(
                ParseKind::Shape,
                *line,
                format!("expected {cols} fields, found {}", fields.len()),
            ));
        }
        let t = cell_t(&fields[0], *line)?;
        let values = fields[1..]
            .iter()
            .zip(&header[1..])
            .map(|(c, h)| cell_f64(c, *line, h))
            .collect::<Result<Vec<f64>>>()?;
        let r_rows = values[n..].chunks(n).map(<[f64]>::to_vec).collect();
        steps.push(TraceStep {
            w: PerformanceVector::new(values[..n].to_vec(), t)?,
            r: InfluenceMatrix::new(r_rows, t)?,
            branches: BranchCounts::default(),
        });
    }
    if let Some(w) = steps
        .windows(2)
        .find(|w| w[1].timestamp() != w[0].timestamp() + 1)
    {
        return Err(parse_err(
            ParseKind::NonMonotone,
            0,
            format!(
                "trace timestamps must advance by 1, {} follows {}",
                w[1].timestamp(),
                w[0].timestamp()
            ),
        ));
    }
    SimulationTrace::new(SubsystemSet::default_sized(n), steps)
}

// ---------------------------------------------------------------------------
// Command outputs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReportDoc {
    pub row: usize,
    pub name: String,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub tol: f64,
    pub rows: Vec<RowReportDoc>,
}

pub fn note_label(note: RowNote) -> &'static str {
    match note {
        RowNote::DegenerateRow => "degenerate-row",
        RowNote::UnreachableTarget => "unreachable-target",
        RowNote::NotConverged => "not-converged",
    }
}

impl ReportDoc {
    pub fn from_report(report: &CalibrationReport, names: &[String]) -> Self {
        Self {
            tol: report.tol,
            rows: report
                .rows
                .iter()
                .map(|r| RowReportDoc {
                    row: r.row,
                    name: names[r.row].clone(),
                    residual: r.residual,
                    iterations: r.iterations,
                    converged: r.converged,
                    note: r.note.map(|n| note_label(n).to_string()),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub t: i64,
    pub entries: Vec<Vec<f64>>,
}

/// Output of the tune command: weights used, tuned strengths at t-1, derived strengths at t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneDoc {
    pub subsystems: Vec<String>,
    pub policy: String,
    pub u: Vec<Vec<f64>>,
    pub r_prev: MatrixDoc,
    pub r_curr: MatrixDoc,
    pub report: ReportDoc,
}

pub fn write_tune(doc: &TuneDoc) -> String {
    to_json(doc)
}

pub fn parse_tune(text: &str) -> Result<TuneDoc> {
    serde_json::from_str(text).map_err(syntax)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankDoc {
    pub design: String,
    pub ranked: Vec<RankedDoc>,
    pub explained_variance: Vec<f64>,
    pub eigenvalues: Vec<f64>,
}

impl RankDoc {
    pub fn from_ranking(r: &InfluenceRanking) -> Self {
        Self {
            design: r.design.as_str().to_string(),
            ranked: r
                .ranked
                .iter()
                .enumerate()
                .map(|(k, s)| RankedDoc {
                    rank: k + 1,
                    index: s.index,
                    name: s.name.clone(),
                    loading: s.loading,
                })
                .collect(),
            explained_variance: r.explained_variance.clone(),
            eigenvalues: r.eigenvalues.clone(),
        }
    }

    pub fn design(&self) -> Result<ObservationDesign> {
        self.design.parse()
    }
}

pub fn write_rank(doc: &RankDoc) -> String {
    to_json(doc)
}

pub fn parse_rank(text: &str) -> Result<RankDoc> {
    serde_json::from_str(text).map_err(syntax)
}

pub const QC_HEADER: &str = "t,mean_w,ihdi,qc";

pub fn write_qc_table(points: &[QualityPoint]) -> String {
    let mut out = format!("{QC_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.timestamp,
            num(p.mean_w),
            num(p.ihdi),
            num(p.qc)
        );
    }
    out
}

pub fn parse_qc_table(text: &str) -> Result<Vec<QualityPoint>> {
    let records = csv_records(text)?;
    match records.first() {
        Some((_, h)) if h.join(",") == QC_HEADER => {}
        Some((line, _)) => {
            return Err(parse_err(
                ParseKind::MissingHeader,
                *line,
                format!("header must be {QC_HEADER}"),
            ))
        }
        None => return Err(parse_err(ParseKind::MissingHeader, 1, "empty input")),
    }
    records[1..]
        .iter()
        .map(|(line, f)| {
            if f.len() != 4 {
                return Err(parse_err(ParseKind::Shape, *line, "expected 4 fields"));
            }
            Ok(QualityPoint {
                timestamp: cell_t(&f[0], *line)?,
                mean_w: cell_f64(&f[1], *line, "mean_w")?,
                ihdi: cell_f64(&f[2], *line, "ihdi")?,
                qc: cell_f64(&f[3], *line, "qc")?,
            })
        })
        .collect()
}
