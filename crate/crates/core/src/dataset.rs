//! Tabular data ingestion and variable typing.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Share of non-missing cells that must parse for a numeric or temporal reading.
const PARSE_SHARE: f64 = 0.95;
/// Integer columns with at most this many distinct values may be ordinal.
const ORDINAL_MAX_DISTINCT: usize = 20;
/// Maximum number of categories reported by [`Dataset::column_stats`].
pub const CATEGORY_CAP: usize = 1_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("header cell {column} is empty")]
    EmptyName { column: usize },
    #[error("invalid UTF-8 in row {row}")]
    InvalidUtf8 { row: usize },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown variable type `{0}`")]
    UnknownType(String),
}

/// Statistical role of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Quantitative,
    Nominal,
    Ordinal,
    Temporal,
}

impl VarType {
    pub const ALL: [VarType; 4] = [
        VarType::Quantitative,
        VarType::Nominal,
        VarType::Ordinal,
        VarType::Temporal,
    ];

    /// Color token used wherever the variable is displayed.
    pub fn color(self) -> &'static str {
        match self {
            VarType::Quantitative => "blue",
            VarType::Nominal => "green",
            VarType::Ordinal => "orange",
            VarType::Temporal => "yellow",
        }
    }

    pub fn letter(self) -> char {
        match self {
            VarType::Quantitative => 'Q',
            VarType::Nominal => 'N',
            VarType::Ordinal => 'O',
            VarType::Temporal => 'T',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Quantitative => "quantitative",
            VarType::Nominal => "nominal",
            VarType::Ordinal => "ordinal",
            VarType::Temporal => "temporal",
        }
    }

    pub fn is_discrete(self) -> bool {
        !matches!(self, VarType::Quantitative)
    }
}

impl fmt::Display for VarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VarType {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "q" | "quantitative" => Ok(VarType::Quantitative),
            "n" | "nominal" => Ok(VarType::Nominal),
            "o" | "ordinal" => Ok(VarType::Ordinal),
            "t" | "temporal" => Ok(VarType::Temporal),
            _ => Err(DatasetError::UnknownType(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub inferred_type: VarType,
    pub effective_type: VarType,
}

impl Variable {
    pub fn display_color(&self) -> &'static str {
        self.effective_type.color()
    }
}

/// A cell interpreted under its variable's effective type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Number(f64),
    Text(&'a str),
    Timestamp(NaiveDateTime),
    Missing,
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    /// Handle used when specs reference the data by URL.
    pub name: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            has_header: true,
            name: "data.csv".to_string(),
        }
    }
}

type Row = Vec<Option<String>>;

/// An immutable parsed table. Cells are kept verbatim; typing is a view.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    variables: Vec<Variable>,
    rows: Arc<Vec<Row>>,
}

impl Dataset {
    /// Parses delimited text. Variables start out nominal until [`Dataset::infer_types`] runs.
    pub fn parse_csv(bytes: &[u8], options: &CsvOptions) -> Result<Dataset, DatasetError> {
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Err(DatasetError::EmptyDataset);
        }
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(options.delimiter)
            .has_headers(false)
            .flexible(true)
            .from_reader(bytes);

        let mut records = reader.byte_records();
        let header = match records.next() {
            Some(rec) => rec.map_err(csv_error)?,
            None => return Err(DatasetError::EmptyDataset),
        };

        let mut pending_first = None;
        let names: Vec<String> = if options.has_header {
            let mut seen = HashSet::new();
            let mut names = Vec::with_capacity(header.len());
            for (column, cell) in header.iter().enumerate() {
                let name = std::str::from_utf8(cell)
                    .map_err(|_| DatasetError::InvalidUtf8 { row: 0 })?
                    .trim()
                    .to_string();
                if name.is_empty() {
                    return Err(DatasetError::EmptyName { column });
                }
                if !seen.insert(name.clone()) {
                    return Err(DatasetError::DuplicateName(name));
                }
                names.push(name);
            }
            names
        } else {
            pending_first = Some(header.clone());
            (1..=header.len()).map(|i| format!("field_{i}")).collect()
        };

        let mut rows = Vec::new();
        let first = pending_first.map(Ok);
        for (index, record) in first.into_iter().chain(records).enumerate() {
            let record = record.map_err(csv_error)?;
            let row = index + 1;
            if record.len() != names.len() {
                // A blank trailing line shows up as a single empty field.
                if record.len() == 1 && record.get(0).is_some_and(<[u8]>::is_empty) {
                    continue;
                }
                return Err(DatasetError::RaggedRow {
                    row,
                    expected: names.len(),
                    found: record.len(),
                });
            }
            let mut cells = Vec::with_capacity(record.len());
            for cell in record.iter() {
                let text =
                    std::str::from_utf8(cell).map_err(|_| DatasetError::InvalidUtf8 { row })?;
                cells.push(if text.trim().is_empty() {
                    None
                } else {
                    Some(text.to_string())
                });
            }
            rows.push(cells);
        }
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }

        let variables = names
            .into_iter()
            .map(|name| Variable {
                name,
                inferred_type: VarType::Nominal,
                effective_type: VarType::Nominal,
            })
            .collect();
        Ok(Dataset {
            name: options.name.clone(),
            variables,
            rows: Arc::new(rows),
        })
    }

    /// Parse and infer in one step.
    pub fn from_csv(bytes: &[u8], options: &CsvOptions) -> Result<Dataset, DatasetError> {
        Ok(Dataset::parse_csv(bytes, options)?.infer_types())
    }

    /// Assigns every variable a type using the inference ladder and resets overrides.
    pub fn infer_types(mut self) -> Dataset {
        for (column, var) in self.variables.iter_mut().enumerate() {
            let inferred = infer_column(self.rows.iter().filter_map(|r| r[column].as_deref()));
            var.inferred_type = inferred;
            var.effective_type = inferred;
        }
        self
    }

    pub fn override_type(&self, name: &str, to: VarType) -> Result<Dataset, DatasetError> {
        let column = self.require(name)?;
        let mut next = self.clone();
        next.variables[column].effective_type = to;
        Ok(next)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize, DatasetError> {
        self.index_of(name)
            .ok_or_else(|| DatasetError::UnknownVariable(name.to_string()))
    }

    pub fn effective_type(&self, name: &str) -> Result<VarType, DatasetError> {
        Ok(self.variables[self.require(name)?].effective_type)
    }

    pub fn raw(&self, row: usize, column: usize) -> Option<&str> {
        self.rows[row][column].as_deref()
    }

    /// Reads a cell under the variable's effective type. Unparseable cells read as missing.
    pub fn value(&self, row: usize, column: usize) -> Value<'_> {
        let Some(text) = self.raw(row, column) else {
            return Value::Missing;
        };
        match self.variables[column].effective_type {
            VarType::Quantitative => parse_number(text).map_or(Value::Missing, Value::Number),
            VarType::Temporal => parse_temporal(text).map_or(Value::Missing, Value::Timestamp),
            VarType::Nominal | VarType::Ordinal => Value::Text(text),
        }
    }

    pub fn column_stats(&self, name: &str) -> Result<ColumnStats, DatasetError> {
        let column = self.require(name)?;
        let var_type = self.variables[column].effective_type;
        let mut stats = ColumnStats {
            variable: name.to_string(),
            var_type,
            distinct: 0,
            missing: 0,
            min: None,
            max: None,
            categories: None,
            truncated: false,
        };
        match var_type {
            VarType::Quantitative => {
                let mut seen = HashSet::new();
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for row in 0..self.row_count() {
                    match self.value(row, column) {
                        Value::Number(v) => {
                            seen.insert((v + 0.0).to_bits());
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                        _ => stats.missing += 1,
                    }
                }
                stats.distinct = seen.len();
                if !seen.is_empty() {
                    stats.min = Some(serde_json::json!(lo));
                    stats.max = Some(serde_json::json!(hi));
                }
            }
            VarType::Temporal => {
                let mut seen = BTreeSet::new();
                for row in 0..self.row_count() {
                    match self.value(row, column) {
                        Value::Timestamp(t) => {
                            seen.insert(t);
                        }
                        _ => stats.missing += 1,
                    }
                }
                stats.distinct = seen.len();
                stats.min = seen.first().map(|t| format_timestamp(*t).into());
                stats.max = seen.last().map(|t| format_timestamp(*t).into());
            }
            VarType::Nominal | VarType::Ordinal => {
                let categories = self.categories(column);
                stats.missing = self.rows.iter().filter(|r| r[column].is_none()).count();
                stats.distinct = categories.len();
                stats.truncated = categories.len() > CATEGORY_CAP;
                stats.categories = Some(categories.into_iter().take(CATEGORY_CAP).collect());
            }
        }
        Ok(stats)
    }

    /// Distinct non-missing texts of a column: numeric order when every value is a number,
    /// lexicographic otherwise.
    pub fn categories(&self, column: usize) -> Vec<String> {
        let distinct: BTreeSet<&str> = self.rows.iter().filter_map(|r| r[column].as_deref()).collect();
        let mut out: Vec<String> = distinct.into_iter().map(str::to_string).collect();
        if out.iter().all(|c| parse_number(c).is_some()) {
            out.sort_by(|a, b| parse_number(a).unwrap().total_cmp(&parse_number(b).unwrap()));
        }
        out
    }

    /// Writes the table back out as comma-separated text.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        writer.write_record(&header).expect("in-memory write");
        for row in self.rows.iter() {
            writer
                .write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// JSON listing of the variables: `{variables:[{name,inferred_type,effective_type,color}], row_count}`.
    pub fn summary(&self) -> serde_json::Value {
        let variables: Vec<serde_json::Value> = self
            .variables
            .iter()
            .map(|v| {
                serde_json::json!({
                    "name": v.name,
                    "inferred_type": v.inferred_type,
                    "effective_type": v.effective_type,
                    "color": v.display_color(),
                })
            })
            .collect();
        serde_json::json!({ "variables": variables, "row_count": self.row_count() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub variable: String,
    pub var_type: VarType,
    pub distinct: usize,
    pub missing: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    pub truncated: bool,
}

fn csv_error(err: csv::Error) -> DatasetError {
    match err.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => DatasetError::InvalidUtf8 {
            row: pos.as_ref().map_or(0, |p| p.record() as usize),
        },
        _ => DatasetError::Csv(err.to_string()),
    }
}

fn infer_column<'a>(cells: impl Iterator<Item = &'a str>) -> VarType {
    let cells: Vec<&str> = cells.collect();
    if cells.is_empty() {
        return VarType::Nominal;
    }
    let needed = PARSE_SHARE * cells.len() as f64;

    let temporal = cells.iter().filter(|c| parse_iso_datetime(c).is_some()).count();
    if temporal as f64 >= needed {
        return VarType::Temporal;
    }

    let numbers: Vec<f64> = cells.iter().filter_map(|c| parse_number(c)).collect();
    if (numbers.len() as f64) < needed {
        return VarType::Nominal;
    }
    let fractional = numbers.iter().any(|v| v.fract() != 0.0);
    let mut distinct: Vec<f64> = numbers.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if fractional || distinct.len() > ORDINAL_MAX_DISTINCT {
        return VarType::Quantitative;
    }
    if numbers.len() == cells.len() {
        let contiguous = distinct.windows(2).all(|w| w[1] - w[0] == 1.0);
        let ascending = numbers.windows(2).all(|w| w[0] <= w[1]);
        let descending = numbers.windows(2).all(|w| w[0] >= w[1]);
        if contiguous || ascending || descending {
            return VarType::Ordinal;
        }
    }
    VarType::Nominal
}

pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    // Rust accepts "inf"/"nan" spellings; tabular data should not.
    if t.is_empty() || t.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E') {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Strict ISO-8601 date or date-time, as used by type inference.
pub fn parse_iso_datetime(text: &str) -> Option<NaiveDateTime> {
    let t = text.trim();
    if let Ok(d) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(t, fmt) {
            return Some(dt);
        }
    }
    DateTime::parse_from_rfc3339(t).ok().map(|dt| dt.naive_utc())
}

/// Lenient temporal reading for variables typed temporal: ISO forms plus `YYYY-MM` and bare years.
pub fn parse_temporal(text: &str) -> Option<NaiveDateTime> {
    if let Some(dt) = parse_iso_datetime(text) {
        return Some(dt);
    }
    let t = text.trim();
    if let Ok(d) = NaiveDate::parse_from_str(&format!("{t}-01"), "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    if t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()) {
        return NaiveDate::from_ymd_opt(t.parse().ok()?, 1, 1)?.and_hms_opt(0, 0, 0);
    }
    None
}

/// `YYYY-MM-DD` at midnight, `YYYY-MM-DDTHH:MM:SS` otherwise.
pub fn format_timestamp(t: NaiveDateTime) -> String {
    if t.time() == chrono::NaiveTime::MIN {
        t.format("%Y-%m-%d").to_string()
    } else {
        t.format("%Y-%m-%dT%H:%M:%S").to_string()
    }
}

/// Number of distinct calendar years touched by a temporal column.
pub fn calendar_years(d: &Dataset, column: usize) -> usize {
    let years: BTreeSet<i32> = (0..d.row_count())
        .filter_map(|r| match d.value(r, column) {
            Value::Timestamp(t) => Some(t.year()),
            _ => None,
        })
        .collect();
    years.len()
}
