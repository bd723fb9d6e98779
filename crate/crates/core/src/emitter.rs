//! Vega-Lite serialization of [`VisSpec`] and structural validation of the result.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::dataset::{format_timestamp, parse_number, Dataset, VarType};
use crate::encoding::{Aggregate, Channel, MarkType, TimeUnit};
use crate::spec::{EncodingDef, FilterClause, Predicate, Scalar, VisSpec};

/// Datasets up to this many rows are embedded in emitted documents.
pub const INLINE_ROW_LIMIT: usize = 5_000;
/// Bin count used for histogram-style axes.
pub const MAX_BINS: u32 = 10;

const MARKS: [&str; 7] = ["bar", "line", "area", "point", "tick", "boxplot", "rect"];
const CHANNELS: [&str; 7] = ["x", "y", "color", "shape", "size", "row", "column"];
const TYPES: [&str; 4] = ["quantitative", "nominal", "ordinal", "temporal"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("dangling field `{0}`: not a variable of the dataset")]
    DanglingField(String),
    #[error("cannot read document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaVersion {
    V4,
    #[default]
    V5,
}

impl SchemaVersion {
    pub fn url(self) -> &'static str {
        match self {
            SchemaVersion::V4 => "https://vega.github.io/schema/vega-lite/v4.json",
            SchemaVersion::V5 => "https://vega.github.io/schema/vega-lite/v5.json",
        }
    }
}

impl FromStr for SchemaVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v4" | "4" => Ok(SchemaVersion::V4),
            "v5" | "5" => Ok(SchemaVersion::V5),
            other => Err(format!("unsupported schema version `{other}` (expected v4 or v5)")),
        }
    }
}

/// How the emitted document refers to its data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataMode {
    /// Embed rows when the dataset is small enough, otherwise fall back to the URL.
    #[default]
    Inline,
    /// Always reference the spec's `data_ref` as a URL.
    Url,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    pub schema: SchemaVersion,
    pub data: DataMode,
}

impl EmitOptions {
    pub fn url(schema: SchemaVersion) -> EmitOptions {
        EmitOptions {
            schema,
            data: DataMode::Url,
        }
    }
}

/// Builds the Vega-Lite document. Keys come out as `$schema`, `data`, `transform`,
/// `mark`, `encoding`.
pub fn to_vegalite(spec: &VisSpec, d: &Dataset, options: EmitOptions) -> Result<Json, EmitError> {
    for name in spec
        .variables()
        .into_iter()
        .chain(spec.transforms.iter().map(|f| f.variable.as_str()))
    {
        if d.index_of(name).is_none() {
            return Err(EmitError::DanglingField(name.to_string()));
        }
    }

    let mut doc = Map::new();
    doc.insert("$schema".into(), json!(options.schema.url()));
    let inline = options.data == DataMode::Inline && d.row_count() <= INLINE_ROW_LIMIT;
    doc.insert(
        "data".into(),
        if inline {
            json!({ "values": inline_values(d) })
        } else {
            json!({ "url": spec.data_ref })
        },
    );
    if !spec.transforms.is_empty() {
        let transforms: Vec<Json> = spec
            .transforms
            .iter()
            .map(|f| json!({ "filter": filter_predicate(f, d) }))
            .collect();
        doc.insert("transform".into(), Json::Array(transforms));
    }
    doc.insert("mark".into(), json!(mark_name(spec.mark)));

    let stack_channel = spec.stacked.then(|| stack_channel(&spec.encodings));
    let mut encoding = Map::new();
    for (channel, def) in &spec.encodings {
        let mut entry = Map::new();
        if let Some(field) = &def.field {
            entry.insert("field".into(), json!(field));
        }
        entry.insert("type".into(), json!(def.var_type.as_str()));
        if let Some(agg) = def.aggregate {
            entry.insert("aggregate".into(), json!(agg.as_str()));
        }
        if let Some(unit) = def.time_unit {
            entry.insert("timeUnit".into(), json!(unit.as_str()));
        }
        if def.bin {
            entry.insert("bin".into(), json!({ "maxbins": MAX_BINS }));
        }
        if stack_channel == Some(*channel) {
            entry.insert("stack".into(), json!("zero"));
        }
        encoding.insert(channel.as_str().into(), Json::Object(entry));
    }
    doc.insert("encoding".into(), Json::Object(encoding));
    Ok(Json::Object(doc))
}

/// Compact for API responses, two-space indentation otherwise.
pub fn render(doc: &Json, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(doc).expect("json values always serialize")
    } else {
        doc.to_string()
    }
}

fn mark_name(mark: MarkType) -> &'static str {
    match mark {
        MarkType::Histogram => "bar",
        other => other.as_str(),
    }
}

/// The positional channel carrying the summarized measure.
fn stack_channel(encodings: &BTreeMap<Channel, EncodingDef>) -> Channel {
    [Channel::Y, Channel::X]
        .into_iter()
        .find(|c| encodings.get(c).is_some_and(|e| e.aggregate.is_some()))
        .unwrap_or(Channel::Y)
}

fn inline_values(d: &Dataset) -> Vec<Json> {
    let vars = d.variables();
    (0..d.row_count())
        .map(|row| {
            let mut obj = Map::new();
            for (column, var) in vars.iter().enumerate() {
                let cell = d.raw(row, column);
                let value = match (cell, var.effective_type) {
                    (None, _) => Json::Null,
                    (Some(text), VarType::Quantitative | VarType::Ordinal) => parse_number(text)
                        .map(|n| json!(n))
                        .unwrap_or_else(|| match var.effective_type {
                            VarType::Ordinal => json!(text),
                            _ => Json::Null,
                        }),
                    (Some(text), _) => json!(text),
                };
                obj.insert(var.name.clone(), value);
            }
            Json::Object(obj)
        })
        .collect()
}

fn date_time(t: NaiveDateTime) -> Json {
    let mut obj = Map::new();
    obj.insert("year".into(), json!(t.year()));
    obj.insert("month".into(), json!(t.month()));
    obj.insert("date".into(), json!(t.day()));
    if t.time() != chrono::NaiveTime::MIN {
        obj.insert("hours".into(), json!(t.hour()));
        obj.insert("minutes".into(), json!(t.minute()));
        obj.insert("seconds".into(), json!(t.second()));
    }
    Json::Object(obj)
}

fn literal(s: &Scalar, t: VarType) -> Json {
    match (t, s) {
        (VarType::Temporal, s) => s.as_timestamp().map(date_time).unwrap_or(Json::Null),
        (_, Scalar::Number(v)) => json!(v),
        (_, Scalar::Text(text)) => json!(text),
    }
}

fn filter_predicate(f: &FilterClause, d: &Dataset) -> Json {
    let t = d.effective_type(&f.variable).unwrap_or(VarType::Nominal);
    let mut obj = Map::new();
    obj.insert("field".into(), json!(f.variable));
    match &f.predicate {
        Predicate::Equals(v) => {
            obj.insert("equal".into(), literal(v, t));
        }
        Predicate::In(vs) => {
            let vs: Vec<Json> = vs.iter().map(|v| literal(v, t)).collect();
            obj.insert("oneOf".into(), Json::Array(vs));
        }
        Predicate::Range(lo, hi) => {
            obj.insert("range".into(), json!([literal(lo, t), literal(hi, t)]));
        }
        Predicate::YearEquals(year) => {
            obj.insert("timeUnit".into(), json!("year"));
            obj.insert("equal".into(), json!(year));
        }
    }
    Json::Object(obj)
}

/// Recovers the channel encodings from an emitted document.
pub fn parse_encoding(doc: &Json) -> Result<BTreeMap<Channel, EncodingDef>, EmitError> {
    let bad = |msg: String| EmitError::Malformed(msg);
    let encoding = doc
        .get("encoding")
        .and_then(Json::as_object)
        .ok_or_else(|| bad("missing encoding".into()))?;
    let mut out = BTreeMap::new();
    for (name, entry) in encoding {
        let channel: Channel = name.parse().map_err(|_| bad(format!("unknown channel `{name}`")))?;
        let text = |key: &str| entry.get(key).and_then(Json::as_str);
        let var_type: VarType = text("type")
            .ok_or_else(|| bad(format!("{name}: missing type")))?
            .parse()
            .map_err(|_| bad(format!("{name}: bad type")))?;
        let aggregate = text("aggregate")
            .map(str::parse::<Aggregate>)
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        let time_unit = text("timeUnit")
            .map(str::parse::<TimeUnit>)
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        let bin = entry
            .get("bin")
            .is_some_and(|b| b.as_bool().unwrap_or(b.is_object()));
        out.insert(
            channel,
            EncodingDef {
                field: text("field").map(str::to_string),
                var_type,
                aggregate,
                time_unit,
                bin,
            },
        );
    }
    Ok(out)
}

/// Inverse of [`to_vegalite`]. Documents with embedded rows take `data_ref` as their handle.
pub fn parse_vegalite(doc: &Json, data_ref: &str) -> Result<VisSpec, EmitError> {
    let bad = |msg: &str| EmitError::Malformed(msg.to_string());
    let violations = validate(doc);
    if let Some(v) = violations.first() {
        return Err(EmitError::Malformed(v.to_string()));
    }
    let encodings = parse_encoding(doc)?;
    let mark_text = match &doc["mark"] {
        Json::String(s) => s.as_str(),
        other => other["type"].as_str().ok_or_else(|| bad("mark"))?,
    };
    let mut mark: MarkType = mark_text.parse().map_err(|_| bad("mark"))?;
    if mark == MarkType::Bar
        && [Channel::X, Channel::Y]
            .iter()
            .any(|c| encodings.get(c).is_some_and(|e| e.bin))
    {
        mark = MarkType::Histogram;
    }
    let stacked = doc["encoding"]
        .as_object()
        .is_some_and(|e| e.values().any(|v| v.get("stack").and_then(Json::as_str) == Some("zero")));

    let mut transforms = Vec::new();
    for entry in doc.get("transform").and_then(Json::as_array).into_iter().flatten() {
        transforms.push(parse_filter(&entry["filter"])?);
    }
    let data_ref = doc["data"]["url"].as_str().unwrap_or(data_ref).to_string();
    Ok(VisSpec {
        mark,
        stacked,
        encodings,
        transforms,
        data_ref,
    })
}

fn parse_scalar(v: &Json) -> Result<Scalar, EmitError> {
    match v {
        Json::Number(n) => Ok(Scalar::Number(n.as_f64().unwrap_or_default())),
        Json::String(s) => Ok(Scalar::Text(s.clone())),
        Json::Object(obj) => {
            let part = |k: &str, default: u64| obj.get(k).and_then(Json::as_u64).unwrap_or(default) as u32;
            let year = obj.get("year").and_then(Json::as_i64).unwrap_or(1970) as i32;
            let t = chrono::NaiveDate::from_ymd_opt(year, part("month", 1), part("date", 1))
                .and_then(|d| d.and_hms_opt(part("hours", 0), part("minutes", 0), part("seconds", 0)))
                .ok_or_else(|| EmitError::Malformed("invalid date-time literal".into()))?;
            Ok(Scalar::Text(format_timestamp(t)))
        }
        _ => Err(EmitError::Malformed("unsupported filter literal".into())),
    }
}

fn parse_filter(pred: &Json) -> Result<FilterClause, EmitError> {
    let bad = |msg: &str| EmitError::Malformed(msg.to_string());
    let variable = pred["field"].as_str().ok_or_else(|| bad("filter without field"))?;
    let predicate = if pred.get("timeUnit").is_some() {
        let year = pred["equal"].as_i64().ok_or_else(|| bad("year filter"))?;
        Predicate::YearEquals(year as i32)
    } else if let Some(v) = pred.get("equal") {
        Predicate::Equals(parse_scalar(v)?)
    } else if let Some(vs) = pred.get("oneOf").and_then(Json::as_array) {
        Predicate::In(vs.iter().map(parse_scalar).collect::<Result<_, _>>()?)
    } else if let Some([lo, hi]) = pred.get("range").and_then(Json::as_array).map(Vec::as_slice) {
        Predicate::Range(parse_scalar(lo)?, parse_scalar(hi)?)
    } else {
        return Err(bad("unsupported filter predicate"));
    };
    Ok(FilterClause::new(variable, predicate))
}

/// One structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Checks a document against the subset of Vega-Lite this engine emits.
pub fn validate(doc: &Json) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: &str, message: String| {
        out.push(Violation {
            path: path.to_string(),
            message,
        })
    };
    let Some(root) = doc.as_object() else {
        push("", "document is not an object".into());
        return out;
    };
    for key in root.keys() {
        if !["$schema", "data", "transform", "mark", "encoding", "title", "description", "width", "height"]
            .contains(&key.as_str())
        {
            push(key, format!("unknown top-level property `{key}`"));
        }
    }
    if let Some(schema) = root.get("$schema") {
        if !schema
            .as_str()
            .is_some_and(|s| s.starts_with("https://vega.github.io/schema/vega-lite/"))
        {
            push("$schema", "not a Vega-Lite schema URL".into());
        }
    }
    if let Some(data) = root.get("data") {
        let ok = match data.as_object() {
            Some(obj) if obj.len() == 1 => match obj.iter().next() {
                Some((k, Json::Array(rows))) if k == "values" => rows.iter().all(Json::is_object),
                Some((k, Json::String(_))) => k == "url" || k == "name",
                _ => false,
            },
            _ => false,
        };
        if !ok {
            push("data", "expected exactly one of values (array of objects), url or name".into());
        }
    }
    if let Some(transform) = root.get("transform") {
        match transform.as_array() {
            None => push("transform", "expected an array".into()),
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    let path = format!("transform[{i}]");
                    match item.get("filter").and_then(Json::as_object) {
                        None => push(&path, "expected a filter transform".into()),
                        Some(pred) => {
                            if !pred.get("field").is_some_and(Json::is_string) {
                                push(&path, "filter without field".into());
                            }
                            let ops = ["equal", "oneOf", "range"]
                                .iter()
                                .filter(|k| pred.contains_key(**k))
                                .count();
                            if ops != 1 {
                                push(&path, "filter needs exactly one of equal, oneOf, range".into());
                            }
                            if let Some(unit) = pred.get("timeUnit") {
                                if !unit.as_str().is_some_and(|u| u == "year" || u == "month") {
                                    push(&path, "unsupported timeUnit".into());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    match root.get("mark") {
        None => push("", "missing mark".into()),
        Some(mark) => {
            let name = mark.as_str().or_else(|| mark.get("type").and_then(Json::as_str));
            if !name.is_some_and(|n| MARKS.contains(&n)) {
                push("mark", format!("unsupported mark {mark}"));
            }
        }
    }
    match root.get("encoding").map(Json::as_object) {
        None => push("", "missing encoding".into()),
        Some(None) => push("encoding", "expected an object".into()),
        Some(Some(encoding)) => {
            for (name, entry) in encoding {
                let path = format!("encoding.{name}");
                if !CHANNELS.contains(&name.as_str()) {
                    push(&path, format!("unknown channel `{name}`"));
                    continue;
                }
                let Some(entry) = entry.as_object() else {
                    push(&path, "expected an object".into());
                    continue;
                };
                for key in entry.keys() {
                    if !["field", "type", "aggregate", "timeUnit", "bin", "stack", "title"]
                        .contains(&key.as_str())
                    {
                        push(&path, format!("unknown property `{key}`"));
                    }
                }
                if !entry
                    .get("type")
                    .and_then(Json::as_str)
                    .is_some_and(|t| TYPES.contains(&t))
                {
                    push(&path, "missing or invalid type".into());
                }
                let aggregate = entry.get("aggregate").map(|a| a.as_str().unwrap_or(""));
                if let Some(a) = aggregate {
                    if !["mean", "count", "sum"].contains(&a) {
                        push(&path, format!("unsupported aggregate `{a}`"));
                    }
                }
                if !entry.get("field").is_some_and(Json::is_string) && aggregate != Some("count") {
                    push(&path, "field required unless counting".into());
                }
                if let Some(unit) = entry.get("timeUnit") {
                    if !unit.as_str().is_some_and(|u| u == "year" || u == "month") {
                        push(&path, "unsupported timeUnit".into());
                    }
                }
                if let Some(bin) = entry.get("bin") {
                    let ok = bin.is_boolean()
                        || bin
                            .get("maxbins")
                            .and_then(Json::as_u64)
                            .is_some_and(|n| n > 0);
                    if !ok {
                        push(&path, "bin must be a boolean or {maxbins}".into());
                    }
                }
                if let Some(stack) = entry.get("stack") {
                    let ok = stack.is_null()
                        || stack.is_boolean()
                        || stack.as_str().is_some_and(|s| s == "zero" || s == "normalize");
                    if !ok {
                        push(&path, "unsupported stack".into());
                    }
                }
            }
        }
    }
    out
}
