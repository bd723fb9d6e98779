//! Engine-internal chart description and row filters.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_number, parse_temporal, Dataset, Value, VarType};
use crate::encoding::{Aggregate, Channel, EncodingError, MarkType, TimeUnit};

/// A chart: mark, one encoding per channel, filters, and the data it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisSpec {
    pub mark: MarkType,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stacked: bool,
    pub encodings: BTreeMap<Channel, EncodingDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<FilterClause>,
    pub data_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(rename = "type")]
    pub var_type: VarType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, rename = "timeUnit", skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<TimeUnit>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bin: bool,
}

impl VisSpec {
    pub fn with_filters(mut self, filters: &[FilterClause]) -> VisSpec {
        self.transforms = filters.to_vec();
        self
    }

    /// Distinct variables referenced by the encodings, in channel order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for def in self.encodings.values() {
            if let Some(f) = def.field.as_deref() {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }

    /// Short human-readable identifier, e.g. `line x=year(DATE) y=mean(TEMP_MAX)`.
    pub fn label(&self) -> String {
        let mut out = self.mark.as_str().to_string();
        if self.stacked {
            out.push_str("(stacked)");
        }
        for (channel, def) in &self.encodings {
            out.push(' ');
            out.push_str(channel.as_str());
            out.push('=');
            out.push_str(&def.to_string());
        }
        out
    }
}

impl fmt::Display for EncodingDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.field.as_deref().unwrap_or("*");
        let inner = match self.time_unit {
            Some(tu) => format!("{}({name})", tu.as_str()),
            None if self.bin => format!("bin({name})"),
            None => name.to_string(),
        };
        match self.aggregate {
            Some(agg) => write!(f, "{}({inner})", agg.as_str()),
            None => f.write_str(&inner),
        }
    }
}

/// A literal in a filter predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn as_text(&self) -> String {
        match self {
            Scalar::Number(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }

    fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(v) => Some(*v),
            Scalar::Text(s) => parse_number(s),
        }
    }

    pub(crate) fn as_timestamp(&self) -> Option<NaiveDateTime> {
        match self {
            Scalar::Number(v) if v.fract() == 0.0 => parse_temporal(&format!("{v:04}")),
            Scalar::Number(_) => None,
            Scalar::Text(s) => parse_temporal(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Equals(Scalar),
    In(Vec<Scalar>),
    Range(Scalar, Scalar),
    YearEquals(i32),
}

/// Session-level row filter, serialized as e.g. `{"variable":"DATE","year_equals":2008}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterClause {
    pub variable: String,
    #[serde(flatten)]
    pub predicate: Predicate,
}

impl FilterClause {
    pub fn new(variable: impl Into<String>, predicate: Predicate) -> FilterClause {
        FilterClause {
            variable: variable.into(),
            predicate,
        }
    }

    pub fn validate(&self, d: &Dataset) -> Result<(), EncodingError> {
        let t = d
            .effective_type(&self.variable)
            .map_err(|_| EncodingError::UnknownVariable(self.variable.clone()))?;
        let invalid = |reason: &str| EncodingError::InvalidFilter {
            variable: self.variable.clone(),
            reason: reason.to_string(),
        };
        let literal_ok = |s: &Scalar| match t {
            VarType::Quantitative => s.as_number().is_some(),
            VarType::Temporal => s.as_timestamp().is_some(),
            VarType::Nominal | VarType::Ordinal => true,
        };
        match &self.predicate {
            Predicate::Equals(v) if !literal_ok(v) => Err(invalid("literal does not match the variable type")),
            Predicate::In(vs) if !vs.iter().all(literal_ok) => {
                Err(invalid("literal does not match the variable type"))
            }
            Predicate::Range(..) if t.is_discrete() && t != VarType::Temporal => {
                Err(invalid("range needs a quantitative or temporal variable"))
            }
            Predicate::Range(lo, hi) if !literal_ok(lo) || !literal_ok(hi) => {
                Err(invalid("range bounds do not match the variable type"))
            }
            Predicate::YearEquals(_) if t != VarType::Temporal => {
                Err(invalid("year_equals needs a temporal variable"))
            }
            _ => Ok(()),
        }
    }

    /// Whether a row passes. Missing or unparseable cells never pass.
    pub fn matches(&self, d: &Dataset, row: usize) -> bool {
        let Some(column) = d.index_of(&self.variable) else {
            return false;
        };
        let value = d.value(row, column);
        let eq = |s: &Scalar| match value {
            Value::Number(v) => s.as_number() == Some(v),
            Value::Timestamp(t) => s.as_timestamp() == Some(t),
            Value::Text(text) => s.as_text() == text,
            Value::Missing => false,
        };
        match &self.predicate {
            Predicate::Equals(s) => eq(s),
            Predicate::In(set) => set.iter().any(eq),
            Predicate::Range(lo, hi) => match value {
                Value::Number(v) => {
                    matches!((lo.as_number(), hi.as_number()), (Some(a), Some(b)) if a <= v && v <= b)
                }
                Value::Timestamp(t) => {
                    matches!((lo.as_timestamp(), hi.as_timestamp()), (Some(a), Some(b)) if a <= t && t <= b)
                }
                _ => false,
            },
            Predicate::YearEquals(year) => matches!(value, Value::Timestamp(t) if t.year() == *year),
        }
    }
}

/// Row indices passing every filter.
pub fn filtered_rows(d: &Dataset, filters: &[FilterClause]) -> Vec<usize> {
    (0..d.row_count())
        .filter(|&r| filters.iter().all(|f| f.matches(d, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CsvOptions;

    fn weatherish() -> Dataset {
        Dataset::from_csv(
            b"DATE,LOCATION,WIND\n2008-03-01,Seattle,2.5\n2009-01-01,New York,3.5\n2008-12-31,Seattle,\n",
            &CsvOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn filter_json_shape() {
        let f = FilterClause::new("DATE", Predicate::YearEquals(2008));
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"variable":"DATE","year_equals":2008}"#);
        let r: FilterClause = serde_json::from_str(r#"{"variable":"WIND","range":[1,3]}"#).unwrap();
        assert_eq!(r.predicate, Predicate::Range(Scalar::Number(1.0), Scalar::Number(3.0)));
    }

    #[test]
    fn filter_matching() {
        let d = weatherish();
        let year = FilterClause::new("DATE", Predicate::YearEquals(2008));
        assert_eq!(filtered_rows(&d, &[year]), vec![0, 2]);
        let wind = FilterClause::new("WIND", Predicate::Range(Scalar::Number(2.0), Scalar::Number(3.0)));
        assert_eq!(filtered_rows(&d, &[wind]), vec![0]);
        let city = FilterClause::new(
            "LOCATION",
            Predicate::In(vec![Scalar::Text("New York".into())]),
        );
        assert_eq!(filtered_rows(&d, &[city]), vec![1]);
        let dates = FilterClause::new(
            "DATE",
            Predicate::Range(Scalar::Text("2008-06-01".into()), Scalar::Text("2009-06-01".into())),
        );
        assert_eq!(filtered_rows(&d, &[dates]), vec![1, 2]);
    }

    #[test]
    fn filter_type_checks() {
        let d = weatherish();
        assert!(FilterClause::new("LOCATION", Predicate::YearEquals(2008)).validate(&d).is_err());
        assert!(FilterClause::new(
            "LOCATION",
            Predicate::Range(Scalar::Number(0.0), Scalar::Number(1.0))
        )
        .validate(&d)
        .is_err());
        assert!(FilterClause::new("WIND", Predicate::Equals(Scalar::Text("calm".into())))
            .validate(&d)
            .is_err());
        assert!(FilterClause::new("nope", Predicate::YearEquals(1)).validate(&d).is_err());
        assert!(FilterClause::new("DATE", Predicate::YearEquals(2008)).validate(&d).is_ok());
    }
}
