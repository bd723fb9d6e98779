//! Manual channel mapping and the chart-selection rules applied to it.
//!
//! A [`ChannelMap`] holds what the user dragged onto the seven visual
//! dimensions. [`ChannelMap::build_spec`] turns it into a [`VisSpec`]: the
//! positional variable types pick the mark from the type table, and missing
//! summaries (counts, means, time units) are filled in first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{calendar_years, Dataset, VarType};
use crate::spec::{EncodingDef, VisSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("channel unavailable: `{0}` needs a variable on x or y first")]
    ChannelUnavailable(Channel),
    #[error("invalid field modifier on `{channel}`: {reason}")]
    InvalidModifier { channel: Channel, reason: String },
    #[error("channel `{channel}` does not accept {var_type} fields")]
    IncompatibleChannel { channel: Channel, var_type: VarType },
    #[error("no mapping: nothing is assigned to x or y")]
    NoMapping,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid filter on `{variable}`: {reason}")]
    InvalidFilter { variable: String, reason: String },
    #[error("gating violated: non-positional channels are assigned while x and y are empty")]
    Gating,
    #[error("unknown {kind} `{value}`")]
    Parse { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Color,
    Shape,
    Size,
    Row,
    Column,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::X,
        Channel::Y,
        Channel::Color,
        Channel::Shape,
        Channel::Size,
        Channel::Row,
        Channel::Column,
    ];

    pub fn is_positional(self) -> bool {
        matches!(self, Channel::X | Channel::Y)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Shape => "shape",
            Channel::Size => "size",
            Channel::Row => "row",
            Channel::Column => "column",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EncodingError::Parse {
                kind: "channel",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Mean,
    Count,
    Sum,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Mean => "mean",
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
        }
    }
}

impl FromStr for Aggregate {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" | "average" => Ok(Aggregate::Mean),
            "count" => Ok(Aggregate::Count),
            "sum" => Ok(Aggregate::Sum),
            _ => Err(EncodingError::Parse {
                kind: "aggregate",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Year,
    Month,
}

impl TimeUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Year => "year",
            TimeUnit::Month => "month",
        }
    }

    /// Year when the column touches at least two calendar years, month otherwise.
    pub fn default_for(d: &Dataset, variable: &str) -> TimeUnit {
        match d.index_of(variable) {
            Some(column) if calendar_years(d, column) >= 2 => TimeUnit::Year,
            Some(_) => TimeUnit::Month,
            None => TimeUnit::Year,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "year" | "years" => Ok(TimeUnit::Year),
            "month" | "months" => Ok(TimeUnit::Month),
            _ => Err(EncodingError::Parse {
                kind: "time unit",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Bar,
    Line,
    Area,
    Point,
    Tick,
    Boxplot,
    Rect,
    /// Bar over a binned quantitative field.
    Histogram,
}

impl MarkType {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkType::Bar => "bar",
            MarkType::Line => "line",
            MarkType::Area => "area",
            MarkType::Point => "point",
            MarkType::Tick => "tick",
            MarkType::Boxplot => "boxplot",
            MarkType::Rect => "rect",
            MarkType::Histogram => "histogram",
        }
    }
}

impl FromStr for MarkType {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use MarkType::*;
        [Bar, Line, Area, Point, Tick, Boxplot, Rect, Histogram]
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| EncodingError::Parse {
                kind: "mark",
                value: s.to_string(),
            })
    }
}

/// A variable (or the synthetic record count) with optional summary modifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, rename = "timeUnit", skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<TimeUnit>,
}

impl FieldRef {
    pub fn var(name: impl Into<String>) -> FieldRef {
        FieldRef {
            field: Some(name.into()),
            aggregate: None,
            time_unit: None,
        }
    }

    pub fn count() -> FieldRef {
        FieldRef {
            field: None,
            aggregate: Some(Aggregate::Count),
            time_unit: None,
        }
    }

    pub fn mean(name: impl Into<String>) -> FieldRef {
        FieldRef::var(name).with_aggregate(Aggregate::Mean)
    }

    pub fn with_aggregate(mut self, aggregate: Aggregate) -> FieldRef {
        self.aggregate = Some(aggregate);
        self
    }

    pub fn with_time_unit(mut self, unit: TimeUnit) -> FieldRef {
        self.time_unit = Some(unit);
        self
    }

    pub fn is_count(&self) -> bool {
        self.field.is_none()
    }

    /// Type of the values this field contributes to the chart.
    fn encoded_type(&self, d: &Dataset) -> Result<VarType, EncodingError> {
        match &self.field {
            None => Ok(VarType::Quantitative),
            Some(name) => d
                .effective_type(name)
                .map_err(|_| EncodingError::UnknownVariable(name.clone())),
        }
    }

    /// Checks modifiers against the variable type and the channel's accepted types.
    pub fn check(&self, channel: Channel, d: &Dataset) -> Result<(), EncodingError> {
        let modifier = |reason: &str| EncodingError::InvalidModifier {
            channel,
            reason: reason.to_string(),
        };
        let t = self.encoded_type(d)?;
        match (&self.field, self.aggregate) {
            (None, Some(Aggregate::Count)) => {}
            (None, _) => return Err(modifier("a field-less entry must be a count")),
            (Some(_), Some(Aggregate::Count)) => {
                return Err(modifier("count takes no field"));
            }
            (Some(_), Some(Aggregate::Mean | Aggregate::Sum)) if t != VarType::Quantitative => {
                return Err(modifier("mean and sum need a quantitative variable"));
            }
            _ => {}
        }
        if self.time_unit.is_some() && (self.field.is_none() || t != VarType::Temporal) {
            return Err(modifier("time units need a temporal variable"));
        }
        let accepted = match channel {
            Channel::X | Channel::Y | Channel::Color => true,
            Channel::Shape => matches!(t, VarType::Nominal | VarType::Ordinal) && !self.is_count(),
            Channel::Size => t == VarType::Quantitative,
            Channel::Row | Channel::Column => match t {
                VarType::Nominal | VarType::Ordinal => true,
                VarType::Temporal => self.time_unit.is_some(),
                VarType::Quantitative => false,
            },
        };
        if accepted {
            Ok(())
        } else {
            Err(EncodingError::IncompatibleChannel {
                channel,
                var_type: t,
            })
        }
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = self.field.clone().unwrap_or_else(|| "*".to_string());
        if let Some(unit) = self.time_unit {
            out = format!("{}({out})", unit.as_str());
        }
        if let Some(agg) = self.aggregate {
            out = format!("{}({out})", agg.as_str());
        }
        f.write_str(&out)
    }
}

/// Marks for the type combination on x and y, most preferred first.
pub fn select_mark(types: &[VarType]) -> Result<&'static [MarkType], EncodingError> {
    use MarkType::*;
    use VarType::*;
    const TREND: &[MarkType] = &[Line, Bar, Area];
    let mut key = types.to_vec();
    key.sort();
    Ok(match key.as_slice() {
        [Quantitative] => &[Area, Histogram],
        [Nominal] => &[Bar],
        [Ordinal] | [Temporal] => TREND,
        [Quantitative, Quantitative] => &[Point],
        [Quantitative, Nominal] => &[Boxplot, Tick],
        [Quantitative, Ordinal] | [Quantitative, Temporal] => TREND,
        [Nominal | Ordinal | Temporal, Nominal | Ordinal | Temporal] => &[Rect],
        _ => return Err(EncodingError::NoMapping),
    })
}

/// Assignment of fields to the seven visual dimensions, plus an optional mark choice.
///
/// Deserialization enforces the gating rule; dataset-dependent checks happen in
/// [`ChannelMap::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawChannelMap")]
pub struct ChannelMap {
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    color: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<FieldRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mark: Option<MarkType>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    stack: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannelMap {
    x: Option<FieldRef>,
    y: Option<FieldRef>,
    color: Option<FieldRef>,
    shape: Option<FieldRef>,
    size: Option<FieldRef>,
    row: Option<FieldRef>,
    column: Option<FieldRef>,
    mark: Option<MarkType>,
    #[serde(default)]
    stack: bool,
}

impl TryFrom<RawChannelMap> for ChannelMap {
    type Error = EncodingError;

    fn try_from(raw: RawChannelMap) -> Result<Self, Self::Error> {
        let map = ChannelMap {
            x: raw.x,
            y: raw.y,
            color: raw.color,
            shape: raw.shape,
            size: raw.size,
            row: raw.row,
            column: raw.column,
            mark: raw.mark,
            stack: raw.stack,
        };
        if map.is_gated() {
            Ok(map)
        } else {
            Err(EncodingError::Gating)
        }
    }
}

impl ChannelMap {
    pub fn new() -> ChannelMap {
        ChannelMap::default()
    }

    pub fn get(&self, channel: Channel) -> Option<&FieldRef> {
        self.slot(channel).as_ref()
    }

    fn slot(&self, channel: Channel) -> &Option<FieldRef> {
        match channel {
            Channel::X => &self.x,
            Channel::Y => &self.y,
            Channel::Color => &self.color,
            Channel::Shape => &self.shape,
            Channel::Size => &self.size,
            Channel::Row => &self.row,
            Channel::Column => &self.column,
        }
    }

    fn slot_mut(&mut self, channel: Channel) -> &mut Option<FieldRef> {
        match channel {
            Channel::X => &mut self.x,
            Channel::Y => &mut self.y,
            Channel::Color => &mut self.color,
            Channel::Shape => &mut self.shape,
            Channel::Size => &mut self.size,
            Channel::Row => &mut self.row,
            Channel::Column => &mut self.column,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, &FieldRef)> {
        Channel::ALL
            .into_iter()
            .filter_map(|c| self.get(c).map(|f| (c, f)))
    }

    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    pub fn mark(&self) -> Option<MarkType> {
        self.mark
    }

    pub fn stacked(&self) -> bool {
        self.stack
    }

    pub fn with_mark(mut self, mark: Option<MarkType>) -> ChannelMap {
        self.mark = mark;
        self
    }

    pub fn with_stack(mut self, stack: bool) -> ChannelMap {
        self.stack = stack;
        self
    }

    fn has_position(&self) -> bool {
        self.x.is_some() || self.y.is_some()
    }

    /// The gating rule: without x or y, nothing else may be assigned.
    pub fn is_gated(&self) -> bool {
        self.has_position() || self.is_empty()
    }

    pub fn available_channels(&self) -> Vec<Channel> {
        if self.has_position() {
            Channel::ALL.to_vec()
        } else {
            vec![Channel::X, Channel::Y]
        }
    }

    /// Returns a map with `channel` holding `field`. Manual edits drop any mark choice.
    pub fn assign(
        &self,
        channel: Channel,
        field: FieldRef,
        d: &Dataset,
    ) -> Result<ChannelMap, EncodingError> {
        if !self.available_channels().contains(&channel) {
            return Err(EncodingError::ChannelUnavailable(channel));
        }
        field.check(channel, d)?;
        let mut next = self.clone();
        *next.slot_mut(channel) = Some(field);
        next.mark = None;
        next.stack = false;
        Ok(next)
    }

    /// Unassigns `channel`; emptying both axes clears every other channel too.
    pub fn clear(&self, channel: Channel) -> ChannelMap {
        let mut next = self.clone();
        *next.slot_mut(channel) = None;
        if !next.has_position() {
            next = ChannelMap::default();
        }
        next.mark = None;
        next.stack = false;
        next
    }

    /// Full check against a dataset: gating, variable existence, modifiers and channel types.
    pub fn validate(&self, d: &Dataset) -> Result<(), EncodingError> {
        if !self.is_gated() {
            return Err(EncodingError::Gating);
        }
        self.iter().try_for_each(|(c, f)| f.check(c, d))
    }

    /// Distinct variables in channel order.
    pub fn selection(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (_, f) in self.iter() {
            if let Some(name) = &f.field {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        out
    }

    fn positional_var(&self, channel: Channel, d: &Dataset) -> Option<VarType> {
        let name = self.get(channel)?.field.as_deref()?;
        d.effective_type(name).ok()
    }

    /// Types of the variable-backed fields on x and y (the synthetic count is skipped).
    pub fn positional_types(&self, d: &Dataset) -> Vec<VarType> {
        [Channel::X, Channel::Y]
            .into_iter()
            .filter_map(|c| self.positional_var(c, d))
            .collect()
    }

    /// Fills in the summaries a chart of this shape needs. Explicit modifiers are kept.
    pub fn auto_aggregate(&self, d: &Dataset) -> ChannelMap {
        let mut m = self.clone();
        let tx = m.positional_var(Channel::X, d);
        let ty = m.positional_var(Channel::Y, d);
        match (tx, ty) {
            (Some(t), None) | (None, Some(t)) => {
                let (own, free) = if tx.is_some() {
                    (Channel::X, Channel::Y)
                } else {
                    (Channel::Y, Channel::X)
                };
                if m.get(free).is_none() {
                    *m.slot_mut(free) = Some(FieldRef::count());
                }
                if t == VarType::Temporal {
                    m.default_time_unit(own, d);
                }
            }
            (Some(a), Some(b)) => {
                use VarType::*;
                let (q_channel, other) = if a == Quantitative {
                    (Channel::X, b)
                } else {
                    (Channel::Y, a)
                };
                match (a.min(b), a.max(b)) {
                    (Quantitative, Quantitative) | (Quantitative, Nominal) => {}
                    (Quantitative, Ordinal | Temporal) => {
                        m.default_mean(q_channel);
                        if other == Temporal {
                            m.default_time_unit(q_channel.other_axis(), d);
                        }
                    }
                    _ => {
                        for c in [Channel::X, Channel::Y] {
                            m.default_time_unit(c, d);
                        }
                        if m.color.is_none() {
                            m.color = Some(FieldRef::count());
                        }
                    }
                }
            }
            (None, None) => {}
        }
        m
    }

    fn default_mean(&mut self, channel: Channel) {
        if let Some(f) = self.slot_mut(channel) {
            if f.aggregate.is_none() {
                f.aggregate = Some(Aggregate::Mean);
            }
        }
    }

    fn default_time_unit(&mut self, channel: Channel, d: &Dataset) {
        let Some(f) = self.slot_mut(channel) else {
            return;
        };
        let Some(name) = f.field.as_deref() else {
            return;
        };
        if f.time_unit.is_none() && d.effective_type(name).ok() == Some(VarType::Temporal) {
            f.time_unit = Some(TimeUnit::default_for(d, name));
        }
    }

    /// The chart for this mapping: summaries filled in, mark from the type table
    /// unless a mark was chosen explicitly.
    pub fn build_spec(&self, d: &Dataset) -> Result<VisSpec, EncodingError> {
        self.validate(d)?;
        let m = self.auto_aggregate(d);
        let types = m.positional_types(d);
        let mark = match m.mark {
            Some(mark) if !types.is_empty() => mark,
            _ => select_mark(&types)?[0],
        };

        // A lone raw quantitative axis against a count is drawn over bins.
        let binned = match (&m.x, &m.y) {
            (Some(a), Some(b)) if types == [VarType::Quantitative] => {
                let (var, other) = if a.is_count() { (b, a) } else { (a, b) };
                (other.is_count() && var.aggregate.is_none()).then(|| var.field.clone())
            }
            _ => None,
        }
        .flatten();

        // Binned bars are histograms; a histogram with nothing to bin is a bar.
        let mark = match (mark, binned.is_some()) {
            (MarkType::Bar, true) => MarkType::Histogram,
            (MarkType::Histogram, false) => MarkType::Bar,
            (mark, _) => mark,
        };

        let mut encodings = std::collections::BTreeMap::new();
        for (channel, f) in m.iter() {
            let var_type = f.encoded_type(d)?;
            let bin = channel.is_positional() && f.field.is_some() && f.field == binned;
            encodings.insert(
                channel,
                EncodingDef {
                    field: f.field.clone(),
                    var_type,
                    aggregate: f.aggregate,
                    time_unit: f.time_unit,
                    bin,
                },
            );
        }
        Ok(VisSpec {
            mark,
            stacked: m.stack,
            encodings,
            transforms: Vec::new(),
            data_ref: d.name().to_string(),
        })
    }

    /// The map that rebuilds `spec`: every encoding copied back, the mark kept only
    /// when it differs from the type table's default.
    pub fn from_spec(spec: &VisSpec, d: &Dataset) -> ChannelMap {
        let mut m = ChannelMap::default();
        for (channel, def) in &spec.encodings {
            *m.slot_mut(*channel) = Some(FieldRef {
                field: def.field.clone(),
                aggregate: def.aggregate,
                time_unit: def.time_unit,
            });
        }
        let default = select_mark(&m.positional_types(d)).ok().map(|marks| marks[0]);
        if default != Some(spec.mark) {
            m.mark = Some(spec.mark);
        }
        m.stack = spec.stacked;
        m
    }
}

impl Channel {
    fn other_axis(self) -> Channel {
        match self {
            Channel::X => Channel::Y,
            _ => Channel::X,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CsvOptions;
    use MarkType::*;
    use VarType::*;

    fn data() -> Dataset {
        Dataset::from_csv(
            b"a,b,city,date,short\n1.5,2.5,x,2012-01-01,2012-01-01\n2.5,3.5,y,2013-05-01,2012-03-01\n",
            &CsvOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn table_lookup() {
        assert_eq!(select_mark(&[Quantitative]).unwrap(), &[Area, Histogram]);
        assert_eq!(select_mark(&[Quantitative, Quantitative]).unwrap(), &[Point]);
        assert_eq!(select_mark(&[Nominal, Quantitative]).unwrap(), &[Boxplot, Tick]);
        assert_eq!(select_mark(&[Temporal, Nominal]).unwrap(), &[Rect]);
        assert_eq!(select_mark(&[]).unwrap_err(), EncodingError::NoMapping);
    }

    #[test]
    fn gating() {
        let d = data();
        let empty = ChannelMap::new();
        assert_eq!(empty.available_channels(), vec![Channel::X, Channel::Y]);
        assert_eq!(
            empty.assign(Channel::Color, FieldRef::var("city"), &d).unwrap_err(),
            EncodingError::ChannelUnavailable(Channel::Color)
        );
        let m = empty.assign(Channel::X, FieldRef::var("a"), &d).unwrap();
        assert_eq!(m.available_channels().len(), 7);
        let m = m.assign(Channel::Color, FieldRef::var("city"), &d).unwrap();
        let cleared = m.clear(Channel::X);
        assert!(cleared.is_empty());
        assert_eq!(ChannelMap::new().clear(Channel::Size), ChannelMap::new());
    }

    #[test]
    fn replacement() {
        let d = data();
        let m = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("a"), &d)
            .unwrap()
            .assign(Channel::X, FieldRef::var("b"), &d)
            .unwrap();
        assert_eq!(m.get(Channel::X), Some(&FieldRef::var("b")));
    }

    #[test]
    fn modifier_checks() {
        let d = data();
        let m = ChannelMap::new();
        let bad = [
            FieldRef::mean("city"),
            FieldRef::var("a").with_time_unit(TimeUnit::Year),
            FieldRef::var("a").with_aggregate(Aggregate::Count),
            FieldRef {
                field: None,
                aggregate: Some(Aggregate::Mean),
                time_unit: None,
            },
        ];
        for f in bad {
            assert!(matches!(
                m.assign(Channel::X, f, &d),
                Err(EncodingError::InvalidModifier { .. })
            ));
        }
        let m = m.assign(Channel::X, FieldRef::var("a"), &d).unwrap();
        assert!(m.assign(Channel::Shape, FieldRef::var("b"), &d).is_err());
        assert!(m.assign(Channel::Size, FieldRef::var("city"), &d).is_err());
        assert!(m.assign(Channel::Row, FieldRef::var("date"), &d).is_err());
        assert!(m
            .assign(Channel::Row, FieldRef::var("date").with_time_unit(TimeUnit::Year), &d)
            .is_ok());
        assert_eq!(
            m.assign(Channel::Y, FieldRef::var("nope"), &d).unwrap_err(),
            EncodingError::UnknownVariable("nope".into())
        );
    }

    #[test]
    fn aggregate_ladder() {
        let d = data();
        let city = ChannelMap::new().assign(Channel::X, FieldRef::var("city"), &d).unwrap();
        let agg = city.auto_aggregate(&d);
        assert_eq!(agg.get(Channel::Y), Some(&FieldRef::count()));

        let qt = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("date"), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::var("a"), &d)
            .unwrap()
            .auto_aggregate(&d);
        assert_eq!(qt.get(Channel::Y), Some(&FieldRef::mean("a")));
        assert_eq!(
            qt.get(Channel::X),
            Some(&FieldRef::var("date").with_time_unit(TimeUnit::Year))
        );

        let short = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("short"), &d)
            .unwrap()
            .auto_aggregate(&d);
        assert_eq!(short.get(Channel::X).unwrap().time_unit, Some(TimeUnit::Month));

        let qq = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("a"), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::var("b"), &d)
            .unwrap();
        assert_eq!(qq.auto_aggregate(&d), qq);

        let nt = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("city"), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::var("date"), &d)
            .unwrap()
            .auto_aggregate(&d);
        assert_eq!(nt.get(Channel::Color), Some(&FieldRef::count()));

        let explicit = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("date"), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::var("a").with_aggregate(Aggregate::Sum), &d)
            .unwrap()
            .auto_aggregate(&d);
        assert_eq!(explicit.get(Channel::Y).unwrap().aggregate, Some(Aggregate::Sum));
    }

    #[test]
    fn spec_marks() {
        let d = data();
        let single = ChannelMap::new().assign(Channel::X, FieldRef::var("a"), &d).unwrap();
        let spec = single.build_spec(&d).unwrap();
        assert_eq!(spec.mark, Area);
        assert!(spec.encodings[&Channel::X].bin);
        assert_eq!(spec.encodings[&Channel::Y].aggregate, Some(Aggregate::Count));

        let scatter = single.assign(Channel::Y, FieldRef::var("b"), &d).unwrap();
        let spec = scatter.build_spec(&d).unwrap();
        assert_eq!(spec.mark, Point);
        assert!(!spec.encodings[&Channel::X].bin);

        assert_eq!(ChannelMap::new().build_spec(&d).unwrap_err(), EncodingError::NoMapping);
    }

    #[test]
    fn json_shape() {
        let d = data();
        let m = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("date").with_time_unit(TimeUnit::Year), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::mean("a"), &d)
            .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"x":{"field":"date","timeUnit":"year"},"y":{"field":"a","aggregate":"mean"}}"#
        );
        let back: ChannelMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ChannelMap>(r#"{"color":{"field":"city"}}"#).is_err());
        assert!(serde_json::from_str::<ChannelMap>(r#"{"z":{"field":"city"}}"#).is_err());
    }

    #[test]
    fn from_spec_round_trip() {
        let d = data();
        let m = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("city"), &d)
            .unwrap()
            .with_mark(Some(Line));
        let spec = m.build_spec(&d).unwrap();
        let back = ChannelMap::from_spec(&spec, &d);
        assert_eq!(back.build_spec(&d).unwrap(), spec);
        assert_eq!(back.mark(), Some(Line));
    }
}
