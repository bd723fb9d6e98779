//! Question-driven recommendations.
//!
//! For the current selection, every unselected variable is tried as an
//! addition. The resulting combination of variable types keys into a table of
//! question templates; each template renders a question (with the variable
//! names as colored spans) and one candidate chart per chart form.

use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dataset::{Dataset, VarType};
use crate::emitter::{self, EmitError, EmitOptions};
use crate::encoding::{select_mark, Channel, ChannelMap, EncodingError, FieldRef, MarkType, TimeUnit};
use crate::spec::{FilterClause, VisSpec};

/// Selections at least this large get no question recommendations.
pub const MAX_SELECTION: usize = 3;
pub const SELECTION_TOO_LARGE: &str = "selection too large for question recommendations";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecommenderError {
    #[error("unsupported selection size {0}: templates cover 1 to 3 variables")]
    UnsupportedSelectionSize(usize),
    #[error("slot {slot} expects a {expected} variable but `{variable}` is {found}")]
    SlotType {
        slot: usize,
        variable: String,
        expected: VarType,
        found: VarType,
    },
    #[error("template has {expected} slots, got {found} variables")]
    SlotCount { expected: usize, found: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("candidate index {index} out of range (group has {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

/// What a layout puts on a channel, in terms of template slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotField {
    Var(usize),
    Mean(usize),
    Year(usize),
    Month(usize),
    /// The variable with the dataset's default time unit when it is temporal.
    Time(usize),
    Count,
}

impl SlotField {
    fn slot(self) -> Option<usize> {
        match self {
            SlotField::Var(i)
            | SlotField::Mean(i)
            | SlotField::Year(i)
            | SlotField::Month(i)
            | SlotField::Time(i) => Some(i),
            SlotField::Count => None,
        }
    }

    fn resolve(self, vars: &[&str], d: &Dataset) -> FieldRef {
        match self {
            SlotField::Var(i) => FieldRef::var(vars[i]),
            SlotField::Mean(i) => FieldRef::mean(vars[i]),
            SlotField::Year(i) => FieldRef::var(vars[i]).with_time_unit(TimeUnit::Year),
            SlotField::Month(i) => FieldRef::var(vars[i]).with_time_unit(TimeUnit::Month),
            SlotField::Time(i) => temporal_default(vars[i], d),
            SlotField::Count => FieldRef::count(),
        }
    }
}

fn temporal_default(name: &str, d: &Dataset) -> FieldRef {
    let field = FieldRef::var(name);
    match d.effective_type(name) {
        Ok(VarType::Temporal) => field.with_time_unit(TimeUnit::default_for(d, name)),
        _ => field,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Fixed(&'static [(Channel, SlotField)]),
    /// Type-table chart over the selection, the added variable on the first free channel.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartForm {
    pub mark: MarkType,
    pub stacked: bool,
    pub layout: Layout,
}

impl ChartForm {
    /// Non-positional channel carrying the third variable, if any.
    pub fn extra_channel(&self) -> Option<Channel> {
        match self.layout {
            Layout::Fixed(layout) => layout
                .iter()
                .find(|(c, f)| !c.is_positional() && f.slot() == Some(2))
                .map(|(c, _)| *c),
            Layout::Generic => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateSource {
    /// One of the published question/chart mappings.
    Published,
    /// Engine-defined for a type combination the published table leaves out.
    Fallback,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionTemplate {
    /// Slot types in slot order.
    pub key: Vec<VarType>,
    /// Question text; `{var0}`..`{var2}` mark the slots.
    pub text: &'static str,
    pub charts: Vec<ChartForm>,
    /// 1-based position among the templates of the same key.
    pub rank: usize,
    pub source: TemplateSource,
}

/// One piece of a rendered question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Span {
    Text { text: String },
    Var { var: String, color: &'static str },
}

pub fn plain_text(spans: &[Span]) -> String {
    spans
        .iter()
        .map(|s| match s {
            Span::Text { text } => text.as_str(),
            Span::Var { var, .. } => var.as_str(),
        })
        .collect()
}

/// Question text with each variable wrapped in brackets.
pub fn marked_text(spans: &[Span]) -> String {
    spans
        .iter()
        .map(|s| match s {
            Span::Text { text } => text.clone(),
            Span::Var { var, .. } => format!("[{var}]"),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationGroup {
    pub question: Vec<Span>,
    pub added: String,
    pub rank: usize,
    pub candidates: Vec<VisSpec>,
    pub bookmark_ids: Vec<String>,
}

impl RecommendationGroup {
    pub fn question_text(&self) -> String {
        plain_text(&self.question)
    }

    pub fn with_filters(mut self, filters: &[FilterClause]) -> RecommendationGroup {
        for c in &mut self.candidates {
            c.transforms = filters.to_vec();
        }
        self
    }

    /// The mapping that rebuilds candidate `index` in the main chart.
    pub fn promote(&self, index: usize, d: &Dataset) -> Result<ChannelMap, RecommenderError> {
        let spec = self
            .candidates
            .get(index)
            .ok_or(RecommenderError::IndexOutOfRange {
                index,
                len: self.candidates.len(),
            })?;
        Ok(ChannelMap::from_spec(spec, d))
    }

    pub fn to_json(&self, d: &Dataset, options: EmitOptions) -> Result<Json, RecommenderError> {
        let candidates = self
            .candidates
            .iter()
            .map(|c| emitter::to_vegalite(c, d, options))
            .collect::<Result<Vec<_>, _>>()?;
        let mappings = (0..self.candidates.len())
            .map(|i| self.promote(i, d).map(|m| serde_json::to_value(m).expect("map serializes")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut obj = json!({
            "question": self.question,
            "added": self.added,
            "candidates": candidates,
            "mappings": mappings,
        });
        if !self.bookmark_ids.is_empty() {
            obj["bookmarks"] = json!(self.bookmark_ids);
        }
        Ok(obj)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recommendations {
    pub groups: Vec<RecommendationGroup>,
    pub notice: Option<String>,
}

impl Recommendations {
    pub fn with_filters(self, filters: &[FilterClause]) -> Recommendations {
        Recommendations {
            groups: self.groups.into_iter().map(|g| g.with_filters(filters)).collect(),
            notice: self.notice,
        }
    }

    /// `{"groups":[...], "notice": ...}`; candidate charts reference their data by URL.
    pub fn to_json(&self, d: &Dataset, options: EmitOptions) -> Result<Json, RecommenderError> {
        let groups = self
            .groups
            .iter()
            .map(|g| g.to_json(d, options))
            .collect::<Result<Vec<_>, _>>()?;
        let mut obj = json!({ "groups": groups });
        if let Some(notice) = &self.notice {
            obj["notice"] = json!(notice);
        }
        Ok(obj)
    }
}

mod table {
    use super::*;
    use Channel::*;
    use MarkType::*;
    use SlotField::*;

    const fn form(mark: MarkType, layout: &'static [(Channel, SlotField)]) -> ChartForm {
        ChartForm {
            mark,
            stacked: false,
            layout: Layout::Fixed(layout),
        }
    }

    const fn stacked(mark: MarkType, layout: &'static [(Channel, SlotField)]) -> ChartForm {
        ChartForm {
            mark,
            stacked: true,
            layout: Layout::Fixed(layout),
        }
    }

    fn t(
        source: TemplateSource,
        key: &[VarType],
        rank: usize,
        text: &'static str,
        charts: &[ChartForm],
    ) -> QuestionTemplate {
        QuestionTemplate {
            key: key.to_vec(),
            text,
            charts: charts.to_vec(),
            rank,
            source,
        }
    }

    const SCATTER: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1))];
    const BOX: &[(Channel, SlotField)] = &[(X, Var(1)), (Y, Var(0))];
    const STRIP: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1))];
    const DENSITY_BY: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Count), (Color, Var(1))];
    const MEAN_BY: &[(Channel, SlotField)] = &[(X, Var(1)), (Y, Mean(0))];
    const MEAN_YEARS: &[(Channel, SlotField)] = &[(X, Year(1)), (Y, Mean(0))];
    const MEAN_MONTHS: &[(Channel, SlotField)] = &[(X, Month(1)), (Y, Mean(0))];
    const COUNT_STACK: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Count), (Color, Var(1))];
    const COUNT_GRID: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1)), (Color, Count)];
    const SERIES_YEARS: &[(Channel, SlotField)] = &[(X, Year(1)), (Y, Count), (Color, Var(0))];
    const GRID_YEARS: &[(Channel, SlotField)] = &[(X, Year(1)), (Y, Var(0)), (Color, Count)];
    const SERIES_MONTHS: &[(Channel, SlotField)] = &[(X, Month(1)), (Y, Count), (Color, Var(0))];
    const GRID_MONTHS: &[(Channel, SlotField)] = &[(X, Month(1)), (Y, Var(0)), (Color, Count)];
    const TIME_STACK: &[(Channel, SlotField)] = &[(X, Time(0)), (Y, Count), (Color, Time(1))];
    const TIME_GRID: &[(Channel, SlotField)] = &[(X, Time(0)), (Y, Time(1)), (Color, Count)];
    const SCATTER_COLOR: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1)), (Color, Var(2))];
    const SCATTER_SIZE: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1)), (Size, Var(2))];
    const SCATTER_SHAPE: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Var(1)), (Shape, Var(2))];
    const MEANS_YEARS_SIZE: &[(Channel, SlotField)] = &[(X, Year(2)), (Y, Mean(0)), (Size, Mean(1))];
    const MEANS_YEARS_COLOR: &[(Channel, SlotField)] = &[(X, Year(2)), (Y, Mean(0)), (Color, Mean(1))];
    const MEANS_MONTHS_SIZE: &[(Channel, SlotField)] = &[(X, Month(2)), (Y, Mean(0)), (Size, Mean(1))];
    const MEANS_MONTHS_COLOR: &[(Channel, SlotField)] = &[(X, Month(2)), (Y, Mean(0)), (Color, Mean(1))];
    const MEAN_GRID: &[(Channel, SlotField)] = &[(X, Var(1)), (Y, Var(2)), (Color, Mean(0))];
    const MEAN_SERIES_YEARS: &[(Channel, SlotField)] = &[(X, Year(2)), (Y, Mean(0)), (Color, Var(1))];
    const MEAN_SERIES_MONTHS: &[(Channel, SlotField)] = &[(X, Month(2)), (Y, Mean(0)), (Color, Var(1))];
    const MEAN_TIME_SERIES: &[(Channel, SlotField)] = &[(X, Time(1)), (Y, Mean(0)), (Color, Time(2))];
    const MEAN_TIME_GRID: &[(Channel, SlotField)] = &[(X, Time(1)), (Y, Time(2)), (Color, Mean(0))];
    // Ordinal stand-ins for the temporal forms: the ordinal variable itself is the axis.
    const MEAN_OVER: &[(Channel, SlotField)] = &[(X, Var(1)), (Y, Mean(0))];
    const MEANS_OVER_SIZE: &[(Channel, SlotField)] = &[(X, Var(2)), (Y, Mean(0)), (Size, Mean(1))];
    const MEANS_OVER_COLOR: &[(Channel, SlotField)] = &[(X, Var(2)), (Y, Mean(0)), (Color, Mean(1))];
    const MEAN_SERIES_OVER: &[(Channel, SlotField)] = &[(X, Var(2)), (Y, Mean(0)), (Color, Var(1))];
    const COUNT_GRID_FACET: &[(Channel, SlotField)] =
        &[(X, Var(0)), (Y, Var(1)), (Color, Count), (Row, Var(2))];
    const DISTRIBUTION: &[(Channel, SlotField)] = &[(X, Var(0)), (Y, Count)];
    const RECORDS_YEARS: &[(Channel, SlotField)] = &[(X, Year(0)), (Y, Count)];
    const RECORDS_MONTHS: &[(Channel, SlotField)] = &[(X, Month(0)), (Y, Count)];

    const TREND_YEARS: [ChartForm; 3] =
        [form(Line, MEAN_YEARS), form(Bar, MEAN_YEARS), form(Area, MEAN_YEARS)];
    const TREND_MONTHS: [ChartForm; 3] =
        [form(Line, MEAN_MONTHS), form(Bar, MEAN_MONTHS), form(Area, MEAN_MONTHS)];

    const CORRELATION: &str = "What is the correlation between {var0} and {var1}?";
    const DISTRIBUTION_BY: &str =
        "What is the is the distribution of values of {var0} in each category of {var1}?";
    const AVERAGE_BY: &str = "What is the average of {var0} in each category of {var1}?";
    const MEAN_OVER_YEARS: &str = "What is the MEAN OF {var0} over the YEARS?";
    const MEAN_OVER_MONTHS: &str = "What is the MEAN OF {var0} over the MONTHS?";
    const CO_OCCURRENCES: &str =
        "What is the number of co-occurrences between each category of {var0} and {var1}?";
    const OCCURRENCES_YEARS: &str =
        "What is the number of occurrences of each category of {var0} over the YEARS?";
    const OCCURRENCES_MONTHS: &str =
        "What is the number of occurrences of each category of {var0} over the MONTHS?";
    const TIME_CO_OCCURRENCES: &str = "What is number of co-occurrences of {var0} and {var1}?";
    const CORRELATION_3: &str = "What is the correlation between {var0}, {var1} and {var2}?";
    const CORRELATION_GROUPED: &str =
        "What is the correlation between {var0}, {var1} grouped by {var2} categories?";
    const MEANS_OVER_YEARS: &str =
        "What is the correlation between MEAN OF {var0}, MEAN OF {var1} over the YEARS?";
    const MEANS_OVER_MONTHS: &str =
        "What is the correlation between MEAN OF {var0}, MEAN OF {var1} over the MONTHS?";
    const MEAN_COMBINATION: &str =
        "What is the MEAN OF {var0} in each combination of {var1} and {var2}?";
    const MEAN_CATEGORY_YEARS: &str =
        "What is the MEAN OF {var0} in each category of {var1} over the YEARS?";
    const MEAN_CATEGORY_MONTHS: &str =
        "What is the MEAN OF {var0} in each category of {var1} over the MONTHS?";

    pub(super) fn build() -> Vec<QuestionTemplate> {
        use TemplateSource::*;
        use VarType::{Nominal as N, Ordinal as O, Quantitative as Q, Temporal as T};

        let co_occurrence = [stacked(Bar, COUNT_STACK), form(Rect, COUNT_GRID)];
        let occurrences_years = [
            form(Line, SERIES_YEARS),
            stacked(Area, SERIES_YEARS),
            form(Rect, GRID_YEARS),
        ];
        let occurrences_months = [
            form(Line, SERIES_MONTHS),
            stacked(Area, SERIES_MONTHS),
            form(Rect, GRID_MONTHS),
        ];
        let mean_combination = [form(Line, MEAN_TIME_SERIES), form(Rect, MEAN_TIME_GRID)];
        let facet_grid = [form(Rect, COUNT_GRID_FACET)];

        let mut out = vec![
            // The published mappings, verbatim.
            t(Published, &[Q, Q], 1, CORRELATION, &[form(Point, SCATTER)]),
            t(
                Published,
                &[Q, N],
                1,
                DISTRIBUTION_BY,
                &[form(Boxplot, BOX), form(Tick, STRIP), form(Area, DENSITY_BY)],
            ),
            t(Published, &[Q, N], 2, AVERAGE_BY, &[form(Bar, MEAN_BY)]),
            t(Published, &[Q, T], 1, MEAN_OVER_YEARS, &TREND_YEARS),
            t(Published, &[Q, T], 2, MEAN_OVER_MONTHS, &TREND_MONTHS),
            t(Published, &[N, N], 1, CO_OCCURRENCES, &co_occurrence),
            t(Published, &[N, T], 1, OCCURRENCES_YEARS, &occurrences_years),
            t(Published, &[N, T], 2, OCCURRENCES_MONTHS, &occurrences_months),
            t(
                Published,
                &[T, T],
                1,
                TIME_CO_OCCURRENCES,
                &[stacked(Bar, TIME_STACK), form(Rect, TIME_GRID)],
            ),
            t(
                Published,
                &[Q, Q, Q],
                1,
                CORRELATION_3,
                &[form(Point, SCATTER_COLOR), form(Point, SCATTER_SIZE)],
            ),
            t(
                Published,
                &[Q, Q, N],
                1,
                CORRELATION_GROUPED,
                &[form(Point, SCATTER_COLOR), form(Point, SCATTER_SHAPE)],
            ),
            t(
                Published,
                &[Q, Q, T],
                1,
                MEANS_OVER_YEARS,
                &[form(Line, MEANS_YEARS_SIZE), form(Line, MEANS_YEARS_COLOR)],
            ),
            t(
                Published,
                &[Q, Q, T],
                2,
                MEANS_OVER_MONTHS,
                &[form(Line, MEANS_MONTHS_SIZE), form(Line, MEANS_MONTHS_COLOR)],
            ),
            t(Published, &[Q, N, N], 1, MEAN_COMBINATION, &[form(Rect, MEAN_GRID)]),
            t(
                Published,
                &[Q, N, T],
                1,
                MEAN_CATEGORY_YEARS,
                &[form(Line, MEAN_SERIES_YEARS), stacked(Area, MEAN_SERIES_YEARS)],
            ),
            t(
                Published,
                &[Q, N, T],
                2,
                MEAN_CATEGORY_MONTHS,
                &[form(Line, MEAN_SERIES_MONTHS), stacked(Area, MEAN_SERIES_MONTHS)],
            ),
            t(Published, &[Q, T, T], 1, MEAN_COMBINATION, &mean_combination),
            // Single variables.
            t(
                Fallback,
                &[Q],
                1,
                "What is the distribution of {var0}?",
                &[form(Histogram, DISTRIBUTION), form(Area, DISTRIBUTION)],
            ),
            t(
                Fallback,
                &[N],
                1,
                "What is the number of occurrences of each category of {var0}?",
                &[form(Bar, DISTRIBUTION)],
            ),
            t(
                Fallback,
                &[O],
                1,
                "What is the number of occurrences of each category of {var0}?",
                &[form(Bar, DISTRIBUTION), form(Line, DISTRIBUTION)],
            ),
            t(
                Fallback,
                &[T],
                1,
                "What is the number of records over the YEARS?",
                &[form(Line, RECORDS_YEARS), form(Bar, RECORDS_YEARS), form(Area, RECORDS_YEARS)],
            ),
            t(
                Fallback,
                &[T],
                2,
                "What is the number of records over the MONTHS?",
                &[form(Line, RECORDS_MONTHS), form(Bar, RECORDS_MONTHS), form(Area, RECORDS_MONTHS)],
            ),
            // Ordinal next to a quantitative variable reads as a trend axis.
            t(
                Fallback,
                &[Q, O],
                1,
                "What is the MEAN OF {var0} over {var1}?",
                &[form(Line, MEAN_OVER), form(Bar, MEAN_OVER), form(Area, MEAN_OVER)],
            ),
            t(
                Fallback,
                &[Q, Q, O],
                1,
                "What is the correlation between MEAN OF {var0}, MEAN OF {var1} over {var2}?",
                &[form(Line, MEANS_OVER_SIZE), form(Line, MEANS_OVER_COLOR)],
            ),
            t(
                Fallback,
                &[Q, N, O],
                1,
                "What is the MEAN OF {var0} in each category of {var1} over {var2}?",
                &[form(Line, MEAN_SERIES_OVER), stacked(Area, MEAN_SERIES_OVER)],
            ),
            t(Fallback, &[Q, O, O], 1, MEAN_COMBINATION, &mean_combination),
            t(Fallback, &[Q, O, T], 1, MEAN_COMBINATION, &mean_combination),
            // Otherwise ordinal behaves like nominal.
            t(Fallback, &[N, O], 1, CO_OCCURRENCES, &co_occurrence),
            t(Fallback, &[O, O], 1, CO_OCCURRENCES, &co_occurrence),
            t(Fallback, &[O, T], 1, OCCURRENCES_YEARS, &occurrences_years),
            t(Fallback, &[O, T], 2, OCCURRENCES_MONTHS, &occurrences_months),
        ];
        let facet_text = "What is the number of co-occurrences between each category of {var0}, {var1} and {var2}?";
        for key in [[N, N, N], [N, N, O], [N, O, O], [O, O, O]] {
            out.push(t(Fallback, &key, 1, facet_text, &facet_grid));
        }
        for key in [[N, N, T], [N, O, T], [O, O, T], [N, T, T], [O, T, T], [T, T, T]] {
            out.push(QuestionTemplate {
                key: key.to_vec(),
                text: "How does {var2} relate to the current selection?",
                charts: vec![ChartForm {
                    mark: select_mark(&key[..2]).map(|m| m[0]).unwrap_or(Rect),
                    stacked: false,
                    layout: Layout::Generic,
                }],
                rank: 1,
                source: Generic,
            });
        }
        out
    }
}

/// The full template table: published rows, then engine-defined ones.
pub fn templates() -> &'static [QuestionTemplate] {
    static TABLE: OnceLock<Vec<QuestionTemplate>> = OnceLock::new();
    TABLE.get_or_init(table::build)
}

fn canonical(types: &[VarType]) -> Vec<VarType> {
    let mut key = types.to_vec();
    key.sort();
    key
}

/// All templates for a combination of types, in rank order.
pub fn template_lookup(key: &[VarType]) -> Result<Vec<&'static QuestionTemplate>, RecommenderError> {
    if key.is_empty() || key.len() > 3 {
        return Err(RecommenderError::UnsupportedSelectionSize(key.len()));
    }
    let key = canonical(key);
    let mut found: Vec<_> = templates()
        .iter()
        .filter(|t| canonical(&t.key) == key)
        .collect();
    found.sort_by_key(|t| t.rank);
    Ok(found)
}

fn render_question(text: &str, vars: &[&str], d: &Dataset) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{var") {
        let end = start + rest[start..].find('}').expect("slot tokens are closed");
        let slot: usize = rest[start + 4..end].parse().expect("slot index");
        if start > 0 {
            spans.push(Span::Text {
                text: rest[..start].to_string(),
            });
        }
        let name = vars[slot];
        let color = d.variable(name).map_or("gray", |v| v.display_color());
        spans.push(Span::Var {
            var: name.to_string(),
            color,
        });
        rest = &rest[end + 1..];
    }
    if !rest.is_empty() {
        spans.push(Span::Text {
            text: rest.to_string(),
        });
    }
    spans
}

/// Renders the question and builds one chart per chart form.
///
/// `vars` fill the slots in order. Generic templates take the selection first
/// and the added variable last, matched against the key as a multiset.
pub fn instantiate(
    t: &QuestionTemplate,
    vars: &[&str],
    d: &Dataset,
) -> Result<(Vec<Span>, Vec<VisSpec>), RecommenderError> {
    if vars.len() != t.key.len() {
        return Err(RecommenderError::SlotCount {
            expected: t.key.len(),
            found: vars.len(),
        });
    }
    let types = vars
        .iter()
        .map(|v| {
            d.effective_type(v)
                .map_err(|_| RecommenderError::UnknownVariable(v.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if t.source == TemplateSource::Generic {
        if canonical(&types) != canonical(&t.key) {
            let slot = types.len() - 1;
            return Err(RecommenderError::SlotType {
                slot,
                variable: vars[slot].to_string(),
                expected: t.key[slot],
                found: types[slot],
            });
        }
    } else if let Some(slot) = (0..types.len()).find(|&i| types[i] != t.key[i]) {
        return Err(RecommenderError::SlotType {
            slot,
            variable: vars[slot].to_string(),
            expected: t.key[slot],
            found: types[slot],
        });
    }

    let question = render_question(t.text, vars, d);
    let mut charts = Vec::with_capacity(t.charts.len());
    for form in &t.charts {
        let map = match form.layout {
            Layout::Fixed(layout) => {
                let mut m = ChannelMap::new();
                for (channel, field) in layout {
                    m = m.assign(*channel, field.resolve(vars, d), d)?;
                }
                let default = select_mark(&m.positional_types(d)).ok().map(|marks| marks[0]);
                let mark = (default != Some(form.mark)).then_some(form.mark);
                m.with_mark(mark).with_stack(form.stacked)
            }
            Layout::Generic => generic_map(vars, d)?,
        };
        charts.push(map.build_spec(d)?);
    }
    Ok((question, charts))
}

fn generic_map(vars: &[&str], d: &Dataset) -> Result<ChannelMap, RecommenderError> {
    let (added, selection) = vars.split_last().expect("generic templates have slots");
    let mut m = ChannelMap::new();
    for (channel, name) in [Channel::X, Channel::Y].into_iter().zip(selection) {
        m = m.assign(channel, FieldRef::var(*name), d)?;
    }
    let m = m.auto_aggregate(d);
    let field = temporal_default(added, d);
    for channel in [Channel::Color, Channel::Row, Channel::Column, Channel::Shape, Channel::Size] {
        if m.get(channel).is_none() && field.check(channel, d).is_ok() {
            return Ok(m.assign(channel, field, d)?);
        }
    }
    Ok(m)
}

/// Orders variables into a template's slots: each slot takes the first unused
/// variable of its type, selection before the added variable.
fn fill_slots<'a>(t: &QuestionTemplate, ordered: &[&'a str], d: &Dataset) -> Option<Vec<&'a str>> {
    if t.source == TemplateSource::Generic {
        return Some(ordered.to_vec());
    }
    let mut used = vec![false; ordered.len()];
    let mut out = Vec::with_capacity(t.key.len());
    for want in &t.key {
        let i = (0..ordered.len())
            .find(|&i| !used[i] && d.effective_type(ordered[i]).ok() == Some(*want))?;
        used[i] = true;
        out.push(ordered[i]);
    }
    Some(out)
}

/// Question groups for every one-variable extension of `selection`.
pub fn enumerate(selection: &[String], d: &Dataset) -> Result<Recommendations, RecommenderError> {
    let mut chosen: Vec<&str> = Vec::new();
    for name in selection {
        if d.index_of(name).is_none() {
            return Err(RecommenderError::UnknownVariable(name.clone()));
        }
        if !chosen.contains(&name.as_str()) {
            chosen.push(name);
        }
    }
    if chosen.len() >= MAX_SELECTION {
        return Ok(Recommendations {
            groups: Vec::new(),
            notice: Some(SELECTION_TOO_LARGE.to_string()),
        });
    }

    let mut groups = Vec::new();
    for var in d.variables() {
        let added = var.name.as_str();
        if chosen.contains(&added) {
            continue;
        }
        let mut ordered = chosen.clone();
        ordered.push(added);
        let types: Vec<VarType> = ordered
            .iter()
            .map(|v| d.effective_type(v).expect("checked above"))
            .collect();
        for t in template_lookup(&types)? {
            let vars = fill_slots(t, &ordered, d).expect("lookup matched the key");
            let (question, candidates) = instantiate(t, &vars, d)?;
            groups.push(RecommendationGroup {
                question,
                added: added.to_string(),
                rank: t.rank,
                candidates,
                bookmark_ids: Vec::new(),
            });
        }
    }
    Ok(Recommendations {
        groups,
        notice: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bookmark {
    pub id: String,
    pub spec: VisSpec,
    pub question: String,
    pub created_at: DateTime<Utc>,
}

/// Saved charts of one session, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct BookmarkStore {
    next_id: u64,
    items: Vec<Bookmark>,
}

impl BookmarkStore {
    pub fn add(&mut self, spec: VisSpec, question: impl Into<String>) -> Bookmark {
        self.next_id += 1;
        let bookmark = Bookmark {
            id: format!("b{}", self.next_id),
            spec,
            question: question.into(),
            created_at: Utc::now(),
        };
        self.items.push(bookmark.clone());
        bookmark
    }

    pub fn list(&self) -> &[Bookmark] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&Bookmark> {
        self.items.iter().find(|b| b.id == id)
    }

    /// Returns false when no bookmark has this id.
    pub fn remove(&mut self, id: &str) -> bool {
        let before = self.items.len();
        self.items.retain(|b| b.id != id);
        self.items.len() != before
    }

    /// Ids of bookmarks made from one of the group's candidates under its question.
    pub fn ids_for(&self, group: &RecommendationGroup) -> Vec<String> {
        let question = group.question_text();
        self.items
            .iter()
            .filter(|b| b.question == question && group.candidates.contains(&b.spec))
            .map(|b| b.id.clone())
            .collect()
    }
}
