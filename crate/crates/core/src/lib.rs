//! Visualization recommendation engine.
//!
//! The engine turns a typed tabular [`Dataset`] and a user-built [`ChannelMap`]
//! into a chart description ([`VisSpec`]), and proposes follow-up charts grouped
//! under natural-language questions by extending the current variable selection
//! with one more variable. Specs serialize to Vega-Lite JSON through [`emitter`].

pub mod dataset;
pub mod emitter;
pub mod encoding;
pub mod evaluate;
pub mod recommender;
pub mod spec;

pub use dataset::{ColumnStats, CsvOptions, Dataset, DatasetError, VarType, Variable};
pub use emitter::{DataMode, EmitError, EmitOptions, SchemaVersion};
pub use encoding::{Aggregate, Channel, ChannelMap, EncodingError, FieldRef, MarkType, TimeUnit};
pub use recommender::{
    Bookmark, BookmarkStore, Recommendations, RecommendationGroup, RecommenderError, Span,
};
pub use spec::{EncodingDef, FilterClause, Predicate, Scalar, VisSpec};
