//! Computes the aggregate table a chart spec implies.
//!
//! Rows pass the spec's filters, then group by every non-aggregated encoding
//! (after time units and binning). Each aggregated encoding becomes a measure.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use chrono::Datelike;

use crate::dataset::{Dataset, Value};
use crate::emitter::MAX_BINS;
use crate::encoding::{Aggregate, Channel, TimeUnit};
use crate::spec::{filtered_rows, VisSpec};

const EPSILON: f64 = 1e-14;

/// Bin boundaries as chosen by Vega's `bin` transform (base 10, divisors 5 and 2, nice).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bins {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Bins {
    pub fn new(min: f64, max: f64, maxbins: u32) -> Bins {
        let base = 10f64;
        let logb = base.ln();
        let maxb = f64::from(maxbins);
        let span = match max - min {
            s if s != 0.0 => s,
            _ if min.abs() != 0.0 => min.abs(),
            _ => 1.0,
        };
        let level = (maxb.ln() / logb).ceil();
        let mut step = base.powf((span.ln() / logb).round() - level).max(0.0);
        while (span / step).ceil() > maxb {
            step *= base;
        }
        for div in [5.0, 2.0] {
            let v = step / div;
            if span / v <= maxb {
                step = v;
            }
        }
        let v = step.ln();
        let precision = if v >= 0.0 { 0.0 } else { (-v / logb).trunc() + 1.0 };
        let eps = base.powf(-precision - 1.0);
        let v = (min / step + eps).floor() * step;
        let start = if min < v { v - step } else { v };
        let stop = (max / step).ceil() * step;
        Bins {
            start,
            stop: if stop == start { start + step } else { stop },
            step,
        }
    }

    /// Lower edge of the bin holding `v`; values past the ends fall in the end bins.
    pub fn bin(&self, v: f64) -> f64 {
        let v = v.min(self.stop - self.step).max(self.start);
        self.start + self.step * (EPSILON + (v - self.start) / self.step).floor()
    }
}

/// One grouping value.
#[derive(Debug, Clone, PartialEq)]
pub enum KeyValue {
    Number(f64),
    Text(String),
    Year(i32),
    Month(u32),
    Bin(f64),
}

impl KeyValue {
    fn rank(&self) -> u8 {
        match self {
            KeyValue::Number(_) => 0,
            KeyValue::Text(_) => 1,
            KeyValue::Year(_) => 2,
            KeyValue::Month(_) => 3,
            KeyValue::Bin(_) => 4,
        }
    }
}

impl Eq for KeyValue {}

impl Ord for KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::Number(a), KeyValue::Number(b)) | (KeyValue::Bin(a), KeyValue::Bin(b)) => a.total_cmp(b),
            (KeyValue::Text(a), KeyValue::Text(b)) => a.cmp(b),
            (KeyValue::Year(a), KeyValue::Year(b)) => a.cmp(b),
            (KeyValue::Month(a), KeyValue::Month(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for KeyValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub channel: Channel,
    pub aggregate: Aggregate,
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    /// Channels whose values form the group key, in channel order.
    pub keys: Vec<Channel>,
    pub measures: Vec<Measure>,
    /// Sorted by key. A mean over no values is `None`.
    pub rows: Vec<(Vec<KeyValue>, Vec<Option<f64>>)>,
}

enum Reader {
    Raw(usize),
    Unit(usize, TimeUnit),
    Binned(usize, Bins),
}

impl Reader {
    fn read(&self, d: &Dataset, row: usize) -> Option<KeyValue> {
        match *self {
            Reader::Raw(c) => match d.value(row, c) {
                Value::Number(v) => Some(KeyValue::Number(v)),
                Value::Text(s) => Some(KeyValue::Text(s.to_string())),
                Value::Timestamp(t) => Some(KeyValue::Text(crate::dataset::format_timestamp(t))),
                Value::Missing => None,
            },
            Reader::Unit(c, unit) => match d.value(row, c) {
                Value::Timestamp(t) => Some(match unit {
                    TimeUnit::Year => KeyValue::Year(t.year()),
                    TimeUnit::Month => KeyValue::Month(t.month()),
                }),
                _ => None,
            },
            Reader::Binned(c, bins) => match d.value(row, c) {
                Value::Number(v) => Some(KeyValue::Bin(bins.bin(v))),
                _ => None,
            },
        }
    }
}

fn number(d: &Dataset, row: usize, column: usize) -> Option<f64> {
    match d.value(row, column) {
        Value::Number(v) => Some(v),
        _ => None,
    }
}

/// The grouped table behind an aggregated spec, or `None` when nothing is aggregated.
pub fn evaluate(spec: &VisSpec, d: &Dataset) -> Option<AggregateTable> {
    let rows = filtered_rows(d, &spec.transforms);
    let mut keys = Vec::new();
    let mut readers = Vec::new();
    let mut measures = Vec::new();
    for (&channel, def) in &spec.encodings {
        if let Some(aggregate) = def.aggregate {
            measures.push(Measure {
                channel,
                aggregate,
                field: def.field.clone(),
            });
            continue;
        }
        let column = d.index_of(def.field.as_deref()?)?;
        let reader = if let Some(unit) = def.time_unit {
            Reader::Unit(column, unit)
        } else if def.bin {
            let values = rows.iter().filter_map(|&r| number(d, r, column));
            let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            if min > max {
                Reader::Raw(column)
            } else {
                Reader::Binned(column, Bins::new(min, max, MAX_BINS))
            }
        } else {
            Reader::Raw(column)
        };
        keys.push(channel);
        readers.push(reader);
    }
    if measures.is_empty() {
        return None;
    }
    let columns: Vec<Option<usize>> = measures
        .iter()
        .map(|m| m.field.as_deref().and_then(|f| d.index_of(f)))
        .collect();

    // Per group: row count, then (sum, n) per measure.
    let mut groups: BTreeMap<Vec<KeyValue>, (usize, Vec<(f64, usize)>)> = BTreeMap::new();
    'rows: for &r in &rows {
        let mut key = Vec::with_capacity(readers.len());
        for reader in &readers {
            match reader.read(d, r) {
                Some(k) => key.push(k),
                None => continue 'rows,
            }
        }
        let entry = groups
            .entry(key)
            .or_insert_with(|| (0, vec![(0.0, 0); measures.len()]));
        entry.0 += 1;
        for (acc, column) in entry.1.iter_mut().zip(&columns) {
            if let Some(v) = column.and_then(|c| number(d, r, c)) {
                acc.0 += v;
                acc.1 += 1;
            }
        }
    }

    let rows = groups
        .into_iter()
        .map(|(key, (count, accs))| {
            let values = measures
                .iter()
                .zip(accs)
                .map(|(m, (sum, n))| match m.aggregate {
                    Aggregate::Count => Some(count as f64),
                    Aggregate::Sum => Some(sum),
                    Aggregate::Mean => (n > 0).then(|| sum / n as f64),
                })
                .collect();
            (key, values)
        })
        .collect();
    Some(AggregateTable { keys, measures, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CsvOptions;
    use crate::encoding::{ChannelMap, FieldRef};

    #[test]
    fn vega_bins() {
        let b = Bins::new(0.0, 100.0, 10);
        assert_eq!((b.start, b.stop, b.step), (0.0, 100.0, 10.0));
        let b = Bins::new(-1.6, 35.6, 10);
        assert_eq!((b.start, b.stop, b.step), (-5.0, 40.0, 5.0));
        let b = Bins::new(4.3, 7.9, 10);
        assert!((b.step - 0.5).abs() < 1e-12);
        assert!((b.start - 4.0).abs() < 1e-12);
        assert_eq!(b.bin(7.9), b.stop - b.step);
        let b = Bins::new(3.0, 3.0, 10);
        assert!(b.stop > b.start);
    }

    #[test]
    fn mean_by_category() {
        let d = Dataset::from_csv(b"k,v\na,1.5\na,2.5\nb,\nb,4\n,9\n", &CsvOptions::default()).unwrap();
        let spec = ChannelMap::new()
            .assign(Channel::X, FieldRef::var("k"), &d)
            .unwrap()
            .assign(Channel::Y, FieldRef::mean("v"), &d)
            .unwrap()
            .build_spec(&d)
            .unwrap();
        let table = evaluate(&spec, &d).unwrap();
        assert_eq!(table.keys, vec![Channel::X]);
        assert_eq!(
            table.rows,
            vec![
                (vec![KeyValue::Text("a".into())], vec![Some(2.0)]),
                (vec![KeyValue::Text("b".into())], vec![Some(4.0)]),
            ]
        );
    }
}
