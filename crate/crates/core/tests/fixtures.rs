mod common;

use common::fixture;
use vizrec_core::emitter::{parse_vegalite, render, to_vegalite, validate};
use vizrec_core::recommender::{enumerate, marked_text};
use vizrec_core::{Channel, ChannelMap, EmitOptions, FieldRef, MarkType, SchemaVersion, VarType};

fn types(name: &str) -> Vec<(String, VarType)> {
    fixture(name)
        .variables()
        .iter()
        .map(|v| (v.name.clone(), v.inferred_type))
        .collect()
}

#[test]
fn fixture_types() {
    use VarType::*;
    let expect = |pairs: &[(&str, VarType)]| -> Vec<(String, VarType)> {
        pairs.iter().map(|(n, t)| (n.to_string(), *t)).collect()
    };
    assert_eq!(
        types("weather.csv"),
        expect(&[
            ("DATE", Temporal),
            ("LOCATION", Nominal),
            ("PRECIPITATION", Quantitative),
            ("TEMP_MAX", Quantitative),
            ("TEMP_MIN", Quantitative),
            ("WIND", Quantitative),
            ("WEATHER", Nominal),
        ])
    );
    assert_eq!(
        types("iris.csv"),
        expect(&[
            ("sepal_length", Quantitative),
            ("sepal_width", Quantitative),
            ("petal_length", Quantitative),
            ("petal_width", Quantitative),
            ("species", Nominal),
        ])
    );
    let grad = types("graduate_programs.csv");
    assert_eq!(grad[0], ("YEAR".to_string(), Quantitative));
    assert_eq!(grad[1].1, Nominal);
}

#[test]
fn weather_temp_max_questions() {
    let d = fixture("weather.csv");
    let r = enumerate(&["TEMP_MAX".to_string()], &d).unwrap();
    let texts: Vec<String> = r.groups.iter().map(|g| marked_text(&g.question)).collect();
    assert_eq!(
        texts,
        [
            "What is the MEAN OF [TEMP_MAX] over the YEARS?",
            "What is the MEAN OF [TEMP_MAX] over the MONTHS?",
            "What is the is the distribution of values of [TEMP_MAX] in each category of [LOCATION]?",
            "What is the average of [TEMP_MAX] in each category of [LOCATION]?",
            "What is the correlation between [TEMP_MAX] and [PRECIPITATION]?",
            "What is the correlation between [TEMP_MAX] and [TEMP_MIN]?",
            "What is the correlation between [TEMP_MAX] and [WIND]?",
            "What is the is the distribution of values of [TEMP_MAX] in each category of [WEATHER]?",
            "What is the average of [TEMP_MAX] in each category of [WEATHER]?",
        ]
    );
    assert_eq!(r.notice, None);
    let labels: Vec<String> = r.groups[0].candidates.iter().map(|s| s.label()).collect();
    assert_eq!(
        labels,
        [
            "line x=year(DATE) y=mean(TEMP_MAX)",
            "bar x=year(DATE) y=mean(TEMP_MAX)",
            "area x=year(DATE) y=mean(TEMP_MAX)",
        ]
    );
}

#[test]
fn empty_selection_lists_single_variable_questions() {
    let d = fixture("weather.csv");
    let r = enumerate(&[], &d).unwrap();
    // DATE has two time granularities; every other variable has one question.
    assert_eq!(r.groups.len(), d.variables().len() + 1);
    assert_eq!(r.groups[0].question_text(), "What is the number of records over the YEARS?");
    let precip = &r.groups[3];
    assert_eq!(precip.added, "PRECIPITATION");
    assert_eq!(precip.candidates[0].mark, MarkType::Histogram);
    assert!(precip.candidates[0].encodings[&Channel::X].bin);
}

#[test]
fn promote_rebuilds_every_candidate() {
    for name in ["weather.csv", "iris.csv", "graduate_programs.csv"] {
        let d = fixture(name);
        let vars: Vec<String> = d.variables().iter().map(|v| v.name.clone()).collect();
        let mut selections = vec![vec![]];
        for a in &vars {
            selections.push(vec![a.clone()]);
            for b in &vars {
                if a != b {
                    selections.push(vec![a.clone(), b.clone()]);
                }
            }
        }
        for selection in selections {
            let r = enumerate(&selection, &d).unwrap();
            for g in &r.groups {
                for (i, candidate) in g.candidates.iter().enumerate() {
                    let map = g.promote(i, &d).unwrap();
                    let rebuilt = map.build_spec(&d).unwrap();
                    assert_eq!(&rebuilt, candidate, "{name} {}", g.question_text());
                    let opts = EmitOptions::url(SchemaVersion::V5);
                    let a = render(&to_vegalite(candidate, &d, opts).unwrap(), false);
                    let b = render(&to_vegalite(&rebuilt, &d, opts).unwrap(), false);
                    assert_eq!(a, b);
                }
            }
        }
    }
}

#[test]
fn emitted_documents_validate_and_parse_back() {
    let d = fixture("weather.csv");
    let r = enumerate(&["DATE".to_string(), "LOCATION".to_string()], &d).unwrap();
    assert!(!r.groups.is_empty());
    for g in &r.groups {
        for spec in &g.candidates {
            for schema in [SchemaVersion::V4, SchemaVersion::V5] {
                let doc = to_vegalite(spec, &d, EmitOptions::url(schema)).unwrap();
                assert!(validate(&doc).is_empty(), "{doc}");
                assert_eq!(&parse_vegalite(&doc, "weather.csv").unwrap(), spec);
            }
        }
    }
}

#[test]
fn large_tables_are_referenced_by_url() {
    let d = fixture("weather.csv");
    let spec = ChannelMap::new()
        .assign(Channel::X, FieldRef::var("WIND"), &d)
        .unwrap()
        .build_spec(&d)
        .unwrap();
    let inline = to_vegalite(&spec, &d, EmitOptions::default()).unwrap();
    assert_eq!(inline["data"]["values"].as_array().unwrap().len(), 2922);
    let mut csv = String::from("k\n");
    for i in 0..=vizrec_core::emitter::INLINE_ROW_LIMIT {
        csv.push_str(&format!("c{}\n", i % 7));
    }
    let options = vizrec_core::CsvOptions {
        name: "big.csv".into(),
        ..Default::default()
    };
    let big = vizrec_core::Dataset::from_csv(csv.as_bytes(), &options).unwrap();
    let spec = ChannelMap::new()
        .assign(Channel::X, FieldRef::var("k"), &big)
        .unwrap()
        .build_spec(&big)
        .unwrap();
    let doc = to_vegalite(&spec, &big, EmitOptions::default()).unwrap();
    assert_eq!(doc["data"], serde_json::json!({"url": "big.csv"}));
}
