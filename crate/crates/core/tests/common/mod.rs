#![allow(dead_code)]

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vizrec_core::{CsvOptions, Dataset};

pub fn fixture(name: &str) -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let options = CsvOptions {
        name: name.to_string(),
        ..CsvOptions::default()
    };
    Dataset::from_csv(&bytes, &options).unwrap()
}

const WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "omega", "kappa"];

/// A small CSV with a random mix of numeric, categorical, ordinal and date columns.
pub fn random_csv(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let rows = rng.gen_range(4..60);
    let kinds: Vec<u8> = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(0..4)).collect();
    let levels: Vec<usize> = kinds.iter().map(|_| rng.gen_range(2..6)).collect();
    let mut out = String::new();
    let header: Vec<String> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| format!("{}{i}", ["q", "n", "o", "t"][*k as usize]))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..rows {
        let cells: Vec<String> = kinds
            .iter()
            .zip(&levels)
            .map(|(k, &levels)| {
                if rng.gen_bool(0.04) {
                    return String::new();
                }
                match k {
                    0 => format!("{:.2}", rng.gen_range(-50.0..150.0)),
                    1 => WORDS[rng.gen_range(0..levels)].to_string(),
                    2 => (1 + r % levels).to_string(),
                    _ => format!(
                        "{}-{:02}-{:02}",
                        rng.gen_range(2010..2010 + levels as i32),
                        rng.gen_range(1..13),
                        rng.gen_range(1..29)
                    ),
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn random_dataset(seed: u64) -> Dataset {
    Dataset::from_csv(random_csv(seed).as_bytes(), &CsvOptions::default()).unwrap()
}
