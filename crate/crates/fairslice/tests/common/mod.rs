//! Shared test support: a synthetic planted-bias corpus generator and a
//! helper for driving the compiled binary.
//!
//! The corpus plants bias on one identity: toxic comments inside the
//! subgroup use subgroup-specific abusive tokens that never occur in the
//! background, so a model trained without subgroup data cannot separate the
//! slice while a model trained on mixed data can.

#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use fairslice_core::rng::Rng;
use fairslice_core::{Dataset, DatasetBuilder};

/// The identity the synthetic corpus plants its bias on.
pub const PLANTED_IDENTITY: &str = "muslim";

const GENERAL_TOXIC: [&str; 8] = [
    "insult0", "insult1", "insult2", "insult3", "insult4", "insult5", "insult6", "insult7",
];
const SUBGROUP_TOXIC: [&str; 8] = [
    "taunt0", "taunt1", "taunt2", "taunt3", "taunt4", "taunt5", "taunt6", "taunt7",
];

/// Generates `n` records with ids `{prefix}{i}`. Roughly a quarter are
/// subgroup members (annotation ≥ 0.6), a twentieth carry a weak mention in
/// [0.25, 0.45) (filtered from naive splits but below slice membership), and
/// the rest are background, some with annotation noise below 0.25.
pub fn planted_corpus(n: usize, seed: u64, prefix: &str) -> Dataset {
    let mut rng = Rng::from_seed(seed);
    let mut builder = DatasetBuilder::with_default_identities();
    for i in 0..n {
        let roll = rng.next_f64();
        let (member, weak, identity_value) = if roll < 0.25 {
            (true, false, 0.6 + 0.4 * rng.next_f64())
        } else if roll < 0.30 {
            (false, true, 0.25 + 0.199 * rng.next_f64())
        } else if roll < 0.50 {
            (false, false, 0.2 * rng.next_f64())
        } else {
            (false, false, 0.0)
        };
        let toxic = if member {
            rng.next_f64() < 0.5
        } else {
            rng.next_f64() < 0.3
        };
        let toxicity = if toxic {
            0.7 + 0.3 * rng.next_f64()
        } else {
            0.3 * rng.next_f64()
        };

        let mut words: Vec<String> = Vec::new();
        let filler = 5 + (rng.next_u64() % 6) as usize;
        for _ in 0..filler {
            words.push(format!("word{:02}", rng.next_u64() % 40));
        }
        if toxic {
            // Subgroup toxicity uses tokens the background never contains.
            let pool: &[&str] = if member {
                &SUBGROUP_TOXIC
            } else {
                &GENERAL_TOXIC
            };
            for _ in 0..(2 + rng.next_u64() % 2) {
                words.push(pool[(rng.next_u64() % 8) as usize].to_string());
            }
        }
        if member || weak {
            words.push(PLANTED_IDENTITY.to_string());
        }
        rng.shuffle(&mut words);

        let identities: Vec<(&str, f64)> = if identity_value > 0.0 {
            vec![(PLANTED_IDENTITY, identity_value)]
        } else {
            Vec::new()
        };
        builder
            .push(
                &format!("{prefix}{i:06}"),
                &words.join(" "),
                toxicity,
                &identities,
            )
            .unwrap();
    }
    builder.finish()
}

/// Writes a planted corpus straight to CSV with the default column names.
pub fn write_planted_corpus(n: usize, seed: u64, prefix: &str, path: &Path) {
    let corpus = planted_corpus(n, seed, prefix);
    fairslice::io::write_dataset_csv(&corpus, &fairslice::io::ColumnMap::default(), path).unwrap();
}

pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the compiled `fairslice` binary with the given arguments.
pub fn run_cli(args: &[&str]) -> CliOutput {
    let output = Command::new(env!("CARGO_BIN_EXE_fairslice"))
        .args(args)
        .output()
        .expect("failed to spawn fairslice binary");
    CliOutput {
        code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}
