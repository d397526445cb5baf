//! Shared fixtures: synthetic corpora for the integration and acceptance
//! suites.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flect_core::corpus::{serialize_tsv, InflectionSample, LanguageSet, Origin};

pub const TOY_LANGUAGE: &str = "toy";
pub const TOY_FAMILY: &str = "Toyic";

/// A regular suffixing language: every lemma combines with three tag
/// sets, each appending a fixed suffix.
pub fn toy_language(n_lemmas: usize, seed: u64) -> Vec<InflectionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "abdegiklmnorstu".chars().collect();
    let tag_sets: [(&[&str], &str); 3] = [
        (&["V", "PRS"], "a"),
        (&["V", "PST"], "ot"),
        (&["V", "FUT"], "eske"),
    ];
    let mut lemmas = BTreeSet::new();
    while lemmas.len() < n_lemmas {
        let len = rng.gen_range(3..=5);
        let lemma: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        lemmas.insert(lemma);
    }
    let mut samples = Vec::new();
    for lemma in lemmas {
        for (tags, suffix) in tag_sets {
            samples.push(
                InflectionSample::new(
                    lemma.clone(),
                    format!("{lemma}{suffix}"),
                    tags.iter().map(|t| t.to_string()).collect(),
                    TOY_LANGUAGE,
                    TOY_FAMILY,
                    Origin::Natural,
                )
                .unwrap(),
            );
        }
    }
    samples
}

/// Deterministic split: every tenth sample goes to dev.
pub fn split_toy(samples: Vec<InflectionSample>) -> LanguageSet {
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        if i % 10 == 9 {
            dev.push(s);
        } else {
            train.push(s);
        }
    }
    LanguageSet::new(TOY_LANGUAGE, TOY_FAMILY, train, dev).unwrap()
}

/// Synthetic language over its own alphabet and suffixes, for
/// multi-language corpora.
pub fn synth_language(
    language: &str,
    family: &str,
    alphabet: &str,
    suffixes: [(&[&str], &str); 3],
    n_lemmas: usize,
    seed: u64,
) -> Vec<InflectionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = alphabet.chars().collect();
    let mut lemmas = BTreeSet::new();
    while lemmas.len() < n_lemmas {
        let len = rng.gen_range(3..=5);
        let lemma: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        lemmas.insert(lemma);
    }
    let mut samples = Vec::new();
    for lemma in lemmas {
        for (tags, suffix) in suffixes {
            samples.push(
                InflectionSample::new(
                    lemma.clone(),
                    format!("{lemma}{suffix}"),
                    tags.iter().map(|t| t.to_string()).collect(),
                    language,
                    family,
                    Origin::Natural,
                )
                .unwrap(),
            );
        }
    }
    samples
}

/// Writes a three-language, two-family corpus (`aaa`/`bbb` in family
/// `Alpha`, `ccc` in family `Beta`) under `root`, with the family
/// metadata file, and returns the language codes.
pub fn write_toy_corpus(root: &Path, n_lemmas: usize) -> Vec<&'static str> {
    let specs: [(&str, &str, &str, [(&[&str], &str); 3], u64); 3] = [
        (
            "aaa",
            "Alpha",
            "abdegik",
            [(&["V", "PRS"], "a"), (&["V", "PST"], "ot"), (&["N", "PL"], "en")],
            11,
        ),
        (
            "bbb",
            "Alpha",
            "degiklm",
            [(&["V", "PRS"], "u"), (&["V", "PST"], "ir"), (&["N", "PL"], "es")],
            22,
        ),
        (
            "ccc",
            "Beta",
            "klmnors",
            [(&["V", "PRS"], "o"), (&["V", "PST"], "ad"), (&["N", "PL"], "im")],
            33,
        ),
    ];
    let mut meta = String::new();
    for (code, family, alphabet, suffixes, seed) in specs {
        let samples = synth_language(code, family, alphabet, suffixes, n_lemmas, seed);
        let mut train = Vec::new();
        let mut dev = Vec::new();
        for (i, s) in samples.into_iter().enumerate() {
            if i % 6 == 5 {
                dev.push(s);
            } else {
                train.push(s);
            }
        }
        std::fs::write(root.join(format!("{code}.train")), serialize_tsv(&train, false)).unwrap();
        std::fs::write(root.join(format!("{code}.dev")), serialize_tsv(&dev, false)).unwrap();
        meta.push_str(&format!("{code}\t{family}\n"));
    }
    std::fs::write(root.join("families.tsv"), meta).unwrap();
    vec!["aaa", "bbb", "ccc"]
}
