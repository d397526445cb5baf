//! UniMorph-style corpus handling.
//!
//! A dataset is a set of tab-separated files, one record per line:
//! `lemma TAB form TAB tag;tag;...`. Files follow the naming convention
//! `<lang>.train` / `<lang>.dev`, with a separate metadata file mapping
//! language code to family (`code TAB family`, one per line).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of train samples below which a language counts as low resource.
pub const LOW_RESOURCE_THRESHOLD: usize = 1300;

/// Where a sample came from: parsed from a file or produced by one of the
/// augmentation techniques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Natural,
    CopyAug,
    StemAug,
    TemplateAug,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::Natural => "natural",
            Origin::CopyAug => "copy_aug",
            Origin::StemAug => "stem_aug",
            Origin::TemplateAug => "template_aug",
        };
        f.write_str(s)
    }
}

/// One (lemma, inflected form, tag list) record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflectionSample {
    pub lemma: String,
    pub form: String,
    /// Morphosyntactic tags, in file order.
    pub tags: Vec<String>,
    pub language: String,
    pub family: String,
    pub origin: Origin,
}

impl InflectionSample {
    /// Builds a sample, enforcing the record invariants: non-empty lemma,
    /// form and tag list, and no whitespace inside a tag.
    pub fn new(
        lemma: impl Into<String>,
        form: impl Into<String>,
        tags: Vec<String>,
        language: impl Into<String>,
        family: impl Into<String>,
        origin: Origin,
    ) -> Result<Self> {
        let lemma = lemma.into();
        let form = form.into();
        if lemma.is_empty() {
            return Err(Error::InvalidSample("empty lemma".into()));
        }
        if form.is_empty() {
            return Err(Error::InvalidSample("empty form".into()));
        }
        if tags.is_empty() {
            return Err(Error::InvalidSample("empty tag list".into()));
        }
        if let Some(bad) = tags.iter().find(|t| t.is_empty()) {
            let _ = bad;
            return Err(Error::InvalidSample("empty tag".into()));
        }
        if let Some(bad) = tags.iter().find(|t| t.chars().any(char::is_whitespace)) {
            return Err(Error::InvalidSample(format!(
                "tag {bad:?} contains whitespace"
            )));
        }
        Ok(Self {
            lemma,
            form,
            tags,
            language: language.into(),
            family: family.into(),
            origin,
        })
    }

    /// The record as a TSV line (without trailing newline). With
    /// `origin_column`, the origin marker is appended as a fourth column.
    pub fn to_tsv(&self, origin_column: bool) -> String {
        let base = format!("{}\t{}\t{}", self.lemma, self.form, self.tags.join(";"));
        if origin_column {
            format!("{base}\t{}", self.origin)
        } else {
            base
        }
    }
}

/// Serializes samples to the same TSV format accepted by [`parse_unimorph`].
pub fn serialize_tsv(samples: &[InflectionSample], origin_column: bool) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.to_tsv(origin_column));
        out.push('\n');
    }
    out
}

/// Parses UniMorph TSV text into samples with `origin = Natural`.
///
/// Blank lines are skipped. A line with a field count other than 3, an
/// empty tag between semicolons, or an empty lemma/form is a parse error
/// naming the (1-based) line number.
pub fn parse_unimorph(text: &str, language: &str, family: &str) -> Result<Vec<InflectionSample>> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let tags: Vec<String> = fields[2].split(';').map(str::to_string).collect();
        if tags.iter().any(String::is_empty) {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty tag between semicolons".into(),
            });
        }
        let sample = InflectionSample::new(
            fields[0], fields[1], tags, language, family, Origin::Natural,
        )
        .map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

/// One language's train/dev data.
#[derive(Debug, Clone)]
pub struct LanguageSet {
    pub language: String,
    pub family: String,
    pub train: Vec<InflectionSample>,
    pub dev: Vec<InflectionSample>,
    pub low_resource: bool,
}

impl LanguageSet {
    /// Builds a set and validates that every sample carries the set's
    /// language and family. `low_resource` is derived from the train size.
    pub fn new(
        language: impl Into<String>,
        family: impl Into<String>,
        train: Vec<InflectionSample>,
        dev: Vec<InflectionSample>,
    ) -> Result<Self> {
        let language = language.into();
        let family = family.into();
        for s in train.iter().chain(dev.iter()) {
            if s.language != language || s.family != family {
                return Err(Error::InvalidSample(format!(
                    "sample ({}, {}) does not belong to language set ({language}, {family})",
                    s.language, s.family
                )));
            }
        }
        let low_resource = train.len() < LOW_RESOURCE_THRESHOLD;
        Ok(Self {
            language,
            family,
            train,
            dev,
            low_resource,
        })
    }
}

/// Character unigram distribution of one language, from train data only.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramDistribution {
    pub language: String,
    /// Probability per character; keys are exactly the characters observed
    /// in the language's train lemmas and forms.
    pub probs: BTreeMap<char, f64>,
}

impl UnigramDistribution {
    /// Draws a character using `u` uniform in [0, 1).
    pub fn sample_with(&self, u: f64) -> char {
        let mut acc = 0.0;
        let mut last = '\0';
        for (&ch, &p) in &self.probs {
            acc += p;
            last = ch;
            if u < acc {
                return ch;
            }
        }
        // Rounding can leave acc marginally below 1; fall back to the last
        // character.
        last
    }
}

/// Pools character counts over all lemmas and forms and normalizes.
///
/// All samples must belong to one language; an empty list is an error.
pub fn unigram_distribution(samples: &[InflectionSample]) -> Result<UnigramDistribution> {
    let first = samples
        .first()
        .ok_or_else(|| Error::EmptyInput("unigram distribution over no samples".into()))?;
    let language = first.language.clone();
    if let Some(bad) = samples.iter().find(|s| s.language != language) {
        return Err(Error::InvalidSample(format!(
            "mixed languages in unigram statistics: {} and {}",
            language, bad.language
        )));
    }
    let mut counts: BTreeMap<char, u64> = BTreeMap::new();
    for s in samples {
        for ch in s.lemma.chars().chain(s.form.chars()) {
            *counts.entry(ch).or_insert(0) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let probs = counts
        .into_iter()
        .map(|(ch, c)| (ch, c as f64 / total as f64))
        .collect();
    Ok(UnigramDistribution { language, probs })
}

/// Groups language sets by family, preserving insertion order.
pub fn family_index(sets: Vec<LanguageSet>) -> IndexMap<String, Vec<LanguageSet>> {
    let mut index: IndexMap<String, Vec<LanguageSet>> = IndexMap::new();
    for set in sets {
        index.entry(set.family.clone()).or_default().push(set);
    }
    index
}

/// Parses the language → family metadata file (`code TAB family` lines).
pub fn parse_family_metadata(text: &str) -> Result<IndexMap<String, String>> {
    let mut map = IndexMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(code), Some(family), None) if !code.is_empty() && !family.is_empty() => {
                map.insert(code.to_string(), family.to_string());
            }
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected `code TAB family`".into(),
                });
            }
        }
    }
    Ok(map)
}

/// Loads `<lang>.train` and `<lang>.dev` for one language from a corpus
/// directory. A missing dev file yields an empty dev list.
pub fn load_language(root: &Path, language: &str, family: &str) -> Result<LanguageSet> {
    let train_path = root.join(format!("{language}.train"));
    let train_text = std::fs::read_to_string(&train_path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", train_path.display()))
    })?;
    let train = parse_unimorph(&train_text, language, family)?;
    let dev_path = root.join(format!("{language}.dev"));
    let dev = if dev_path.exists() {
        parse_unimorph(&std::fs::read_to_string(&dev_path)?, language, family)?
    } else {
        Vec::new()
    };
    LanguageSet::new(language, family, train, dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(lemma: &str, form: &str, tags: &[&str]) -> InflectionSample {
        InflectionSample::new(
            lemma,
            form,
            tags.iter().map(|t| t.to_string()).collect(),
            "spa",
            "Indo-European",
            Origin::Natural,
        )
        .unwrap()
    }

    #[test]
    fn parses_single_record() {
        let got = parse_unimorph("vaguear\tvaguearás\tV;IND;SG;2;FUT", "spa", "Indo-European")
            .unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].lemma, "vaguear");
        assert_eq!(got[0].form, "vaguearás");
        assert_eq!(got[0].tags, ["V", "IND", "SG", "2", "FUT"]);
        assert_eq!(got[0].origin, Origin::Natural);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse_unimorph("", "x", "F").unwrap().is_empty());
    }

    #[test]
    fn blank_lines_are_skipped() {
        let got = parse_unimorph("a\tb\tX\n\na\tc\tY", "x", "F").unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].form, "c");
    }

    #[test]
    fn crlf_line_endings_are_accepted() {
        let got = parse_unimorph("a\tb\tX\r\nc\td\tY\r\n", "x", "F").unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].form, "b");
    }

    #[test]
    fn wrong_field_count_names_line() {
        let err = parse_unimorph("a\tb\tX\na\tb", "x", "F").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_tag_is_an_error() {
        assert!(parse_unimorph("a\tb\tX;;Y", "x", "F").is_err());
        assert!(parse_unimorph("a\tb\t", "x", "F").is_err());
    }

    #[test]
    fn low_resource_flips_at_threshold() {
        let mk = |n: usize| {
            let train = (0..n)
                .map(|i| sample(&format!("l{i}"), &format!("f{i}"), &["V"]))
                .collect();
            LanguageSet::new("spa", "Indo-European", train, vec![]).unwrap()
        };
        assert!(mk(1299).low_resource);
        assert!(!mk(1300).low_resource);
    }

    #[test]
    fn language_set_rejects_foreign_samples() {
        let foreign = InflectionSample::new(
            "a",
            "b",
            vec!["X".into()],
            "tur",
            "Turkic",
            Origin::Natural,
        )
        .unwrap();
        assert!(LanguageSet::new("spa", "Indo-European", vec![foreign], vec![]).is_err());
    }

    #[test]
    fn unigram_counts_and_normalizes() {
        // Concatenated text "aab": a twice, b once.
        let s = sample("aa", "b", &["X"]);
        let dist = unigram_distribution(&[s]).unwrap();
        assert_eq!(dist.probs.len(), 2);
        assert!((dist.probs[&'a'] - 2.0 / 3.0).abs() < 1e-12);
        assert!((dist.probs[&'b'] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unigram_single_symbol() {
        let dist = unigram_distribution(&[sample("x", "x", &["X"])]).unwrap();
        assert_eq!(dist.probs.len(), 1);
        assert!((dist.probs[&'x'] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unigram_rejects_empty_and_mixed() {
        assert!(unigram_distribution(&[]).is_err());
        let other = InflectionSample::new(
            "a",
            "b",
            vec!["X".into()],
            "tur",
            "Turkic",
            Origin::Natural,
        )
        .unwrap();
        assert!(unigram_distribution(&[sample("a", "b", &["X"]), other]).is_err());
    }

    #[test]
    fn unigram_sampling_stays_in_support() {
        let dist = unigram_distribution(&[sample("ab", "ba", &["X"])]).unwrap();
        for i in 0..100 {
            let u = i as f64 / 100.0;
            assert!(dist.probs.contains_key(&dist.sample_with(u)));
        }
    }

    #[test]
    fn family_index_groups_in_order() {
        let set = |lang: &str, fam: &str| {
            let train = vec![InflectionSample::new(
                "a",
                "b",
                vec!["X".into()],
                lang,
                fam,
                Origin::Natural,
            )
            .unwrap()];
            LanguageSet::new(lang, fam, train, vec![]).unwrap()
        };
        let index = family_index(vec![
            set("vep", "Uralic"),
            set("lud", "Uralic"),
            set("tur", "Turkic"),
        ]);
        assert_eq!(index.len(), 2);
        let keys: Vec<&String> = index.keys().collect();
        assert_eq!(keys, ["Uralic", "Turkic"]);
        assert_eq!(index["Uralic"].len(), 2);
        assert_eq!(index["Uralic"][0].language, "vep");
        assert_eq!(index["Turkic"][0].language, "tur");
    }

    #[test]
    fn family_index_empty() {
        assert!(family_index(vec![]).is_empty());
    }

    #[test]
    fn family_metadata_roundtrip() {
        let meta = parse_family_metadata("vep\tUralic\ntur\tTurkic\n").unwrap();
        assert_eq!(meta["vep"], "Uralic");
        assert_eq!(meta["tur"], "Turkic");
        assert!(parse_family_metadata("vep").is_err());
    }

    #[test]
    fn tsv_roundtrip_on_given_records() {
        let samples = vec![
            sample("vaguear", "vaguearás", &["V", "IND", "SG", "2", "FUT"]),
            sample("emunger", "emunjamos", &["V", "IMP", "PL", "1", "POS"]),
        ];
        let text = serialize_tsv(&samples, false);
        let parsed = parse_unimorph(&text, "spa", "Indo-European").unwrap();
        assert_eq!(parsed, samples);
    }
}
