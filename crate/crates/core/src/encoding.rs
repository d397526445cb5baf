//! Symbol vocabulary and sample serialization.
//!
//! The model consumes flat symbol sequences. A source sample
//! `izar, (V, COND, PL, 2)` serializes as
//!
//! ```text
//! <SOS> i z a r <SEP> FAM=<family> LANG=<code> V COND PL 2 <EOS>
//! ```
//!
//! and the target form as `<SOS> i z a r í a i s <EOS>`. One vocabulary
//! covers characters, tags and control symbols; encoder input and decoder
//! output share it (and therefore share embeddings).

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::corpus::InflectionSample;
use crate::error::{Error, Result};

/// Control symbols, in fixed id order.
pub const RESERVED: [&str; 5] = ["<SOS>", "<EOS>", "<SEP>", "<PAD>", "<UNK>"];

pub const SOS: usize = 0;
pub const EOS: usize = 1;
pub const SEP: usize = 2;
pub const PAD: usize = 3;
pub const UNK: usize = 4;

/// Prefix of the family identity tag prepended to every source sequence.
pub const FAMILY_TAG_PREFIX: &str = "FAM=";
/// Prefix of the language identity tag prepended to every source sequence.
pub const LANGUAGE_TAG_PREFIX: &str = "LANG=";
/// Tag carried by copy-augmentation samples.
pub const COPY_TAG: &str = "COPY";

/// The identity tags of one language, as they appear in source sequences.
pub fn identity_tags(family: &str, language: &str) -> [String; 2] {
    [
        format!("{FAMILY_TAG_PREFIX}{family}"),
        format!("{LANGUAGE_TAG_PREFIX}{language}"),
    ]
}

/// Bidirectional symbol ↔ id map shared by encoder input and decoder output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from the characters and tags observed in
    /// `samples`: reserved symbols first, then characters sorted by code
    /// point, then tags sorted lexicographically. The result does not
    /// depend on sample order.
    pub fn build(samples: &[InflectionSample]) -> Self {
        Self::build_with_tags(samples, std::iter::empty::<&str>())
    }

    /// [`Vocabulary::build`] plus extra tags that must be encodable even
    /// when absent from the samples (e.g. language identity tags when the
    /// corpus was not augmented).
    pub fn build_with_tags<I, T>(samples: &[InflectionSample], extra_tags: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        Self::build_from_iter(samples.iter(), extra_tags)
    }

    /// Iterator form of the builder, for callers whose samples are not
    /// contiguous.
    pub fn build_from_iter<'a, S, I, T>(samples: S, extra_tags: I) -> Self
    where
        S: IntoIterator<Item = &'a InflectionSample>,
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut chars: BTreeSet<char> = BTreeSet::new();
        let mut tags: BTreeSet<String> = BTreeSet::new();
        for s in samples {
            chars.extend(s.lemma.chars());
            chars.extend(s.form.chars());
            tags.extend(s.tags.iter().cloned());
        }
        for t in extra_tags {
            tags.insert(t.as_ref().to_string());
        }
        let mut symbols: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        symbols.extend(chars.iter().map(|c| c.to_string()));
        // A tag spelled exactly like an already-listed symbol shares its id.
        for t in tags {
            if !symbols.contains(&t) {
                symbols.push(t);
            }
        }
        Self::from_symbols(symbols).expect("construction yields unique symbols")
    }

    fn from_symbols(symbols: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(symbols.len());
        for (id, sym) in symbols.iter().enumerate() {
            if index.insert(sym.clone(), id).is_some() {
                return Err(Error::Vocab(format!("duplicate symbol {sym:?}")));
            }
        }
        for (id, expected) in RESERVED.iter().enumerate() {
            if symbols.get(id).map(String::as_str) != Some(*expected) {
                return Err(Error::Vocab(format!(
                    "reserved symbol {expected} missing from id {id}"
                )));
            }
        }
        Ok(Self { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Id of `symbol`, or the UNK id when out of vocabulary.
    pub fn id(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn symbol(&self, id: usize) -> Result<&str> {
        self.symbols
            .get(id)
            .map(String::as_str)
            .ok_or(Error::IdOutOfRange {
                id,
                size: self.symbols.len(),
            })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    fn char_id(&self, ch: char) -> usize {
        let mut buf = [0u8; 4];
        self.id(ch.encode_utf8(&mut buf))
    }

    /// Canonical text form: one symbol per line, line number = id.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.symbols {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let symbols: Vec<String> = text.lines().map(str::to_string).collect();
        if symbols.len() < RESERVED.len() {
            return Err(Error::Vocab("vocabulary file too short".into()));
        }
        Self::from_symbols(symbols)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Source and target id sequences of one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
}

/// Serializes a sample's source side:
/// `SOS, lemma characters, SEP, FAM=…, LANG=…, tags, EOS`.
///
/// Unknown symbols map to UNK, so encoding is total.
pub fn encode_source(sample: &InflectionSample, vocab: &Vocabulary) -> Vec<usize> {
    let mut ids = Vec::with_capacity(sample.lemma.chars().count() + sample.tags.len() + 5);
    ids.push(SOS);
    ids.extend(sample.lemma.chars().map(|c| vocab.char_id(c)));
    ids.push(SEP);
    for tag in identity_tags(&sample.family, &sample.language) {
        ids.push(vocab.id(&tag));
    }
    ids.extend(sample.tags.iter().map(|t| vocab.id(t)));
    ids.push(EOS);
    ids
}

/// Serializes a target form: `SOS, form characters, EOS`.
pub fn encode_target(form: &str, vocab: &Vocabulary) -> Vec<usize> {
    let mut ids = Vec::with_capacity(form.chars().count() + 2);
    ids.push(SOS);
    ids.extend(form.chars().map(|c| vocab.char_id(c)));
    ids.push(EOS);
    ids
}

/// Encodes both sides of a sample.
pub fn encode_pair(sample: &InflectionSample, vocab: &Vocabulary) -> EncodedPair {
    EncodedPair {
        source: encode_source(sample, vocab),
        target: encode_target(&sample.form, vocab),
    }
}

/// Maps a decoded id sequence back to a string.
///
/// Skips SOS/SEP/PAD, stops at the first EOS, and renders UNK as U+FFFD.
/// An id outside the vocabulary is an error.
pub fn decode_output(ids: &[usize], vocab: &Vocabulary) -> Result<String> {
    let mut out = String::new();
    for &id in ids {
        if id >= vocab.len() {
            return Err(Error::IdOutOfRange {
                id,
                size: vocab.len(),
            });
        }
        match id {
            EOS => break,
            SOS | SEP | PAD => continue,
            UNK => out.push('\u{FFFD}'),
            _ => out.push_str(vocab.symbol(id)?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Origin;

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
    fn build_orders_reserved_chars_tags() {
        let v = Vocabulary::build(&[sample("az", "za", &["V"])]);
        let expected: Vec<&str> = vec!["<SOS>", "<EOS>", "<SEP>", "<PAD>", "<UNK>", "a", "z", "V"];
        assert_eq!(v.symbols(), expected.as_slice());
    }

    #[test]
    fn build_is_deterministic_and_order_insensitive() {
        let a = sample("abc", "abd", &["V", "PST"]);
        let b = sample("xyz", "xyw", &["N", "PL"]);
        let v1 = Vocabulary::build(&[a.clone(), b.clone()]);
        let v2 = Vocabulary::build(&[b, a]);
        assert_eq!(v1, v2);
    }

    #[test]
    fn copy_augmented_corpus_adds_copy_tag() {
        use crate::augment::{copy_augment, AugmentConfig};
        use crate::corpus::LanguageSet;
        let set = LanguageSet::new(
            "spa",
            "Indo-European",
            vec![sample("izar", "izaba", &["V"])],
            vec![],
        )
        .unwrap();
        let mut all = set.train.clone();
        all.extend(copy_augment(&set, &AugmentConfig::seeded(1)));
        let v = Vocabulary::build(&all);
        assert!(v.contains(COPY_TAG));
        assert!(v.contains("FAM=Indo-European"));
        assert!(v.contains("LANG=spa"));
    }

    #[test]
    fn source_serialization_matches_layout() {
        let s = sample("izar", "izaríais", &["V", "COND", "PL", "2"]);
        let v = Vocabulary::build_with_tags(&[s.clone()], identity_tags("Indo-European", "spa"));
        let ids = encode_source(&s, &v);
        let symbols: Vec<&str> = ids.iter().map(|&i| v.symbol(i).unwrap()).collect();
        assert_eq!(
            symbols,
            [
                "<SOS>",
                "i",
                "z",
                "a",
                "r",
                "<SEP>",
                "FAM=Indo-European",
                "LANG=spa",
                "V",
                "COND",
                "PL",
                "2",
                "<EOS>"
            ]
        );
        // len(lemma) + len(tags) + 2 identity + SOS/SEP/EOS.
        assert_eq!(ids.len(), 4 + 4 + 2 + 3);
    }

    #[test]
    fn oov_character_maps_to_unk() {
        let known = sample("izar", "izar", &["V"]);
        let v = Vocabulary::build(&[known]);
        let s = sample("straße", "straße", &["V"]);
        let ids = encode_source(&s, &v);
        assert!(ids.contains(&UNK));
    }

    #[test]
    fn target_roundtrip() {
        let s = sample("izar", "izaríais", &["V"]);
        let v = Vocabulary::build(&[s.clone()]);
        let ids = encode_target("izaríais", &v);
        assert_eq!(ids[0], SOS);
        assert_eq!(*ids.last().unwrap(), EOS);
        assert_eq!(decode_output(&ids, &v).unwrap(), "izaríais");
    }

    #[test]
    fn decode_stops_at_first_eos() {
        let v = Vocabulary::build(&[sample("ab", "ab", &["V"])]);
        let a = v.id("a");
        let b = v.id("b");
        assert_eq!(decode_output(&[SOS, a, EOS, b], &v).unwrap(), "a");
    }

    #[test]
    fn decode_rejects_out_of_range_ids() {
        let v = Vocabulary::build(&[sample("a", "a", &["V"])]);
        assert!(decode_output(&[SOS, v.len(), EOS], &v).is_err());
    }

    #[test]
    fn decode_renders_unk_as_replacement_char() {
        let v = Vocabulary::build(&[sample("a", "a", &["V"])]);
        assert_eq!(decode_output(&[SOS, UNK, EOS], &v).unwrap(), "\u{FFFD}");
    }

    #[test]
    fn vocabulary_text_roundtrip() {
        let v = Vocabulary::build(&[sample("izar", "izaríais", &["V", "COND"])]);
        let v2 = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(v, v2);
    }
}
