//! Copy and stem-modification data augmentation.
//!
//! Copy samples teach the model to reproduce its input: for a word `izar`
//! the sample is `izar → izar` with tags `FAM=…;LANG=…;COPY`. Stem
//! modification takes a natural record, locates the stem (the longest
//! common substring of lemma and form), and rewrites some of its
//! characters with draws from the language's unigram distribution — the
//! same replacement at the aligned position in both strings, so the
//! inflection pattern survives while the stem is new.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{InflectionSample, LanguageSet, Origin, UnigramDistribution};
use crate::encoding::{identity_tags, COPY_TAG};

/// Upper bound on passes over the source data when stem augmentation
/// under-delivers.
const MAX_GENERATION_ROUNDS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub copy_cap: usize,
    pub stem_cap: usize,
    /// Per-character replacement probability inside the stem.
    pub stem_replace_prob: f64,
    /// Minimum stem (longest common substring) length for a record to
    /// qualify for stem modification.
    pub min_stem_len: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            copy_cap: 10_000,
            stem_cap: 10_000,
            stem_replace_prob: 0.5,
            min_stem_len: 3,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.stem_replace_prob > 0.0 && self.stem_replace_prob <= 1.0) {
            return Err(crate::Error::Config(format!(
                "stem_replace_prob must be in (0, 1], got {}",
                self.stem_replace_prob
            )));
        }
        if self.min_stem_len < 1 {
            return Err(crate::Error::Config("min_stem_len must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Emits up to `copy_cap` copy samples over the set's word inventory
/// (all distinct lemmas and forms in train), without duplicates,
/// deterministically for a given seed.
pub fn copy_augment(set: &LanguageSet, cfg: &AugmentConfig) -> Vec<InflectionSample> {
    let mut inventory: Vec<&str> = set
        .train
        .iter()
        .flat_map(|s| [s.lemma.as_str(), s.form.as_str()])
        .collect();
    inventory.sort_unstable();
    inventory.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle(&mut inventory, &mut rng);

    let [fam_tag, lang_tag] = identity_tags(&set.family, &set.language);
    inventory
        .into_iter()
        .take(cfg.copy_cap)
        .map(|word| {
            InflectionSample::new(
                word,
                word,
                vec![fam_tag.clone(), lang_tag.clone(), COPY_TAG.to_string()],
                &set.language,
                &set.family,
                Origin::CopyAug,
            )
            .expect("copy sample is well-formed")
        })
        .collect()
}

/// Longest common substring of `a` and `b` over Unicode scalar values.
/// Ties break to the leftmost start in `a`. Returns (start in a,
/// start in b, length) or `None` when the strings share nothing.
pub fn longest_common_substring(a: &[char], b: &[char]) -> Option<(usize, usize, usize)> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    // lengths[j]: LCS ending at a[i-1], b[j-1] for the current row i.
    let mut lengths = vec![0usize; b.len() + 1];
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 1..=a.len() {
        let mut prev_diag = 0;
        for j in 1..=b.len() {
            let tmp = lengths[j];
            if a[i - 1] == b[j - 1] {
                lengths[j] = prev_diag + 1;
                let len = lengths[j];
                let cand = (i - len, j - len, len);
                best = match best {
                    None => Some(cand),
                    // Strictly longer wins; an equal-length match wins only
                    // when it starts further left in `a`.
                    Some(cur) if len > cur.2 || (len == cur.2 && cand.0 < cur.0) => Some(cand),
                    Some(cur) => Some(cur),
                };
            } else {
                lengths[j] = 0;
            }
            prev_diag = tmp;
        }
    }
    best.filter(|&(_, _, len)| len > 0)
}

/// One stem-character replacement: offset within the stem plus the new
/// character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StemEdit {
    pub offset: usize,
    pub replacement: char,
}

/// Applies the same edits to the stem occurrence in both lemma and form.
/// Positions outside the stem spans are untouched.
pub fn apply_stem_edits(
    sample: &InflectionSample,
    lemma_start: usize,
    form_start: usize,
    stem_len: usize,
    edits: &[StemEdit],
) -> InflectionSample {
    let mut lemma: Vec<char> = sample.lemma.chars().collect();
    let mut form: Vec<char> = sample.form.chars().collect();
    for edit in edits {
        debug_assert!(edit.offset < stem_len);
        lemma[lemma_start + edit.offset] = edit.replacement;
        form[form_start + edit.offset] = edit.replacement;
    }
    InflectionSample::new(
        lemma.into_iter().collect::<String>(),
        form.into_iter().collect::<String>(),
        sample.tags.clone(),
        &sample.language,
        &sample.family,
        Origin::StemAug,
    )
    .expect("edits preserve sample validity")
}

/// Generates up to `stem_cap` stem-modified samples from the set's train
/// data. Records whose lemma and form share no common substring of at
/// least `min_stem_len` characters are skipped; generation cycles over
/// the qualifying records for a bounded number of rounds, so the result
/// may be shorter than the cap.
pub fn stem_augment(
    set: &LanguageSet,
    dist: &UnigramDistribution,
    cfg: &AugmentConfig,
) -> Vec<InflectionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut sources: Vec<(&InflectionSample, (usize, usize, usize))> = Vec::new();
    for s in &set.train {
        let lemma: Vec<char> = s.lemma.chars().collect();
        let form: Vec<char> = s.form.chars().collect();
        if let Some(span) = longest_common_substring(&lemma, &form) {
            if span.2 >= cfg.min_stem_len {
                sources.push((s, span));
            }
        }
    }
    if sources.is_empty() || cfg.stem_cap == 0 {
        return Vec::new();
    }
    shuffle(&mut sources, &mut rng);

    let mut out = Vec::with_capacity(cfg.stem_cap.min(sources.len()));
    'rounds: for _ in 0..MAX_GENERATION_ROUNDS {
        for &(sample, (lemma_start, form_start, len)) in &sources {
            if out.len() >= cfg.stem_cap {
                break 'rounds;
            }
            let mut edits = Vec::new();
            for offset in 0..len {
                if rng.gen::<f64>() < cfg.stem_replace_prob {
                    let replacement = dist.sample_with(rng.gen::<f64>());
                    edits.push(StemEdit {
                        offset,
                        replacement,
                    });
                }
            }
            out.push(apply_stem_edits(
                sample,
                lemma_start,
                form_start,
                len,
                &edits,
            ));
        }
    }
    out
}

/// Fisher–Yates with our seeded stream; `rand`'s `SliceRandom` would work
/// too, but an explicit loop pins the exact draw sequence.
fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
