//! Whole-word template induction.
//!
//! Each (lemma, form) record is turned into a *comparison*: three aligned
//! lists `sim` (shared characters), `diff1` and `diff2` (each word's own
//! characters), with `.` marking the positions owned by the other lists.
//! Suffixing languages are compared from the left, prefixing languages
//! from the right, so the shared stem lands in `sim` and the affix
//! pattern in the diff lists.
//!
//! Comparisons whose diff lists agree (the same affix pattern over
//! equally shaped words) merge: stem positions that differ become `?`.
//! Merged comparisons act as generation templates: every `.` is filled
//! with one character drawn from the language's unigram distribution (the
//! same character in both diff lists), every `?` with one such character
//! or nothing, and the literal affix characters pass through. `diff1`
//! yields a synthetic lemma, `diff2` the matching synthetic form.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{InflectionSample, LanguageSet, Origin, UnigramDistribution};
use crate::error::{Error, Result};

/// One cell of a comparison list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// A concrete character.
    Ch(char),
    /// Position owned by the other lists (`.`).
    Dot,
    /// Position that differed between merged comparisons (`?`).
    Question,
}

impl Slot {
    pub fn to_char(self) -> char {
        match self {
            Slot::Ch(c) => c,
            Slot::Dot => '.',
            Slot::Question => '?',
        }
    }

    pub fn from_char(c: char) -> Self {
        match c {
            '.' => Slot::Dot,
            '?' => Slot::Question,
            other => Slot::Ch(other),
        }
    }

    fn is_placeholder(self) -> bool {
        matches!(self, Slot::Dot | Slot::Question)
    }
}

fn slots_to_string(slots: &[Slot]) -> String {
    slots.iter().map(|s| s.to_char()).collect()
}

/// Whether a language predominantly inflects at the end or the start of
/// the word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffixDirection {
    Suffixing,
    Prefixing,
}

/// The (sim, diff1, diff2) triple with its merge bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub sim: Vec<Slot>,
    pub diff1: Vec<Slot>,
    pub diff2: Vec<Slot>,
    /// Number of merges accumulated into this comparison.
    pub merge_count: usize,
    pub tags: Vec<String>,
    pub language: String,
    /// Word pairs this comparison was built from, for audit and the merge
    /// soundness check. Not serialized.
    pub sources: Vec<(String, String)>,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sim={} diff1={} diff2={} merges={}",
            slots_to_string(&self.sim),
            slots_to_string(&self.diff1),
            slots_to_string(&self.diff2),
            self.merge_count
        )
    }
}

impl Comparison {
    /// Sort key for the canonical merge scan order.
    fn key(&self) -> (String, String, String) {
        (
            slots_to_string(&self.sim),
            slots_to_string(&self.diff1),
            slots_to_string(&self.diff2),
        )
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.sim.len(), self.diff1.len(), self.diff2.len())
    }

    /// True when `word` instantiates `diff`: literal characters match,
    /// `.` consumes exactly one character and `?` zero or one.
    pub fn diff_matches(diff: &[Slot], word: &[char]) -> bool {
        fn rec(diff: &[Slot], word: &[char]) -> bool {
            match diff.split_first() {
                None => word.is_empty(),
                Some((slot, rest)) => match slot {
                    Slot::Ch(c) => word.first() == Some(c) && rec(rest, &word[1..]),
                    Slot::Dot => !word.is_empty() && rec(rest, &word[1..]),
                    Slot::Question => {
                        rec(rest, word) || (!word.is_empty() && rec(rest, &word[1..]))
                    }
                },
            }
        }
        rec(diff, word)
    }

    /// True when substituting the pair's characters into the placeholder
    /// positions reproduces both words.
    pub fn regenerates(&self, pair: &(String, String)) -> bool {
        let w1: Vec<char> = pair.0.chars().collect();
        let w2: Vec<char> = pair.1.chars().collect();
        Self::diff_matches(&self.diff1, &w1) && Self::diff_matches(&self.diff2, &w2)
    }
}

fn check_non_empty(w: &str, which: &str) -> Result<()> {
    if w.is_empty() {
        Err(Error::EmptyInput(format!("{which} word in comparison")))
    } else {
        Ok(())
    }
}

/// Builds a comparison by walking both words from the left: matching
/// characters go to `sim`, mismatches to the diff lists, and the longer
/// word's tail to its own diff list.
pub fn compare_forward(w1: &str, w2: &str) -> Result<Comparison> {
    check_non_empty(w1, "first")?;
    check_non_empty(w2, "second")?;
    let c1: Vec<char> = w1.chars().collect();
    let c2: Vec<char> = w2.chars().collect();
    let min = c1.len().min(c2.len());
    let mut sim = Vec::with_capacity(c1.len().max(c2.len()));
    let mut diff1 = Vec::with_capacity(c1.len());
    let mut diff2 = Vec::with_capacity(c2.len());
    for i in 0..min {
        if c1[i] == c2[i] {
            sim.push(Slot::Ch(c1[i]));
            diff1.push(Slot::Dot);
            diff2.push(Slot::Dot);
        } else {
            sim.push(Slot::Dot);
            diff1.push(Slot::Ch(c1[i]));
            diff2.push(Slot::Ch(c2[i]));
        }
    }
    for _ in min..c1.len().max(c2.len()) {
        sim.push(Slot::Dot);
    }
    if c1.len() > min {
        diff1.extend(c1[min..].iter().map(|&c| Slot::Ch(c)));
    } else {
        diff2.extend(c2[min..].iter().map(|&c| Slot::Ch(c)));
    }
    Ok(Comparison {
        sim,
        diff1,
        diff2,
        merge_count: 0,
        tags: Vec::new(),
        language: String::new(),
        sources: vec![(w1.to_string(), w2.to_string())],
    })
}

/// The mirror of [`compare_forward`]: both words are reversed before
/// comparing and all three lists are reversed after, so alignment starts
/// at the end of the string.
pub fn compare_backward(w1: &str, w2: &str) -> Result<Comparison> {
    let r1: String = w1.chars().rev().collect();
    let r2: String = w2.chars().rev().collect();
    let mut cmp = compare_forward(&r1, &r2)?;
    cmp.sim.reverse();
    cmp.diff1.reverse();
    cmp.diff2.reverse();
    cmp.sources = vec![(w1.to_string(), w2.to_string())];
    Ok(cmp)
}

fn compare_with(direction: AffixDirection, w1: &str, w2: &str) -> Result<Comparison> {
    match direction {
        AffixDirection::Suffixing => compare_forward(w1, w2),
        AffixDirection::Prefixing => compare_backward(w1, w2),
    }
}

fn common_prefix_len(a: &[char], b: &[char]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

/// Classifies a language by comparing the mean longest-common-prefix and
/// longest-common-suffix lengths over its (lemma, form) pairs; ties count
/// as suffixing.
pub fn detect_direction(set: &LanguageSet) -> AffixDirection {
    let mut prefix_total = 0usize;
    let mut suffix_total = 0usize;
    for s in &set.train {
        let lemma: Vec<char> = s.lemma.chars().collect();
        let form: Vec<char> = s.form.chars().collect();
        prefix_total += common_prefix_len(&lemma, &form);
        let lemma_rev: Vec<char> = lemma.iter().rev().copied().collect();
        let form_rev: Vec<char> = form.iter().rev().copied().collect();
        suffix_total += common_prefix_len(&lemma_rev, &form_rev);
    }
    if prefix_total >= suffix_total {
        AffixDirection::Suffixing
    } else {
        AffixDirection::Prefixing
    }
}

fn merge_diff_slot(a: Slot, b: Slot) -> Option<Slot> {
    if a == b {
        Some(a)
    } else if (a == Slot::Dot) ^ (b == Slot::Dot) {
        Some(Slot::Question)
    } else {
        None
    }
}

/// Merges two comparisons, or returns `None` when they are incompatible.
///
/// Lists must have equal lengths. Diff positions must be equal or have
/// `.` on exactly one side (becoming `?`); the diff lists carry the affix
/// pattern, so a character conflict there means different inflections.
/// Sim positions generalize freely: any difference becomes `?`, which is
/// what lets one affix pattern range over distinct stems.
pub fn merge(c1: &Comparison, c2: &Comparison) -> Option<Comparison> {
    if c1.language != c2.language || c1.shape() != c2.shape() {
        return None;
    }
    let mut diff1 = Vec::with_capacity(c1.diff1.len());
    for (&a, &b) in c1.diff1.iter().zip(&c2.diff1) {
        diff1.push(merge_diff_slot(a, b)?);
    }
    let mut diff2 = Vec::with_capacity(c1.diff2.len());
    for (&a, &b) in c1.diff2.iter().zip(&c2.diff2) {
        diff2.push(merge_diff_slot(a, b)?);
    }
    let sim = c1
        .sim
        .iter()
        .zip(&c2.sim)
        .map(|(&a, &b)| if a == b { a } else { Slot::Question })
        .collect();
    let tags = if c1.tags == c2.tags {
        c1.tags.clone()
    } else {
        let other: HashSet<&String> = c2.tags.iter().collect();
        let mut tags: Vec<String> = c1
            .tags
            .iter()
            .filter(|t| other.contains(t))
            .cloned()
            .collect();
        tags.sort();
        tags
    };
    let mut sources = c1.sources.clone();
    sources.extend(c2.sources.iter().cloned());
    Some(Comparison {
        sim,
        diff1,
        diff2,
        merge_count: c1.merge_count + c2.merge_count + 1,
        tags,
        language: c1.language.clone(),
        sources,
    })
}

/// Builds one comparison per natural train record and merges to a fixed
/// point.
///
/// The scan order is canonical: comparisons sorted by their
/// (sim, diff1, diff2) string keys, repeatedly merging the first
/// mergeable pair in that order until none remains. Merges require equal
/// list lengths, so the fixpoint is computed per length bucket; merges
/// never cross buckets and the outcome matches the global scan.
pub fn induce_templates(set: &LanguageSet, direction: AffixDirection) -> Vec<Comparison> {
    let mut comparisons: Vec<Comparison> = Vec::new();
    for s in set.train.iter().filter(|s| s.origin == Origin::Natural) {
        if let Ok(mut cmp) = compare_with(direction, &s.lemma, &s.form) {
            cmp.tags = s.tags.clone();
            cmp.language = set.language.clone();
            comparisons.push(cmp);
        }
    }

    let mut buckets: std::collections::BTreeMap<(usize, usize, usize), Vec<Comparison>> =
        std::collections::BTreeMap::new();
    for c in comparisons {
        buckets.entry(c.shape()).or_default().push(c);
    }

    let mut result: Vec<Comparison> = Vec::new();
    for (_, mut bucket) in buckets {
        bucket.sort_by_cached_key(Comparison::key);
        'merging: loop {
            for i in 0..bucket.len() {
                for j in (i + 1)..bucket.len() {
                    if let Some(merged) = merge(&bucket[i], &bucket[j]) {
                        bucket.remove(j);
                        bucket.remove(i);
                        let pos = bucket
                            .binary_search_by_key(&merged.key(), Comparison::key)
                            .unwrap_or_else(|p| p);
                        bucket.insert(pos, merged);
                        continue 'merging;
                    }
                }
            }
            break;
        }
        result.append(&mut bucket);
    }
    result.sort_by_cached_key(Comparison::key);
    result
}

/// Pools the templates induced from every *other* language of the family.
/// Generation for the target then runs over this pool with the target's
/// own unigram distribution and identity tags.
pub fn family_templates<'a, I>(family_sets: I, target: &LanguageSet) -> Vec<Comparison>
where
    I: IntoIterator<Item = &'a LanguageSet>,
{
    let mut pool = Vec::new();
    for set in family_sets {
        if set.language == target.language || set.family != target.family {
            continue;
        }
        let direction = detect_direction(set);
        pool.extend(induce_templates(set, direction));
    }
    pool
}

/// Explicit fill instructions for one template, exposed for tests:
/// the k-th placeholder of diff1 is paired with the k-th of diff2 and
/// both receive `fills[k]` (`None` drops a `?` position).
pub fn fill_template(cmp: &Comparison, fills: &[Option<char>]) -> (String, String) {
    let fill_one = |diff: &[Slot]| -> String {
        let mut out = String::new();
        let mut k = 0;
        for &slot in diff {
            match slot {
                Slot::Ch(c) => out.push(c),
                Slot::Dot | Slot::Question => {
                    if let Some(c) = fills.get(k).copied().flatten() {
                        out.push(c);
                    }
                    k += 1;
                }
            }
        }
        out
    };
    (fill_one(&cmp.diff1), fill_one(&cmp.diff2))
}

/// Generates synthetic samples from templates with at least `min_merges`
/// merges.
///
/// Placeholders are filled left to right: each `.` pair receives one
/// character sampled from `dist` (shared between the diff lists), each
/// `?` pair keeps or drops a shared sampled character with probability
/// 0.5. Output is deduplicated against the natural samples and against
/// itself, capped at `cap`, and deterministic for a given seed.
#[allow(clippy::too_many_arguments)]
pub fn generate(
    templates: &[Comparison],
    dist: &UnigramDistribution,
    language: &str,
    family: &str,
    natural: &[InflectionSample],
    cap: usize,
    min_merges: usize,
    seed: u64,
) -> Vec<InflectionSample> {
    let pool: Vec<&Comparison> = templates
        .iter()
        .filter(|c| c.merge_count >= min_merges && !c.tags.is_empty())
        .collect();
    if pool.is_empty() || cap == 0 {
        return Vec::new();
    }

    let mut seen: HashSet<(String, String, Vec<String>)> = natural
        .iter()
        .map(|s| (s.lemma.clone(), s.form.clone(), s.tags.clone()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    for _ in 0..MAX_GENERATION_ROUNDS {
        let before = out.len();
        for template in &pool {
            if out.len() >= cap {
                return out;
            }
            let placeholders: Vec<Slot> = template
                .diff1
                .iter()
                .copied()
                .filter(|s| s.is_placeholder())
                .collect();
            let fills: Vec<Option<char>> = placeholders
                .iter()
                .map(|slot| match slot {
                    Slot::Dot => Some(dist.sample_with(rng.gen::<f64>())),
                    Slot::Question => {
                        let keep = rng.gen::<f64>() < 0.5;
                        let c = dist.sample_with(rng.gen::<f64>());
                        keep.then_some(c)
                    }
                    Slot::Ch(_) => unreachable!(),
                })
                .collect();
            let (lemma, form) = fill_template(template, &fills);
            if lemma.is_empty() || form.is_empty() {
                continue;
            }
            let key = (lemma.clone(), form.clone(), template.tags.clone());
            if seen.contains(&key) {
                continue;
            }
            seen.insert(key);
            out.push(
                InflectionSample::new(
                    lemma,
                    form,
                    template.tags.clone(),
                    language,
                    family,
                    Origin::TemplateAug,
                )
                .expect("filled template is well-formed"),
            );
        }
        if out.len() == before {
            break; // saturated: a full round added nothing new
        }
    }
    out
}

const MAX_GENERATION_ROUNDS: usize = 50;

/// Serializes comparisons to the template text format: five lines per
/// comparison (sim, diff1, diff2, merge count, semicolon-joined tags),
/// blank-line separated. Words containing literal `.` or `?` do not
/// round-trip.
pub fn templates_to_text(templates: &[Comparison]) -> String {
    let mut out = String::new();
    for (i, t) in templates.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&slots_to_string(&t.sim));
        out.push('\n');
        out.push_str(&slots_to_string(&t.diff1));
        out.push('\n');
        out.push_str(&slots_to_string(&t.diff2));
        out.push('\n');
        out.push_str(&t.merge_count.to_string());
        out.push('\n');
        out.push_str(&t.tags.join(";"));
        out.push('\n');
    }
    out
}

/// Parses the template text format. `language` is assigned to every
/// comparison; sources are not part of the format and come back empty.
pub fn templates_from_text(text: &str, language: &str) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while lines.peek().is_some() {
        // Skip blank separators.
        while matches!(lines.peek(), Some((_, l)) if l.is_empty()) {
            lines.next();
        }
        if lines.peek().is_none() {
            break;
        }
        let mut next_line = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of template file, expected {what}"),
                })
                .map(|(i, l)| (i + 1, l))
        };
        let (_, sim) = next_line("sim")?;
        let (_, diff1) = next_line("diff1")?;
        let (_, diff2) = next_line("diff2")?;
        let (count_line, count) = next_line("merge count")?;
        let (_, tags) = next_line("tags")?;
        let merge_count = count.parse::<usize>().map_err(|_| Error::Parse {
            line: count_line,
            msg: format!("invalid merge count {count:?}"),
        })?;
        out.push(Comparison {
            sim: sim.chars().map(Slot::from_char).collect(),
            diff1: diff1.chars().map(Slot::from_char).collect(),
            diff2: diff2.chars().map(Slot::from_char).collect(),
            merge_count,
            tags: if tags.is_empty() {
                Vec::new()
            } else {
                tags.split(';').map(str::to_string).collect()
            },
            language: language.to_string(),
            sources: Vec::new(),
        });
    }
    Ok(out)
}
