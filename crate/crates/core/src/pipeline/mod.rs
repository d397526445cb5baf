//! The three-step training regime and its tooling.
//!
//! Step 1 trains one model per architecture on every configured language
//! (with copy augmentation), step 2 fine-tunes per family (adding
//! stem-modification samples), step 3 fine-tunes per language
//! (optionally adding template-generated samples) and selects the best
//! architecture per language on dev accuracy. Ablations rerun the
//! pipeline with single features excluded; `random_search` samples
//! architectures uniformly from the tuning ranges.

mod config;
mod manifest;

pub use config::{ArchChoice, Exclusion, LanguageSelection, RunConfig, TemplateConfig};
pub use manifest::{
    AblationRow, AblationTable, EntryManifest, LanguageResult, Manifest, ManifestConfig,
    SampleCounts, StepManifest,
};

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::augment::{copy_augment, stem_augment, AugmentConfig};
use crate::corpus::{
    load_language, parse_family_metadata, unigram_distribution, InflectionSample, LanguageSet,
    UnigramDistribution,
};
use crate::encoding::{encode_pair, identity_tags, EncodedPair, Vocabulary, COPY_TAG};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport, METRICS_TSV_HEADER};
use crate::model::{
    file_sha256, save_checkpoint, train_epochs, vocab_hash, ArchConfig, ModelParams,
    TrainSettings,
};
use crate::templates::{detect_direction, family_templates, generate, induce_templates};

/// FNV-1a of a label xor'd into a base seed: stable per-job random
/// streams that do not depend on job scheduling.
pub(crate) fn mix_seed(base: u64, label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h ^ base
}

/// Loaded corpus plus the run-wide vocabulary.
pub struct Workspace {
    pub cfg: RunConfig,
    pub sets: Vec<LanguageSet>,
    pub dists: Vec<UnigramDistribution>,
    /// family → indices into `sets`, in first-seen order.
    pub families: indexmap::IndexMap<String, Vec<usize>>,
    pub vocab: Vocabulary,
    pub vocab_sha256: String,
}

impl Workspace {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let families_path = cfg.families_path();
        let meta_text = std::fs::read_to_string(&families_path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", families_path.display()))
        })?;
        let meta = parse_family_metadata(&meta_text)?;
        let languages: Vec<String> = match &cfg.languages {
            LanguageSelection::Keyword(_) => meta.keys().cloned().collect(),
            LanguageSelection::List(list) => {
                for code in list {
                    if !meta.contains_key(code) {
                        return Err(Error::Config(format!(
                            "language {code:?} missing from {}",
                            families_path.display()
                        )));
                    }
                }
                list.clone()
            }
        };
        if languages.is_empty() {
            return Err(Error::Config("no languages configured".into()));
        }
        let sets: Vec<LanguageSet> = languages
            .iter()
            .map(|code| load_language(&cfg.corpus_root, code, &meta[code]))
            .collect::<Result<_>>()?;
        let dists: Vec<UnigramDistribution> = sets
            .iter()
            .map(|s| {
                unigram_distribution(&s.train).map_err(|_| {
                    Error::Config(format!("language {} has no training samples", s.language))
                })
            })
            .collect::<Result<_>>()?;
        let mut families: indexmap::IndexMap<String, Vec<usize>> = indexmap::IndexMap::new();
        for (i, set) in sets.iter().enumerate() {
            families.entry(set.family.clone()).or_default().push(i);
        }
        // The vocabulary covers every natural train sample plus the
        // identity tags of all configured languages and the COPY tag; the
        // COPY tag is always present so ablations share one symbol table.
        let mut extra: Vec<String> = vec![COPY_TAG.to_string()];
        for set in &sets {
            extra.extend(identity_tags(&set.family, &set.language));
        }
        let vocab =
            Vocabulary::build_from_iter(sets.iter().flat_map(|s| s.train.iter()), extra.iter());
        let vocab_sha256 = vocab_hash(&vocab);
        Ok(Self {
            cfg: cfg.clone(),
            sets,
            dists,
            families,
            vocab,
            vocab_sha256,
        })
    }

    fn set_index(&self, language: &str) -> Option<usize> {
        self.sets.iter().position(|s| s.language == language)
    }
}

/// One trained (or initialized) model with its provenance.
pub struct TrainedEntry {
    pub id: String,
    pub key: String,
    pub arch_label: String,
    pub arch: ArchConfig,
    pub params: ModelParams<f32>,
    pub parent: Option<String>,
    /// Best dev exact-match accuracy (percent) seen in training.
    pub dev_accuracy: Option<f64>,
    pub counts: SampleCounts,
}

pub struct StepArtifacts {
    pub step: u8,
    pub ran: bool,
    pub entries: Vec<TrainedEntry>,
}

impl StepArtifacts {
    pub fn find(&self, key: &str, arch_label: &str) -> Option<&TrainedEntry> {
        self.entries
            .iter()
            .find(|e| e.key == key && e.arch_label == arch_label)
    }
}

pub struct PipelineResult {
    pub steps: Vec<StepArtifacts>,
    pub results: Vec<LanguageResult>,
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

struct TrainJob {
    id: String,
    key: String,
    arch_label: String,
    arch: ArchConfig,
    init: ModelParams<f32>,
    parent: Option<String>,
    samples: Vec<InflectionSample>,
    dev: Vec<InflectionSample>,
    counts: SampleCounts,
}

fn run_job(ws: &Workspace, job: TrainJob) -> Result<TrainedEntry> {
    debug_assert_eq!(job.counts.total(), job.samples.len());
    let train_pairs: Vec<EncodedPair> = job
        .samples
        .iter()
        .map(|s| encode_pair(s, &ws.vocab))
        .collect();
    let dev_pairs: Vec<EncodedPair> = job.dev.iter().map(|s| encode_pair(s, &ws.vocab)).collect();
    let settings = TrainSettings {
        seed: mix_seed(ws.cfg.seed ^ ws.cfg.train.seed, &job.id),
        ..ws.cfg.train.clone()
    };
    let (params, history) = train_epochs(job.init, &train_pairs, &dev_pairs, &settings)?;
    let dev_accuracy = if dev_pairs.is_empty() {
        None
    } else {
        Some(
            history
                .iter()
                .map(|e| e.dev_accuracy)
                .fold(0.0f64, f64::max)
                * 100.0,
        )
    };
    Ok(TrainedEntry {
        id: job.id,
        key: job.key,
        arch_label: job.arch_label,
        arch: job.arch,
        params,
        parent: job.parent,
        dev_accuracy,
        counts: job.counts,
    })
}

fn run_jobs(ws: &Workspace, jobs: Vec<TrainJob>) -> Result<Vec<TrainedEntry>> {
    let pool = thread_pool(ws.cfg.jobs)?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|job| run_job(ws, job))
            .collect::<Result<Vec<_>>>()
    })
}

fn init_seed(ws: &Workspace, id: &str) -> u64 {
    mix_seed(ws.cfg.seed, &format!("init/{id}"))
}

/// Step 1: one model per architecture over the union of all languages,
/// with per-language copy augmentation. When the step is disabled the
/// entries hold fresh random initializations so later steps still have a
/// parent.
pub fn step1_general(ws: &Workspace) -> Result<StepArtifacts> {
    let cfg = &ws.cfg;
    let ran = cfg.step_enabled(1);
    let mut samples: Vec<InflectionSample> = Vec::new();
    let mut dev: Vec<InflectionSample> = Vec::new();
    let mut counts = SampleCounts::default();
    if ran {
        for set in &ws.sets {
            counts.natural += set.train.len();
            samples.extend_from_slice(&set.train);
            dev.extend_from_slice(&set.dev);
            if cfg.copy_enabled() {
                let aug = AugmentConfig {
                    seed: mix_seed(cfg.seed ^ cfg.augment.seed, &format!("copy/{}", set.language)),
                    ..cfg.augment.clone()
                };
                let copies = copy_augment(set, &aug);
                counts.copy += copies.len();
                samples.extend(copies);
            }
        }
    }
    let mut jobs = Vec::new();
    let mut passthrough = Vec::new();
    for (label, arch) in cfg.arch.list()? {
        let id = format!("step1/all/{label}");
        let init = ModelParams::new(arch, ws.vocab.len(), init_seed(ws, &id))?;
        if ran {
            jobs.push(TrainJob {
                id,
                key: "all".into(),
                arch_label: label,
                arch,
                init,
                parent: None,
                samples: samples.clone(),
                dev: dev.clone(),
                counts,
            });
        } else {
            passthrough.push(TrainedEntry {
                id,
                key: "all".into(),
                arch_label: label,
                arch,
                params: init,
                parent: None,
                dev_accuracy: None,
                counts: SampleCounts::default(),
            });
        }
    }
    let entries = if ran { run_jobs(ws, jobs)? } else { passthrough };
    Ok(StepArtifacts {
        step: 1,
        ran,
        entries,
    })
}

/// Step 2: fine-tune the step-1 models per family, adding per-language
/// stem-modification samples.
pub fn step2_family(ws: &Workspace, parent: &StepArtifacts) -> Result<StepArtifacts> {
    let cfg = &ws.cfg;
    let ran = cfg.step_enabled(2);
    if !ran {
        return Ok(StepArtifacts {
            step: 2,
            ran,
            entries: Vec::new(),
        });
    }
    let mut jobs = Vec::new();
    for (family, members) in &ws.families {
        let mut samples: Vec<InflectionSample> = Vec::new();
        let mut dev: Vec<InflectionSample> = Vec::new();
        let mut counts = SampleCounts::default();
        for &idx in members {
            let set = &ws.sets[idx];
            counts.natural += set.train.len();
            samples.extend_from_slice(&set.train);
            dev.extend_from_slice(&set.dev);
            if cfg.stem_enabled() {
                let aug = AugmentConfig {
                    seed: mix_seed(cfg.seed ^ cfg.augment.seed, &format!("stem/{}", set.language)),
                    ..cfg.augment.clone()
                };
                let stems = stem_augment(set, &ws.dists[idx], &aug);
                counts.stem += stems.len();
                samples.extend(stems);
            }
        }
        for (label, arch) in cfg.arch.list()? {
            let parent_entry = parent.find("all", &label).ok_or_else(|| {
                Error::Config(format!("no step-1 parent for architecture {label}"))
            })?;
            jobs.push(TrainJob {
                id: format!("step2/{family}/{label}"),
                key: family.clone(),
                arch_label: label,
                arch,
                init: parent_entry.params.clone(),
                parent: Some(parent_entry.id.clone()),
                samples: samples.clone(),
                dev: dev.clone(),
                counts,
            });
        }
    }
    let entries = run_jobs(ws, jobs)?;
    Ok(StepArtifacts {
        step: 2,
        ran,
        entries,
    })
}

/// Step 3: fine-tune each language on its own data, optionally with
/// template-generated samples (the language's own templates pooled with
/// its family siblings').
pub fn step3_language(ws: &Workspace, parents: &StepArtifacts) -> Result<StepArtifacts> {
    let cfg = &ws.cfg;
    let ran = cfg.step_enabled(3);
    if !ran {
        return Ok(StepArtifacts {
            step: 3,
            ran,
            entries: Vec::new(),
        });
    }
    let mut jobs = Vec::new();
    for (idx, set) in ws.sets.iter().enumerate() {
        let mut samples = set.train.clone();
        let mut counts = SampleCounts {
            natural: set.train.len(),
            ..SampleCounts::default()
        };
        if cfg.template.enabled {
            let mut pool = induce_templates(set, detect_direction(set));
            let siblings: Vec<&LanguageSet> = ws.families[&set.family]
                .iter()
                .map(|&i| &ws.sets[i])
                .collect();
            pool.extend(family_templates(siblings.iter().copied(), set));
            let generated = generate(
                &pool,
                &ws.dists[idx],
                &set.language,
                &set.family,
                &set.train,
                cfg.template.cap,
                cfg.template.min_merges,
                mix_seed(cfg.seed ^ cfg.augment.seed, &format!("template/{}", set.language)),
            );
            counts.template += generated.len();
            samples.extend(generated);
        }
        for (label, arch) in cfg.arch.list()? {
            let parent_entry = parents
                .find(&set.family, &label)
                .or_else(|| parents.find("all", &label))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "no parent model for {} ({label})",
                        set.language
                    ))
                })?;
            jobs.push(TrainJob {
                id: format!("step3/{}/{label}", set.language),
                key: set.language.clone(),
                arch_label: label,
                arch,
                init: parent_entry.params.clone(),
                parent: Some(parent_entry.id.clone()),
                samples: samples.clone(),
                dev: set.dev.clone(),
                counts,
            });
        }
    }
    let entries = run_jobs(ws, jobs)?;
    Ok(StepArtifacts {
        step: 3,
        ran,
        entries,
    })
}

/// Index of the winning candidate: highest accuracy, ties to fewer
/// parameters, then to earlier candidates.
pub(crate) fn select_candidate(candidates: &[(f64, usize)]) -> usize {
    let mut best = 0;
    for (i, &(acc, size)) in candidates.iter().enumerate().skip(1) {
        let (best_acc, best_size) = candidates[best];
        if acc > best_acc || (acc == best_acc && size < best_size) {
            best = i;
        }
    }
    best
}

fn select_languages(ws: &Workspace, steps: &[StepArtifacts]) -> Result<Vec<LanguageResult>> {
    let archs = ws.cfg.arch.list()?;
    let mut results = Vec::with_capacity(ws.sets.len());
    for set in &ws.sets {
        let mut candidates: Vec<(&TrainedEntry, MetricsReport)> = Vec::new();
        for (label, _) in &archs {
            let entry = steps.iter().rev().find_map(|artifacts| {
                artifacts
                    .find(&set.language, label)
                    .or_else(|| artifacts.find(&set.family, label))
                    .or_else(|| artifacts.find("all", label))
            });
            let entry = entry.ok_or_else(|| {
                Error::Config(format!("no model available for {}", set.language))
            })?;
            let report = if set.dev.is_empty() {
                MetricsReport {
                    language: set.language.clone(),
                    accuracy: 0.0,
                    mean_levenshtein: 0.0,
                    n: 0,
                }
            } else {
                evaluate(&entry.params, &set.dev, &ws.vocab)?
            };
            candidates.push((entry, report));
        }
        let scored: Vec<(f64, usize)> = candidates
            .iter()
            .map(|(e, r)| (r.accuracy, e.arch.param_count(ws.vocab.len())))
            .collect();
        let (entry, report) = candidates.swap_remove(select_candidate(&scored));
        results.push(LanguageResult {
            language: set.language.clone(),
            family: set.family.clone(),
            selected: entry.id.clone(),
            selected_arch: entry.arch_label.clone(),
            accuracy: report.accuracy,
            mean_levenshtein: report.mean_levenshtein,
            n: report.n,
        });
    }
    Ok(results)
}

/// Runs the configured steps end to end and scores every language.
pub fn run_pipeline(ws: &Workspace) -> Result<PipelineResult> {
    let step1 = step1_general(ws)?;
    run_pipeline_with_parent(ws, step1)
}

/// Runs steps 2 and 3 (as configured) from pre-existing step-1 artifacts,
/// then scores every language.
pub fn run_pipeline_with_parent(ws: &Workspace, step1: StepArtifacts) -> Result<PipelineResult> {
    let step2 = step2_family(ws, &step1)?;
    let step3 = {
        let parents = if step2.ran { &step2 } else { &step1 };
        step3_language(ws, parents)?
    };
    let steps = vec![step1, step2, step3];
    let results = select_languages(ws, &steps)?;
    Ok(PipelineResult { steps, results })
}

/// Reconstructs step-1 artifacts from a previous run directory. The
/// stored checkpoints must have been trained with the same vocabulary.
pub fn load_step1(run_dir: &Path, ws: &Workspace) -> Result<StepArtifacts> {
    let manifest_path = run_dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad manifest: {e}")))?;
    let step = manifest
        .steps
        .iter()
        .find(|s| s.step == 1)
        .ok_or_else(|| Error::Config("manifest has no step-1 entries".into()))?;
    let mut entries = Vec::new();
    for entry in &step.entries {
        let path = run_dir.join(&entry.checkpoint);
        let (params, stored_hash) = crate::model::load_checkpoint::<f32>(&path)?;
        if stored_hash != ws.vocab_sha256 {
            return Err(Error::Checkpoint(format!(
                "checkpoint {} was trained with a different vocabulary",
                entry.id
            )));
        }
        entries.push(TrainedEntry {
            id: entry.id.clone(),
            key: "all".into(),
            arch_label: entry.arch_label.clone(),
            arch: params.arch,
            params,
            parent: entry.parent.clone(),
            dev_accuracy: entry.dev_accuracy,
            counts: entry.counts,
        });
    }
    Ok(StepArtifacts {
        step: 1,
        ran: step.ran,
        entries,
    })
}

/// Saves checkpoints, vocabulary, manifest and metrics under `run_dir`
/// and returns the manifest.
pub fn write_run(ws: &Workspace, result: &PipelineResult, run_dir: &Path) -> Result<Manifest> {
    let ckpt_dir = run_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    ws.vocab.save(&run_dir.join("vocab.txt"))?;

    let mut steps = Vec::new();
    for artifacts in &result.steps {
        let mut entries = Vec::new();
        for entry in &artifacts.entries {
            let rel = format!("checkpoints/{}.ckpt", entry.id.replace('/', "-"));
            let path = run_dir.join(&rel);
            save_checkpoint(&entry.params, &ws.vocab_sha256, &path)?;
            entries.push(EntryManifest {
                id: entry.id.clone(),
                parent: entry.parent.clone(),
                arch_label: entry.arch_label.clone(),
                checkpoint: rel.clone(),
                checkpoint_sha256: file_sha256(&path)?,
                dev_accuracy: entry.dev_accuracy,
                counts: entry.counts,
            });
        }
        steps.push(StepManifest {
            step: artifacts.step,
            ran: artifacts.ran,
            entries,
        });
    }
    let manifest = Manifest {
        config: ManifestConfig {
            languages: ws.sets.iter().map(|s| s.language.clone()).collect(),
            steps: ws.cfg.steps.clone(),
            arch: ws.cfg.arch.clone(),
            train: ws.cfg.train.clone(),
            augment: ws.cfg.augment.clone(),
            template: ws.cfg.template.clone(),
            exclude: ws.cfg.exclude.clone(),
            seed: ws.cfg.seed,
        },
        vocab_sha256: ws.vocab_sha256.clone(),
        steps,
        results: result.results.clone(),
    };
    std::fs::write(run_dir.join("manifest.json"), manifest.to_json())?;
    let mut metrics = String::from(METRICS_TSV_HEADER);
    metrics.push('\n');
    for r in &result.results {
        metrics.push_str(&format!(
            "{}\t{:.2}\t{:.4}\t{}\n",
            r.language, r.accuracy, r.mean_levenshtein, r.n
        ));
    }
    std::fs::write(run_dir.join("metrics.tsv"), metrics)?;
    Ok(manifest)
}

/// Reruns the full pipeline once per single exclusion (plus the
/// unablated run) and tabulates per-language accuracy.
pub fn ablate(cfg: &RunConfig, exclusions: &[Exclusion]) -> Result<AblationTable> {
    let mut conditions = vec!["full".to_string()];
    conditions.extend(exclusions.iter().map(|e| e.label().to_string()));
    let mut columns: Vec<Vec<LanguageResult>> = Vec::new();
    for (i, _) in conditions.iter().enumerate() {
        let mut condition_cfg = cfg.clone();
        condition_cfg.exclude = if i == 0 {
            Vec::new()
        } else {
            vec![exclusions[i - 1]]
        };
        let ws = Workspace::load(&condition_cfg)?;
        let outcome = run_pipeline(&ws)?;
        columns.push(outcome.results);
    }
    let rows = columns[0]
        .iter()
        .map(|first| AblationRow {
            family: first.family.clone(),
            language: first.language.clone(),
            accuracies: columns
                .iter()
                .map(|col| {
                    col.iter()
                        .find(|r| r.language == first.language)
                        .map(|r| r.accuracy)
                        .unwrap_or(f64::NAN)
                })
                .collect(),
        })
        .collect();
    Ok(AblationTable { conditions, rows })
}

/// One uniform draw from the tuning ranges: layers 1..=3, dropout
/// 0.1..=0.6, embedding 32..=256, hidden 64..=1024.
pub fn sample_arch(rng: &mut ChaCha8Rng) -> ArchConfig {
    ArchConfig {
        num_layers: rng.gen_range(1..=3),
        dropout: rng.gen_range(0.1..=0.6),
        embedding_dim: rng.gen_range(32..=256),
        hidden_size: rng.gen_range(64..=1024),
    }
}

/// Trains `budget` uniformly sampled architectures on the (downsampled)
/// tuning corpus and ranks them by dev exact-match accuracy (percent),
/// best first.
pub fn random_search(ws: &Workspace, budget: usize) -> Result<Vec<(ArchConfig, f64)>> {
    if budget == 0 {
        return Err(Error::Config("search budget must be ≥ 1".into()));
    }
    let cfg = &ws.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, "search"));
    let archs: Vec<ArchConfig> = (0..budget).map(|_| sample_arch(&mut rng)).collect();

    let tuning: Vec<usize> = if cfg.tuning_languages.is_empty() {
        (0..ws.sets.len()).collect()
    } else {
        cfg.tuning_languages
            .iter()
            .map(|code| {
                ws.set_index(code).ok_or_else(|| {
                    Error::Config(format!("tuning language {code:?} not configured"))
                })
            })
            .collect::<Result<_>>()?
    };
    let mut train_samples: Vec<InflectionSample> = Vec::new();
    let mut dev_samples: Vec<InflectionSample> = Vec::new();
    for &idx in &tuning {
        let set = &ws.sets[idx];
        let mut order: Vec<usize> = (0..set.train.len()).collect();
        let mut lang_rng = ChaCha8Rng::seed_from_u64(mix_seed(
            cfg.seed,
            &format!("downsample/{}", set.language),
        ));
        for i in (1..order.len()).rev() {
            let j = lang_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        train_samples.extend(
            order
                .into_iter()
                .take(cfg.downsample_cap)
                .map(|i| set.train[i].clone()),
        );
        dev_samples.extend_from_slice(&set.dev);
    }
    let train_pairs: Vec<EncodedPair> = train_samples
        .iter()
        .map(|s| encode_pair(s, &ws.vocab))
        .collect();
    let dev_pairs: Vec<EncodedPair> = dev_samples
        .iter()
        .map(|s| encode_pair(s, &ws.vocab))
        .collect();

    let pool = thread_pool(cfg.jobs)?;
    let mut scored: Vec<(usize, ArchConfig, f64)> = pool.install(|| {
        archs
            .into_par_iter()
            .enumerate()
            .map(|(i, arch)| {
                let id = format!("search/{i}");
                let init = ModelParams::<f32>::new(arch, ws.vocab.len(), init_seed(ws, &id))?;
                let settings = TrainSettings {
                    seed: mix_seed(cfg.seed ^ cfg.train.seed, &id),
                    ..cfg.train.clone()
                };
                let (_, history) = train_epochs(init, &train_pairs, &dev_pairs, &settings)?;
                let acc = history
                    .iter()
                    .map(|e| e.dev_accuracy)
                    .fold(0.0f64, f64::max)
                    * 100.0;
                Ok((i, arch, acc))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    scored.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(scored.into_iter().map(|(_, arch, acc)| (arch, acc)).collect())
}
