//! Declarative run configuration.
//!
//! A run is described by a TOML file; every relative path in it resolves
//! against the config file's own directory, so run directories stay
//! portable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::model::{ArchConfig, TrainSettings};

/// Feature or step removed for an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exclusion {
    Copy,
    Stem,
    Step1,
    Step2,
    Step3,
}

impl Exclusion {
    pub const ALL: [Exclusion; 5] = [
        Exclusion::Copy,
        Exclusion::Stem,
        Exclusion::Step1,
        Exclusion::Step2,
        Exclusion::Step3,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Exclusion::Copy => "copy",
            Exclusion::Stem => "stem",
            Exclusion::Step1 => "step1",
            Exclusion::Step2 => "step2",
            Exclusion::Step3 => "step3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Exclusion::ALL
            .into_iter()
            .find(|e| e.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown exclusion {s:?}")))
    }
}

/// Which architectures a run trains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchChoice {
    Named(String),
    Custom(ArchConfig),
}

impl Default for ArchChoice {
    fn default() -> Self {
        ArchChoice::Named("both".into())
    }
}

impl ArchChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "small" | "large" | "both" => Ok(ArchChoice::Named(s.to_string())),
            other => Err(Error::Config(format!(
                "arch must be small, large or both, got {other:?}"
            ))),
        }
    }

    /// The (label, architecture) pairs to train.
    pub fn list(&self) -> Result<Vec<(String, ArchConfig)>> {
        match self {
            ArchChoice::Named(name) => match name.as_str() {
                "small" => Ok(vec![("small".into(), ArchConfig::small())]),
                "large" => Ok(vec![("large".into(), ArchConfig::large())]),
                "both" => Ok(vec![
                    ("small".into(), ArchConfig::small()),
                    ("large".into(), ArchConfig::large()),
                ]),
                other => Err(Error::Config(format!(
                    "arch must be small, large or both, got {other:?}"
                ))),
            },
            ArchChoice::Custom(arch) => {
                arch.validate()?;
                Ok(vec![("custom".into(), *arch)])
            }
        }
    }
}

/// Language selection: the literal string `"all"` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LanguageSelection {
    Keyword(String),
    List(Vec<String>),
}

impl Default for LanguageSelection {
    fn default() -> Self {
        LanguageSelection::Keyword("all".into())
    }
}

/// Template augmentation knobs (step 3 only, off by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateConfig {
    pub enabled: bool,
    pub cap: usize,
    pub min_merges: usize,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            cap: 10_000,
            min_merges: 2,
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory with `<lang>.train` / `<lang>.dev` files.
    pub corpus_root: PathBuf,
    /// Language → family metadata file; defaults to
    /// `corpus_root/families.tsv`.
    pub families_file: Option<PathBuf>,
    pub languages: LanguageSelection,
    /// Steps to run, subset of {1, 2, 3}.
    pub steps: Vec<u8>,
    pub arch: ArchChoice,
    pub train: TrainSettings,
    pub augment: AugmentConfig,
    pub template: TemplateConfig,
    /// Ablation exclusions applied to this run.
    pub exclude: Vec<Exclusion>,
    pub seed: u64,
    /// Parallel fine-tuning jobs within a step.
    pub jobs: usize,
    /// Languages used by `search`; empty means all configured languages.
    pub tuning_languages: Vec<String>,
    /// Per-language sample cap when building the tuning corpus.
    pub downsample_cap: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus_root: PathBuf::from("."),
            families_file: None,
            languages: LanguageSelection::default(),
            steps: vec![1, 2, 3],
            arch: ArchChoice::default(),
            train: TrainSettings::default(),
            augment: AugmentConfig::default(),
            template: TemplateConfig::default(),
            exclude: Vec::new(),
            seed: 0,
            jobs: 1,
            tuning_languages: Vec::new(),
            downsample_cap: 5000,
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    /// Parses a TOML config file and resolves its paths against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.corpus_root = resolve(base, &cfg.corpus_root);
        cfg.families_file = cfg.families_file.as_ref().map(|f| resolve(base, f));
        cfg.out_dir = resolve(base, &cfg.out_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Config("steps must not be empty".into()));
        }
        for s in &self.steps {
            if !(1..=3).contains(s) {
                return Err(Error::Config(format!("invalid step {s}, expected 1..3")));
            }
        }
        if let LanguageSelection::Keyword(k) = &self.languages {
            if k != "all" {
                return Err(Error::Config(format!(
                    "languages must be \"all\" or a list, got {k:?}"
                )));
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be ≥ 1".into()));
        }
        self.arch.list()?;
        self.train.validate()?;
        self.augment.validate()?;
        Ok(())
    }

    pub fn families_path(&self) -> PathBuf {
        self.families_file
            .clone()
            .unwrap_or_else(|| self.corpus_root.join("families.tsv"))
    }

    /// Whether a step runs: it must be listed in `steps` and not excluded.
    pub fn step_enabled(&self, step: u8) -> bool {
        let excluded = match step {
            1 => self.exclude.contains(&Exclusion::Step1),
            2 => self.exclude.contains(&Exclusion::Step2),
            3 => self.exclude.contains(&Exclusion::Step3),
            _ => true,
        };
        self.steps.contains(&step) && !excluded
    }

    pub fn copy_enabled(&self) -> bool {
        !self.exclude.contains(&Exclusion::Copy)
    }

    pub fn stem_enabled(&self) -> bool {
        !self.exclude.contains(&Exclusion::Stem)
    }

    /// Human-readable resolved plan, for `--dry-run`.
    pub fn plan_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        lines.push(format!("corpus_root: {}", self.corpus_root.display()));
        lines.push(format!(
            "languages: {}",
            match &self.languages {
                LanguageSelection::Keyword(k) => k.clone(),
                LanguageSelection::List(l) => l.join(","),
            }
        ));
        let steps: Vec<String> = [1u8, 2, 3]
            .iter()
            .map(|&s| {
                format!(
                    "step{} {}",
                    s,
                    if self.step_enabled(s) { "on" } else { "off" }
                )
            })
            .collect();
        lines.push(format!("steps: {}", steps.join(", ")));
        let archs: Vec<String> = self
            .arch
            .list()
            .unwrap_or_default()
            .into_iter()
            .map(|(label, a)| format!("{label}(emb={}, hidden={})", a.embedding_dim, a.hidden_size))
            .collect();
        lines.push(format!("arch: {}", archs.join(", ")));
        lines.push(format!(
            "augment: copy {} (cap {}), stem {} (cap {}), templates {} (cap {}, min_merges {})",
            if self.copy_enabled() { "on" } else { "off" },
            self.augment.copy_cap,
            if self.stem_enabled() { "on" } else { "off" },
            self.augment.stem_cap,
            if self.template.enabled { "on" } else { "off" },
            self.template.cap,
            self.template.min_merges,
        ));
        lines.push(format!(
            "train: lr {}, tf {}, batch {}, epochs {}, patience {}, clip {}",
            self.train.learning_rate,
            self.train.teacher_forcing_prob,
            self.train.batch_size,
            self.train.max_epochs,
            self.train.patience,
            self.train.grad_clip,
        ));
        lines.push(format!("seed: {}, jobs: {}", self.seed, self.jobs));
        lines.push(format!("out_dir: {}", self.out_dir.display()));
        lines
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
