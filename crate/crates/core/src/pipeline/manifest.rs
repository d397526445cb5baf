//! Run manifest: a deterministic, replayable record of one pipeline run.
//!
//! The manifest deliberately omits machine-local detail (absolute paths,
//! job counts, timestamps): two runs with the same config, corpus and
//! seed must produce byte-identical manifests.

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::model::TrainSettings;

use super::config::{ArchChoice, Exclusion, TemplateConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ManifestConfig,
    pub vocab_sha256: String,
    pub steps: Vec<StepManifest>,
    pub results: Vec<LanguageResult>,
}

/// The result-affecting slice of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub languages: Vec<String>,
    pub steps: Vec<u8>,
    pub arch: ArchChoice,
    pub train: TrainSettings,
    pub augment: AugmentConfig,
    pub template: TemplateConfig,
    pub exclude: Vec<Exclusion>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepManifest {
    pub step: u8,
    pub ran: bool,
    pub entries: Vec<EntryManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryManifest {
    /// Checkpoint id, e.g. `step2/Uralic/small`.
    pub id: String,
    /// Parent checkpoint id; `None` for random initialization.
    pub parent: Option<String>,
    pub arch_label: String,
    /// Checkpoint file, relative to the run directory.
    pub checkpoint: String,
    pub checkpoint_sha256: String,
    /// Best dev exact-match accuracy seen while training; `None` when the
    /// entry was not trained (random init placeholder).
    pub dev_accuracy: Option<f64>,
    pub counts: SampleCounts,
}

/// Samples that actually entered an entry's training set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub natural: usize,
    pub copy: usize,
    pub stem: usize,
    pub template: usize,
}

impl SampleCounts {
    pub fn total(&self) -> usize {
        self.natural + self.copy + self.stem + self.template
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageResult {
    pub language: String,
    pub family: String,
    /// Checkpoint id of the per-language selected model.
    pub selected: String,
    pub selected_arch: String,
    pub accuracy: f64,
    pub mean_levenshtein: f64,
    pub n: usize,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Per-language accuracies across ablation conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    /// Condition labels: `full` first, then one per excluded feature.
    pub conditions: Vec<String>,
    pub rows: Vec<AblationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub family: String,
    pub language: String,
    /// Accuracy per condition, parallel to `conditions`.
    pub accuracies: Vec<f64>,
}

impl AblationTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("family\tlanguage");
        for c in &self.conditions {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.family);
            out.push('\t');
            out.push_str(&row.language);
            for a in &row.accuracies {
                out.push_str(&format!("\t{a:.2}"));
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width rendering for terminals.
    pub fn render(&self) -> String {
        let mut out = format!("{:<16} {:<10}", "family", "language");
        for c in &self.conditions {
            out.push_str(&format!(" {c:>9}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<16} {:<10}", row.family, row.language));
            for a in &row.accuracies {
                out.push_str(&format!(" {a:>9.2}"));
            }
            out.push('\n');
        }
        out
    }
}
