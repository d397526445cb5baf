//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use flect_core::augment::{copy_augment, stem_augment};
use flect_core::corpus::{parse_unimorph, serialize_tsv};
use flect_core::encoding::{decode_output, encode_source, Vocabulary};
use flect_core::eval::{evaluate, METRICS_TSV_HEADER};
use flect_core::model::{greedy_decode, load_checkpoint, vocab_hash};
use flect_core::pipeline::{
    ablate, load_step1, random_search, run_pipeline, run_pipeline_with_parent, ArchChoice,
    Exclusion, RunConfig, Workspace,
};
use flect_core::templates::{detect_direction, induce_templates, templates_to_text};
use flect_core::corpus::InflectionSample;
use flect_core::corpus::Origin;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown values, missing files, malformed config.
    Usage(String),
    /// Failure while doing the work.
    Runtime(String),
}

impl From<flect_core::Error> for CliError {
    fn from(e: flect_core::Error) -> Self {
        use flect_core::Error as E;
        match e {
            E::Config(_) | E::Parse { .. } | E::Io(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CmdResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "flect",
    version,
    about = "Morphological inflection toolkit: augmentation, template induction and LSTM seq2seq training"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the corpus; print per-language statistics.
    Ingest(IngestArgs),
    /// Emit augmented samples in the corpus TSV format.
    Augment(AugmentArgs),
    /// Induce inflection templates for one language.
    Induce(InduceArgs),
    /// Run the configured training steps end to end.
    Train(TrainArgs),
    /// Run later steps starting from an earlier run's checkpoints.
    Finetune(FinetuneArgs),
    /// Inflect one lemma with a trained checkpoint.
    Predict(PredictArgs),
    /// Score a checkpoint against a dev file.
    Evaluate(EvaluateArgs),
    /// Rerun the pipeline with features excluded and tabulate accuracy.
    Ablate(AblateArgs),
    /// Random hyperparameter search over the tuning ranges.
    Search(SearchArgs),
}

/// Flags shared by every config-driven command. Command-line values
/// override the config file.
#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (TOML); paths inside resolve relative to it.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel fine-tuning jobs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Architecture selection: small, large or both.
    #[arg(long)]
    arch: Option<String>,
    /// Steps to run, e.g. `--steps 1,2,3`.
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<u8>>,
    /// Ablation exclusions, e.g. `--exclude copy,step2`.
    #[arg(long, value_delimiter = ',')]
    exclude: Option<Vec<String>>,
    /// Turn template augmentation on in step 3.
    #[arg(long)]
    enable_templates: bool,
    /// Copy augmentation cap override.
    #[arg(long)]
    copy_cap: Option<usize>,
    /// Stem augmentation cap override.
    #[arg(long)]
    stem_cap: Option<usize>,
    /// Template augmentation cap override.
    #[arg(long)]
    template_cap: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved plan and exit without touching data.
    #[arg(long)]
    dry_run: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(arch) = &self.arch {
            cfg.arch = ArchChoice::parse(arch)?;
        }
        if let Some(steps) = &self.steps {
            cfg.steps = steps.clone();
        }
        if let Some(exclude) = &self.exclude {
            cfg.exclude = exclude
                .iter()
                .map(|s| Exclusion::parse(s))
                .collect::<Result<_, _>>()?;
        }
        if self.enable_templates {
            cfg.template.enabled = true;
        }
        if let Some(cap) = self.copy_cap {
            cfg.augment.copy_cap = cap;
        }
        if let Some(cap) = self.stem_cap {
            cfg.augment.stem_cap = cap;
        }
        if let Some(cap) = self.template_cap {
            cfg.template.cap = cap;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Prints the plan when `--dry-run` was given; returns whether to stop.
    fn handle_dry_run(&self, cfg: &RunConfig) -> bool {
        if self.dry_run {
            for line in cfg.plan_lines() {
                println!("{line}");
            }
        }
        self.dry_run
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Also write the corpus vocabulary to this path.
    #[arg(long)]
    vocab_out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Language to augment.
    #[arg(long)]
    lang: String,
    /// copy or stem.
    #[arg(long)]
    technique: String,
    /// Append the origin marker as a fourth TSV column.
    #[arg(long)]
    origin_column: bool,
    /// Write here instead of stdout.
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct InduceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Language to induce templates for.
    #[arg(long)]
    lang: String,
    /// Write here instead of stdout.
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct FinetuneArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Previous run directory holding step-1 checkpoints.
    #[arg(long)]
    from: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Checkpoint file.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Vocabulary file matching the checkpoint.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    lemma: String,
    /// Semicolon-joined tags, e.g. `V;COND;PL;2`.
    #[arg(long)]
    tags: String,
    #[arg(long)]
    lang: String,
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Dev TSV file.
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    lang: String,
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Exclusions to ablate over; defaults to all five.
    #[arg(long, value_delimiter = ',')]
    ablate_over: Option<Vec<String>>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of sampled configurations.
    #[arg(long, default_value_t = 100)]
    budget: usize,
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Augment(args) => augment(args),
        Command::Induce(args) => induce(args),
        Command::Train(args) => train(args),
        Command::Finetune(args) => finetune(args),
        Command::Predict(args) => predict(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Ablate(args) => ablate_cmd(args),
        Command::Search(args) => search(args),
    }
}

fn ingest(args: IngestArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    println!("language\tfamily\ttrain\tdev\tlow_resource");
    for set in &ws.sets {
        println!(
            "{}\t{}\t{}\t{}\t{}",
            set.language,
            set.family,
            set.train.len(),
            set.dev.len(),
            set.low_resource
        );
    }
    eprintln!(
        "{} languages, {} families, vocabulary of {} symbols",
        ws.sets.len(),
        ws.families.len(),
        ws.vocab.len()
    );
    if let Some(path) = &args.vocab_out {
        ws.vocab.save(path)?;
        eprintln!("vocabulary written to {}", path.display());
    }
    Ok(())
}

fn augment(args: AugmentArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    let idx = ws
        .sets
        .iter()
        .position(|s| s.language == args.lang)
        .ok_or_else(|| CliError::Usage(format!("language {:?} not configured", args.lang)))?;
    let set = &ws.sets[idx];
    let samples = match args.technique.as_str() {
        "copy" => copy_augment(set, &cfg.augment),
        "stem" => stem_augment(set, &ws.dists[idx], &cfg.augment),
        other => {
            return Err(CliError::Usage(format!(
                "technique must be copy or stem, got {other:?}"
            )))
        }
    };
    let text = serialize_tsv(&samples, args.origin_column);
    write_text_output(args.out_file.as_deref(), &text)?;
    Ok(())
}

fn induce(args: InduceArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    let set = ws
        .sets
        .iter()
        .find(|s| s.language == args.lang)
        .ok_or_else(|| CliError::Usage(format!("language {:?} not configured", args.lang)))?;
    let direction = detect_direction(set);
    let templates = induce_templates(set, direction);
    eprintln!(
        "{}: {:?}, {} templates ({} merged)",
        set.language,
        direction,
        templates.len(),
        templates.iter().filter(|t| t.merge_count > 0).count()
    );
    write_text_output(args.out_file.as_deref(), &templates_to_text(&templates))?;
    Ok(())
}

fn train(args: TrainArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    let result = run_pipeline(&ws)?;
    let manifest = flect_core::pipeline::write_run(&ws, &result, &cfg.out_dir)?;
    for r in &manifest.results {
        println!(
            "{}\t{}\t{}\t{:.2}\t{:.4}",
            r.language, r.family, r.selected_arch, r.accuracy, r.mean_levenshtein
        );
    }
    eprintln!("run written to {}", cfg.out_dir.display());
    Ok(())
}

fn finetune(args: FinetuneArgs) -> CmdResult {
    let mut cfg = args.config.load()?;
    if !cfg.steps.iter().any(|&s| s > 1) {
        cfg.steps = vec![2, 3];
    }
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    let parent = load_step1(&args.from, &ws)?;
    let result = run_pipeline_with_parent(&ws, parent)?;
    let manifest = flect_core::pipeline::write_run(&ws, &result, &cfg.out_dir)?;
    for r in &manifest.results {
        println!(
            "{}\t{}\t{}\t{:.2}\t{:.4}",
            r.language, r.family, r.selected_arch, r.accuracy, r.mean_levenshtein
        );
    }
    eprintln!("run written to {}", cfg.out_dir.display());
    Ok(())
}

fn load_model_and_vocab(
    checkpoint: &Path,
    vocab_path: &Path,
) -> Result<(flect_core::Model, Vocabulary), CliError> {
    let vocab = Vocabulary::load(vocab_path)?;
    let (params, stored_hash) = load_checkpoint::<f32>(checkpoint)?;
    let actual = vocab_hash(&vocab);
    if stored_hash != actual {
        return Err(CliError::Usage(format!(
            "vocabulary {} does not match the checkpoint (hash {} vs {})",
            vocab_path.display(),
            actual,
            stored_hash
        )));
    }
    Ok((params, vocab))
}

fn predict(args: PredictArgs) -> CmdResult {
    let (params, vocab) = load_model_and_vocab(&args.checkpoint, &args.vocab)?;
    let tags: Vec<String> = args.tags.split(';').map(str::to_string).collect();
    let sample = InflectionSample::new(
        args.lemma.clone(),
        "?", // placeholder; only the source side is used
        tags,
        args.lang.clone(),
        args.family.clone(),
        Origin::Natural,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let source = encode_source(&sample, &vocab);
    let max_len = source.len() + 16;
    let decoded = greedy_decode(&params, &source, max_len)?;
    println!("{}", decode_output(&decoded, &vocab)?);
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> CmdResult {
    let (params, vocab) = load_model_and_vocab(&args.checkpoint, &args.vocab)?;
    let text = std::fs::read_to_string(&args.dev)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.dev.display())))?;
    let dev = parse_unimorph(&text, &args.lang, &args.family)?;
    if dev.is_empty() {
        return Err(CliError::Usage(format!(
            "{} holds no samples",
            args.dev.display()
        )));
    }
    let report = evaluate(&params, &dev, &vocab)?;
    println!("{METRICS_TSV_HEADER}");
    println!("{}", report.tsv_row());
    Ok(())
}

fn ablate_cmd(args: AblateArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let exclusions: Vec<Exclusion> = match &args.ablate_over {
        None => Exclusion::ALL.to_vec(),
        Some(list) => list
            .iter()
            .map(|s| Exclusion::parse(s))
            .collect::<Result<_, _>>()?,
    };
    let table = ablate(&cfg, &exclusions)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(flect_core::Error::from)?;
    let tsv_path = cfg.out_dir.join("ablation.tsv");
    std::fs::write(&tsv_path, table.to_tsv()).map_err(flect_core::Error::from)?;
    print!("{}", table.render());
    eprintln!("table written to {}", tsv_path.display());
    Ok(())
}

fn search(args: SearchArgs) -> CmdResult {
    let cfg = args.config.load()?;
    if args.config.handle_dry_run(&cfg) {
        return Ok(());
    }
    let ws = Workspace::load(&cfg)?;
    let ranked = random_search(&ws, args.budget)?;
    println!("rank\tlayers\tdropout\tembedding\thidden\tdev_accuracy");
    for (rank, (arch, acc)) in ranked.iter().enumerate() {
        println!(
            "{}\t{}\t{:.4}\t{}\t{}\t{:.2}",
            rank + 1,
            arch.num_layers,
            arch.dropout,
            arch.embedding_dim,
            arch.hidden_size,
            acc
        );
    }
    Ok(())
}

fn write_text_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(e.to_string()))?,
        None => print!("{text}"),
    }
    Ok(())
}
