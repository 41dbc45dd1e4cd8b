//! `chatscreen`: run the screening pipeline stage by stage or end to end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chatscreen::pipeline::{
    self, read_artifact, read_corpus, read_features, read_models, validate_config,
    ExperimentConfig, ExperimentReport, Outputs, ParsedCorpus, PipelineError, SplitRecord, Stage,
};
use chatscreen::rfe::FeatureRanking;

#[derive(Debug, Parser)]
#[command(
    name = "chatscreen",
    version,
    about = "Child-language screening experiments over CHAT transcripts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory; overrides report.output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load the corpus and write corpus.json.
    Ingest(Common),
    /// Parse corpus.json into parsed.json.
    Parse(Common),
    /// Build the feature matrix from parsed.json.
    Features(Common),
    /// Split, oversample and fit every classifier.
    Train(Common),
    /// Rank features by recursive elimination.
    Rfe(Common),
    /// Score the trained models on the held-out rows.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Ranking to include; defaults to ranking.json in the output
        /// directory when present.
        #[arg(long)]
        ranking: Option<PathBuf>,
    },
    /// All stages in order.
    Run(Common),
    /// Check a config and print it with defaults filled in.
    Validate(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ingest(c)
            | Command::Parse(c)
            | Command::Features(c)
            | Command::Train(c)
            | Command::Rfe(c)
            | Command::Run(c)
            | Command::Validate(c) => c,
            Command::Evaluate { common, .. } => common,
        }
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, PipelineError> {
    let overrides = pipeline::Overrides {
        seed: c.seed,
        output_dir: c.out.clone(),
        cache_dir: None,
    }
    .from_env();
    Ok(validate_config(&c.config, &overrides)?)
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn print_report(r: &ExperimentReport, cfg: &ExperimentConfig, f: Format) {
    match f {
        Format::Json => print!("{}", r.to_json()),
        Format::Csv => print!("{}", r.metrics_csv()),
        Format::Table => print!("{}", r.table(cfg.report.low_score_floor)),
    }
}

fn print_ranking(r: &FeatureRanking, f: Format) {
    match f {
        Format::Json => print_json(r),
        Format::Csv => print!("{}", r.to_csv()),
        Format::Table => {
            for feat in &r.order {
                println!("{:>4}  {:<28} {:.6}", feat.rank, feat.name, feat.score);
            }
        }
    }
}

fn staged(
    cfg: &ExperimentConfig,
    f: impl FnOnce(&mut Outputs) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    let mut out = Outputs::new(cfg.output_dir());
    f(&mut out).inspect_err(|e| {
        if let Err(q) = out.quarantine(e) {
            log::error!("could not quarantine partial outputs: {q}");
        }
    })
}

fn artifact(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir().join(name)
}

fn execute(cmd: &Command) -> Result<(), PipelineError> {
    let common = cmd.common();
    let cfg = load_config(common)?;
    let fmt = common.format;
    match cmd {
        Command::Validate(_) => {
            match fmt {
                Format::Json => print_json(&cfg),
                _ => {
                    println!("config ok: {}", common.config.display());
                    for d in &cfg.defaults_applied {
                        println!("  default  {d}");
                    }
                    for o in &cfg.overrides {
                        println!("  override {o}");
                    }
                }
            }
            Ok(())
        }
        Command::Ingest(_) => staged(&cfg, |out| {
            let corpus = pipeline::ingest(&cfg)?;
            pipeline::write_corpus(out, &corpus)?;
            let counts: Vec<String> = corpus
                .group_counts()
                .iter()
                .map(|(g, n)| format!("{} {n}", g.as_str()))
                .collect();
            println!(
                "{}: {} participants ({})",
                corpus.source_id,
                corpus.participants.len(),
                counts.join(", ")
            );
            Ok(())
        }),
        Command::Parse(_) => staged(&cfg, |out| {
            let corpus = read_corpus(&artifact(&cfg, "corpus.json"))?;
            let parsed = pipeline::parse(&cfg, &corpus)?;
            pipeline::write_parsed(out, &parsed)?;
            let n: usize = parsed.transcripts.values().map(Vec::len).sum();
            println!("{}: parsed {n} transcripts", parsed.source_id);
            Ok(())
        }),
        Command::Features(_) => staged(&cfg, |out| {
            let parsed: ParsedCorpus =
                read_artifact(Stage::Features, &artifact(&cfg, "parsed.json"))?;
            let m = pipeline::features(&cfg, &parsed)?;
            pipeline::write_features(out, &m)?;
            match fmt {
                Format::Json => print!("{}", m.to_json()),
                Format::Csv => print!("{}", m.to_csv()),
                Format::Table => println!("{} rows x {} features", m.n_rows(), m.n_cols()),
            }
            Ok(())
        }),
        Command::Train(_) => staged(&cfg, |out| {
            let m = read_features(Stage::Train, &artifact(&cfg, "features.json"))?;
            let t = pipeline::train(&cfg, &m)?;
            pipeline::write_training(out, &t)?;
            match fmt {
                Format::Json => print_json(&t.split),
                _ => {
                    println!(
                        "train {:?} test {:?} resampled {:?} ({})",
                        t.split.train_counts,
                        t.split.test_counts,
                        t.split.resampled_train_counts,
                        t.split.class_labels.join("/")
                    );
                    for model in &t.models {
                        println!("  fitted {}", model.kind);
                    }
                }
            }
            Ok(())
        }),
        Command::Rfe(_) => staged(&cfg, |out| {
            let m = read_features(Stage::Rfe, &artifact(&cfg, "features.json"))?;
            let r = pipeline::rank(&cfg, &m)?;
            pipeline::write_ranking(out, &r)?;
            print_ranking(&r, fmt);
            Ok(())
        }),
        Command::Evaluate { ranking, .. } => staged(&cfg, |out| {
            let m = read_features(Stage::Evaluate, &artifact(&cfg, "features.json"))?;
            let split: SplitRecord = read_artifact(Stage::Evaluate, &artifact(&cfg, "split.json"))?;
            let models = read_models(&cfg, cfg.output_dir())?;
            let ranking_path = ranking.clone().or_else(|| {
                let p = artifact(&cfg, "ranking.json");
                p.is_file().then_some(p)
            });
            let ranking: Option<FeatureRanking> = match ranking_path {
                Some(p) => Some(read_artifact(Stage::Evaluate, &p)?),
                None => None,
            };
            let corpus_path = artifact(&cfg, "corpus.json");
            let source_id = source_id(&corpus_path, &cfg)?;
            let report = pipeline::evaluate(&cfg, &m, &split, &models, ranking, &source_id)?;
            pipeline::write_report(out, &cfg, &report)?;
            print_report(&report, &cfg, fmt);
            Ok(())
        }),
        Command::Run(_) => {
            let report = pipeline::run_experiment(&cfg)?;
            print_report(&report, &cfg, fmt);
            Ok(())
        }
    }
}

/// The source id recorded by `ingest`, falling back to the parsed corpus.
fn source_id(corpus_path: &Path, cfg: &ExperimentConfig) -> Result<String, PipelineError> {
    if corpus_path.is_file() {
        return Ok(read_corpus(corpus_path)?.source_id);
    }
    let parsed: ParsedCorpus = read_artifact(Stage::Evaluate, &artifact(cfg, "parsed.json"))?;
    Ok(parsed.source_id)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}
