use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use clue_core::clue::MetricKind;
use clue_core::difficulty::{difficulty_ratings, FEATURE_NAMES};
use clue_core::exec::ExecMode;
use clue_core::harness::{self, generate::SamplingConfig, HttpChatClient, Scorer};
use clue_core::optimizer::{self, OptimizerSettings};
use clue_core::passk::{pass_at_k, TaskSampleRecord};
use clue_core::plantuml::{self, ExtractionOutcome};
use clue_core::semantics::{build_provider, ProviderConfig};
use clue_core::weights::ClueConfig;

/// Class-diagram scoring and LLM design-generation benchmark.
#[derive(Parser)]
#[command(name = "clue", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Weight and relationship-type configuration (JSON). Defaults to the
    /// bundled published optimum.
    #[arg(long, global = true, env = "CLUE_CONFIG")]
    config: Option<PathBuf>,

    /// String similarity used for names and types.
    #[arg(long, global = true, value_enum, default_value_t = ProviderKind::Lexical)]
    provider: ProviderKind,

    /// Base URL of the embedding service (for `--provider embedding`).
    /// The bearer token is read from CLUE_EMBED_TOKEN.
    #[arg(long, global = true, env = "CLUE_EMBED_ENDPOINT")]
    embed_endpoint: Option<String>,

    /// Run scoring on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Lexical,
    Embedding,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a PlantUML file parses (the syntax oracle).
    Validate { file: PathBuf },
    /// Score one candidate design against a task reference.
    Score {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        task: u64,
        /// PlantUML file or raw model output.
        #[arg(long)]
        candidate: PathBuf,
    },
    /// Syntax pass@k per generator from scored records.
    Passk {
        #[arg(long)]
        k: usize,
        /// `records.jsonl` or the directory holding it.
        #[arg(long, default_value = "results")]
        records: PathBuf,
    },
    /// Score every persisted raw output offline and write the reports.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        outputs: PathBuf,
        /// Where records and reports go; defaults to the outputs directory.
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
    },
    /// Sample designs from a chat-completions endpoint, then evaluate.
    /// The API key is read from CLUE_API_KEY.
    Generate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        endpoint: String,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "outputs")]
        outputs: PathBuf,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0.2)]
        temperature: f64,
        #[arg(long, default_value_t = 2048)]
        max_tokens: usize,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long, default_value_t = 3)]
        retries: usize,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
    },
    /// Fit weights to human-rated pairs and write a configuration file.
    Optimize {
        /// JSON array of {reference, candidate, score}.
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, default_value = "fitted.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
    },
    /// Difficulty ratings and bands for a dataset.
    Difficulty {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Print the report for scored records.
    Report {
        #[arg(long, default_value = "results")]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        /// Print JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(common: &Common) -> Result<ClueConfig> {
    match &common.config {
        Some(path) => ClueConfig::load(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(ClueConfig::bundled_default()),
    }
}

fn provider_config(common: &Common) -> Result<ProviderConfig> {
    Ok(match common.provider {
        ProviderKind::Lexical => ProviderConfig::Lexical,
        ProviderKind::Embedding => {
            let Some(endpoint) = common.embed_endpoint.clone() else {
                bail!("--provider embedding needs --embed-endpoint or CLUE_EMBED_ENDPOINT");
            };
            ProviderConfig::EmbeddingService { endpoint, model: None }
        }
    })
}

fn mode(common: &Common) -> ExecMode {
    if common.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Code inside `@startuml ... @enduml` when present, else the whole text.
fn diagram_code(text: &str) -> String {
    match plantuml::extract_plantuml(text) {
        ExtractionOutcome::Found { code } => code,
        ExtractionOutcome::MissingMarkers => text.to_string(),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match cli.command {
        Command::Validate { file } => {
            let outcome = plantuml::parse(&diagram_code(&read(&file)?));
            if outcome.is_ok() {
                println!("valid");
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &outcome.diagnostics {
                    println!("{}:{d}", file.display());
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Score {
            dataset,
            task,
            candidate,
        } => {
            let config = load_config(common)?;
            let provider = build_provider(&provider_config(common)?);
            let dataset = harness::load_dataset(&dataset)?;
            let Some(task) = dataset.task(task) else {
                bail!("task {task} not in dataset");
            };
            let scorer = Scorer {
                provider: &provider,
                config: &config,
            };
            let record = harness::GenerationRecord::evaluate(task, "cli", 0, read(&candidate)?, None, scorer)?;
            if let Some(diag) = record.diagnostics.first() {
                eprintln!("{}:{diag}", candidate.display());
            }
            println!("category        {}", record.category.label());
            let scores = record.effective_scores();
            for metric in MetricKind::ALL {
                println!("{:<15} {:.3}", metric.label(), scores.get(metric));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Passk { k, records } => {
            let records = harness::read_records(&records)?;
            let mut generators: Vec<&str> = records.iter().map(|r| r.generator.as_str()).collect();
            generators.sort_unstable();
            generators.dedup();
            for generator in generators {
                let mut counts: std::collections::BTreeMap<u64, (usize, usize)> = Default::default();
                for r in records.iter().filter(|r| r.generator == generator) {
                    let e = counts.entry(r.task_id).or_default();
                    e.0 += 1;
                    e.1 += usize::from(r.parsed());
                }
                let tasks: Vec<TaskSampleRecord> =
                    counts.iter().map(|(&id, &(n, c))| TaskSampleRecord::new(id, n, c)).collect();
                println!("{generator}  pass@{k} = {:.3}", pass_at_k(&tasks, k)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            dataset,
            outputs,
            results,
            k,
        } => {
            let config = load_config(common)?;
            let provider = build_provider(&provider_config(common)?);
            let dataset = harness::load_dataset(&dataset)?;
            let scorer = Scorer {
                provider: &provider,
                config: &config,
            };
            let records = harness::evaluate_outputs(&outputs, &dataset, scorer, mode(common))?;
            let dir = results.unwrap_or(outputs);
            let rep = harness::write_results(&dir, &records, &k)?;
            print!("{}", rep.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            dataset,
            endpoint,
            model,
            outputs,
            samples,
            temperature,
            max_tokens,
            workers,
            retries,
            k,
        } => {
            let config = load_config(common)?;
            let provider = build_provider(&provider_config(common)?);
            let dataset = harness::load_dataset(&dataset)?;
            let sampling = SamplingConfig {
                temperature,
                samples,
                max_output_tokens: max_tokens,
                max_retries: retries,
                retry_backoff: Duration::from_millis(500),
                workers,
            };
            let client = HttpChatClient::new(&endpoint);
            let summary = harness::run_generation(&dataset.tasks, &client, &model, &sampling, &outputs)?;
            eprintln!(
                "{} samples requested, {} already present, {} failed",
                summary.requested, summary.skipped, summary.failed
            );
            let scorer = Scorer {
                provider: &provider,
                config: &config,
            };
            let records = harness::evaluate_outputs(&outputs, &dataset, scorer, mode(common))?;
            let rep = harness::write_results(&outputs, &records, &k)?;
            print!("{}", rep.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Optimize {
            ratings,
            out,
            budget,
            seed,
            train_fraction,
        } => {
            let base = load_config(common)?;
            let provider = build_provider(&provider_config(common)?);
            let pairs = optimizer::parse_rated_pairs(&read(&ratings)?)?;
            let (train, test) = optimizer::stratified_split(&pairs, |p| p.score, train_fraction, seed);
            let settings = OptimizerSettings {
                budget,
                seed,
                exec: mode(common),
                lut: base.lut.clone(),
                ..Default::default()
            };
            let result = optimizer::optimize(&train, &test, &provider, &settings)?;
            fs::write(&out, result.config.to_json()).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "train objective {:.3} (uniform start {:.3}) after {} evaluations, {:?}",
                result.train_objective,
                result.uniform_objective,
                result.log.len(),
                result.stop
            );
            println!("{:<15} {:>8} {:>8}", "metric", "train", "test");
            for metric in MetricKind::ALL {
                let train = result.train.get(metric).map_or(f64::NAN, |c| c.coefficient);
                let test = result
                    .test
                    .as_ref()
                    .and_then(|t| t.get(metric))
                    .map_or("n/a".to_string(), |c| format!("{:.3}", c.coefficient));
                println!("{:<15} {train:>8.3} {test:>8}", metric.label());
            }
            for (name, value) in result.config.weights.named() {
                println!("{name:<5} {value:.3}");
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Difficulty { dataset } => {
            let dataset = harness::load_dataset(&dataset)?;
            let features: Vec<_> = dataset
                .tasks
                .iter()
                .map(|t| t.features.with_context(|| format!("task {}: requirement has no words", t.id)))
                .collect::<Result<_>>()?;
            let report = difficulty_ratings(&features)?;
            println!("weights:");
            for (name, w) in FEATURE_NAMES.iter().zip(report.weights) {
                println!("  {name:<19} {w:.3}");
            }
            println!("thresholds: {:.3} / {:.3}", report.thresholds.0, report.thresholds.1);
            println!("{:>6} {:>8} {:>8} {:>8} {:>6} {:>12} {:>8}  band", "task", "classes", "attrs", "methods", "rels", "readability", "rating");
            for ((task, f), (rating, band)) in dataset
                .tasks
                .iter()
                .zip(&features)
                .zip(report.ratings.iter().zip(&report.bands))
            {
                println!(
                    "{:>6} {:>8} {:>8.2} {:>8.2} {:>6} {:>12.2} {:>8.3}  {}",
                    task.id,
                    f.class_count,
                    f.avg_attributes,
                    f.avg_methods,
                    f.relationship_count,
                    f.readability,
                    rating,
                    band.label()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { records, k, json } => {
            let records = harness::read_records(&records)?;
            let rep = harness::report(&records, &k);
            if json {
                println!("{}", rep.to_json());
            } else {
                print!("{}", rep.to_text());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
