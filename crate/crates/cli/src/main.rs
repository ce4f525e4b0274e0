//! `agepred` command-line driver.

use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use agepred::pipeline::{self, ModelPaths, PipelineConfig, PredictInput};
use agepred::synth::SynthConfig;
use agepred::{Error, LabelMode, Preset, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "agepred", version, about = "Predict author age from text")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for splitting, oversampling, SGD and synthesis.
    #[arg(long, global = true, env = "AGEPRED_SEED")]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "AGEPRED_THREADS")]
    threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Number of documents.
        #[arg(long, default_value_t = 5000)]
        docs: usize,
    },
    /// Clean, split and oversample corpora into train.jsonl and test.jsonl.
    Prepare {
        /// Corpus files (default: `corpus` from the config).
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Keep the training split as is.
        #[arg(long)]
        no_oversample: bool,
    },
    /// Train the MaxEnt age-category classifier.
    TrainClassifier {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Train the LASSO age regressor, optionally chained after a classifier.
    TrainRegressor {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        features: FeatureArgs,
        /// Inject the classifier's category as features.
        #[arg(long, requires = "classifier")]
        ensemble: bool,
        /// Classifier model for --ensemble.
        #[arg(long)]
        classifier: Option<PathBuf>,
        /// Category used for the injected features during training.
        #[arg(long, value_parser = parse_label_mode)]
        label_mode: Option<LabelMode>,
        /// Skip documents without an exact age instead of failing.
        #[arg(long)]
        drop_category_only: bool,
    },
    /// Score models on a labeled test split and write reports.
    Evaluate {
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print one JSON line of predictions per document.
    Predict {
        #[command(flatten)]
        models: ModelArgs,
        /// JSON Lines corpus to score.
        #[arg(long, conflicts_with = "text")]
        input: Option<PathBuf>,
        /// A single text to score.
        #[arg(long)]
        text: Option<String>,
    },
}

#[derive(Args)]
struct FeatureArgs {
    /// Feature preset: UNIGRAM, NGRAM, STYLE or GLOBAL.
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    classifier: Option<PathBuf>,
    #[arg(long)]
    regressor: Option<PathBuf>,
    /// Ensemble file written by `train-regressor --ensemble`.
    #[arg(long)]
    ensemble: Option<PathBuf>,
}

impl From<ModelArgs> for ModelPaths {
    fn from(m: ModelArgs) -> Self {
        ModelPaths {
            classifier: m.classifier,
            regressor: m.regressor,
            ensemble: m.ensemble,
        }
    }
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label_mode(s: &str) -> std::result::Result<LabelMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn with_preset(mut config: PipelineConfig, features: &FeatureArgs) -> PipelineConfig {
    if let Some(p) = features.preset {
        config.preset = p;
    }
    config
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    }
    let config = load_config(&cli)?;
    let mut stdout = io::stdout().lock();
    let mut say = |text: String| stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e));

    match cli.command {
        Command::Synth { out, docs } => {
            let synth = SynthConfig {
                n_docs: docs,
                seed: config.seed,
                ..SynthConfig::default()
            };
            let n = pipeline::synth(&out, &synth)?;
            say(format!("wrote {n} documents to {}\n", out.display()))
        }
        Command::Prepare {
            inputs,
            out_dir,
            no_oversample,
        } => {
            let m = pipeline::prepare(&inputs, &out_dir, &config, !no_oversample)?;
            let mut text = format!("train: {} documents, test: {} documents\n", m.train.total, m.test.total);
            for (cat, n) in &m.train.categories {
                let test = m.test.categories.get(cat).copied().unwrap_or(0);
                text += &format!("  {cat:<6} train {n:>7}  test {test:>7}\n");
            }
            say(text)
        }
        Command::TrainClassifier { train, out, features } => {
            let config = with_preset(config, &features);
            let s = pipeline::train_classifier(&train, &out, &config)?;
            say(format!(
                "{}: {} candidate features, {} selected, {} parameters\n\
                 GIS: {} iterations, stop {:?}, log-likelihood {:.6}\n",
                config.preset,
                s.candidate_features,
                s.selected_features,
                s.parameters,
                s.iterations,
                s.stop,
                s.final_log_likelihood
            ))
        }
        Command::TrainRegressor {
            train,
            out,
            features,
            ensemble,
            classifier,
            label_mode,
            drop_category_only,
        } => {
            let mut config = with_preset(config, &features);
            if let Some(mode) = label_mode {
                config.ensemble_mode = mode;
            }
            if classifier.is_some() && !ensemble {
                return Err(Error::validation("--classifier is only used with --ensemble"));
            }
            let s = pipeline::train_regressor(&train, &out, &config, classifier.as_deref(), drop_category_only)?;
            let mut text = format!(
                "{} features, {} documents\nchosen: learning rate {}, alpha {}, validation MAE {:.4}\n",
                s.features,
                s.documents,
                s.tuning.chosen.learning_rate,
                s.tuning.chosen.reg_param,
                s.tuning.chosen.validation_mae
            );
            if let Some(path) = s.ensemble_file {
                text += &format!("ensemble file: {}\n", path.display());
            }
            say(text)
        }
        Command::Evaluate { test, models, out_dir } => {
            let s = pipeline::evaluate(&models.into(), &test, &out_dir, &config)?;
            let mut tables = Vec::new();
            if let Some(r) = &s.classification {
                tables.push(r.to_table("classifier"));
            }
            if let Some(r) = &s.ensemble_classification {
                tables.push(r.to_table("ensemble classifier"));
            }
            if let Some(r) = &s.default_regression {
                tables.push(r.to_table("default regressor"));
            }
            if let Some(r) = &s.ensemble_regression {
                tables.push(r.to_table("ensemble regressor"));
            }
            say(tables.join("\n"))
        }
        Command::Predict { models, input, text } => {
            let source = match (input, text) {
                (Some(path), _) => PredictInput::Corpus(path),
                (None, Some(t)) => PredictInput::Lines(t),
                (None, None) => {
                    let mut buf = String::new();
                    io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| Error::io("<stdin>", e))?;
                    PredictInput::Lines(buf)
                }
            };
            say(pipeline::predict(&models.into(), source, &config)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
