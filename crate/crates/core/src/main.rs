//! `tgtriage` command line: ingest exports, split corpora, train and
//! evaluate classifiers, analyze messages, and run full experiments.

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use tgtriage::corpus::{
    load_labeled_csv, load_message_csv, messages_to_csv, parse_telegram_export, Message, SplitSpec,
};
use tgtriage::entities::{entity_report, render_entity_report, DateRules, EntityRecognizer, EntitySpan, Gazetteer};
use tgtriage::error::{Error, Result};
use tgtriage::metrics::{comparison_table, evaluate, EvalReport};
use tgtriage::models::{
    train_fnn, train_lstm, train_svm, Checkpoint, ModelKind, TrainConfig, TrainedModel,
};
use tgtriage::pipeline::{run_experiment, write_atomic, ExperimentConfig};
use tgtriage::sentiment::{score, SentimentLexicon, SentimentScore};
use tgtriage::textvec::TfidfModel;

#[derive(Parser)]
#[command(
    name = "tgtriage",
    version,
    about = "Telegram threat-triage toolkit: classification, sentiment, entities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a Telegram export JSON into a message CSV (content,date,group).
    Ingest {
        /// Export file as produced by the desktop client's JSON export.
        #[arg(long)]
        export: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a labeled CSV into train and test CSVs.
    Split {
        /// Labeled CSV (content,date,group,class).
        #[arg(long)]
        data: PathBuf,
        /// Shuffle seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Training fraction in (0, 1).
        #[arg(long, default_value_t = 0.75)]
        frac: f64,
        /// Train CSV path (defaults to <data>.train.csv).
        #[arg(long)]
        out_train: Option<PathBuf>,
        /// Test CSV path (defaults to <data>.test.csv).
        #[arg(long)]
        out_test: Option<PathBuf>,
    },
    /// Train one model on a labeled CSV and write a checkpoint.
    Train {
        /// fnn, lstm, or svm.
        #[arg(long)]
        model: String,
        /// Labeled CSV with the training data.
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint path; the fitted vectorizer lands next to it with a
        /// .tfidf.json extension.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
        #[arg(long, default_value_t = 0.001)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Evaluate a checkpoint against a labeled CSV.
    Evaluate {
        /// Checkpoint written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Labeled CSV with ground truth.
        #[arg(long)]
        data: PathBuf,
        /// Vectorizer JSON (defaults to the checkpoint's .tfidf.json sidecar).
        #[arg(long)]
        tfidf: Option<PathBuf>,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sentiment and entity analysis over a message or labeled CSV.
    Analyze {
        /// Message CSV (content,date,group) or labeled CSV; labels are ignored.
        #[arg(long)]
        data: PathBuf,
        /// Score sentiment (on by default when no section flag is given).
        #[arg(long)]
        sentiment: bool,
        /// Recognize entities (on by default when no section flag is given).
        #[arg(long)]
        entities: bool,
        /// Override the bundled valence lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Override the bundled gazetteer.
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        /// Override the bundled DATE word list.
        #[arg(long)]
        date_terms: Option<PathBuf>,
        /// Write a JSON array here (plus a rendered .md next to it);
        /// per-message JSON lines always go to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a comparison table from named evaluation reports.
    Report {
        /// name=path pairs, e.g. fnn=out/fnn.eval.json.
        #[arg(required = true)]
        evals: Vec<String>,
        /// Write the table JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full multi-trial experiment described by a config file.
    Experiment {
        /// TOML config (sections: dataset, split, models.*, experiment, output).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { export, out } => cmd_ingest(&export, &out),
        Command::Split {
            data,
            seed,
            frac,
            out_train,
            out_test,
        } => cmd_split(&data, seed, frac, out_train, out_test),
        Command::Train {
            model,
            data,
            out,
            epochs,
            batch_size,
            dropout,
            learning_rate,
            lambda,
            seed,
        } => {
            let config = TrainConfig {
                epochs,
                batch_size,
                dropout_rate: dropout,
                learning_rate,
                lambda,
                seed,
            };
            cmd_train(&model, &data, &out, config)
        }
        Command::Evaluate {
            model,
            data,
            tfidf,
            out,
        } => cmd_evaluate(&model, &data, tfidf, out),
        Command::Analyze {
            data,
            sentiment,
            entities,
            lexicon,
            gazetteer,
            date_terms,
            out,
        } => cmd_analyze(&data, sentiment, entities, lexicon, gazetteer, date_terms, out),
        Command::Report { evals, out } => cmd_report(&evals, out),
        Command::Experiment { config, out_dir } => cmd_experiment(&config, out_dir),
    }
}

fn cmd_ingest(export: &Path, out: &Path) -> Result<()> {
    let bytes = std::fs::read(export)?;
    let messages = parse_telegram_export(&bytes)?;
    write_atomic(out, messages_to_csv(&messages)?.as_bytes())?;
    println!(
        "ingested {} text messages from {} into {}",
        messages.len(),
        export.display(),
        out.display()
    );
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn cmd_split(
    data: &Path,
    seed: u64,
    frac: f64,
    out_train: Option<PathBuf>,
    out_test: Option<PathBuf>,
) -> Result<()> {
    let dataset = load_labeled_csv(&std::fs::read(data)?)?;
    let spec = SplitSpec {
        train_fraction: frac,
        seed,
    };
    let (train, test) = dataset.split(&spec)?;
    let out_train = out_train.unwrap_or_else(|| with_suffix(data, ".train.csv"));
    let out_test = out_test.unwrap_or_else(|| with_suffix(data, ".test.csv"));
    write_atomic(&out_train, train.to_csv()?.as_bytes())?;
    write_atomic(&out_test, test.to_csv()?.as_bytes())?;
    println!(
        "split {} messages into {} train ({}) and {} test ({}) with seed {seed}",
        dataset.len(),
        train.len(),
        out_train.display(),
        test.len(),
        out_test.display()
    );
    Ok(())
}

fn tfidf_sidecar(ckpt: &Path) -> PathBuf {
    ckpt.with_extension("tfidf.json")
}

fn cmd_train(model: &str, data: &Path, out: &Path, config: TrainConfig) -> Result<()> {
    let kind = ModelKind::parse(model)?;
    let dataset = load_labeled_csv(&std::fs::read(data)?)?;
    let contents: Vec<&str> = dataset.messages().iter().map(|m| m.content.as_str()).collect();
    let tfidf = TfidfModel::fit(&contents, Default::default())?;
    let xs = dataset
        .messages()
        .iter()
        .map(|m| tfidf.transform(&m.content))
        .collect();
    let ys = dataset
        .messages()
        .iter()
        .map(|m| m.label.expect("labeled"))
        .collect();
    let train_data = tgtriage::models::VectorizedDataset::new(tfidf.vocab_size(), xs, ys)?;
    let trained: TrainedModel = match kind {
        ModelKind::Fnn => train_fnn(&train_data, None, &config)?,
        ModelKind::Lstm => train_lstm(&train_data, None, &config)?,
        ModelKind::Svm => train_svm(&train_data, None, &config)?,
    };
    let checkpoint = Checkpoint::from_classifier(&trained.classifier, config);
    write_atomic(out, checkpoint.to_json().as_bytes())?;
    let sidecar = tfidf_sidecar(out);
    write_atomic(&sidecar, tfidf.to_json().as_bytes())?;
    println!(
        "trained {kind} on {} messages (V = {}); checkpoint {}, vectorizer {}",
        dataset.len(),
        tfidf.vocab_size(),
        out.display(),
        sidecar.display()
    );
    for (epoch, loss) in trained.history.train_loss.iter().enumerate() {
        println!("epoch {:>2}: train loss {loss:.6}", epoch + 1);
    }
    Ok(())
}

fn cmd_evaluate(
    model: &Path,
    data: &Path,
    tfidf: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let checkpoint = Checkpoint::from_json(&std::fs::read_to_string(model)?)?;
    let tfidf_path = tfidf.unwrap_or_else(|| tfidf_sidecar(model));
    let tfidf = TfidfModel::from_json(&std::fs::read_to_string(&tfidf_path)?)?;
    let classifier = checkpoint.into_classifier()?;
    let dataset = load_labeled_csv(&std::fs::read(data)?)?;
    let mut preds = Vec::with_capacity(dataset.len());
    let mut truth = Vec::with_capacity(dataset.len());
    for m in dataset.messages() {
        let x = tfidf.transform(&m.content);
        preds.push(classifier.predict(&x)?.1);
        truth.push(m.label.expect("labeled"));
    }
    let report = evaluate(&preds, &truth)?;
    let table = comparison_table(&[(classifier.kind().to_string(), report.clone())])?;
    print!("{}", table.render_markdown());
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    if let Some(out) = out {
        write_atomic(&out, json.as_bytes())?;
    }
    Ok(())
}

/// Accept either the labeled or the unlabeled CSV layout.
fn load_messages_flexible(bytes: &[u8]) -> Result<Vec<Message>> {
    let header = bytes
        .split(|&b| b == b'\n')
        .next()
        .unwrap_or_default();
    let header = String::from_utf8_lossy(header);
    if header.trim_end().trim_end_matches('\r') == "content,date,group,class" {
        Ok(load_labeled_csv(bytes)?.messages().to_vec())
    } else {
        load_message_csv(bytes)
    }
}

#[derive(Serialize)]
struct AnalysisRecord {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentiment: Option<SentimentScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entities: Option<Vec<EntitySpan>>,
}

fn cmd_analyze(
    data: &Path,
    sentiment_flag: bool,
    entities_flag: bool,
    lexicon: Option<PathBuf>,
    gazetteer: Option<PathBuf>,
    date_terms: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (do_sentiment, do_entities) = if sentiment_flag || entities_flag {
        (sentiment_flag, entities_flag)
    } else {
        (true, true)
    };
    let messages = load_messages_flexible(&std::fs::read(data)?)?;
    let lexicon = match lexicon {
        Some(path) => SentimentLexicon::parse(&std::fs::read_to_string(path)?)?,
        None => SentimentLexicon::bundled(),
    };
    let gazetteer = match gazetteer {
        Some(path) => Gazetteer::parse(&std::fs::read_to_string(path)?)?,
        None => Gazetteer::bundled(),
    };
    let date_rules = match date_terms {
        Some(path) => DateRules::parse(&std::fs::read_to_string(path)?)?,
        None => DateRules::bundled(),
    };
    let recognizer = EntityRecognizer::new(gazetteer, date_rules);

    let mut records = Vec::with_capacity(messages.len());
    let mut spans_per_message = Vec::new();
    for m in &messages {
        let sentiment = do_sentiment.then(|| score(&m.content, &lexicon));
        let entities = do_entities.then(|| recognizer.recognize(&m.content));
        if let Some(spans) = &entities {
            spans_per_message.push(spans.clone());
        }
        records.push(AnalysisRecord {
            id: m.id.clone(),
            sentiment,
            entities,
        });
    }
    for r in &records {
        println!("{}", serde_json::to_string(r).expect("record serializes"));
    }
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&records).expect("records serialize");
        write_atomic(&out, json.as_bytes())?;
        let mut md = String::new();
        if do_sentiment {
            md.push_str("# Sentiment\n\n");
            for (m, r) in messages.iter().zip(&records) {
                if let Some(s) = &r.sentiment {
                    md.push_str(&format!(
                        "- message {}: compound {:.4} (neg {:.3}, neu {:.3}, pos {:.3})\n",
                        m.id, s.compound, s.neg, s.neu, s.pos
                    ));
                }
            }
            md.push('\n');
        }
        if do_entities {
            md.push_str("# Entities\n\n");
            let report = entity_report(&messages, &spans_per_message);
            md.push_str(&render_entity_report(&report));
        }
        write_atomic(&out.with_extension("md"), md.as_bytes())?;
    }
    Ok(())
}

fn cmd_report(evals: &[String], out: Option<PathBuf>) -> Result<()> {
    let mut named = Vec::new();
    for spec in evals {
        let (name, path) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("expected name=path, got `{spec}`"))
        })?;
        let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Format(format!("{path}: {e}")))?;
        named.push((name.to_string(), report));
    }
    let table = comparison_table(&named)?;
    print!("{}", table.render_markdown());
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&table).expect("table serializes");
        write_atomic(&out, json.as_bytes())?;
    }
    Ok(())
}

fn cmd_experiment(config_path: &Path, out_dir: Option<PathBuf>) -> Result<()> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(dir) = out_dir {
        config.output.dir = dir;
    }
    let report = run_experiment(&config)?;
    report.write_to_dir(&config.output.dir)?;
    print!("{}", report.render_markdown());
    println!(
        "\nwrote {} and {}",
        config.output.dir.join("report.json").display(),
        config.output.dir.join("report.md").display()
    );
    Ok(())
}
