//! Command-line front end: simulation, training, evaluation, architecture
//! comparison, and live stream classification, all reproducible from seeds.
//!
//! Every artifact-producing invocation writes a `<out>.manifest` key-value
//! file recording the fully resolved configuration; re-running the command
//! with that configuration reproduces the artifact byte for byte.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use enose::activation::SigmoidTable;
use enose::data::Dataset;
use enose::eval::{compare_architectures, evaluate};
use enose::network::{ActivationMode, NetworkConfig};
use enose::persist::{load_model, save_model};
use enose::scaler::Scaler;
use enose::sim::{generate_dataset, SimConfig};
use enose::train::{init_weights, train, TrainConfig};
use enose::wire::{serialize_frame, StreamEvent, StreamReader};

const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

// canonical lookup table used when a model is saved in table mode
const TABLE_LOWER: f64 = -8.0;
const TABLE_UPPER: f64 = 8.0;
const TABLE_ENTRIES: usize = 2048;

#[derive(Parser)]
#[command(
    name = "enose",
    version,
    about = "Electronic-nose toolkit: simulate sensor data, train and compare 7-Z-5 classifiers, evaluate false positives, classify live streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset (CSV, or wire format with --wire)
    Simulate(SimulateArgs),
    /// Train a 7-Z-5 network and save the model with its scaler
    Train(TrainArgs),
    /// Evaluate a model on a dataset: confusion matrix, accuracy, FP rate
    Evaluate(EvaluateArgs),
    /// Train several hidden sizes on one shared split and compare them
    Compare(CompareArgs),
    /// Classify wire-format frames from a file or standard input
    Stream(StreamArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Key-value config file (seed, samples_per_class, overlap_factor, ...)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path for the dataset
    #[arg(long)]
    out: PathBuf,
    /// Override the generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override samples per class
    #[arg(long)]
    samples_per_class: Option<usize>,
    /// Override the noise overlap factor
    #[arg(long)]
    overlap: Option<f64>,
    /// Emit the wire-format stream instead of CSV
    #[arg(long)]
    wire: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset (CSV)
    #[arg(long)]
    data: PathBuf,
    /// Output path for the model file
    #[arg(long)]
    out: PathBuf,
    /// Hidden layer size Z
    #[arg(long, default_value_t = 3)]
    hidden: usize,
    /// Learning rate
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Momentum coefficient
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Training epochs (full passes over the dataset)
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Seed for weight init and epoch shuffling
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Activation mode stored in the model (training itself is always exact)
    #[arg(long, value_enum, default_value_t = ActivationArg::Exact)]
    activation: ActivationArg,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model file
    #[arg(long)]
    model: PathBuf,
    /// Evaluation dataset (CSV)
    #[arg(long)]
    data: PathBuf,
    /// False-positive decision threshold, strictly between 0 and 1
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    threshold: f64,
    /// Write the machine-readable key-value report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Dataset to split and train on (CSV)
    #[arg(long)]
    data: PathBuf,
    /// Seed for the split and both training runs
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Hidden sizes to compare (repeatable)
    #[arg(long = "hidden")]
    hidden: Vec<usize>,
    /// False-positive decision threshold
    #[arg(long, default_value_t = 0.5, value_parser = parse_threshold)]
    threshold: f64,
    /// Learning rate
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Momentum coefficient
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Training epochs
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    /// Write the machine-readable key-value report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArgs {
    /// Model file
    #[arg(long)]
    model: PathBuf,
    /// Wire-format input file; standard input when omitted
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Exact,
    Table,
}

fn parse_threshold(raw: &str) -> Result<f64, String> {
    let value: f64 = raw.parse().map_err(|_| format!("{raw:?} is not a number"))?;
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(format!(
            "threshold must lie strictly between 0 and 1, got {value}"
        ))
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Stream(args) => cmd_stream(args),
    }
}

fn write_manifest(artifact: &Path, command: &str, entries: &[(&str, String)]) -> Result<PathBuf> {
    let mut text = String::new();
    text.push_str("manifest = enose-run v1\n");
    text.push_str(&format!("toolkit_version = {TOOLKIT_VERSION}\n"));
    text.push_str(&format!("command = {command}\n"));
    for (key, value) in entries {
        text.push_str(&format!("{key} = {value}\n"));
    }
    let path = manifest_path(artifact);
    fs::write(&path, text).with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(path)
}

fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    artifact.with_file_name(name)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => SimConfig::from_key_value_file(path)
            .with_context(|| format!("loading simulator config {}", path.display()))?,
        None => SimConfig::new(40, 7, 0.5),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(samples) = args.samples_per_class {
        config.samples_per_class = samples;
    }
    if let Some(overlap) = args.overlap {
        config.overlap_factor = overlap;
    }
    config.validate().context("invalid simulator configuration")?;

    let dataset = generate_dataset(&config);
    if args.wire {
        let mut text = String::with_capacity(dataset.len() * 64);
        for (seq, sample) in dataset.samples.iter().enumerate() {
            text.push_str(&serialize_frame(seq as u32, &sample.frame));
        }
        fs::write(&args.out, text)
            .with_context(|| format!("writing wire stream {}", args.out.display()))?;
    } else {
        dataset
            .save(&args.out)
            .with_context(|| format!("writing dataset {}", args.out.display()))?;
    }

    write_manifest(
        &args.out,
        "simulate",
        &[
            ("out", args.out.display().to_string()),
            (
                "config_file",
                args.config
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "-".to_string()),
            ),
            ("seed", config.seed.to_string()),
            ("samples_per_class", config.samples_per_class.to_string()),
            ("overlap_factor", config.overlap_factor.to_string()),
            ("humidity_mean", config.env.humidity_mean.to_string()),
            ("humidity_sigma", config.env.humidity_sigma.to_string()),
            ("temperature_mean", config.env.temperature_mean.to_string()),
            (
                "temperature_sigma",
                config.env.temperature_sigma.to_string(),
            ),
            ("format", if args.wire { "wire" } else { "csv" }.to_string()),
        ],
    )?;
    println!(
        "wrote {} samples ({}) to {}",
        dataset.len(),
        if args.wire { "wire stream" } else { "csv" },
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let dataset = Dataset::load(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let scaler = Scaler::fit(&dataset).context("fitting scaler")?;
    let train_config = TrainConfig {
        learning_rate: args.lr,
        momentum: args.momentum,
        epochs: args.epochs,
        seed: args.seed,
        init_half_range: 0.5,
    };
    let net_config = NetworkConfig::new(args.hidden).context("building network config")?;
    let network = init_weights(&net_config, &train_config);
    let (mut network, report) =
        train(network, &dataset, &scaler, &train_config).context("training failed")?;

    let activation_label = match args.activation {
        ActivationArg::Exact => "exact".to_string(),
        ActivationArg::Table => {
            let table = SigmoidTable::new(TABLE_LOWER, TABLE_UPPER, TABLE_ENTRIES)
                .expect("canonical table parameters");
            network.config = network.config.with_activation(ActivationMode::Table(table));
            format!("table {TABLE_LOWER} {TABLE_UPPER} {TABLE_ENTRIES}")
        }
    };
    save_model(&network, &scaler, &args.out)
        .with_context(|| format!("saving model {}", args.out.display()))?;

    let report_path = {
        let mut name = args.out.file_name().unwrap_or_default().to_os_string();
        name.push(".report.txt");
        args.out.with_file_name(name)
    };
    let mut text = String::new();
    text.push_str(&format!("epochs = {}\n", report.epochs_run()));
    text.push_str(&format!("final_mse = {}\n", report.final_mse()));
    text.push_str("mse_per_epoch =\n");
    for (epoch, mse) in report.mse_history.iter().enumerate() {
        text.push_str(&format!("{epoch} {mse}\n"));
    }
    fs::write(&report_path, text)
        .with_context(|| format!("writing training report {}", report_path.display()))?;

    write_manifest(
        &args.out,
        "train",
        &[
            ("data", args.data.display().to_string()),
            ("out", args.out.display().to_string()),
            ("report", report_path.display().to_string()),
            ("hidden", args.hidden.to_string()),
            ("learning_rate", train_config.learning_rate.to_string()),
            ("momentum", train_config.momentum.to_string()),
            ("epochs", train_config.epochs.to_string()),
            ("seed", train_config.seed.to_string()),
            (
                "init_half_range",
                train_config.init_half_range.to_string(),
            ),
            ("activation", activation_label),
        ],
    )?;
    println!(
        "trained 7-{}-5 on {} samples: final mse {:.6}; model at {}",
        args.hidden,
        dataset.len(),
        report.final_mse(),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let (network, scaler) = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let dataset = Dataset::load(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let report = evaluate(&network, &scaler, &dataset, args.threshold).context("evaluation")?;
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        fs::write(out, report.to_kv())
            .with_context(|| format!("writing report {}", out.display()))?;
        write_manifest(
            out,
            "evaluate",
            &[
                ("model", args.model.display().to_string()),
                ("data", args.data.display().to_string()),
                ("out", out.display().to_string()),
                ("threshold", args.threshold.to_string()),
            ],
        )?;
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let dataset = Dataset::load(&args.data)
        .with_context(|| format!("loading dataset {}", args.data.display()))?;
    let hidden_sizes = if args.hidden.is_empty() {
        vec![3, 10]
    } else {
        args.hidden.clone()
    };
    let train_config = TrainConfig {
        learning_rate: args.lr,
        momentum: args.momentum,
        epochs: args.epochs,
        seed: args.seed,
        init_half_range: 0.5,
    };
    let report = compare_architectures(&dataset, &train_config, &hidden_sizes, args.threshold)
        .context("architecture comparison")?;
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        fs::write(out, report.to_kv())
            .with_context(|| format!("writing report {}", out.display()))?;
        let sizes: Vec<String> = hidden_sizes.iter().map(|z| z.to_string()).collect();
        write_manifest(
            out,
            "compare",
            &[
                ("data", args.data.display().to_string()),
                ("out", out.display().to_string()),
                ("hidden", sizes.join(" ")),
                ("threshold", args.threshold.to_string()),
                ("learning_rate", train_config.learning_rate.to_string()),
                ("momentum", train_config.momentum.to_string()),
                ("epochs", train_config.epochs.to_string()),
                ("seed", train_config.seed.to_string()),
            ],
        )?;
    }
    Ok(())
}

fn cmd_stream(args: StreamArgs) -> Result<()> {
    let (network, scaler) = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let mut source: Box<dyn Read> = match &args.input {
        Some(path) => Box::new(
            fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
        ),
        None => Box::new(io::stdin().lock()),
    };

    let stdout = io::stdout();
    let mut results = BufWriter::new(stdout.lock());
    let mut reader = StreamReader::new();
    let mut chunk = [0u8; 8192];
    loop {
        let n = source.read(&mut chunk).context("reading input")?;
        let events = if n == 0 {
            reader.finish()
        } else {
            reader.push(&chunk[..n])
        };
        for event in events {
            match event {
                StreamEvent::Frame(wire) => {
                    let (class, confidence) = network
                        .classify(&scaler.apply(&wire.frame))
                        .context("classifying frame")?;
                    writeln!(
                        results,
                        "seq={} class={} confidence={confidence:.6}",
                        wire.seq,
                        class.label()
                    )?;
                }
                notice => eprintln!("# {notice}"),
            }
        }
        if n == 0 {
            break;
        }
    }
    results.flush()?;
    eprintln!(
        "# stream done: {} frames, {} skipped, {} gaps ({} frames missing)",
        reader.frames(),
        reader.skipped(),
        reader.gaps(),
        reader.missing()
    );
    Ok(())
}
