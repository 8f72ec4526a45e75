//! Classification metrics — confusion matrix, accuracy, false-positive
//! rates — and the two-architecture comparison experiment.
//!
//! A false positive here is an *activation*: any output for a class that is
//! not present rising strictly above the decision threshold. The rate
//! divides the activation count by the four non-target outputs of every
//! evaluated sample.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{decode_argmax, ChemicalClass, DataError, Dataset};
use crate::network::{Network, NetworkConfig, NetworkError};
use crate::scaler::Scaler;
use crate::train::{init_weights, train, TrainConfig, TrainError};

const CLASSES: usize = ChemicalClass::COUNT;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation dataset is empty")]
    EmptyDataset,
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("architecture comparison needs at least 2 hidden sizes, got {0}")]
    TooFewArchitectures(usize),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// 5×5 counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; CLASSES]; CLASSES],
}

impl ConfusionMatrix {
    pub fn new() -> ConfusionMatrix {
        ConfusionMatrix::default()
    }

    pub fn record(&mut self, truth: ChemicalClass, predicted: ChemicalClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn count(&self, truth: ChemicalClass, predicted: ChemicalClass) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn rows(&self) -> &[[u64; CLASSES]; CLASSES] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// trace / total; 0.0 on an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }
}

/// Metrics of one network over one dataset at a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub fp_activations: u64,
    pub fp_rate: f64,
    pub threshold: f64,
}

impl EvalReport {
    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let total = self.confusion.total();
        let _ = writeln!(out, "samples          {total}");
        let _ = writeln!(out, "accuracy         {:.6}", self.accuracy);
        let _ = writeln!(out, "threshold        {}", self.threshold);
        let _ = writeln!(
            out,
            "false positives  {} activations / {} non-target outputs (rate {:.6})",
            self.fp_activations,
            total * (CLASSES as u64 - 1),
            self.fp_rate
        );
        out.push_str(&confusion_text(&self.confusion));
        out
    }

    /// Machine-readable `key = value` lines; the confusion matrix follows
    /// `confusion =` as one row per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples = {}", self.confusion.total());
        let _ = writeln!(out, "accuracy = {}", self.accuracy);
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "fp_activations = {}", self.fp_activations);
        let _ = writeln!(out, "fp_rate = {}", self.fp_rate);
        let _ = writeln!(out, "confusion =");
        out.push_str(&confusion_rows(&self.confusion));
        out
    }
}

fn confusion_text(confusion: &ConfusionMatrix) -> String {
    let width = ChemicalClass::ALL
        .iter()
        .map(|c| c.label().len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut out = String::from("confusion matrix (rows = truth, columns = predicted)\n");
    let _ = write!(out, "{:>width$} ", "");
    for class in ChemicalClass::ALL {
        let _ = write!(out, " {:>width$}", class.label());
    }
    out.push('\n');
    for truth in ChemicalClass::ALL {
        let _ = write!(out, "{:>width$} ", truth.label());
        for predicted in ChemicalClass::ALL {
            let _ = write!(out, " {:>width$}", confusion.count(truth, predicted));
        }
        out.push('\n');
    }
    out
}

fn confusion_rows(confusion: &ConfusionMatrix) -> String {
    let mut out = String::new();
    for row in confusion.rows() {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

fn tally(outcomes: &[(ChemicalClass, [f64; CLASSES])], threshold: f64) -> EvalReport {
    let mut confusion = ConfusionMatrix::new();
    let mut fp_activations = 0u64;
    for (truth, outputs) in outcomes {
        let (predicted, _) = decode_argmax(outputs);
        confusion.record(*truth, predicted);
        for (k, value) in outputs.iter().enumerate() {
            if k != truth.index() && *value > threshold {
                fp_activations += 1;
            }
        }
    }
    let samples = outcomes.len() as f64;
    EvalReport {
        confusion,
        accuracy: confusion.accuracy(),
        fp_activations,
        fp_rate: fp_activations as f64 / (samples * (CLASSES as f64 - 1.0)),
        threshold,
    }
}

/// Run a network over a dataset and count outcomes.
pub fn evaluate(
    network: &Network,
    scaler: &Scaler,
    dataset: &Dataset,
    threshold: f64,
) -> Result<EvalReport, EvalError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if network.config.output_size != CLASSES {
        return Err(NetworkError::OutputSize {
            expected: CLASSES,
            got: network.config.output_size,
        }
        .into());
    }
    let mut outcomes = Vec::with_capacity(dataset.len());
    for sample in &dataset.samples {
        let pass = network.forward(&scaler.apply(&sample.frame))?;
        let outputs: [f64; CLASSES] = pass.output.try_into().expect("output size checked");
        outcomes.push((sample.label, outputs));
    }
    Ok(tally(&outcomes, threshold))
}

/// A deterministic stratified train/test split.
///
/// The fingerprint hashes the original dataset indices that landed in the
/// test set, so two runs of the same protocol can be checked for using the
/// identical held-out data.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub fingerprint: u64,
}

/// Per class, shuffle that class's sample indices with a generator seeded
/// from `seed` and send the first round(fraction · n) to the training set.
pub fn stratified_split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<Split, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::train::STREAM_SPLIT);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in ChemicalClass::ALL {
        let mut indices: Vec<usize> = dataset
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        let n_train = (indices.len() as f64 * train_fraction).round() as usize;
        let n_train = n_train.min(indices.len());
        train_idx.extend_from_slice(&indices[..n_train]);
        test_idx.extend_from_slice(&indices[n_train..]);
    }
    let fingerprint = {
        let mut sorted = test_idx.clone();
        sorted.sort_unstable();
        fnv1a(&sorted)
    };
    let pick = |indices: &[usize], tag: &str| {
        Dataset::new(
            indices.iter().map(|&i| dataset.samples[i]).collect(),
            format!("{} [{tag} split, seed {seed}]", dataset.provenance),
        )
    };
    Ok(Split {
        train: pick(&train_idx, "train"),
        test: pick(&test_idx, "test"),
        fingerprint,
    })
}

fn fnv1a(indices: &[usize]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &index in indices {
        for byte in (index as u64).to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

/// Multiply-accumulate and bias-add counts for one forward pass of a 7-Z-5
/// network: 7Z + 5Z multiplies, Z + 5 bias adds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferenceOps {
    pub multiply_adds: u64,
    pub bias_adds: u64,
}

impl InferenceOps {
    pub fn total(&self) -> u64 {
        self.multiply_adds + self.bias_adds
    }
}

pub fn inference_ops(hidden_size: usize) -> InferenceOps {
    let z = hidden_size as u64;
    InferenceOps {
        multiply_adds: 7 * z + 5 * z,
        bias_adds: z + 5,
    }
}

/// One architecture's results inside a comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureRun {
    pub hidden_size: usize,
    pub report: EvalReport,
    pub train_seconds: f64,
    pub final_mse: f64,
    pub ops: InferenceOps,
    pub split_fingerprint: u64,
}

/// Results of training several hidden sizes under one shared protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub runs: Vec<ArchitectureRun>,
    pub threshold: f64,
    pub train_size: usize,
    pub test_size: usize,
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fingerprint = self
            .runs
            .first()
            .map(|r| format!("{:016x}", r.split_fingerprint))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "architecture comparison: {} train / {} test samples, threshold {}, split {fingerprint}",
            self.train_size, self.test_size, self.threshold
        );
        let _ = writeln!(
            out,
            "{:>7} {:>9} {:>9} {:>6} {:>10} {:>10} {:>9} {:>9} {:>9}",
            "hidden", "mul-adds", "bias-adds", "total", "train-s", "final-mse", "accuracy", "fp-count", "fp-rate"
        );
        for run in &self.runs {
            let _ = writeln!(
                out,
                "{:>7} {:>9} {:>9} {:>6} {:>10.3} {:>10.6} {:>9.6} {:>9} {:>9.6}",
                run.hidden_size,
                run.ops.multiply_adds,
                run.ops.bias_adds,
                run.ops.total(),
                run.train_seconds,
                run.final_mse,
                run.report.accuracy,
                run.report.fp_activations,
                run.report.fp_rate,
            );
        }
        for run in &self.runs {
            let _ = writeln!(out, "\n7-{}-5 network:", run.hidden_size);
            out.push_str(&confusion_text(&run.report.confusion));
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "train_size = {}", self.train_size);
        let _ = writeln!(out, "test_size = {}", self.test_size);
        let sizes: Vec<String> = self.runs.iter().map(|r| r.hidden_size.to_string()).collect();
        let _ = writeln!(out, "architectures = {}", sizes.join(" "));
        for run in &self.runs {
            let z = run.hidden_size;
            let _ = writeln!(out, "arch.{z}.split_fingerprint = {:016x}", run.split_fingerprint);
            let _ = writeln!(out, "arch.{z}.multiply_adds = {}", run.ops.multiply_adds);
            let _ = writeln!(out, "arch.{z}.bias_adds = {}", run.ops.bias_adds);
            let _ = writeln!(out, "arch.{z}.total_ops = {}", run.ops.total());
            let _ = writeln!(out, "arch.{z}.train_seconds = {}", run.train_seconds);
            let _ = writeln!(out, "arch.{z}.final_mse = {}", run.final_mse);
            let _ = writeln!(out, "arch.{z}.accuracy = {}", run.report.accuracy);
            let _ = writeln!(out, "arch.{z}.fp_activations = {}", run.report.fp_activations);
            let _ = writeln!(out, "arch.{z}.fp_rate = {}", run.report.fp_rate);
            let _ = writeln!(out, "arch.{z}.confusion =");
            out.push_str(&confusion_rows(&run.report.confusion));
        }
        out
    }
}

/// Train each hidden size under one shared protocol — a single stratified
/// 70/30 split seeded from the training seed, one scaler fitted on the
/// training side — and evaluate every network on the identical held-out set.
pub fn compare_architectures(
    dataset: &Dataset,
    train_config: &TrainConfig,
    hidden_sizes: &[usize],
    threshold: f64,
) -> Result<ComparisonReport, EvalError> {
    if hidden_sizes.len() < 2 {
        return Err(EvalError::TooFewArchitectures(hidden_sizes.len()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::InvalidThreshold(threshold));
    }
    let split = stratified_split(dataset, 0.7, train_config.seed)?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let scaler = Scaler::fit(&split.train)?;
    let mut runs = Vec::with_capacity(hidden_sizes.len());
    for &hidden_size in hidden_sizes {
        let config = NetworkConfig::new(hidden_size)?;
        let started = Instant::now();
        let (network, train_report) = train(
            init_weights(&config, train_config),
            &split.train,
            &scaler,
            train_config,
        )?;
        let train_seconds = started.elapsed().as_secs_f64();
        let report = evaluate(&network, &scaler, &split.test, threshold)?;
        runs.push(ArchitectureRun {
            hidden_size,
            report,
            train_seconds,
            final_mse: train_report.final_mse(),
            ops: inference_ops(hidden_size),
            split_fingerprint: split.fingerprint,
        });
    }
    Ok(ComparisonReport {
        runs,
        threshold,
        train_size: split.train.len(),
        test_size: split.test.len(),
    })
}
