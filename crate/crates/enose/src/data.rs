//! Sensor frames, odor classes, labeled datasets, and one-hot coding.
//!
//! Channel order is fixed across every format in the toolkit — the CSV
//! files, the wire protocol, and the network inputs all use the same seven
//! positions: the five gas sensors first (MQ-2, MQ-135, MQ-3, TGS2610,
//! TGS2611), then relative humidity in %RH and temperature in °C.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Number of channels in a [`SensorFrame`].
pub const CHANNEL_COUNT: usize = 7;

/// Channel names in frame/CSV/wire order.
pub const CHANNEL_NAMES: [&str; CHANNEL_COUNT] = [
    "mq2",
    "mq135",
    "mq3",
    "tgs2610",
    "tgs2611",
    "humidity",
    "temperature",
];

/// Header row of the dataset CSV format.
pub const CSV_HEADER: &str = "mq2,mq135,mq3,tgs2610,tgs2611,humidity,temperature,label";

/// Errors from frame construction and dataset CSV I/O.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("channel {channel} is not finite")]
    NonFiniteChannel { channel: usize },
    #[error("missing header row (expected {CSV_HEADER:?})")]
    MissingHeader,
    #[error("line {line}: expected header {CSV_HEADER:?}, found {found:?}")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    BadColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {value:?} as a finite number")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("scaler bounds invalid for channel {channel} (need finite min <= max)")]
    BadScalerBounds { channel: usize },
    #[error("dataset is empty")]
    EmptyDataset,
}

/// The five odor classes, with stable indices used everywhere: one-hot
/// targets, network outputs, confusion matrices, and serialized labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChemicalClass {
    /// No compound present beyond ambient air.
    None = 0,
    Acetone = 1,
    FloorCleaner = 2,
    IsopropylAlcohol = 3,
    LighterGas = 4,
}

impl ChemicalClass {
    /// Number of classes (and of network outputs).
    pub const COUNT: usize = 5;

    /// All classes in index order.
    pub const ALL: [ChemicalClass; Self::COUNT] = [
        ChemicalClass::None,
        ChemicalClass::Acetone,
        ChemicalClass::FloorCleaner,
        ChemicalClass::IsopropylAlcohol,
        ChemicalClass::LighterGas,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ChemicalClass> {
        Self::ALL.get(index).copied()
    }

    /// Lowercase identifier used in CSV files and stream output.
    pub fn label(self) -> &'static str {
        match self {
            ChemicalClass::None => "none",
            ChemicalClass::Acetone => "acetone",
            ChemicalClass::FloorCleaner => "floor_cleaner",
            ChemicalClass::IsopropylAlcohol => "isopropyl_alcohol",
            ChemicalClass::LighterGas => "lighter_gas",
        }
    }

    pub fn from_label(label: &str) -> Option<ChemicalClass> {
        Self::ALL.iter().copied().find(|c| c.label() == label)
    }
}

impl fmt::Display for ChemicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One reading of the full sensor array.
///
/// Gas channels are raw, unitless sensor responses; humidity is %RH and
/// temperature °C. Construction rejects non-finite values, so a frame always
/// holds seven finite numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    channels: [f64; CHANNEL_COUNT],
}

impl SensorFrame {
    pub fn new(channels: [f64; CHANNEL_COUNT]) -> Result<SensorFrame, DataError> {
        match channels.iter().position(|v| !v.is_finite()) {
            Some(channel) => Err(DataError::NonFiniteChannel { channel }),
            None => Ok(SensorFrame { channels }),
        }
    }

    pub fn channels(&self) -> &[f64; CHANNEL_COUNT] {
        &self.channels
    }

    pub fn mq2(&self) -> f64 {
        self.channels[0]
    }

    pub fn mq135(&self) -> f64 {
        self.channels[1]
    }

    pub fn mq3(&self) -> f64 {
        self.channels[2]
    }

    pub fn tgs2610(&self) -> f64 {
        self.channels[3]
    }

    pub fn tgs2611(&self) -> f64 {
        self.channels[4]
    }

    pub fn humidity(&self) -> f64 {
        self.channels[5]
    }

    pub fn temperature(&self) -> f64 {
        self.channels[6]
    }
}

/// A frame together with its ground-truth class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledSample {
    pub frame: SensorFrame,
    pub label: ChemicalClass,
}

/// An ordered collection of labeled samples plus a free-text source tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, provenance: impl Into<String>) -> Dataset {
        Dataset {
            samples,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample count per class index.
    pub fn class_counts(&self) -> [usize; ChemicalClass::COUNT] {
        let mut counts = [0; ChemicalClass::COUNT];
        for sample in &self.samples {
            counts[sample.label.index()] += 1;
        }
        counts
    }

    /// Render as CSV. Floats are written at full round-trip precision, so
    /// save–load cycles preserve values exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.provenance.is_empty() {
            out.push_str("# provenance: ");
            out.push_str(&self.provenance);
            out.push('\n');
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for sample in &self.samples {
            for v in sample.frame.channels() {
                out.push_str(&format!("{v},"));
            }
            out.push_str(sample.label.label());
            out.push('\n');
        }
        out
    }

    /// Parse the CSV format. `#`-prefixed lines are comments; a
    /// `# provenance:` comment restores the source tag. Errors name the
    /// 1-based offending line.
    pub fn from_csv(text: &str) -> Result<Dataset, DataError> {
        let mut provenance = String::new();
        let mut samples = Vec::new();
        let mut saw_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(tag) = comment.trim_start().strip_prefix("provenance:") {
                    provenance = tag.trim().to_string();
                }
                continue;
            }
            if !saw_header {
                if line != CSV_HEADER {
                    return Err(DataError::BadHeader {
                        line: line_no,
                        found: line.to_string(),
                    });
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != CHANNEL_COUNT + 1 {
                return Err(DataError::BadColumnCount {
                    line: line_no,
                    expected: CHANNEL_COUNT + 1,
                    found: fields.len(),
                });
            }
            let mut channels = [0.0; CHANNEL_COUNT];
            for (c, field) in fields[..CHANNEL_COUNT].iter().enumerate() {
                let value: f64 = field.trim().parse().map_err(|_| DataError::BadNumber {
                    line: line_no,
                    value: field.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(DataError::BadNumber {
                        line: line_no,
                        value: field.to_string(),
                    });
                }
                channels[c] = value;
            }
            let label_field = fields[CHANNEL_COUNT].trim();
            let label =
                ChemicalClass::from_label(label_field).ok_or_else(|| DataError::UnknownLabel {
                    line: line_no,
                    label: label_field.to_string(),
                })?;
            samples.push(LabeledSample {
                frame: SensorFrame::new(channels)?,
                label,
            });
        }
        if !saw_header {
            return Err(DataError::MissingHeader);
        }
        Ok(Dataset {
            samples,
            provenance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(&text)
    }
}

/// One-hot target vector: 1.0 at the class index, 0.0 elsewhere.
pub fn encode_one_hot(label: ChemicalClass) -> [f64; ChemicalClass::COUNT] {
    let mut target = [0.0; ChemicalClass::COUNT];
    target[label.index()] = 1.0;
    target
}

/// Class at the maximal output plus that output's value as a confidence.
/// Ties break toward the lowest class index.
pub fn decode_argmax(outputs: &[f64; ChemicalClass::COUNT]) -> (ChemicalClass, f64) {
    let mut best = 0;
    for k in 1..outputs.len() {
        if outputs[k] > outputs[best] {
            best = k;
        }
    }
    (
        ChemicalClass::from_index(best).expect("index in range"),
        outputs[best],
    )
}
