//! Synthetic MOS-sensor response generator.
//!
//! Each class is described by a [`ChemicalSignature`]: a mean response per
//! gas channel, Gaussian channel noise, and linear humidity/temperature
//! cross-sensitivities. Samples draw the environment first, shift the means
//! through the coefficients, add noise scaled by the dataset-wide
//! `overlap_factor`, and rectify at zero — a deliberately simple model that
//! still produces the structure the classifier is built for: per-channel
//! overlap between classes and a decision boundary a linear model cannot
//! match.
//!
//! The numeric defaults are implementation constants, documented here and
//! nowhere else; they are not measurements.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{ChemicalClass, Dataset, LabeledSample, SensorFrame};

/// Gas channels per frame (frame channels 0..5).
pub const GAS_CHANNELS: usize = 5;

/// Reference ambient conditions; coefficients shift responses per unit of
/// deviation from these.
pub const REFERENCE_HUMIDITY: f64 = 50.0;
pub const REFERENCE_TEMPERATURE: f64 = 25.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing config key {0:?}")]
    MissingKey(&'static str),
    #[error("line {line}: unknown config key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for key {key:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: expected \"key = value\", found {found:?}")]
    BadLine { line: usize, found: String },
    #[error("invalid {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Response distribution of one class across the five gas channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemicalSignature {
    pub class: ChemicalClass,
    pub mean_response: [f64; GAS_CHANNELS],
    pub noise_sigma: [f64; GAS_CHANNELS],
    /// Response shift per %RH of deviation from [`REFERENCE_HUMIDITY`].
    pub humidity_coeff: [f64; GAS_CHANNELS],
    /// Response shift per °C of deviation from [`REFERENCE_TEMPERATURE`].
    pub temperature_coeff: [f64; GAS_CHANNELS],
}

/// Ambient conditions the samples are drawn under.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvProfile {
    pub humidity_mean: f64,
    pub humidity_sigma: f64,
    pub temperature_mean: f64,
    pub temperature_sigma: f64,
}

impl Default for EnvProfile {
    fn default() -> EnvProfile {
        EnvProfile {
            humidity_mean: 50.0,
            humidity_sigma: 15.0,
            temperature_mean: 25.0,
            temperature_sigma: 3.0,
        }
    }
}

impl EnvProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=100.0).contains(&self.humidity_mean) {
            return Err(SimError::Invalid {
                key: "humidity_mean",
                reason: format!("{} is outside [0, 100]", self.humidity_mean),
            });
        }
        for (key, v) in [
            ("humidity_sigma", self.humidity_sigma),
            ("temperature_sigma", self.temperature_sigma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::Invalid {
                    key,
                    reason: format!("{v} must be finite and >= 0"),
                });
            }
        }
        if !self.temperature_mean.is_finite() {
            return Err(SimError::Invalid {
                key: "temperature_mean",
                reason: "must be finite".to_string(),
            });
        }
        Ok(())
    }
}

/// Everything needed to generate one dataset; generation is a pure function
/// of this value.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub signatures: [ChemicalSignature; ChemicalClass::COUNT],
    pub env: EnvProfile,
    pub samples_per_class: usize,
    pub seed: u64,
    /// Scales every signature's noise sigma uniformly; 0 disables channel
    /// noise entirely.
    pub overlap_factor: f64,
}

impl SimConfig {
    pub fn new(samples_per_class: usize, seed: u64, overlap_factor: f64) -> SimConfig {
        SimConfig {
            signatures: default_signatures(),
            env: EnvProfile::default(),
            samples_per_class,
            seed,
            overlap_factor,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.samples_per_class == 0 {
            return Err(SimError::Invalid {
                key: "samples_per_class",
                reason: "must be at least 1".to_string(),
            });
        }
        if !self.overlap_factor.is_finite() || self.overlap_factor < 0.0 {
            return Err(SimError::Invalid {
                key: "overlap_factor",
                reason: format!("{} must be finite and >= 0", self.overlap_factor),
            });
        }
        self.env.validate()?;
        for (index, signature) in self.signatures.iter().enumerate() {
            if signature.class.index() != index {
                return Err(SimError::Invalid {
                    key: "signatures",
                    reason: format!("slot {index} holds class {}", signature.class),
                });
            }
            if signature.noise_sigma.iter().any(|s| !s.is_finite() || *s < 0.0)
                || signature.mean_response.iter().any(|m| !m.is_finite() || *m < 0.0)
            {
                return Err(SimError::Invalid {
                    key: "signatures",
                    reason: format!("class {} needs finite mean >= 0 and sigma >= 0", signature.class),
                });
            }
        }
        Ok(())
    }

    /// Parse a plain `key = value` config file. Required keys: `seed`,
    /// `samples_per_class`, `overlap_factor`. Optional keys override the
    /// default environment: `humidity_mean`, `humidity_sigma`,
    /// `temperature_mean`, `temperature_sigma`. `#` starts a comment.
    pub fn from_key_value_str(text: &str) -> Result<SimConfig, SimError> {
        let mut seed: Option<u64> = None;
        let mut samples_per_class: Option<usize> = None;
        let mut overlap_factor: Option<f64> = None;
        let mut env = EnvProfile::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SimError::BadLine {
                line: line_no,
                found: raw.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad_value = |key: &str| SimError::BadValue {
                line: line_no,
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "seed" => seed = Some(value.parse().map_err(|_| bad_value(key))?),
                "samples_per_class" => {
                    samples_per_class = Some(value.parse().map_err(|_| bad_value(key))?)
                }
                "overlap_factor" => {
                    overlap_factor = Some(value.parse().map_err(|_| bad_value(key))?)
                }
                "humidity_mean" => env.humidity_mean = value.parse().map_err(|_| bad_value(key))?,
                "humidity_sigma" => {
                    env.humidity_sigma = value.parse().map_err(|_| bad_value(key))?
                }
                "temperature_mean" => {
                    env.temperature_mean = value.parse().map_err(|_| bad_value(key))?
                }
                "temperature_sigma" => {
                    env.temperature_sigma = value.parse().map_err(|_| bad_value(key))?
                }
                _ => {
                    return Err(SimError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
            }
        }
        let config = SimConfig {
            signatures: default_signatures(),
            env,
            samples_per_class: samples_per_class
                .ok_or(SimError::MissingKey("samples_per_class"))?,
            seed: seed.ok_or(SimError::MissingKey("seed"))?,
            overlap_factor: overlap_factor.ok_or(SimError::MissingKey("overlap_factor"))?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_key_value_file(path: impl AsRef<Path>) -> Result<SimConfig, SimError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_key_value_str(&text)
    }
}

/// The built-in class signatures.
///
/// Construction rules: the None class sits on a low baseline everywhere;
/// each chemical class has its own dominant sensor (acetone → MQ-135, floor
/// cleaner → MQ-2, isopropyl alcohol → MQ-3, lighter gas → TGS2610). The
/// alcohol/lighter-gas pair is built to overlap the way the LPG/alcohol
/// scatter overlaps on real arrays: identical mean responses on
/// MQ-2/MQ-135/MQ-3/TGS2611 with opposite-signed humidity and temperature
/// cross-sensitivities on MQ-3 and TGS2611, plus a wide-variance TGS2610
/// residual. Telling them apart needs the joint (gas, humidity,
/// temperature) pattern, which no single linear boundary captures.
pub fn default_signatures() -> [ChemicalSignature; ChemicalClass::COUNT] {
    [
        ChemicalSignature {
            class: ChemicalClass::None,
            mean_response: [8.0, 10.0, 6.0, 7.0, 6.0],
            noise_sigma: [4.0, 4.0, 3.0, 3.0, 3.0],
            humidity_coeff: [0.02, 0.03, 0.02, 0.02, 0.02],
            temperature_coeff: [0.05, 0.05, 0.05, 0.05, 0.05],
        },
        ChemicalSignature {
            class: ChemicalClass::Acetone,
            mean_response: [24.0, 88.0, 30.0, 16.0, 13.0],
            noise_sigma: [5.0, 7.0, 5.0, 3.5, 3.0],
            humidity_coeff: [0.05, 0.12, 0.06, 0.03, 0.03],
            temperature_coeff: [0.2, 0.5, 0.2, 0.1, 0.1],
        },
        ChemicalSignature {
            class: ChemicalClass::FloorCleaner,
            mean_response: [90.0, 20.0, 22.0, 20.0, 15.0],
            noise_sigma: [7.0, 6.0, 5.0, 4.0, 3.5],
            humidity_coeff: [0.12, 0.08, 0.05, 0.04, 0.03],
            temperature_coeff: [0.4, 0.25, 0.15, 0.1, 0.1],
        },
        ChemicalSignature {
            class: ChemicalClass::IsopropylAlcohol,
            mean_response: [50.0, 20.0, 60.0, 20.0, 20.0],
            noise_sigma: [4.5, 4.5, 3.5, 6.0, 6.0],
            humidity_coeff: [0.06, 0.06, 3.2, 0.05, 0.05],
            temperature_coeff: [0.2, 0.2, 0.3, 0.15, 0.2],
        },
        ChemicalSignature {
            class: ChemicalClass::LighterGas,
            mean_response: [50.0, 20.0, 60.0, 78.0, 20.0],
            noise_sigma: [4.5, 4.5, 3.5, 45.0, 6.0],
            humidity_coeff: [0.06, 0.06, -3.2, 0.15, 0.05],
            temperature_coeff: [0.2, 0.2, 0.3, 0.5, 0.2],
        },
    ]
}

/// Draw one frame: humidity and temperature first, then the five gas
/// channels as mean + coefficient shifts + scaled noise, rectified at zero.
pub fn generate_sample(
    signature: &ChemicalSignature,
    env: &EnvProfile,
    overlap_factor: f64,
    rng: &mut ChaCha8Rng,
) -> SensorFrame {
    let humidity = Normal::new(env.humidity_mean, env.humidity_sigma)
        .expect("validated sigma")
        .sample(rng)
        .clamp(0.0, 100.0);
    let temperature = Normal::new(env.temperature_mean, env.temperature_sigma)
        .expect("validated sigma")
        .sample(rng);
    let mut channels = [0.0; 7];
    for c in 0..GAS_CHANNELS {
        let noise = Normal::new(0.0, overlap_factor * signature.noise_sigma[c])
            .expect("validated sigma")
            .sample(rng);
        let value = signature.mean_response[c]
            + signature.humidity_coeff[c] * (humidity - REFERENCE_HUMIDITY)
            + signature.temperature_coeff[c] * (temperature - REFERENCE_TEMPERATURE)
            + noise;
        channels[c] = value.max(0.0);
    }
    channels[5] = humidity;
    channels[6] = temperature;
    SensorFrame::new(channels).expect("all terms finite")
}

/// Generate the full dataset described by a config: `samples_per_class`
/// frames per class, grouped in class index order, from one seeded
/// generator. Same config, same bytes.
pub fn generate_dataset(config: &SimConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.samples_per_class * ChemicalClass::COUNT);
    for signature in &config.signatures {
        for _ in 0..config.samples_per_class {
            samples.push(LabeledSample {
                frame: generate_sample(signature, &config.env, config.overlap_factor, &mut rng),
                label: signature.class,
            });
        }
    }
    Dataset::new(
        samples,
        format!(
            "simulator seed={} samples_per_class={} overlap_factor={}",
            config.seed, config.samples_per_class, config.overlap_factor
        ),
    )
}

/// Fraction of samples whose nearest foreign-class centroid is closer than
/// their own class centroid (Euclidean over all 7 channels). A crude but
/// monotone measure of cluster entanglement.
pub fn cluster_overlap(dataset: &Dataset) -> f64 {
    let counts = dataset.class_counts();
    let mut centroids = [[0.0; 7]; ChemicalClass::COUNT];
    for sample in &dataset.samples {
        for (c, v) in sample.frame.channels().iter().enumerate() {
            centroids[sample.label.index()][c] += v;
        }
    }
    for (class, centroid) in centroids.iter_mut().enumerate() {
        if counts[class] > 0 {
            for v in centroid.iter_mut() {
                *v /= counts[class] as f64;
            }
        }
    }
    let distance = |a: &[f64; 7], b: &[f64; 7]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let mut entangled = 0usize;
    for sample in &dataset.samples {
        let own = distance(sample.frame.channels(), &centroids[sample.label.index()]);
        let foreign = (0..ChemicalClass::COUNT)
            .filter(|&k| k != sample.label.index() && counts[k] > 0)
            .map(|k| distance(sample.frame.channels(), &centroids[k]))
            .fold(f64::INFINITY, f64::min);
        if foreign < own {
            entangled += 1;
        }
    }
    entangled as f64 / dataset.len() as f64
}
