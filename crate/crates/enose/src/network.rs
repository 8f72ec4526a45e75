//! The two-layer feedforward classifier: configuration, weights, and the
//! forward pass.
//!
//! The electronic-nose shape is 7 inputs (five gas channels plus humidity
//! and temperature), Z hidden log-sigmoid units, and 5 log-sigmoid outputs,
//! one per odor class. Z = 3 and Z = 10 are the two reference
//! configurations.

use thiserror::Error;

use crate::activation::{log_sigmoid, SigmoidTable};
use crate::data::{decode_argmax, ChemicalClass, CHANNEL_COUNT};

/// How the sigmoid layers are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationMode {
    /// Exact log-sigmoid. Required for training.
    Exact,
    /// Table lookup with linear interpolation. Inference only.
    Table(SigmoidTable),
}

impl ActivationMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, ActivationMode::Exact)
    }

    fn apply(&self, x: f64) -> f64 {
        match self {
            ActivationMode::Exact => log_sigmoid(x),
            ActivationMode::Table(table) => table.lookup(x),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("every layer needs at least one unit")]
    EmptyLayer,
    #[error("input has {got} values, network expects {expected}")]
    InputSize { expected: usize, got: usize },
    #[error("network has {got} outputs, expected {expected}")]
    OutputSize { expected: usize, got: usize },
}

/// Layer sizes plus the activation mode.
///
/// [`NetworkConfig::new`] builds the canonical 7-Z-5 shape; `with_dims`
/// admits arbitrary sizes for experiments and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
    pub activation: ActivationMode,
}

impl NetworkConfig {
    /// Canonical 7-Z-5 configuration in exact mode.
    pub fn new(hidden_size: usize) -> Result<NetworkConfig, NetworkError> {
        Self::with_dims(CHANNEL_COUNT, hidden_size, ChemicalClass::COUNT)
    }

    pub fn with_dims(
        input_size: usize,
        hidden_size: usize,
        output_size: usize,
    ) -> Result<NetworkConfig, NetworkError> {
        if input_size == 0 || hidden_size == 0 || output_size == 0 {
            return Err(NetworkError::EmptyLayer);
        }
        Ok(NetworkConfig {
            input_size,
            hidden_size,
            output_size,
            activation: ActivationMode::Exact,
        })
    }

    pub fn with_activation(mut self, activation: ActivationMode) -> NetworkConfig {
        self.activation = activation;
        self
    }

    /// True for the 7-Z-5 electronic-nose shape.
    pub fn is_canonical(&self) -> bool {
        self.input_size == CHANNEL_COUNT && self.output_size == ChemicalClass::COUNT
    }
}

/// Weights and biases of a two-layer network.
///
/// `w1` is hidden_size × input_size row-major (one row per hidden unit),
/// `w2` output_size × hidden_size. Fields are public; the toolkit treats a
/// network as plain data.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Result of a forward pass. Hidden activations are kept for
/// backpropagation and inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub output: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl Network {
    /// All-zero weights and biases; every unit then outputs sigmoid(0) = 0.5.
    pub fn zeroed(config: NetworkConfig) -> Network {
        let (i, z, o) = (config.input_size, config.hidden_size, config.output_size);
        Network {
            config,
            w1: vec![0.0; z * i],
            b1: vec![0.0; z],
            w2: vec![0.0; o * z],
            b2: vec![0.0; o],
        }
    }

    /// Propagate one input vector through both layers.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardPass, NetworkError> {
        if input.len() != self.config.input_size {
            return Err(NetworkError::InputSize {
                expected: self.config.input_size,
                got: input.len(),
            });
        }
        Ok(self.forward_unchecked(input))
    }

    pub(crate) fn forward_unchecked(&self, input: &[f64]) -> ForwardPass {
        let z = self.config.hidden_size;
        let i = self.config.input_size;
        let o = self.config.output_size;
        let mut hidden = Vec::with_capacity(z);
        for j in 0..z {
            let mut a = self.b1[j];
            for (w, x) in self.w1[j * i..(j + 1) * i].iter().zip(input) {
                a += w * x;
            }
            hidden.push(self.config.activation.apply(a));
        }
        let mut output = Vec::with_capacity(o);
        for k in 0..o {
            let mut a = self.b2[k];
            for (w, h) in self.w2[k * z..(k + 1) * z].iter().zip(&hidden) {
                a += w * h;
            }
            output.push(self.config.activation.apply(a));
        }
        ForwardPass { output, hidden }
    }

    /// Classify one normalized frame; only valid for 5-output networks.
    pub fn classify(&self, normalized: &[f64]) -> Result<(ChemicalClass, f64), NetworkError> {
        if self.config.output_size != ChemicalClass::COUNT {
            return Err(NetworkError::OutputSize {
                expected: ChemicalClass::COUNT,
                got: self.config.output_size,
            });
        }
        let pass = self.forward(normalized)?;
        let outputs: [f64; ChemicalClass::COUNT] =
            pass.output.try_into().expect("output size checked");
        Ok(decode_argmax(&outputs))
    }
}
