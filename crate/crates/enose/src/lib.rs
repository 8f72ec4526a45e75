//! Electronic-nose toolkit: synthetic gas-sensor data, small sigmoid
//! networks trained with backpropagation plus momentum, lookup-table
//! inference, and false-positive evaluation.
//!
//! The pipeline models a low-cost tin-oxide sensor array: five gas channels
//! (MQ-2, MQ-135, MQ-3, TGS2610, TGS2611) plus humidity and temperature feed
//! a 7-Z-5 feedforward classifier over five odor classes. The heavy
//! computation happens once, in training; afterwards a classification is a
//! vector-matrix multiply and, in table mode, an activation lookup.
//!
//! ```
//! use enose::eval::evaluate;
//! use enose::network::NetworkConfig;
//! use enose::scaler::Scaler;
//! use enose::sim::{generate_dataset, SimConfig};
//! use enose::train::{init_weights, train, TrainConfig};
//!
//! // a small, clean synthetic dataset
//! let dataset = generate_dataset(&SimConfig::new(10, 7, 0.1));
//! let scaler = Scaler::fit(&dataset).unwrap();
//!
//! let train_config = TrainConfig { epochs: 200, ..TrainConfig::default() };
//! let network = init_weights(&NetworkConfig::new(3).unwrap(), &train_config);
//! let (network, report) = train(network, &dataset, &scaler, &train_config).unwrap();
//! assert!(report.final_mse().is_finite());
//!
//! let metrics = evaluate(&network, &scaler, &dataset, 0.5).unwrap();
//! assert!(metrics.accuracy > 0.5);
//! ```

pub mod activation;
pub mod data;
pub mod eval;
pub mod network;
pub mod persist;
pub mod scaler;
pub mod sim;
pub mod train;
pub mod wire;

pub use activation::{log_sigmoid, SigmoidTable};
pub use data::{
    decode_argmax, encode_one_hot, ChemicalClass, DataError, Dataset, LabeledSample, SensorFrame,
    CHANNEL_COUNT, CHANNEL_NAMES,
};
pub use eval::{
    compare_architectures, evaluate, inference_ops, stratified_split, ComparisonReport,
    ConfusionMatrix, EvalError, EvalReport,
};
pub use network::{ActivationMode, ForwardPass, Network, NetworkConfig, NetworkError};
pub use persist::{load_model, model_from_str, model_to_string, save_model, ModelFileError};
pub use scaler::Scaler;
pub use sim::{default_signatures, generate_dataset, ChemicalSignature, EnvProfile, SimConfig};
pub use train::{
    gradient, init_weights, mean_squared_error, train, Gradients, TrainConfig, TrainError,
    TrainReport,
};
pub use wire::{parse_frame, serialize_frame, StreamEvent, StreamReader, WireFrame, WireParseError};
