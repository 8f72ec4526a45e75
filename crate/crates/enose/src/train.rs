//! Online backpropagation with momentum.
//!
//! The loss is the per-sample squared error E = Σ (o - t)² / 2 against hard
//! one-hot targets. Every epoch visits each sample once in a seeded shuffled
//! order and applies
//!
//! ```text
//! Δw(t) = -η ∂E/∂w + α Δw(t-1)
//! ```
//!
//! immediately, with velocities starting at zero. Everything is driven by a
//! single seed — weight init, epoch shuffling, and the train/test split each
//! use their own stream of one ChaCha generator — so the same seed, dataset,
//! and configuration reproduce a bit-identical network.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::{encode_one_hot, ChemicalClass, Dataset, CHANNEL_COUNT};
use crate::network::{Network, NetworkConfig, NetworkError};
use crate::scaler::Scaler;

// Stream ids carving independent generators out of one seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
pub(crate) const STREAM_SPLIT: u64 = 2;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("table-mode networks are inference-only; train with exact activation")]
    TableMode,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("target has {got} values, network has {expected} outputs")]
    TargetSize { expected: usize, got: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Training hyperparameters. The defaults are the reference settings:
/// learning rate 0.01, momentum 0.9, 1000 epochs, uniform init on
/// [-0.5, 0.5].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_half_range: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 1000,
            seed: 7,
            init_half_range: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(TrainError::InvalidConfig("learning_rate must be > 0"));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(TrainError::InvalidConfig("momentum must lie in [0, 1)"));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1"));
        }
        if !self.init_half_range.is_finite() || self.init_half_range < 0.0 {
            return Err(TrainError::InvalidConfig(
                "init_half_range must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Per-epoch mean squared error, averaged over every output of every
/// sample, recorded after each epoch's updates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub mse_history: Vec<f64>,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.mse_history.len()
    }

    pub fn final_mse(&self) -> f64 {
        self.mse_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Gradients of the per-sample squared error, one slot per weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    fn zeroed_like(net: &Network) -> Gradients {
        Gradients {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
        }
    }
}

/// Draw every weight and bias i.i.d. uniform on
/// [-init_half_range, +init_half_range], in the fixed order w1, b1, w2, b2.
/// The same seed always produces the same network.
pub fn init_weights(config: &NetworkConfig, train: &TrainConfig) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    rng.set_stream(STREAM_INIT);
    let r = train.init_half_range;
    let mut net = Network::zeroed(config.clone());
    if r > 0.0 {
        for w in net
            .w1
            .iter_mut()
            .chain(&mut net.b1)
            .chain(&mut net.w2)
            .chain(&mut net.b2)
        {
            *w = rng.random_range(-r..=r);
        }
    }
    net
}

/// Gradients of E = Σ (o - t)² / 2 for one sample, by backpropagation
/// through the two sigmoid layers with σ'(a) = σ(a)(1 - σ(a)).
pub fn gradient(network: &Network, input: &[f64], target: &[f64]) -> Result<Gradients, TrainError> {
    if !network.config.activation.is_exact() {
        return Err(TrainError::TableMode);
    }
    if input.len() != network.config.input_size {
        return Err(NetworkError::InputSize {
            expected: network.config.input_size,
            got: input.len(),
        }
        .into());
    }
    if target.len() != network.config.output_size {
        return Err(TrainError::TargetSize {
            expected: network.config.output_size,
            got: target.len(),
        });
    }
    Ok(backprop(network, input, target))
}

fn backprop(net: &Network, x: &[f64], t: &[f64]) -> Gradients {
    let pass = net.forward_unchecked(x);
    let (i, z, o) = (
        net.config.input_size,
        net.config.hidden_size,
        net.config.output_size,
    );
    let mut g = Gradients::zeroed_like(net);
    let mut delta2 = vec![0.0; o];
    for k in 0..o {
        let out = pass.output[k];
        delta2[k] = (out - t[k]) * out * (1.0 - out);
        g.b2[k] = delta2[k];
        for j in 0..z {
            g.w2[k * z + j] = delta2[k] * pass.hidden[j];
        }
    }
    for j in 0..z {
        let mut back = 0.0;
        for k in 0..o {
            back += delta2[k] * net.w2[k * z + j];
        }
        let delta1 = back * pass.hidden[j] * (1.0 - pass.hidden[j]);
        g.b1[j] = delta1;
        for c in 0..i {
            g.w1[j * i + c] = delta1 * x[c];
        }
    }
    g
}

fn momentum_step(weights: &mut [f64], velocity: &mut [f64], grads: &[f64], lr: f64, alpha: f64) {
    for n in 0..weights.len() {
        velocity[n] = -lr * grads[n] + alpha * velocity[n];
        weights[n] += velocity[n];
    }
}

/// Train a 7-Z-5 network on a labeled dataset.
///
/// Inputs are normalized through the scaler, targets are hard one-hot
/// vectors. The report holds the dataset MSE after every epoch; a non-finite
/// MSE aborts with [`TrainError::Diverged`] and the epoch index.
pub fn train(
    mut network: Network,
    dataset: &Dataset,
    scaler: &Scaler,
    config: &TrainConfig,
) -> Result<(Network, TrainReport), TrainError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if !network.config.activation.is_exact() {
        return Err(TrainError::TableMode);
    }
    if network.config.input_size != CHANNEL_COUNT {
        return Err(NetworkError::InputSize {
            expected: network.config.input_size,
            got: CHANNEL_COUNT,
        }
        .into());
    }
    if network.config.output_size != ChemicalClass::COUNT {
        return Err(TrainError::TargetSize {
            expected: network.config.output_size,
            got: ChemicalClass::COUNT,
        });
    }

    let inputs: Vec<[f64; CHANNEL_COUNT]> = dataset
        .samples
        .iter()
        .map(|s| scaler.apply(&s.frame))
        .collect();
    let targets: Vec<[f64; ChemicalClass::COUNT]> = dataset
        .samples
        .iter()
        .map(|s| encode_one_hot(s.label))
        .collect();

    let mut velocity = Gradients::zeroed_like(&network);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        for (slot, index) in order.iter_mut().enumerate() {
            *index = slot;
        }
        order.shuffle(&mut rng);
        for &s in &order {
            let g = backprop(&network, &inputs[s], &targets[s]);
            momentum_step(
                &mut network.w1,
                &mut velocity.w1,
                &g.w1,
                config.learning_rate,
                config.momentum,
            );
            momentum_step(
                &mut network.b1,
                &mut velocity.b1,
                &g.b1,
                config.learning_rate,
                config.momentum,
            );
            momentum_step(
                &mut network.w2,
                &mut velocity.w2,
                &g.w2,
                config.learning_rate,
                config.momentum,
            );
            momentum_step(
                &mut network.b2,
                &mut velocity.b2,
                &g.b2,
                config.learning_rate,
                config.momentum,
            );
        }
        let mse = mse_normalized(&network, &inputs, &targets);
        if !mse.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        history.push(mse);
    }
    Ok((
        network,
        TrainReport {
            mse_history: history,
        },
    ))
}

fn mse_normalized(
    net: &Network,
    inputs: &[[f64; CHANNEL_COUNT]],
    targets: &[[f64; ChemicalClass::COUNT]],
) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (x, t) in inputs.iter().zip(targets) {
        let pass = net.forward_unchecked(x);
        for k in 0..t.len() {
            let d = pass.output[k] - t[k];
            sum += d * d;
            count += 1;
        }
    }
    sum / count as f64
}

/// Dataset MSE of a network, averaged over every output of every sample.
pub fn mean_squared_error(
    network: &Network,
    dataset: &Dataset,
    scaler: &Scaler,
) -> Result<f64, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let inputs: Vec<[f64; CHANNEL_COUNT]> = dataset
        .samples
        .iter()
        .map(|s| scaler.apply(&s.frame))
        .collect();
    let targets: Vec<[f64; ChemicalClass::COUNT]> = dataset
        .samples
        .iter()
        .map(|s| encode_one_hot(s.label))
        .collect();
    if network.config.input_size != CHANNEL_COUNT
        || network.config.output_size != ChemicalClass::COUNT
    {
        return Err(NetworkError::InputSize {
            expected: network.config.input_size,
            got: CHANNEL_COUNT,
        }
        .into());
    }
    Ok(mse_normalized(network, &inputs, &targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledSample, SensorFrame};
    use crate::network::ActivationMode;
    use crate::activation::SigmoidTable;

    fn toy_dataset() -> Dataset {
        // XOR on the first two channels, embedded in the 7-channel frame;
        // classes None and Acetone.
        let rows = [
            ([0.0, 0.0], ChemicalClass::None),
            ([0.0, 1.0], ChemicalClass::Acetone),
            ([1.0, 0.0], ChemicalClass::Acetone),
            ([1.0, 1.0], ChemicalClass::None),
        ];
        let samples = rows
            .iter()
            .map(|(xy, label)| LabeledSample {
                frame: SensorFrame::new([xy[0], xy[1], 0.5, 0.5, 0.5, 50.0, 25.0]).unwrap(),
                label: *label,
            })
            .collect();
        Dataset::new(samples, "xor toy")
    }

    fn unit_scaler() -> Scaler {
        let mut max = [1.0; CHANNEL_COUNT];
        max[5] = 100.0;
        max[6] = 50.0;
        Scaler::from_bounds([0.0; CHANNEL_COUNT], max).unwrap()
    }

    #[test]
    fn same_seed_gives_identical_weights() {
        let config = NetworkConfig::new(3).unwrap();
        let train_config = TrainConfig::default();
        let a = init_weights(&config, &train_config);
        let b = init_weights(&config, &train_config);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_init_range_gives_zero_network() {
        let config = NetworkConfig::new(3).unwrap();
        let train_config = TrainConfig {
            init_half_range: 0.0,
            ..TrainConfig::default()
        };
        let net = init_weights(&config, &train_config);
        assert!(net.w1.iter().all(|w| *w == 0.0));
        assert!(net.b2.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn distinct_seeds_differ_somewhere() {
        let config = NetworkConfig::new(3).unwrap();
        let a = init_weights(
            &config,
            &TrainConfig {
                seed: 1,
                ..TrainConfig::default()
            },
        );
        let b = init_weights(
            &config,
            &TrainConfig {
                seed: 2,
                ..TrainConfig::default()
            },
        );
        assert!(a.w1.iter().zip(&b.w1).any(|(x, y)| x != y));
    }

    #[test]
    fn init_draws_stay_in_range() {
        let config = NetworkConfig::new(10).unwrap();
        let net = init_weights(&config, &TrainConfig::default());
        for w in net.w1.iter().chain(&net.b1).chain(&net.w2).chain(&net.b2) {
            assert!(w.abs() <= 0.5);
        }
    }

    #[test]
    fn gradient_is_zero_when_target_equals_output() {
        let config = NetworkConfig::new(3).unwrap();
        let net = init_weights(&config, &TrainConfig::default());
        let x = [0.3, 0.7, 0.1, 0.9, 0.5, 0.2, 0.8];
        let pass = net.forward(&x).unwrap();
        let g = gradient(&net, &x, &pass.output).unwrap();
        assert!(g.w1.iter().all(|v| *v == 0.0));
        assert!(g.b1.iter().all(|v| *v == 0.0));
        assert!(g.w2.iter().all(|v| *v == 0.0));
        assert!(g.b2.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn output_bias_gradient_has_closed_form() {
        let config = NetworkConfig::new(4).unwrap();
        let net = init_weights(
            &config,
            &TrainConfig {
                seed: 99,
                ..TrainConfig::default()
            },
        );
        let x = [0.1, 0.9, 0.4, 0.6, 0.2, 0.3, 0.7];
        let t = encode_one_hot(ChemicalClass::FloorCleaner);
        let pass = net.forward(&x).unwrap();
        let g = gradient(&net, &x, &t).unwrap();
        for k in 0..5 {
            let o = pass.output[k];
            let expected = (o - t[k]) * o * (1.0 - o);
            assert_eq!(g.b2[k], expected);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // quick per-module check; the acceptance suite runs the full sweep
        let config = NetworkConfig::new(3).unwrap();
        let mut net = init_weights(
            &config,
            &TrainConfig {
                seed: 5,
                ..TrainConfig::default()
            },
        );
        let x = [0.2, 0.8, 0.5, 0.1, 0.9, 0.4, 0.6];
        let t = encode_one_hot(ChemicalClass::LighterGas);
        let g = gradient(&net, &x, &t).unwrap();
        let h = 1e-5;
        let loss = |n: &Network| -> f64 {
            let p = n.forward(&x).unwrap();
            p.output
                .iter()
                .zip(&t)
                .map(|(o, t)| (o - t) * (o - t))
                .sum::<f64>()
                / 2.0
        };
        for n in 0..net.w1.len() {
            let orig = net.w1[n];
            net.w1[n] = orig + h;
            let up = loss(&net);
            net.w1[n] = orig - h;
            let down = loss(&net);
            net.w1[n] = orig;
            let fd = (up - down) / (2.0 * h);
            let denom = g.w1[n].abs().max(fd.abs()).max(1e-5);
            assert!(
                ((g.w1[n] - fd) / denom).abs() < 1e-4,
                "w1[{n}]: analytic {} vs fd {fd}",
                g.w1[n]
            );
        }
    }

    #[test]
    fn gradient_rejects_table_mode() {
        let table = SigmoidTable::new(-8.0, 8.0, 64).unwrap();
        let config = NetworkConfig::new(3)
            .unwrap()
            .with_activation(ActivationMode::Table(table));
        let net = Network::zeroed(config);
        assert!(matches!(
            gradient(&net, &[0.0; 7], &[0.0; 5]).unwrap_err(),
            TrainError::TableMode
        ));
        let scaler = unit_scaler();
        assert!(matches!(
            train(net, &toy_dataset(), &scaler, &TrainConfig::default()).unwrap_err(),
            TrainError::TableMode
        ));
    }

    #[test]
    fn momentum_zero_reduces_to_plain_gradient_descent() {
        // independent no-momentum reference on a fixed toy problem
        let dataset = toy_dataset();
        let scaler = unit_scaler();
        let config = TrainConfig {
            learning_rate: 0.5,
            momentum: 0.0,
            epochs: 20,
            seed: 13,
            init_half_range: 0.5,
        };
        let net_config = NetworkConfig::new(3).unwrap();
        let start = init_weights(&net_config, &config);
        let (trained, _) = train(start.clone(), &dataset, &scaler, &config).unwrap();

        // replay the same visiting order with w -= lr * grad
        let mut reference = start;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(STREAM_SHUFFLE);
        let inputs: Vec<[f64; 7]> = dataset.samples.iter().map(|s| scaler.apply(&s.frame)).collect();
        let targets: Vec<[f64; 5]> = dataset
            .samples
            .iter()
            .map(|s| encode_one_hot(s.label))
            .collect();
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        for _ in 0..config.epochs {
            for (slot, index) in order.iter_mut().enumerate() {
                *index = slot;
            }
            order.shuffle(&mut rng);
            for &s in &order {
                let g = backprop(&reference, &inputs[s], &targets[s]);
                for (w, gv) in reference.w1.iter_mut().zip(&g.w1) {
                    *w += -config.learning_rate * *gv;
                }
                for (w, gv) in reference.b1.iter_mut().zip(&g.b1) {
                    *w += -config.learning_rate * *gv;
                }
                for (w, gv) in reference.w2.iter_mut().zip(&g.w2) {
                    *w += -config.learning_rate * *gv;
                }
                for (w, gv) in reference.b2.iter_mut().zip(&g.b2) {
                    *w += -config.learning_rate * *gv;
                }
            }
        }
        for (a, b) in trained.w1.iter().zip(&reference.w1) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in trained.b2.iter().zip(&reference.b2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_toy_problem_converges() {
        let dataset = toy_dataset();
        let scaler = unit_scaler();
        let config = TrainConfig {
            learning_rate: 0.5,
            momentum: 0.9,
            epochs: 1000,
            seed: 7,
            init_half_range: 0.5,
        };
        let net = init_weights(&NetworkConfig::new(3).unwrap(), &config);
        let (_, report) = train(net, &dataset, &scaler, &config).unwrap();
        assert_eq!(report.epochs_run(), 1000);
        assert!(
            report.final_mse() < 0.01,
            "final mse {}",
            report.final_mse()
        );
    }

    #[test]
    fn training_is_deterministic() {
        let dataset = toy_dataset();
        let scaler = unit_scaler();
        let config = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let run = || {
            let net = init_weights(&NetworkConfig::new(3).unwrap(), &config);
            train(net, &dataset, &scaler, &config).unwrap()
        };
        let (net_a, report_a) = run();
        let (net_b, report_b) = run();
        assert_eq!(net_a, net_b);
        assert_eq!(report_a.mse_history, report_b.mse_history);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let config = TrainConfig::default();
        let net = init_weights(&NetworkConfig::new(3).unwrap(), &config);
        let scaler = unit_scaler();
        let empty = Dataset::new(vec![], "");
        assert!(matches!(
            train(net, &empty, &scaler, &config).unwrap_err(),
            TrainError::EmptyDataset
        ));
    }

    #[test]
    fn nan_weights_abort_with_epoch_index() {
        let dataset = toy_dataset();
        let scaler = unit_scaler();
        let config = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let mut net = init_weights(&NetworkConfig::new(3).unwrap(), &config);
        net.w1[0] = f64::NAN;
        match train(net, &dataset, &scaler, &config).unwrap_err() {
            TrainError::Diverged { epoch } => assert_eq!(epoch, 0),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            momentum: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
