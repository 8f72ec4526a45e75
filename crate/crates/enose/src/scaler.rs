//! Per-channel min-max normalization.
//!
//! Raw MOS responses sit in the tens-to-hundreds range; fed directly into
//! log-sigmoid units they would saturate the first layer. The scaler maps
//! each channel into [0, 1] using bounds fitted on the training data.

use crate::data::{DataError, Dataset, SensorFrame, CHANNEL_COUNT};

/// Per-channel min/max bounds.
///
/// `apply` maps a channel value x through (x - min) / (max - min) and clamps
/// to [0, 1]. A constant channel (max == min) maps to 0.5, keeping the output
/// in range instead of dividing by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    min: [f64; CHANNEL_COUNT],
    max: [f64; CHANNEL_COUNT],
}

impl Scaler {
    /// Scan a dataset for per-channel extrema.
    pub fn fit(dataset: &Dataset) -> Result<Scaler, DataError> {
        if dataset.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut min = [f64::INFINITY; CHANNEL_COUNT];
        let mut max = [f64::NEG_INFINITY; CHANNEL_COUNT];
        for sample in &dataset.samples {
            for (c, &v) in sample.frame.channels().iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Ok(Scaler { min, max })
    }

    /// Rebuild a scaler from stored bounds, checking finite min <= max.
    pub fn from_bounds(
        min: [f64; CHANNEL_COUNT],
        max: [f64; CHANNEL_COUNT],
    ) -> Result<Scaler, DataError> {
        for c in 0..CHANNEL_COUNT {
            if !min[c].is_finite() || !max[c].is_finite() || min[c] > max[c] {
                return Err(DataError::BadScalerBounds { channel: c });
            }
        }
        Ok(Scaler { min, max })
    }

    pub fn min(&self) -> &[f64; CHANNEL_COUNT] {
        &self.min
    }

    pub fn max(&self) -> &[f64; CHANNEL_COUNT] {
        &self.max
    }

    /// Normalize a frame into [0, 1]^7.
    pub fn apply(&self, frame: &SensorFrame) -> [f64; CHANNEL_COUNT] {
        let mut out = [0.0; CHANNEL_COUNT];
        for (c, &v) in frame.channels().iter().enumerate() {
            out[c] = if self.max[c] > self.min[c] {
                ((v - self.min[c]) / (self.max[c] - self.min[c])).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ChemicalClass, LabeledSample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(values: [f64; 7]) -> LabeledSample {
        LabeledSample {
            frame: SensorFrame::new(values).unwrap(),
            label: ChemicalClass::None,
        }
    }

    #[test]
    fn fit_rejects_empty_dataset() {
        let empty = Dataset::new(vec![], "");
        assert!(matches!(
            Scaler::fit(&empty).unwrap_err(),
            DataError::EmptyDataset
        ));
    }

    #[test]
    fn single_sample_gives_min_equal_max() {
        let data = Dataset::new(vec![sample([3.0, 1.0, 4.0, 1.0, 5.0, 50.0, 25.0])], "");
        let scaler = Scaler::fit(&data).unwrap();
        assert_eq!(scaler.min(), scaler.max());
        assert_eq!(scaler.min()[0], 3.0);
        // every channel is constant, so everything maps to the midpoint
        assert_eq!(scaler.apply(&data.samples[0].frame), [0.5; 7]);
    }

    #[test]
    fn two_samples_span_the_range() {
        let data = Dataset::new(vec![sample([0.0; 7]), sample([10.0; 7])], "");
        let scaler = Scaler::fit(&data).unwrap();
        assert_eq!(*scaler.min(), [0.0; 7]);
        assert_eq!(*scaler.max(), [10.0; 7]);
        assert_eq!(scaler.apply(&data.samples[0].frame), [0.0; 7]);
        assert_eq!(scaler.apply(&data.samples[1].frame), [1.0; 7]);
        let mid = SensorFrame::new([5.0; 7]).unwrap();
        assert_eq!(scaler.apply(&mid), [0.5; 7]);
    }

    #[test]
    fn fit_matches_brute_force_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples: Vec<LabeledSample> = (0..100)
            .map(|_| {
                let mut values = [0.0; 7];
                for v in &mut values {
                    *v = rng.random_range(-50.0..150.0);
                }
                sample(values)
            })
            .collect();
        let data = Dataset::new(samples, "");
        let scaler = Scaler::fit(&data).unwrap();
        // independent oracle: plain linear scan per channel
        for c in 0..CHANNEL_COUNT {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &data.samples {
                let v = s.frame.channels()[c];
                if v < lo {
                    lo = v;
                }
                if v > hi {
                    hi = v;
                }
            }
            assert_eq!(scaler.min()[c], lo);
            assert_eq!(scaler.max()[c], hi);
        }
    }

    #[test]
    fn out_of_range_values_clamp() {
        let data = Dataset::new(vec![sample([0.0; 7]), sample([10.0; 7])], "");
        let scaler = Scaler::fit(&data).unwrap();
        let wild = SensorFrame::new([-5.0, 20.0, 10.0, 0.0, 5.0, 100.0, -40.0]).unwrap();
        let out = scaler.apply(&wild);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 1.0);
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn from_bounds_validates() {
        assert!(Scaler::from_bounds([0.0; 7], [1.0; 7]).is_ok());
        let mut bad_max = [1.0; 7];
        bad_max[3] = -1.0;
        assert!(matches!(
            Scaler::from_bounds([0.0; 7], bad_max).unwrap_err(),
            DataError::BadScalerBounds { channel: 3 }
        ));
    }
}
