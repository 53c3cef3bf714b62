use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::gradient_for_indices;
use super::{FlError, LocalDataset, ParameterVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub local_epochs: u32,
    pub batch_size: usize,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), FlError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(FlError::InvalidConfig(format!(
                "learning_rate must be finite and positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(FlError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch SGD from `start` over one client's data.
///
/// Each epoch shuffles the sample indices with a ChaCha8 generator seeded
/// from `seed` (one generator for the whole call, so later epochs continue
/// the stream) and then steps through consecutive batches, including a final
/// short batch when the count does not divide evenly. `local_epochs` of zero
/// returns `start` unchanged.
pub fn local_train(
    start: &ParameterVector,
    data: &LocalDataset,
    config: &TrainingConfig,
    seed: u64,
) -> Result<ParameterVector, FlError> {
    config.validate()?;
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    if start.features != data.features || start.classes != data.classes {
        return Err(FlError::DimensionMismatch {
            context: format!(
                "model is {}x{}, dataset is {}x{}",
                start.classes, start.features, data.classes, data.features
            ),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = start.clone();
    let mut indices: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.local_epochs {
        indices.shuffle(&mut rng);
        for batch in indices.chunks(config.batch_size) {
            let grad = gradient_for_indices(&params, data, batch);
            for (w, g) in params.values.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
    }
    params.check_finite()?;
    Ok(params)
}
