use serde::{Deserialize, Serialize};

use super::FlError;

/// Flat parameter vector for the softmax model.
///
/// Layout for `classes` classes over `features` features: the weight row of
/// class `c` occupies `[c*features, (c+1)*features)` and the per-class biases
/// sit at the tail, `[classes*features + c]`. All entries must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub features: usize,
    pub classes: usize,
    pub values: Vec<f64>,
}

impl ParameterVector {
    pub fn zeros(features: usize, classes: usize) -> Self {
        Self { features, classes, values: vec![0.0; classes * features + classes] }
    }

    pub fn from_values(features: usize, classes: usize, values: Vec<f64>) -> Result<Self, FlError> {
        let expected = classes * features + classes;
        if values.len() != expected {
            return Err(FlError::DimensionMismatch {
                context: format!(
                    "parameter vector has {} entries, expected {} for {} classes x {} features",
                    values.len(),
                    expected,
                    classes,
                    features
                ),
            });
        }
        let pv = Self { features, classes, values };
        pv.check_finite()?;
        Ok(pv)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.values[class * self.features + feature]
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.values[self.classes * self.features + class]
    }

    pub fn check_finite(&self) -> Result<(), FlError> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(FlError::NonFinite { context: "parameter vector".into() })
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.features == other.features && self.classes == other.classes
    }

    /// Raw class scores (logits) for one input row.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.classes);
        for c in 0..self.classes {
            let row = &self.values[c * self.features..(c + 1) * self.features];
            let mut s = self.bias(c);
            for (w, xi) in row.iter().zip(x) {
                s += w * xi;
            }
            out.push(s);
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
