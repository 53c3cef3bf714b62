use serde::{Deserialize, Serialize};

use super::FlError;

pub type ClientId = String;

/// A labelled dataset held by one client. Rows of `xs` are feature vectors,
/// `ys` are class indices in `[0, classes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDataset {
    pub features: usize,
    pub classes: usize,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<usize>,
}

impl LocalDataset {
    pub fn new(
        features: usize,
        classes: usize,
        xs: Vec<Vec<f64>>,
        ys: Vec<usize>,
    ) -> Result<Self, FlError> {
        if xs.len() != ys.len() {
            return Err(FlError::DimensionMismatch {
                context: format!("{} feature rows vs {} labels", xs.len(), ys.len()),
            });
        }
        for row in &xs {
            if row.len() != features {
                return Err(FlError::DimensionMismatch {
                    context: format!("feature row has {} entries, expected {}", row.len(), features),
                });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(FlError::NonFinite { context: "feature row".into() });
            }
        }
        for &y in &ys {
            if y >= classes {
                return Err(FlError::LabelOutOfRange { label: y, classes });
            }
        }
        Ok(Self { features, classes, xs, ys })
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_row_label_count_mismatch() {
        let err = LocalDataset::new(1, 2, vec![vec![1.0]], vec![0, 1]).unwrap_err();
        assert!(matches!(err, FlError::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_out_of_range_label() {
        let err = LocalDataset::new(1, 2, vec![vec![1.0]], vec![2]).unwrap_err();
        assert!(matches!(err, FlError::LabelOutOfRange { label: 2, classes: 2 }));
    }

    #[test]
    fn rejects_bad_row_width() {
        let err = LocalDataset::new(2, 2, vec![vec![1.0]], vec![0]).unwrap_err();
        assert!(matches!(err, FlError::DimensionMismatch { .. }));
    }

    #[test]
    fn accepts_well_formed() {
        let ds = LocalDataset::new(2, 3, vec![vec![1.0, 2.0], vec![0.5, -1.0]], vec![0, 2]).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(!ds.is_empty());
    }
}
