use super::{ClientUpdate, FlError, ParameterVector};

/// Sample-count weighted average of client models: each update contributes
/// `sample_count / total_samples` of its parameter vector.
///
/// Errors on an empty list, mismatched shapes, or a zero total sample count.
pub fn fed_avg(updates: &[ClientUpdate]) -> Result<ParameterVector, FlError> {
    let first = updates.first().ok_or(FlError::EmptyUpdateList)?;
    let total: u64 = updates.iter().map(|u| u.sample_count).sum();
    if total == 0 {
        return Err(FlError::InvalidUpdate("total sample count is zero".into()));
    }
    let mut acc = vec![0.0; first.params.dim()];
    for u in updates {
        if !u.params.same_shape(&first.params) {
            return Err(FlError::DimensionMismatch {
                context: format!(
                    "update from {} is {}x{}, expected {}x{}",
                    u.client_id,
                    u.params.classes,
                    u.params.features,
                    first.params.classes,
                    first.params.features
                ),
            });
        }
        u.params.check_finite()?;
        let weight = u.sample_count as f64 / total as f64;
        for (a, v) in acc.iter_mut().zip(&u.params.values) {
            *a += weight * v;
        }
    }
    ParameterVector::from_values(first.params.features, first.params.classes, acc)
}
