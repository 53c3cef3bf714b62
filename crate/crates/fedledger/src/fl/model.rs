use super::{FlError, LocalDataset, ParameterVector};

fn check_shapes(params: &ParameterVector, data: &LocalDataset) -> Result<(), FlError> {
    if params.features != data.features || params.classes != data.classes {
        return Err(FlError::DimensionMismatch {
            context: format!(
                "model is {}x{}, dataset is {}x{}",
                params.classes, params.features, data.classes, data.features
            ),
        });
    }
    Ok(())
}

/// log(sum(exp(s))) computed against the max score so large logits do not
/// overflow.
fn log_sum_exp(scores: &[f64]) -> f64 {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - m).exp()).sum();
    m + sum.ln()
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean cross-entropy of the model over one client's dataset.
pub fn client_loss(params: &ParameterVector, data: &LocalDataset) -> Result<f64, FlError> {
    check_shapes(params, data)?;
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let mut total = 0.0;
    for (x, &y) in data.xs.iter().zip(&data.ys) {
        let scores = params.logits(x);
        total += log_sum_exp(&scores) - scores[y];
    }
    let loss = total / data.len() as f64;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(FlError::NonFinite { context: "loss".into() })
    }
}

/// Sample-weighted average of the per-client losses: each client contributes
/// in proportion to its share of the total sample count.
pub fn global_loss(params: &ParameterVector, datasets: &[LocalDataset]) -> Result<f64, FlError> {
    let total_samples: u64 = datasets.iter().map(|d| d.len() as u64).sum();
    if total_samples == 0 {
        return Err(FlError::EmptyDataset);
    }
    let mut acc = 0.0;
    for data in datasets {
        if data.is_empty() {
            continue;
        }
        let weight = data.len() as f64 / total_samples as f64;
        acc += weight * client_loss(params, data)?;
    }
    Ok(acc)
}

/// Classification accuracy: fraction of samples whose argmax score matches
/// the label. Ties resolve to the lowest class index.
pub fn evaluate(params: &ParameterVector, data: &LocalDataset) -> Result<f64, FlError> {
    check_shapes(params, data)?;
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let mut correct = 0usize;
    for (x, &y) in data.xs.iter().zip(&data.ys) {
        let scores = params.logits(x);
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        if best == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mean gradient over the samples selected by `indices`. Shapes must already
/// be checked and `indices` must be non-empty.
pub(super) fn gradient_for_indices(
    params: &ParameterVector,
    data: &LocalDataset,
    indices: &[usize],
) -> Vec<f64> {
    let mut grad = vec![0.0; params.dim()];
    for &i in indices {
        let x = &data.xs[i];
        let y = data.ys[i];
        let probs = softmax(&params.logits(x));
        for c in 0..params.classes {
            let err = probs[c] - if c == y { 1.0 } else { 0.0 };
            let row = c * params.features;
            for (j, &xj) in x.iter().enumerate() {
                grad[row + j] += err * xj;
            }
            grad[params.classes * params.features + c] += err;
        }
    }
    let n = indices.len() as f64;
    for g in &mut grad {
        *g /= n;
    }
    grad
}

/// Gradient of the mean cross-entropy with respect to the flat parameter
/// vector, in the same layout as [`ParameterVector::values`].
pub fn cross_entropy_gradient(
    params: &ParameterVector,
    data: &LocalDataset,
) -> Result<Vec<f64>, FlError> {
    check_shapes(params, data)?;
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let grad = gradient_for_indices(params, data, &all);
    if grad.iter().all(|g| g.is_finite()) {
        Ok(grad)
    } else {
        Err(FlError::NonFinite { context: "gradient".into() })
    }
}
