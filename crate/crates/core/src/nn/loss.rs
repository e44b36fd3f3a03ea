use super::tensor::{Matrix, Real};
use super::NnError;

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax<T: Real>(logits: &Matrix<T>) -> Matrix<T> {
    let mut probs = logits.clone();
    for r in 0..probs.rows() {
        let row = probs.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    probs
}

fn check_labels<T: Real>(logits: &Matrix<T>, labels: &[usize]) -> Result<(), NnError> {
    if labels.len() != logits.rows() {
        return Err(NnError::ShapeMismatch(format!(
            "{} labels for {} rows of logits",
            labels.len(),
            logits.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= logits.cols()) {
        return Err(NnError::LabelOutOfRange(bad));
    }
    Ok(())
}

/// Mean cross-entropy over the batch, computed with log-sum-exp so that
/// extreme logits neither overflow nor produce `-inf`.
pub fn softmax_xent_forward<T: Real>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>), NnError> {
    check_labels(logits, labels)?;
    let probs = softmax(logits);
    let mut total = T::zero();
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        total += lse - row[label];
    }
    let n = T::from_usize_lossy(labels.len().max(1));
    Ok((total / n, probs))
}

/// `(probs - onehot) / B`.
pub fn softmax_xent_backward<T: Real>(
    probs: &Matrix<T>,
    labels: &[usize],
) -> Result<Matrix<T>, NnError> {
    check_labels(probs, labels)?;
    let n = T::from_usize_lossy(labels.len().max(1));
    let mut g = probs.clone();
    for (r, &label) in labels.iter().enumerate() {
        let row = g.row_mut(r);
        row[label] -= T::one();
        for v in row.iter_mut() {
            *v = *v / n;
        }
    }
    Ok(g)
}
