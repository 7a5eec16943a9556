use super::tensor::Tensor2D;
use crate::error::{Error, Result};

/// Row-wise argmax; ties resolve to the lowest index.
pub fn argmax_rows(logits: &Tensor2D) -> Vec<usize> {
    logits
        .iter_rows()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Mean softmax cross-entropy over the batch and its gradient w.r.t. the logits.
pub fn cross_entropy_with_grads(logits: &Tensor2D, labels: &[bool]) -> Result<(f64, Tensor2D)> {
    let b = logits.rows();
    if b == 0 {
        return Err(Error::EmptyBatch);
    }
    if labels.len() != b {
        return Err(Error::ShapeMismatch { expected: b, actual: labels.len() });
    }
    let inv_b = 1.0 / b as f64;
    let mut grad = Tensor2D::zeros(b, logits.cols());
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let target = usize::from(label);
        let top = argmax_rows(&Tensor2D::from_rows(&[row])?)[0];
        let m = row[top];
        // log-sum-exp as m + ln(1 + Σ_{k≠top} e^{x_k - m}) keeps tiny losses representable.
        let rest: f64 = row.iter().enumerate().filter(|&(k, _)| k != top).map(|(_, &v)| (v - m).exp()).sum();
        let lse = m + rest.ln_1p();
        total += lse - row[target];
        let g = grad.row_mut(r);
        for (k, gk) in g.iter_mut().enumerate() {
            let p = (row[k] - lse).exp();
            *gk = (p - if k == target { 1.0 } else { 0.0 }) * inv_b;
        }
    }
    Ok((total * inv_b, grad))
}
