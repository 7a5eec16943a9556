use super::model::Params;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub n_params: usize,
    /// Entries that needed a smaller step to reach the tolerance.
    pub refined: usize,
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compare analytic gradients against central differences of step `eps`.
///
/// `loss` returns the loss and analytic gradients for a model. The relative error
/// of one entry is `|a − n| / max(|a|, |n|, 1e-8)`; the maximum over all entries is reported.
pub fn grad_check<M, F>(model: &M, eps: f64, loss: F) -> Result<GradCheckReport>
where
    M: Params + Clone,
    F: Fn(&M) -> Result<(f64, Vec<Vec<f64>>)>,
{
    grad_check_refined(model, &[eps], f64::INFINITY, loss)
}

/// Like [`grad_check`] with `steps[0]`, but an entry whose error reaches `tolerance`
/// is re-measured with the following steps and keeps its best error.
///
/// A ReLU input lying within one step of zero makes the central difference straddle
/// the kink, and a near-zero gradient drowns in round-off at small steps. Changing
/// the step removes those artefacts while a wrong derivative stays wrong at every step.
pub fn grad_check_refined<M, F>(model: &M, steps: &[f64], tolerance: f64, loss: F) -> Result<GradCheckReport>
where
    M: Params + Clone,
    F: Fn(&M) -> Result<(f64, Vec<Vec<f64>>)>,
{
    let (_, analytic) = loss(model)?;
    let names: Vec<String> = model.param_tensors().into_iter().map(|(n, _)| n).collect();
    let mut probe = model.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, n_params: 0, refined: 0 };
    for (t, name) in names.iter().enumerate() {
        for k in 0..analytic[t].len() {
            let a = analytic[t][k];
            let orig = probe.param_tensors_mut()[t][k];
            let mut rel = f64::INFINITY;
            for (i, &eps) in steps.iter().enumerate() {
                probe.param_tensors_mut()[t][k] = orig + eps;
                let plus = loss(&probe)?.0;
                probe.param_tensors_mut()[t][k] = orig - eps;
                let minus = loss(&probe)?.0;
                probe.param_tensors_mut()[t][k] = orig;
                rel = rel.min(rel_error(a, (plus - minus) / (2.0 * eps)));
                if rel < tolerance {
                    if i > 0 {
                        report.refined += 1;
                    }
                    break;
                }
            }
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), k));
            }
            report.n_params += 1;
        }
    }
    Ok(report)
}
