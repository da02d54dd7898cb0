use super::{GradStore, ParamId, ParamSet};

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter name and flat entry index of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

/// Perturbs every parameter entry by `±eps` and compares
/// `(f(p+eps) - f(p-eps)) / 2eps` against the analytic gradient returned by
/// `f` at the unperturbed point. The per-entry error is
/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn finite_difference_check<F, E>(params: &ParamSet, eps: f64, mut f: F) -> Result<GradCheck, E>
where
    F: FnMut(&ParamSet) -> Result<(f64, GradStore), E>,
{
    assert!(eps > 0.0, "eps must be positive");
    let (_, analytic) = f(params)?;
    let mut probe = params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    for id in params.ids() {
        for k in 0..params.get(id).len() {
            let original = params.get(id).data()[k];
            set(&mut probe, id, k, original + eps);
            let (plus, _) = f(&probe)?;
            set(&mut probe, id, k, original - eps);
            let (minus, _) = f(&probe)?;
            set(&mut probe, id, k, original);

            let numeric = (plus - minus) / (2.0 * eps);
            let exact = analytic.get(id).data()[k];
            let rel = (exact - numeric).abs() / (exact.abs() + numeric.abs()).max(1e-8);
            report.entries_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((params.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}

fn set(params: &mut ParamSet, id: ParamId, k: usize, v: f64) {
    params.get_mut(id).data_mut()[k] = v;
}
