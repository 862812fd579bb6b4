//! Central-difference gradient verification.

use super::{AutodiffError, ParamSet, Tensor};

/// Maximum elementwise relative error between two gradient sets:
/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn max_rel_error(analytic: &[Tensor], numeric: &[Tensor]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in analytic.iter().zip(numeric) {
        for (&x, &y) in a.data().iter().zip(b.data()) {
            let denom = x.abs().max(y.abs()).max(1e-8);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Compares analytic gradients against central differences
/// `(f(p + h e_i) - f(p - h e_i)) / 2h` over every parameter element and
/// returns the maximum relative error.
pub fn grad_check<F>(
    params: &mut ParamSet,
    analytic: &[Tensor],
    h: f64,
    mut loss: F,
) -> Result<f64, AutodiffError>
where
    F: FnMut(&ParamSet) -> Result<f64, AutodiffError>,
{
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    let mut numeric = Vec::with_capacity(names.len());
    for name in &names {
        let len = params.get(name).len();
        let mut grad = Tensor::zeros(params.get(name).dims());
        for i in 0..len {
            let original = params.get(name).data()[i];
            params.get_mut(name).data_mut()[i] = original + h;
            let plus = loss(params)?;
            params.get_mut(name).data_mut()[i] = original - h;
            let minus = loss(params)?;
            params.get_mut(name).data_mut()[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(AutodiffError::NonFinite(format!(
                    "loss while perturbing {name}[{i}]"
                )));
            }
            grad.data_mut()[i] = (plus - minus) / (2.0 * h);
        }
        numeric.push(grad);
    }
    Ok(max_rel_error(analytic, &numeric))
}
