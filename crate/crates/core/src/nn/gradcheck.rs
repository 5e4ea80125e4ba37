//! Central finite-difference utilities for gradient verification.

use super::Tensor2;

/// Numerically differentiates `f` at `x` entry by entry with central
/// differences of the given step.
pub fn central_diff<F>(x: &Tensor2<f64>, step: f64, mut f: F) -> Tensor2<f64>
where
    F: FnMut(&Tensor2<f64>) -> f64,
{
    let mut grad = Tensor2::<f64>::zeros(x.dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let original = probe[idx];
        probe[idx] = original + step;
        let plus = f(&probe);
        probe[idx] = original - step;
        let minus = f(&probe);
        probe[idx] = original;
        grad[idx] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Worst relative disagreement between an analytic and a numeric gradient.
/// The denominator floor absorbs finite-difference noise on (near-)zero
/// entries.
pub fn max_rel_error(analytic: &Tensor2<f64>, numeric: &Tensor2<f64>) -> f64 {
    assert_eq!(analytic.dim(), numeric.dim());
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
