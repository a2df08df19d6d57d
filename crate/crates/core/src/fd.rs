//! Central finite differences, the cross-check for every analytic derivative.

use nalgebra::DMatrix;

pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let fp = f(&p);
            p[i] = x[i] - h;
            let fm = f(&p);
            p[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Jacobian of `grad` by central differences, symmetrized.
pub fn central_hessian<G: Fn(&[f64]) -> Vec<f64>>(grad: G, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for j in 0..n {
        p[j] = x[j] + h;
        let gp = grad(&p);
        p[j] = x[j] - h;
        let gm = grad(&p);
        p[j] = x[j];
        for i in 0..n {
            m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    (&m + m.transpose()) * 0.5
}

/// Largest |a - b| / max(|a|, |b|, 1) over paired entries.
///
/// The unit floor makes entries that should vanish (e.g. a gradient at a critical
/// point) be measured absolutely.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Compares an analytic gradient with central differences of `f` at `point`.
pub fn finite_difference_check<F, G>(f: F, grad: G, point: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let analytic = grad(point);
    let numeric = central_gradient(f, point, step);
    max_relative_error(&analytic, &numeric)
}

/// Compares an analytic Hessian with central differences of the analytic gradient.
pub fn finite_difference_check_hessian<G, H>(grad: G, hess: H, point: &[f64], step: f64) -> f64
where
    G: Fn(&[f64]) -> Vec<f64>,
    H: Fn(&[f64]) -> DMatrix<f64>,
{
    let analytic = hess(point);
    let numeric = central_hessian(grad, point, step);
    max_relative_error(analytic.as_slice(), numeric.as_slice())
}
