use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Result, VortexError};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut e: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Eigenvalues of a general real matrix, sorted by (re, im).
///
/// Uses faer's Hessenberg QR, which (unlike nalgebra's Schur iteration) applies exceptional
/// shifts and does not stall on the nearly derogatory blocks produced by paired Fourier modes.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let ev = f.eigenvalues().map_err(|e| VortexError::Numeric(format!("eigenvalue iteration failed: {e:?}")))?;
    let mut e: Vec<Complex<f64>> = ev.into_iter().map(|z| Complex::new(z.re, z.im)).collect();
    e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(e)
}

/// sigma_min / sigma_max; 1 for an empty matrix, 0 for the zero matrix.
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator_has_imaginary_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let e = general_eigenvalues(&m).unwrap();
        assert!(e[0].re.abs() < 1e-15 && (e[0].im + 2.0).abs() < 1e-15);
        assert!((e[1].im - 2.0).abs() < 1e-15);
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(reciprocal_condition(&DMatrix::identity(3, 3)), 1.0);
        assert_eq!(reciprocal_condition(&DMatrix::zeros(2, 2)), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert!(reciprocal_condition(&m) < 1e-11);
        assert_eq!(symmetric_eigenvalues(&m), vec![1e-12, 1.0]);
    }
}
