//! Small dense helpers: exponentials of Hermitian matrices.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

/// `exp(−i H t)` for Hermitian `H`, via eigendecomposition (closed form for 2×2).
pub fn expm_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    if h.nrows() == 2 {
        let m = Matrix2::new(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
        let e = expm_hermitian_2x2(&m, t);
        return DMatrix::from_row_slice(2, 2, &[e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)]]);
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| Complex64::new(0.0, -l * t).exp());
    let mut scaled = v.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[k];
    }
    scaled * v.adjoint()
}

/// `exp(−i H t)` for `H = a₀ I + a·σ`.
pub fn expm_hermitian_2x2(h: &Matrix2<Complex64>, t: f64) -> Matrix2<Complex64> {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = h[(1, 0)]; // ax + i ay
    let r = (az * az + off.norm_sqr()).sqrt();
    let (s, c) = (r * t).sin_cos();
    let sinc = if r > 0.0 { s / r } else { t };
    let mi = Complex64::new(0.0, -1.0);
    let glob = Complex64::new(0.0, -a0 * t).exp();
    let d0 = Complex64::new(c, 0.0) + mi * az * sinc;
    let d1 = Complex64::new(c, 0.0) - mi * az * sinc;
    Matrix2::new(d0, mi * sinc * off.conj(), mi * sinc * off, d1) * glob
}

/// Real-symmetric eigendecomposition returning eigenvalues and orthogonal projectors.
pub fn spectral_projectors(h: &DMatrix<f64>) -> (Vec<f64>, Vec<DMatrix<Complex64>>) {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let projectors = (0..n)
        .map(|m| {
            let v = eig.eigenvectors.column(m);
            DMatrix::from_fn(n, n, |r, c| Complex64::new(v[r] * v[c], 0.0))
        })
        .collect();
    (eig.eigenvalues.iter().copied().collect(), projectors)
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}
