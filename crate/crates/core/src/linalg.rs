//! Small dense linear-algebra helpers for 2×2 and 4×4 complex matrices.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Kronecker product of two single-photon operators.
pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn to_dynamic4(m: &Matrix4<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

pub fn to_dynamic2(m: &Matrix2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}

/// Largest absolute deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigen(m).0.iter().copied().collect()
}

/// Rebuild `V f(Λ) V†` from an eigen-decomposition.
pub fn spectral_map(values: &DVector<f64>, vectors: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let n = values.len();
    let mut scaled = vectors.clone();
    for c in 0..n {
        let fc = f(values[c]);
        for r in 0..n {
            scaled[(r, c)] *= fc;
        }
    }
    scaled * vectors.adjoint()
}

/// Principal square root of a positive semi-definite Hermitian matrix; tiny
/// negative eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(m);
    spectral_map(&values, &vectors, |x| x.max(0.0).sqrt())
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular values of a 2×2 complex matrix, largest first.
pub fn singular_values2(m: &Matrix2<C64>) -> [f64; 2] {
    // eigenvalues of m† m in closed form
    let g = m.adjoint() * m;
    let a = g[(0, 0)].re;
    let d = g[(1, 1)].re;
    let b = g[(0, 1)].norm_sqr();
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b).sqrt();
    [(mean + disc).max(0.0).sqrt(), (mean - disc).max(0.0).sqrt()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron2(&Matrix2::identity(), &Matrix2::identity());
        assert_eq!(k, Matrix4::identity());
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        let back = spectral_map(&vals, &vecs, |x| x);
        assert!(frobenius(&(back - m)) < 1e-13);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = Matrix2::new(C64::new(0.5, 0.0), ZERO, ZERO, C64::new(0.0, -2.0));
        let s = singular_values2(&m);
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[1] - 0.5).abs() < 1e-14);
    }
}
