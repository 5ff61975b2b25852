//! Identifiability of a Mueller matrix from a set of input tensors.
//!
//! `M` and `M O` produce identical outputs whenever `O K_p Oᵀ = K_p` for every
//! input `K_p`. The tangent space of that group is the null space of
//! `X ↦ (X K_p + K_p Xᵀ)_p`, computed here by SVD.

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::polarization::CorrelationTensor;

/// Relative singular-value cutoff for the null space.
pub const NULL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub n_inputs: usize,
    pub lie_algebra_dim: usize,
    pub identifiable: bool,
    /// Singular values of the linearized map, descending.
    pub singular_values: Vec<f64>,
}

fn linear_map(inputs: &[CorrelationTensor]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(16 * inputs.len(), 16);
    for (p, k) in inputs.iter().enumerate() {
        let k = &k.0;
        for col in 0..16 {
            let (a_, b) = (col / 4, col % 4);
            // ∂(X K + K Xᵀ)_ij / ∂X_ab = δ_ia K_bj + K_ib δ_ja
            for j in 0..4 {
                a[(16 * p + 4 * a_ + j, col)] += k[(b, j)];
            }
            for i in 0..4 {
                a[(16 * p + 4 * i + a_, col)] += k[(i, b)];
            }
        }
    }
    a
}

fn sorted_svd(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    // pad so the SVD always yields the full 16-dimensional right basis
    let a = if a.nrows() < 16 { a.resize_vertically(16, 0.0) } else { a };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let rows = DMatrix::from_fn(idx.len(), 16, |r, c| v_t[(idx[r], c)]);
    (sv, rows)
}

fn null_count(sv: &[f64]) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s <= NULL_TOL * smax).count() + 16usize.saturating_sub(sv.len())
}

pub fn stabilizer_dimension(inputs: &[CorrelationTensor]) -> StabilizerReport {
    if inputs.is_empty() {
        return StabilizerReport { n_inputs: 0, lie_algebra_dim: 16, identifiable: false, singular_values: vec![] };
    }
    let (sv, _) = sorted_svd(linear_map(inputs));
    let dim = null_count(&sv);
    StabilizerReport { n_inputs: inputs.len(), lie_algebra_dim: dim, identifiable: dim == 0, singular_values: sv }
}

/// Orthonormal basis (Frobenius) of the stabilizer Lie algebra.
pub fn stabilizer_basis(inputs: &[CorrelationTensor]) -> Vec<Matrix4<f64>> {
    if inputs.is_empty() {
        return (0..16).map(|c| Matrix4::from_fn(|i, j| if 4 * i + j == c { 1.0 } else { 0.0 })).collect();
    }
    let (sv, v_t) = sorted_svd(linear_map(inputs));
    let dim = null_count(&sv);
    (16 - dim..16).map(|r| Matrix4::from_fn(|i, j| v_t[(r, 4 * i + j)])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_dimensions() {
        assert_eq!(stabilizer_dimension(&[CorrelationTensor::diagonal([1.0, 0.0, 0.0, 0.0])]).lie_algebra_dim, 12);
        assert_eq!(stabilizer_dimension(&[CorrelationTensor::bell()]).lie_algebra_dim, 6);
    }

    #[test]
    fn basis_elements_preserve_bell_tensor() {
        let k = CorrelationTensor::bell();
        let basis = stabilizer_basis(&[k]);
        assert_eq!(basis.len(), 6);
        for x in basis {
            let o = (x * 0.7).exp();
            assert!((o * k.0 * o.transpose() - k.0).amax() < 1e-10);
        }
    }
}
