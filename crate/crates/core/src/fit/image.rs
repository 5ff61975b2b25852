//! Per-pixel diagonal fits over an image of output tensors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_diagonal, DiagonalModel, FitResult};
use crate::error::{Error, Result};
use crate::polarization::CorrelationTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelMap {
    pub width: usize,
    pub height: usize,
    pub model: DiagonalModel,
    /// Row-major, `n_params` values per pixel.
    pub values: Vec<f64>,
    /// Row-major per-pixel residual.
    pub residuals: Vec<f64>,
    /// Indices of pixels whose fit did not converge.
    pub failures: Vec<usize>,
}

impl PixelMap {
    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let n = self.n_params();
        let idx = y * self.width + x;
        &self.values[n * idx..n * (idx + 1)]
    }

    /// Parameter `p` for every pixel, row-major.
    pub fn plane(&self, p: usize) -> Vec<f64> {
        let n = self.n_params();
        self.values.iter().skip(p).step_by(n).copied().collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_residual(&self) -> f64 {
        self.residuals.iter().sum::<f64>() / self.residuals.len() as f64
    }
}

/// Fits every pixel independently. `pixels` is row-major, `width * height`
/// long.
pub fn reconstruct_image(
    k_in: &CorrelationTensor,
    pixels: &[CorrelationTensor],
    width: usize,
    height: usize,
    model: DiagonalModel,
) -> Result<PixelMap> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("image dimensions must be positive".into()));
    }
    if pixels.len() != width * height {
        return Err(Error::Dimension { expected: width * height, got: pixels.len() });
    }
    let fits: Vec<FitResult> = pixels.par_iter().map(|k_out| fit_diagonal(k_in, k_out, model)).collect();
    let mut values = Vec::with_capacity(fits.len() * model.n_params());
    let mut residuals = Vec::with_capacity(fits.len());
    let mut failures = Vec::new();
    for (i, f) in fits.into_iter().enumerate() {
        if !f.converged {
            failures.push(i);
        }
        values.extend(f.params);
        residuals.push(f.residual);
    }
    Ok(PixelMap { width, height, model, values, residuals, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{propagate_tensor, MuellerMatrix};

    #[test]
    fn uniform_isotropic_image() {
        let k_in = CorrelationTensor::bell();
        let k_out = propagate_tensor(&MuellerMatrix::diagonal(0.42, 0.42, 0.42), &k_in);
        let map = reconstruct_image(&k_in, &vec![k_out; 12], 4, 3, DiagonalModel::Isotropic).unwrap();
        assert!(map.values.iter().all(|v| (v - 0.42).abs() < 1e-8));
        assert!(map.failures.is_empty());
        assert_eq!(map.pixel(3, 2).len(), 1);
    }

    #[test]
    fn failed_pixel_is_recorded() {
        let k_in = CorrelationTensor::bell();
        let mut bad = k_in;
        bad.0[(1, 1)] = f64::NAN;
        let map = reconstruct_image(&k_in, &[k_in, bad], 2, 1, DiagonalModel::Diagonal).unwrap();
        assert_eq!(map.failures, vec![1]);
        assert_eq!(map.plane(0).len(), 2);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let k = CorrelationTensor::bell();
        assert!(reconstruct_image(&k, &[k], 2, 1, DiagonalModel::Diagonal).is_err());
        assert!(reconstruct_image(&k, &[], 0, 1, DiagonalModel::Diagonal).is_err());
    }
}
