//! Mueller-matrix reconstruction from two-photon correlation data.
//!
//! All fits minimize `Σ ‖K_out − M K_in Mᵀ‖_F²` over Mueller matrices with
//! `M_00 = 1`:
//!
//! * [`fit_diagonal`]: `M = diag(1, m11, m22, m33)` (or one shared `m`),
//!   box-constrained to `[0, 1]`;
//! * [`fit_general`]: all fifteen free entries, multi-start, from two or
//!   more input/output pairs.
//!
//! A single input tensor determines `M` only up to `M → M O` with
//! `O K_in Oᵀ = K_in`; [`stabilizer_dimension`] measures that ambiguity.

pub mod image;
pub mod lm;
pub mod stabilizer;

use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::MuellerMatrix;
use crate::error::{Error, Result};
use crate::polarization::CorrelationTensor;

pub use image::{reconstruct_image, PixelMap};
pub use lm::{Bounds, LeastSquaresProblem, LmOptions, LmOutcome};
pub use stabilizer::{stabilizer_basis, stabilizer_dimension, StabilizerReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Isotropic,
    Diagonal,
    General,
}

/// Restricted models handled by [`fit_diagonal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagonalModel {
    Isotropic,
    Diagonal,
}

impl DiagonalModel {
    pub fn n_params(self) -> usize {
        match self {
            DiagonalModel::Isotropic => 1,
            DiagonalModel::Diagonal => 3,
        }
    }

    fn diag(self, params: &[f64]) -> [f64; 4] {
        match self {
            DiagonalModel::Isotropic => [1.0, params[0], params[0], params[0]],
            DiagonalModel::Diagonal => [1.0, params[0], params[1], params[2]],
        }
    }
}

impl From<DiagonalModel> for FitModel {
    fn from(m: DiagonalModel) -> Self {
        match m {
            DiagonalModel::Isotropic => FitModel::Isotropic,
            DiagonalModel::Diagonal => FitModel::Diagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// 1, 3 or 15 values (`M_00 = 1` is implied).
    pub params: Vec<f64>,
    /// `‖K_out − M K_in Mᵀ‖_F`, summed in quadrature over input pairs.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn mueller(&self) -> MuellerMatrix {
        match self.model {
            FitModel::Isotropic => MuellerMatrix::diagonal(self.params[0], self.params[0], self.params[0]),
            FitModel::Diagonal => MuellerMatrix::diagonal(self.params[0], self.params[1], self.params[2]),
            FitModel::General => MuellerMatrix::from_normalized(general_matrix(&self.params)),
        }
    }
}

fn check_tensor(k: &CorrelationTensor, what: &str) -> Result<()> {
    if k.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} tensor has non-finite entries")));
    }
    Ok(())
}

fn check_input(k_in: &CorrelationTensor) -> Result<()> {
    check_tensor(k_in, "input")?;
    if (k_in.0[(0, 0)] - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidTrace(k_in.0[(0, 0)]));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// diagonal models

struct DiagonalProblem<'a> {
    k_in: &'a Matrix4<f64>,
    k_out: &'a Matrix4<f64>,
    model: DiagonalModel,
}

impl LeastSquaresProblem for DiagonalProblem<'_> {
    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        let d = self.model.diag(params);
        DVector::from_fn(16, |idx, _| {
            let (i, j) = (idx / 4, idx % 4);
            d[i] * d[j] * self.k_in[(i, j)] - self.k_out[(i, j)]
        })
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let d = self.model.diag(params);
        let n = self.model.n_params();
        let mut jac = DMatrix::zeros(16, n);
        for idx in 0..16 {
            let (i, j) = (idx / 4, idx % 4);
            let k = self.k_in[(i, j)];
            // ∂(d_i d_j)/∂d_a for a = 1..3
            let mut dd = [0.0; 4];
            if i > 0 {
                dd[i] += d[j];
            }
            if j > 0 {
                dd[j] += d[i];
            }
            match self.model {
                DiagonalModel::Isotropic => jac[(idx, 0)] = k * (dd[1] + dd[2] + dd[3]),
                DiagonalModel::Diagonal => {
                    for a in 0..3 {
                        jac[(idx, a)] = k * dd[a + 1];
                    }
                }
            }
        }
        jac
    }
}

/// `Σ ‖K_out − M K_in Mᵀ‖²` for a diagonal model.
pub fn diagonal_objective(
    k_in: &CorrelationTensor,
    k_out: &CorrelationTensor,
    model: DiagonalModel,
    params: &[f64],
) -> f64 {
    DiagonalProblem { k_in: &k_in.0, k_out: &k_out.0, model }.residuals(params).norm_squared()
}

/// Analytic gradient of [`diagonal_objective`].
pub fn diagonal_gradient(
    k_in: &CorrelationTensor,
    k_out: &CorrelationTensor,
    model: DiagonalModel,
    params: &[f64],
) -> Vec<f64> {
    let p = DiagonalProblem { k_in: &k_in.0, k_out: &k_out.0, model };
    let g = p.jacobian(params).transpose() * p.residuals(params) * 2.0;
    g.iter().copied().collect()
}

/// Moment estimate `m_i = √(K_out,ii / K_in,ii)` used as the starting point.
fn diagonal_moment_start(k_in: &Matrix4<f64>, k_out: &Matrix4<f64>, model: DiagonalModel) -> Vec<f64> {
    let est: Vec<Option<f64>> = (1..4)
        .map(|i| {
            let kin = k_in[(i, i)];
            if kin.abs() < 1e-6 {
                return None;
            }
            let ratio = k_out[(i, i)] / kin;
            Some(ratio.max(0.0).sqrt().clamp(0.0, 1.0))
        })
        .collect();
    match model {
        DiagonalModel::Diagonal => est.iter().map(|e| e.unwrap_or(0.5)).collect(),
        DiagonalModel::Isotropic => {
            let known: Vec<f64> = est.iter().flatten().copied().collect();
            if known.is_empty() {
                vec![0.5]
            } else {
                vec![known.iter().sum::<f64>() / known.len() as f64]
            }
        }
    }
}

/// Box-constrained fit of `diag(1, m11, m22, m33)` (or isotropic `m`).
pub fn fit_diagonal(k_in: &CorrelationTensor, k_out: &CorrelationTensor, model: DiagonalModel) -> FitResult {
    match fit_diagonal_with(k_in, k_out, model, None, &LmOptions::default()) {
        Ok(r) => r,
        Err(_) => FitResult {
            model: model.into(),
            params: vec![f64::NAN; model.n_params()],
            residual: f64::INFINITY,
            iterations: 0,
            converged: false,
        },
    }
}

/// [`fit_diagonal`] with an explicit starting point and optimizer options.
/// Without a start, the diagonal moment estimate is used.
pub fn fit_diagonal_with(
    k_in: &CorrelationTensor,
    k_out: &CorrelationTensor,
    model: DiagonalModel,
    start: Option<&[f64]>,
    opts: &LmOptions,
) -> Result<FitResult> {
    check_input(k_in)?;
    check_tensor(k_out, "output")?;
    let problem = DiagonalProblem { k_in: &k_in.0, k_out: &k_out.0, model };
    let start = match start {
        Some(s) if s.len() == model.n_params() => s.to_vec(),
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "{model:?} model takes {} parameters, got {}",
                model.n_params(),
                s.len()
            )))
        }
        None => diagonal_moment_start(&k_in.0, &k_out.0, model),
    };
    let bounds = Bounds::uniform(model.n_params(), 0.0, 1.0);
    let out = lm::minimize(&problem, &start, Some(&bounds), opts);
    Ok(FitResult {
        model: model.into(),
        params: out.params,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
    })
}

// ---------------------------------------------------------------------------
// general model

/// Mueller matrix from the 15 free entries (row-major, `M_00 = 1` skipped).
pub fn general_matrix(params: &[f64]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| if i == 0 && j == 0 { 1.0 } else { params[4 * i + j - 1] })
}

pub fn general_params(m: &Matrix4<f64>) -> Vec<f64> {
    (1..16).map(|idx| m[(idx / 4, idx % 4)]).collect()
}

struct GeneralProblem<'a> {
    pairs: &'a [(CorrelationTensor, CorrelationTensor)],
}

impl LeastSquaresProblem for GeneralProblem<'_> {
    fn residuals(&self, params: &[f64]) -> DVector<f64> {
        let m = general_matrix(params);
        let mut r = DVector::zeros(16 * self.pairs.len());
        for (p, (k_in, k_out)) in self.pairs.iter().enumerate() {
            let pred = m * k_in.0 * m.transpose() - k_out.0;
            for idx in 0..16 {
                r[16 * p + idx] = pred[(idx / 4, idx % 4)];
            }
        }
        r
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let m = general_matrix(params);
        let mut jac = DMatrix::zeros(16 * self.pairs.len(), 15);
        for (p, (k_in, _)) in self.pairs.iter().enumerate() {
            let kmt = k_in.0 * m.transpose();
            let mk = m * k_in.0;
            // ∂(M K Mᵀ)_ij / ∂M_ab = δ_ia (K Mᵀ)_bj + δ_ja (M K)_ib
            for col in 0..15 {
                let (a, b) = ((col + 1) / 4, (col + 1) % 4);
                for j in 0..4 {
                    jac[(16 * p + 4 * a + j, col)] += kmt[(b, j)];
                }
                for i in 0..4 {
                    jac[(16 * p + 4 * i + a, col)] += mk[(i, b)];
                }
            }
        }
        jac
    }
}

/// `Σ_p ‖K_out,p − M K_in,p Mᵀ‖²` for the general model.
pub fn general_objective(pairs: &[(CorrelationTensor, CorrelationTensor)], params: &[f64]) -> f64 {
    GeneralProblem { pairs }.residuals(params).norm_squared()
}

/// Analytic gradient of [`general_objective`].
pub fn general_gradient(pairs: &[(CorrelationTensor, CorrelationTensor)], params: &[f64]) -> Vec<f64> {
    let p = GeneralProblem { pairs };
    let g = p.jacobian(params).transpose() * p.residuals(params) * 2.0;
    g.iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralFitOptions {
    pub starts: usize,
    pub seed: u64,
    pub lm: LmOptions,
}

impl Default for GeneralFitOptions {
    fn default() -> Self {
        Self {
            starts: 20,
            seed: 0,
            lm: LmOptions { max_iterations: 1000, residual_tol: 1e-14, ..LmOptions::default() },
        }
    }
}

/// Multi-start fit of a full Mueller matrix from several input/output pairs.
pub fn fit_general(pairs: &[(CorrelationTensor, CorrelationTensor)]) -> Result<FitResult> {
    fit_general_with(pairs, &GeneralFitOptions::default())
}

pub fn fit_general_with(
    pairs: &[(CorrelationTensor, CorrelationTensor)],
    opts: &GeneralFitOptions,
) -> Result<FitResult> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no input/output pairs".into()));
    }
    for (k_in, k_out) in pairs {
        check_input(k_in)?;
        check_tensor(k_out, "output")?;
    }
    let inputs: Vec<CorrelationTensor> = pairs.iter().map(|(k, _)| *k).collect();
    let report = stabilizer_dimension(&inputs);
    if !report.identifiable {
        if pairs.len() == 1 {
            return Err(Error::Underdetermined(report.lie_algebra_dim));
        }
        log::warn!(
            "inputs leave a {}-dimensional stabilizer; relying on M00 = 1 to fix the solution",
            report.lie_algebra_dim
        );
    }
    let problem = GeneralProblem { pairs };
    let starts = opts.starts.max(1);
    let outcomes: Vec<LmOutcome> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(s as u64);
            let start: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..=1.0)).collect();
            lm::minimize(&problem, &start, None, &opts.lm)
        })
        .collect();

    let best = outcomes.iter().map(|o| o.residual).fold(f64::INFINITY, f64::min);
    let tie = best * (1.0 + 1e-6) + 1e-12;
    // first start reaching the best residual with M_11 >= 0, else the first best
    let chosen = outcomes
        .iter()
        .find(|o| o.residual <= tie && o.params[4] >= 0.0)
        .or_else(|| outcomes.iter().find(|o| o.residual <= tie))
        .expect("at least one start");
    Ok(FitResult {
        model: FitModel::General,
        params: chosen.params.clone(),
        residual: chosen.residual,
        iterations: chosen.iterations,
        converged: chosen.converged,
    })
}

/// `1 − ‖A − B‖_F / (‖A‖_F + ‖B‖_F)`, in `[0, 1]`.
pub fn mueller_similarity(a: &MuellerMatrix, b: &MuellerMatrix) -> f64 {
    let denom = a.matrix().norm() + b.matrix().norm();
    if denom == 0.0 {
        return 1.0;
    }
    (1.0 - (a.matrix() - b.matrix()).norm() / denom).clamp(0.0, 1.0)
}
