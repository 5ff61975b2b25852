//! Polarization channels as weighted Jones ensembles and as Mueller matrices.
//!
//! A [`KrausEnsemble`] holds pairs `(w_k, J_k)`; the Kraus operators are
//! `U_k = √w_k · J_k`. Two-photon states can be sent through a channel in
//! three ways:
//!
//! * one arm only ([`apply_one_photon`]),
//! * both arms with independent path realizations
//!   ([`apply_two_photon_independent`]), `Σ_{k,l} (U_k⊗U_l) ρ (U_k⊗U_l)†`,
//! * both arms with the same path realization
//!   ([`apply_two_photon_correlated`]), `Σ_k (U_k⊗U_k) ρ (U_k⊗U_k)†`.
//!
//! Only the independent mode satisfies `K_out ∝ M K_in Mᵀ` exactly for
//! multi-element ensembles; it is the default two-photon model. The
//! correlated mode is kept for comparison: a uniform Pauli ensemble applied
//! in correlated mode leaves `|Ψ+⟩` untouched while the congruence law
//! predicts complete depolarization.

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::polarization::{pauli, CorrelationTensor, DensityMatrix, StokesVector};

/// Tolerance on `Σ w = 1`.
pub const WEIGHT_TOL: f64 = 1e-10;
/// Tolerance on `Σ U†U ⪯ I`.
pub const TRACE_CONDITION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausItem {
    pub weight: f64,
    pub jones: Matrix2<C64>,
}

impl KrausItem {
    pub fn new(weight: f64, jones: Matrix2<C64>) -> Self {
        Self { weight, jones }
    }

    /// `U = √w · J`.
    pub fn operator(&self) -> Matrix2<C64> {
        self.jones.scale(self.weight.sqrt())
    }
}

/// Weighted ensemble of Jones matrices defining a (possibly lossy) channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausEnsemble {
    items: Vec<KrausItem>,
}

impl KrausEnsemble {
    pub fn new(items: Vec<KrausItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidEnsemble("empty ensemble".into()));
        }
        let mut total = 0.0;
        for (idx, item) in items.iter().enumerate() {
            if !(item.weight >= 0.0) || !item.weight.is_finite() {
                return Err(Error::InvalidEnsemble(format!("weight {idx} is {}", item.weight)));
            }
            if item.jones.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidEnsemble(format!("Jones matrix {idx} is not finite")));
            }
            total += item.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        let ensemble = Self { items };
        let excess = ensemble.trace_condition_excess();
        if excess > TRACE_CONDITION_TOL {
            return Err(Error::InvalidEnsemble(format!("Σ U†U exceeds the identity by {excess:e}")));
        }
        Ok(ensemble)
    }

    /// Equal weights over the given Jones matrices.
    pub fn uniform(jones: Vec<Matrix2<C64>>) -> Result<Self> {
        let w = 1.0 / jones.len().max(1) as f64;
        Self::new(jones.into_iter().map(|j| KrausItem::new(w, j)).collect())
    }

    pub fn identity() -> Self {
        Self { items: vec![KrausItem::new(1.0, Matrix2::identity())] }
    }

    /// Single deterministic element `{(1, J)}`.
    pub fn single(jones: Matrix2<C64>) -> Result<Self> {
        Self::new(vec![KrausItem::new(1.0, jones)])
    }

    /// Pauli channel `Σ p_k σ_k ρ σ_k`; zero-weight terms are dropped.
    pub fn pauli_channel(weights: [f64; 4]) -> Result<Self> {
        let items =
            weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(k, &w)| KrausItem::new(w, pauli(k))).collect();
        Self::new(items)
    }

    /// Complete depolarizer `{(1/4, σ_k)}`.
    pub fn uniform_pauli() -> Self {
        Self::pauli_channel([0.25; 4]).expect("uniform Pauli ensemble is valid")
    }

    pub fn items(&self) -> &[KrausItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `Σ_k U_k† U_k`.
    pub fn trace_operator(&self) -> Matrix2<C64> {
        self.items.iter().fold(Matrix2::zeros(), |acc, it| acc + it.jones.adjoint() * it.jones * C64::from(it.weight))
    }

    /// Largest eigenvalue of `Σ U†U − I` (≤ 0 for valid ensembles).
    pub fn trace_condition_excess(&self) -> f64 {
        let t = linalg::to_dynamic2(&self.trace_operator());
        linalg::hermitian_eigenvalues(&t)[1] - 1.0
    }

    /// `outer ∘ inner`: `inner` acts first. Weights multiply.
    pub fn compose(outer: &KrausEnsemble, inner: &KrausEnsemble) -> Result<Self> {
        let mut items = Vec::with_capacity(outer.len() * inner.len());
        for o in &outer.items {
            for i in &inner.items {
                items.push(KrausItem::new(o.weight * i.weight, o.jones * i.jones));
            }
        }
        Self::new(items)
    }
}

/// 4×4 real Mueller matrix normalized to `M_00 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuellerMatrix(Matrix4<f64>);

impl MuellerMatrix {
    /// Divides by `M_00`, which must be positive.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let m00 = m[(0, 0)];
        if !(m00 > 0.0) || !m00.is_finite() {
            return Err(Error::InvalidArgument(format!("Mueller M00 must be positive, got {m00}")));
        }
        Ok(Self(m / m00))
    }

    /// Wraps `m` verbatim; used for fitted matrices whose `M_00` is fixed at 1.
    pub fn from_normalized(m: Matrix4<f64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// `diag(1, m11, m22, m33)`.
    pub fn diagonal(m11: f64, m22: f64, m33: f64) -> Self {
        Self(Matrix4::from_diagonal(&Vector4::new(1.0, m11, m22, m33)))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn apply(&self, s: &StokesVector) -> StokesVector {
        let out = self.0 * s.as_vector();
        StokesVector([out[0], out[1], out[2], out[3]])
    }

    /// Largest output degree of polarization over `n` fully polarized inputs
    /// spread over the Poincaré sphere.
    pub fn max_output_dop(&self, n: usize) -> f64 {
        fibonacci_sphere(n).iter().map(|s| self.apply(s).degree_of_polarization()).fold(0.0, f64::max)
    }

    /// Lower-right 3×3 block acting on `(S1, S2, S3)`.
    pub fn polarization_block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(1, 1).into_owned()
    }
}

/// Fully polarized Stokes vectors spread quasi-uniformly over the sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<StokesVector> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            StokesVector::new(1.0, r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Unnormalized Mueller matrix `M_ij = (1/2) Tr[σ_i Σ_k U_k σ_j U_k†]`.
pub fn raw_mueller(ch: &KrausEnsemble) -> Matrix4<f64> {
    let sigma = [pauli(0), pauli(1), pauli(2), pauli(3)];
    // Σ_k U_k σ_j U_k† for each j
    let mut images = [Matrix2::<C64>::zeros(); 4];
    for item in ch.items() {
        let u = item.operator();
        let ua = u.adjoint();
        for (j, img) in images.iter_mut().enumerate() {
            *img += u * sigma[j] * ua;
        }
    }
    Matrix4::from_fn(|i, j| 0.5 * (sigma[i] * images[j]).trace().re)
}

/// Normalized Mueller matrix of an ensemble together with its transmittance
/// (the raw `M_00`).
pub fn mueller_from_kraus(ch: &KrausEnsemble) -> Result<(MuellerMatrix, f64)> {
    let raw = raw_mueller(ch);
    let t = raw[(0, 0)];
    Ok((MuellerMatrix::new(raw)?, t))
}

/// Pure congruence `M K Mᵀ`.
pub fn propagate_tensor(m: &MuellerMatrix, k_in: &CorrelationTensor) -> CorrelationTensor {
    CorrelationTensor(m.0 * k_in.0 * m.0.transpose())
}

/// `M K Mᵀ` rescaled so that `K_00 = 1`; equals [`propagate_tensor`] when the
/// first row of `M` is `(1, 0, 0, 0)`.
pub fn propagate_tensor_normalized(m: &MuellerMatrix, k_in: &CorrelationTensor) -> CorrelationTensor {
    let k = propagate_tensor(m, k_in).0;
    CorrelationTensor(k / k[(0, 0)])
}

/// Pauli-channel decomposition of `diag(1, m11, m22, m33)`.
///
/// Weights follow from `m_ii = 2(p_0 + p_i) − 1` and `Σ p = 1`:
/// `p_0 = (1 + Σm)/4`, `p_i = (1 + 2 m_ii − Σm)/4`.
pub fn kraus_from_diagonal_mueller(m11: f64, m22: f64, m33: f64) -> Result<KrausEnsemble> {
    let m = [m11, m22, m33];
    if let Some(bad) = m.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!("diagonal Mueller element {bad} outside [-1, 1]")));
    }
    let sum: f64 = m.iter().sum();
    let mut p = [0.0; 4];
    p[0] = (1.0 + sum) / 4.0;
    for i in 0..3 {
        p[i + 1] = (1.0 + 2.0 * m[i] - sum) / 4.0;
    }
    for (index, w) in p.iter_mut().enumerate() {
        if *w < -1e-12 {
            return Err(Error::NotCompletelyPositive { index, weight: *w });
        }
        *w = w.max(0.0);
    }
    KrausEnsemble::pauli_channel(p)
}

/// Which photon of a pair traverses a one-photon channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    First,
    Second,
    None,
}

fn to_fixed4(m: &DMatrix<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| m[(r, c)])
}

fn act_on_arm(ch: &KrausEnsemble, rho: &Matrix4<C64>, arm: Arm) -> Matrix4<C64> {
    let id = Matrix2::identity();
    let mut out = Matrix4::zeros();
    for item in ch.items() {
        let u = item.operator();
        let a = match arm {
            Arm::Second => linalg::kron2(&id, &u),
            _ => linalg::kron2(&u, &id),
        };
        out += a * rho * a.adjoint();
    }
    out
}

fn finish(m: Matrix4<C64>) -> Result<(DensityMatrix, f64)> {
    DensityMatrix::from_unnormalized(linalg::to_dynamic4(&m))
}

/// Sends one photon through the channel. For a two-photon input `arm`
/// selects the photon; the other is left untouched. Returns the renormalized
/// state and the channel transmittance.
pub fn apply_one_photon(ch: &KrausEnsemble, rho: &DensityMatrix, arm: Arm) -> Result<(DensityMatrix, f64)> {
    match rho.dim() {
        2 => {
            let r = Matrix2::from_fn(|i, j| rho.get(i, j));
            let out = ch.items().iter().fold(Matrix2::zeros(), |acc, it| {
                let u = it.operator();
                acc + u * r * u.adjoint()
            });
            DensityMatrix::from_unnormalized(linalg::to_dynamic2(&out))
        }
        _ => {
            if arm == Arm::None {
                return Err(Error::ArmRequired);
            }
            finish(act_on_arm(ch, &to_fixed4(rho.matrix()), arm))
        }
    }
}

/// Both photons traverse independent realizations of the same ensemble.
pub fn apply_two_photon_independent(ch: &KrausEnsemble, rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.dim() });
    }
    // Σ_{k,l} (U_k⊗U_l) ρ (U_k⊗U_l)† factorizes into one arm after the other.
    let first = act_on_arm(ch, &to_fixed4(rho.matrix()), Arm::First);
    finish(act_on_arm(ch, &first, Arm::Second))
}

/// Both photons traverse the same realization `k` of the ensemble.
pub fn apply_two_photon_correlated(ch: &KrausEnsemble, rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.dim() });
    }
    let r = to_fixed4(rho.matrix());
    let mut out = Matrix4::zeros();
    for item in ch.items() {
        let u = item.operator();
        let a = linalg::kron2(&u, &u);
        out += a * r * a.adjoint();
    }
    finish(out)
}

/// Two-photon propagation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPhotonMode {
    Independent,
    Correlated,
}

pub fn apply_two_photon(ch: &KrausEnsemble, rho: &DensityMatrix, mode: TwoPhotonMode) -> Result<(DensityMatrix, f64)> {
    match mode {
        TwoPhotonMode::Independent => apply_two_photon_independent(ch, rho),
        TwoPhotonMode::Correlated => apply_two_photon_correlated(ch, rho),
    }
}
