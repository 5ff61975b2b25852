//! Entanglement and mixedness observables of output states, plus the
//! closed-form purity laws for a Bell input behind a diagonal depolarizer.

use serde::{Deserialize, Serialize};

use crate::channel::{apply_one_photon, apply_two_photon_independent, kraus_from_diagonal_mueller, Arm};
use crate::error::{Error, Result};
use crate::linalg;
use crate::polarization::{bell_psi_plus, pauli_pair, DensityMatrix, PSD_TOL};

/// One-photon (one arm in the sample) or two-photon (both arms) probing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    Opp,
    Tpp,
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `(1/4) Σ K_ij²` of a two-photon state.
pub fn purity_from_tensor(rho: &DensityMatrix) -> Result<f64> {
    Ok(crate::polarization::correlation_tensor(rho)?.purity())
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
///
/// The `λ` are the square roots of the eigenvalues of `ρ ρ̃` with
/// `ρ̃ = (σ3⊗σ3) ρ* (σ3⊗σ3)`. They are obtained from the Hermitian matrix
/// `√ρ ρ̃ √ρ`, which has the same spectrum.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.dim() });
    }
    let flip = linalg::to_dynamic4(&pauli_pair(3, 3));
    let tilde = &flip * rho.matrix().map(|z| z.conj()) * &flip;
    let sqrt_rho = linalg::psd_sqrt(rho.matrix());
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let mut lambdas: Vec<f64> = linalg::hermitian_eigenvalues(&r).into_iter().map(|x| x.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Von Neumann entropy in bits; `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let mut s = 0.0;
    for lambda in rho.eigenvalues() {
        if lambda < -PSD_TOL {
            return Err(Error::NotPositive(lambda));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Normalized loss of the `⟨HV|ρ|VH⟩` coherence, clamped to `[0, 1]`.
pub fn dephasing_strength(rho_out: &DensityMatrix, rho_in: &DensityMatrix) -> Result<f64> {
    if rho_out.dim() != 4 || rho_in.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho_out.dim().min(rho_in.dim()) });
    }
    let c_in = rho_in.get(1, 2).norm();
    if c_in <= 1e-14 {
        return Err(Error::DephasingUndefined);
    }
    let c_out = rho_out.get(1, 2).norm();
    Ok((1.0 - c_out / c_in).clamp(0.0, 1.0))
}

/// Purity of a `|Ψ+⟩` input after `diag(1, m11, m22, m33)`:
/// `(1 + Σ m²)/4` for one photon, `(1 + Σ m⁴)/4` for both.
pub fn purity_closed_form(m11: f64, m22: f64, m33: f64, mode: ProbeMode) -> f64 {
    let p = match mode {
        ProbeMode::Opp => 2,
        ProbeMode::Tpp => 4,
    };
    0.25 * (1.0 + m11.powi(p) + m22.powi(p) + m33.powi(p))
}

/// `dγ/dη` for an isotropic channel: `(3/2) m m'` (OPP) or `3 m³ m'` (TPP).
pub fn purity_sensitivity(m: f64, dm_deta: f64, mode: ProbeMode) -> f64 {
    match mode {
        ProbeMode::Opp => 1.5 * m * dm_deta,
        ProbeMode::Tpp => 3.0 * m.powi(3) * dm_deta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub concurrence: f64,
    pub purity: f64,
    pub entropy: f64,
    /// `None` when the reference state carries no HV/VH coherence.
    pub dephasing: Option<f64>,
}

impl MetricsReport {
    /// Metrics of `rho_out`; dephasing is measured against `rho_in`.
    pub fn compute(rho_out: &DensityMatrix, rho_in: &DensityMatrix) -> Result<Self> {
        let dephasing = match dephasing_strength(rho_out, rho_in) {
            Ok(d) => Some(d),
            Err(Error::DephasingUndefined) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            concurrence: concurrence(rho_out)?,
            purity: purity(rho_out),
            entropy: von_neumann_entropy(rho_out)?,
            dephasing,
        })
    }
}

/// One row of an isotropic-depolarization sweep on `|Ψ+⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: f64,
    pub opp: MetricsReport,
    pub tpp: MetricsReport,
}

/// Sends `|Ψ+⟩` through `diag(1, m, m, m)` with one and with both photons,
/// using the Pauli-ensemble realization of the channel.
pub fn isotropic_sweep_point(m: f64) -> Result<SweepRow> {
    let bell = bell_psi_plus();
    let ch = kraus_from_diagonal_mueller(m, m, m)?;
    let (opp, _) = apply_one_photon(&ch, &bell, Arm::First)?;
    let (tpp, _) = apply_two_photon_independent(&ch, &bell)?;
    Ok(SweepRow { m, opp: MetricsReport::compute(&opp, &bell)?, tpp: MetricsReport::compute(&tpp, &bell)? })
}

/// Evenly spaced sweep over `[m_min, m_max]` with `steps` points.
pub fn isotropic_sweep(m_min: f64, m_max: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if !(0.0..=1.0).contains(&m_min) || !(0.0..=1.0).contains(&m_max) || m_min >= m_max || steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "sweep needs 0 <= m_min < m_max <= 1 and steps >= 2, got {m_min} {m_max} {steps}"
        )));
    }
    (0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            let m = if i == steps - 1 { m_max } else { m_min + t * (m_max - m_min) };
            isotropic_sweep_point(m)
        })
        .collect()
}

/// Werner-state spectrum helper: eigenvalues `(1+3p)/4` and `(1−p)/4` (×3).
pub fn werner_entropy(p: f64) -> f64 {
    let a = (1.0 + 3.0 * p) / 4.0;
    let b = (1.0 - p) / 4.0;
    let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    h(a) + 3.0 * h(b)
}
