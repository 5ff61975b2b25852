//! Stokes vectors, Pauli operators, density matrices and two-photon
//! correlation tensors.
//!
//! # Index convention
//!
//! Stokes components and Pauli operators share one ordering:
//!
//! | index | Stokes | basis pair | Pauli                      |
//! |-------|--------|------------|----------------------------|
//! | 0     | S0     | intensity  | identity                   |
//! | 1     | S1     | H / V      | `diag(1, -1)`              |
//! | 2     | S2     | D / A      | `[[0, 1], [1, 0]]`         |
//! | 3     | S3     | R / L      | `[[0, -i], [i, 0]]`        |
//!
//! The computational basis is `|H⟩ = (1, 0)`, `|V⟩ = (0, 1)`, so `S1 = +1`
//! is horizontal light. With this ordering the Bell state
//! `|Ψ+⟩ = (|HV⟩ + |VH⟩)/√2` has correlation tensor `diag(1, -1, 1, 1)`.
//! Two-photon operators are ordered `|HH⟩, |HV⟩, |VH⟩, |VV⟩`.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, I, ONE, ZERO};

/// Tolerance on Hermiticity and unit trace.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted as positive semi-definite.
pub const PSD_TOL: f64 = 1e-10;

/// Pauli operator `σ_index` in the Stokes-aligned ordering.
pub fn pauli(index: usize) -> Matrix2<C64> {
    match index {
        0 => Matrix2::identity(),
        1 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        2 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        3 => Matrix2::new(ZERO, -I, I, ZERO),
        _ => panic!("Pauli index {index} out of range"),
    }
}

pub fn pauli_basis() -> [Matrix2<C64>; 4] {
    [pauli(0), pauli(1), pauli(2), pauli(3)]
}

/// Two-photon product operator `σ_i ⊗ σ_j`.
pub fn pauli_pair(i: usize, j: usize) -> Matrix4<C64> {
    linalg::kron2(&pauli(i), &pauli(j))
}

/// Largest deviation of `Tr[σi σj]` from `2 δij`.
pub fn pauli_orthogonality_defect() -> f64 {
    let basis = pauli_basis();
    let mut worst = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let expected = if i == j { 2.0 } else { 0.0 };
            worst = worst.max(((a * b).trace() - C64::new(expected, 0.0)).norm());
        }
    }
    worst
}

/// Stokes vector `(S0, S1, S2, S3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector(pub [f64; 4]);

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self([s0, s1, s2, s3])
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn degree_of_polarization(&self) -> f64 {
        let [s0, s1, s2, s3] = self.0;
        (s1 * s1 + s2 * s2 + s3 * s3).sqrt() / s0
    }

    pub fn is_normalized(&self) -> bool {
        (self.0[0] - 1.0).abs() <= HERMITIAN_TOL
    }

    pub fn normalized(&self) -> Self {
        let s0 = self.0[0];
        Self(self.0.map(|x| x / s0))
    }
}

/// Physical quantum state of one (dim 2) or two (dim 4) photons.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || !(n == 2 || n == 4) {
            return Err(Error::Dimension { expected: 4, got: n.max(m.ncols()) });
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(&m);
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min_eig = linalg::hermitian_eigenvalues(&m)[0];
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(Self { m })
    }

    /// Symmetrizes and divides by the trace before validating. Returns the
    /// state and the trace that was divided out.
    pub fn from_unnormalized(m: DMatrix<C64>) -> Result<(Self, f64)> {
        let m = linalg::hermitian_part(&m);
        let tr = linalg::trace(&m).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::ChannelAnnihilatesState);
        }
        Ok((Self::new(m.unscale(tr))?, tr))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let n = psi.len();
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let m = DMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj() / norm2);
        Self::new(linalg::hermitian_part(&m))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// `ρa ⊗ ρb` for two single-photon states.
    pub fn product(a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if a.dim() != 2 || b.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: a.dim().max(b.dim()) });
        }
        Self::new(a.m.kronecker(&b.m))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.m)
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.m[(r, c)]
    }
}

/// Bell state `|Ψ+⟩ = (|HV⟩ + |VH⟩)/√2`.
pub fn bell_psi_plus() -> DensityMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DensityMatrix::from_pure(&[ZERO, C64::new(h, 0.0), C64::new(h, 0.0), ZERO]).expect("Bell state is valid")
}

/// Werner mixture `p |Ψ+⟩⟨Ψ+| + (1 − p) I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    let bell = bell_psi_plus();
    let mixed = DMatrix::<C64>::identity(4, 4).scale(0.25);
    DensityMatrix::new(bell.m.scale(p) + mixed.scale(1.0 - p))
}

/// Werner state with the requested concurrence, `C = (3p − 1)/2`.
pub fn werner_with_concurrence(c: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!("concurrence {c} outside [0, 1]")));
    }
    werner((2.0 * c + 1.0) / 3.0)
}

/// Two-photon correlation tensor `K_ij = Tr[ρ (σi ⊗ σj)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTensor(pub Matrix4<f64>);

impl CorrelationTensor {
    pub fn from_matrix(k: Matrix4<f64>) -> Self {
        Self(k)
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        Self(Matrix4::from_diagonal(&Vector4::from(d)))
    }

    /// Tensor of `|Ψ+⟩`, `diag(1, −1, 1, 1)`.
    pub fn bell() -> Self {
        Self::diagonal([1.0, -1.0, 1.0, 1.0])
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Checks `K_00 = 1` and `|K_ij| ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        if (self.0[(0, 0)] - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidTrace(self.0[(0, 0)]));
        }
        let worst = self.0.amax();
        if worst > 1.0 + HERMITIAN_TOL {
            return Err(Error::UnphysicalTensor(worst));
        }
        Ok(())
    }

    /// `(1/4) Σ K_ij²`, the purity of the corresponding state.
    pub fn purity(&self) -> f64 {
        0.25 * self.0.norm_squared()
    }
}

/// `ρ = (1/2)(I + Σ S_i σ_i)`. A non-normalized input is rescaled to
/// `S0 = 1`; the returned flag reports whether that happened.
pub fn stokes_to_density(s: &StokesVector) -> Result<(DensityMatrix, bool)> {
    if !(s.0[0] > 0.0) {
        return Err(Error::InvalidArgument(format!("S0 must be positive, got {}", s.0[0])));
    }
    let renormalized = !s.is_normalized();
    if renormalized {
        log::warn!("Stokes vector with S0 = {} normalized to S0 = 1", s.0[0]);
    }
    let s = s.normalized();
    let dop = s.degree_of_polarization();
    if dop > 1.0 + HERMITIAN_TOL {
        return Err(Error::UnphysicalStokes(dop));
    }
    let mut rho = Matrix2::<C64>::identity();
    for i in 1..4 {
        rho += pauli(i).scale(s.0[i]);
    }
    let rho = linalg::to_dynamic2(&rho.scale(0.5));
    Ok((DensityMatrix::new(rho)?, renormalized))
}

/// `S_i = Tr[ρ σ_i]`.
pub fn density_to_stokes(rho: &DensityMatrix) -> Result<StokesVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: rho.dim() });
    }
    let mut s = [0.0; 4];
    for (i, si) in s.iter_mut().enumerate() {
        let p = linalg::to_dynamic2(&pauli(i));
        *si = (rho.matrix() * p).trace().re;
    }
    Ok(StokesVector(s))
}

/// Correlation tensor of a Hermitian 4×4 operator (not necessarily trace 1).
pub fn tensor_of_operator(m: &DMatrix<C64>) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| {
        let p = pauli_pair(i, j);
        let mut acc = ZERO;
        for r in 0..4 {
            for c in 0..4 {
                acc += m[(r, c)] * p[(c, r)];
            }
        }
        acc.re
    })
}

/// `K_ij = Tr[ρ (σi ⊗ σj)]` of a two-photon state.
pub fn correlation_tensor(rho: &DensityMatrix) -> Result<CorrelationTensor> {
    if rho.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.dim() });
    }
    Ok(CorrelationTensor(tensor_of_operator(rho.matrix())))
}

/// Inverse map `(1/4) Σ K_ij σi⊗σj` without any positivity check.
pub fn operator_of_tensor(k: &Matrix4<f64>) -> DMatrix<C64> {
    let mut acc = Matrix4::<C64>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            if k[(i, j)] != 0.0 {
                acc += pauli_pair(i, j).scale(k[(i, j)]);
            }
        }
    }
    linalg::to_dynamic4(&acc.scale(0.25))
}

/// `ρ = (1/4) Σ K_ij σi⊗σj`. Fails with [`Error::UnphysicalTensor`] when the
/// result has an eigenvalue below `-1e-10`.
pub fn tensor_to_density(k: &CorrelationTensor) -> Result<DensityMatrix> {
    if (k.0[(0, 0)] - 1.0).abs() > HERMITIAN_TOL {
        return Err(Error::InvalidTrace(k.0[(0, 0)]));
    }
    let m = linalg::hermitian_part(&operator_of_tensor(&k.0));
    let min_eig = linalg::hermitian_eigenvalues(&m)[0];
    if min_eig < -PSD_TOL {
        return Err(Error::UnphysicalTensor(min_eig));
    }
    DensityMatrix::new(m)
}
