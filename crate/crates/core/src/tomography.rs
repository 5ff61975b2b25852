//! Two-photon polarization tomography: coincidence counts over the 36 product
//! settings `{H, V, D, A, R, L}²` and linear inversion back to a state.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::polarization::{operator_of_tensor, tensor_of_operator, DensityMatrix};

/// Single-photon analyzer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Analyzer {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Analyzer {
    pub const ALL: [Analyzer; 6] = [Analyzer::H, Analyzer::V, Analyzer::D, Analyzer::A, Analyzer::R, Analyzer::L];

    pub fn amplitudes(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Analyzer::H => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Analyzer::V => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Analyzer::D => [C64::new(s, 0.0), C64::new(s, 0.0)],
            Analyzer::A => [C64::new(s, 0.0), C64::new(-s, 0.0)],
            Analyzer::R => [C64::new(s, 0.0), C64::new(0.0, s)],
            Analyzer::L => [C64::new(s, 0.0), C64::new(0.0, -s)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Analyzer::H => "H",
            Analyzer::V => "V",
            Analyzer::D => "D",
            Analyzer::A => "A",
            Analyzer::R => "R",
            Analyzer::L => "L",
        }
    }
}

impl fmt::Display for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Analyzer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Analyzer::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown analyzer setting {s:?}")))
    }
}

/// Product projector `|a⟩⟨a| ⊗ |b⟩⟨b|`.
pub fn projector(a: Analyzer, b: Analyzer) -> DMatrix<C64> {
    let (va, vb) = (a.amplitudes(), b.amplitudes());
    let psi: Vec<C64> = (0..4).map(|k| va[k / 2] * vb[k % 2]).collect();
    DMatrix::from_fn(4, 4, |r, c| psi[r] * psi[c].conj())
}

/// The 36 settings in row-major order over [`Analyzer::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorBasis {
    pub settings: Vec<(Analyzer, Analyzer)>,
}

impl Default for ProjectorBasis {
    fn default() -> Self {
        let settings = Analyzer::ALL.iter().flat_map(|&a| Analyzer::ALL.iter().map(move |&b| (a, b))).collect();
        Self { settings }
    }
}

impl ProjectorBasis {
    /// Rows map the 16 tensor coefficients to setting probabilities:
    /// `p_ab = (1/4) Σ K_ij Tr[(σi⊗σj) P_ab]`.
    pub fn design_matrix(&self) -> DMatrix<f64> {
        design_matrix(&self.settings)
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.design_matrix())
    }
}

fn design_matrix(settings: &[(Analyzer, Analyzer)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(settings.len(), 16);
    for (row, &(sa, sb)) in settings.iter().enumerate() {
        let t: Matrix4<f64> = tensor_of_operator(&projector(sa, sb));
        for idx in 0..16 {
            a[(row, idx)] = 0.25 * t[(idx / 4, idx % 4)];
        }
    }
    a
}

fn numerical_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting_a: Analyzer,
    pub setting_b: Analyzer,
    /// Expected coincidence probability `⟨ab|ρ|ab⟩`.
    pub rate: f64,
    pub observed: u64,
    pub pairs: u64,
}

pub fn expected_rate(rho: &DensityMatrix, a: Analyzer, b: Analyzer) -> f64 {
    linalg::trace(&(rho.matrix() * projector(a, b))).re.clamp(0.0, 1.0)
}

/// Counts for all 36 settings. Noisy counts are Poisson with mean
/// `pairs · rate`; noiseless counts are the rounded mean.
pub fn simulate_counts(
    rho: &DensityMatrix,
    pairs_per_setting: u64,
    seed: u64,
    noisy: bool,
) -> Result<Vec<CountRecord>> {
    if rho.dim() != 4 {
        return Err(Error::Dimension { expected: 4, got: rho.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = ProjectorBasis::default();
    Ok(basis
        .settings
        .iter()
        .map(|&(a, b)| {
            let rate = expected_rate(rho, a, b);
            let mean = pairs_per_setting as f64 * rate;
            let observed = if noisy { poisson(&mut rng, mean) } else { mean.round() as u64 };
            CountRecord { setting_a: a, setting_b: b, rate, observed, pairs: pairs_per_setting }
        })
        .collect())
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Linear least-squares inversion followed by eigenvalue clipping and trace
/// renormalization.
pub fn reconstruct(counts: &[CountRecord]) -> Result<DensityMatrix> {
    if counts.iter().all(|c| c.observed == 0) {
        return Err(Error::ZeroCounts);
    }
    let settings: Vec<(Analyzer, Analyzer)> = counts.iter().map(|c| (c.setting_a, c.setting_b)).collect();
    let a = design_matrix(&settings);
    let rank = numerical_rank(&a);
    if rank < 16 {
        return Err(Error::RankDeficient(rank));
    }
    let y = DVector::from_iterator(
        counts.len(),
        counts.iter().map(|c| if c.pairs == 0 { 0.0 } else { c.observed as f64 / c.pairs as f64 }),
    );
    let svd = a.svd(true, true);
    let x = svd.solve(&y, 1e-12).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let k00 = x[0];
    if k00 <= 0.0 {
        return Err(Error::ZeroCounts);
    }
    let k = Matrix4::from_fn(|i, j| x[4 * i + j] / k00);
    let op = linalg::hermitian_part(&operator_of_tensor(&k));
    let (vals, vecs) = linalg::hermitian_eigen(&op);
    let clipped = linalg::spectral_map(&vals, &vecs, |v| v.max(0.0));
    let (rho, _) = DensityMatrix::from_unnormalized(linalg::hermitian_part(&clipped))?;
    Ok(rho)
}

/// Uhlmann fidelity `(Tr √(√ρa ρb √ρa))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    let sa = linalg::psd_sqrt(a.matrix());
    let inner = linalg::hermitian_part(&(&sa * b.matrix() * &sa));
    let root_trace: f64 = linalg::hermitian_eigenvalues(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_trace * root_trace).min(1.0))
}
