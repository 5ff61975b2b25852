//! Polarized Monte Carlo transport through a scattering slab.
//!
//! Each photon enters the slab at normal incidence with Jones matrix `I` and
//! performs an exponential random walk. At every scattering event the field
//! frame is rotated into the scattering plane, the Rayleigh amplitude
//! `diag(cos θ, 1)` is applied, and the accumulated Jones matrix is rescaled
//! so its largest singular value is one. Photons leaving the far face inside
//! the acceptance cone contribute their Jones matrix, expressed in the global
//! H/V frame, to an equal-weight Kraus ensemble.
//!
//! Polar angles come from the Henyey-Greenstein phase function. Every photon
//! draws from its own counter-based stream keyed by `(seed, photon index)`,
//! so results do not depend on how the work is split across threads.

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mueller_from_kraus, propagate_tensor_normalized, KrausEnsemble, KrausItem, MuellerMatrix};
use crate::error::{Error, Result};
use crate::fit::{fit_diagonal, DiagonalModel};
use crate::linalg::{self, C64};
use crate::polarization::CorrelationTensor;

/// Safety cap on scattering events per photon.
const MAX_EVENTS: u32 = 100_000;

pub const DEFAULT_ACCEPTANCE_DEG: f64 = 5.0;

/// Homogeneous slab of scatterers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    /// Scattering coefficient, 1/mm.
    pub mu_s: f64,
    /// Anisotropy factor, mean cosine of the scattering angle.
    pub g: f64,
    /// Slab thickness, mm.
    pub d: f64,
    /// Half-angle of the detection cone, radians.
    pub acceptance_half_angle: f64,
}

impl Medium {
    pub fn new(mu_s: f64, g: f64, d: f64, acceptance_half_angle: f64) -> Result<Self> {
        let m = Self { mu_s, g, d, acceptance_half_angle };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_s > 0.0) || !self.mu_s.is_finite() {
            return Err(Error::InvalidMedium(format!("mu_s must be positive, got {}", self.mu_s)));
        }
        if !(0.0..1.0).contains(&self.g) {
            return Err(Error::InvalidMedium(format!("g must lie in [0, 1), got {}", self.g)));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(Error::InvalidMedium(format!("thickness must be non-negative, got {}", self.d)));
        }
        if !(self.acceptance_half_angle > 0.0 && self.acceptance_half_angle <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidMedium(format!(
                "acceptance half-angle must lie in (0, π/2], got {}",
                self.acceptance_half_angle
            )));
        }
        Ok(())
    }

    /// `l* = 1 / (μ_s (1 − g))`.
    pub fn transport_mean_free_path(&self) -> f64 {
        1.0 / (self.mu_s * (1.0 - self.g))
    }

    /// Same scatterers, thickness chosen so that `d / l* = eta`.
    pub fn with_effective_thickness(&self, eta: f64) -> Self {
        Self { d: eta * self.transport_mean_free_path(), ..*self }
    }
}

/// `η = d / l* = d μ_s (1 − g)`.
pub fn effective_thickness(medium: &Medium) -> f64 {
    medium.d * medium.mu_s * (1.0 - medium.g)
}

/// Outcome of one photon trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    /// Global-frame Jones matrix (meaningful when `transmitted`).
    pub jones: Matrix2<C64>,
    pub exit_direction: [f64; 3],
    pub n_events: u32,
    pub transmitted: bool,
}

/// Cosine of a Henyey-Greenstein distributed polar angle for uniform `u`.
pub fn sample_henyey_greenstein(g: f64, u: f64) -> f64 {
    if g.abs() < 1e-6 {
        return 2.0 * u - 1.0;
    }
    let t = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
    ((1.0 + g * g - t * t) / (2.0 * g)).clamp(-1.0, 1.0)
}

/// Independent stream for photon `index` under `seed`.
pub fn photon_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn combine(a: f64, x: &Vec3, b: f64, y: &Vec3) -> Vec3 {
    [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2]]
}

fn normalize(x: Vec3) -> Vec3 {
    let n = dot(&x, &x).sqrt();
    [x[0] / n, x[1] / n, x[2] / n]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Global H/V reference axes carried to direction `k` by the minimal
/// rotation from `+z`.
fn exit_frame(k: &Vec3) -> (Vec3, Vec3) {
    let [a, b, c] = *k;
    let s = 1.0 / (1.0 + c);
    ([1.0 - a * a * s, -a * b * s, -a], [-a * b * s, 1.0 - b * b * s, -b])
}

fn rescale_to_unit_singular(j: Matrix2<C64>) -> Matrix2<C64> {
    let s = linalg::singular_values2(&j)[0];
    if s > 0.0 {
        j.unscale(s)
    } else {
        j
    }
}

/// Traces a single photon through `medium`.
pub fn trace_photon<R: Rng + ?Sized>(medium: &Medium, rng: &mut R) -> PathRecord {
    let cos_accept = medium.acceptance_half_angle.cos();
    // local field frame (u, v) transverse to the propagation direction k
    let mut u: Vec3 = [1.0, 0.0, 0.0];
    let mut v: Vec3 = [0.0, 1.0, 0.0];
    let mut k: Vec3 = [0.0, 0.0, 1.0];
    let mut z = 0.0;
    let mut jones = Matrix2::<C64>::identity();
    let mut events = 0u32;

    loop {
        let step = -(1.0 - rng.random::<f64>()).ln() / medium.mu_s;
        let z_next = z + step * k[2];
        if z_next >= medium.d || z_next < 0.0 {
            let transmitted = z_next >= medium.d && k[2] >= cos_accept;
            if transmitted {
                let (h, vv) = exit_frame(&k);
                let proj = Matrix2::new(
                    C64::from(dot(&u, &h)),
                    C64::from(dot(&v, &h)),
                    C64::from(dot(&u, &vv)),
                    C64::from(dot(&v, &vv)),
                );
                jones = proj * jones;
            }
            return PathRecord { jones, exit_direction: k, n_events: events, transmitted };
        }
        z = z_next;
        if events >= MAX_EVENTS {
            return PathRecord { jones, exit_direction: k, n_events: events, transmitted: false };
        }
        events += 1;

        let cos_t = sample_henyey_greenstein(medium.g, rng.random());
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        let (sin_p, cos_p) = phi.sin_cos();

        // rotate the field frame about k so that u lies in the scattering plane
        let u_rot = combine(cos_p, &u, sin_p, &v);
        let rot = Matrix2::new(C64::from(cos_p), C64::from(sin_p), C64::from(-sin_p), C64::from(cos_p));
        let amplitude = Matrix2::new(C64::from(cos_t), C64::from(0.0), C64::from(0.0), C64::from(1.0));
        jones = rescale_to_unit_singular(amplitude * rot * jones);

        let k_new = normalize(combine(cos_t, &k, sin_t, &u_rot));
        let u_new = normalize(combine(cos_t, &u_rot, -sin_t, &k));
        k = k_new;
        u = u_new;
        // v is unchanged by the tilt; rebuilding it keeps the frame orthonormal
        v = cross(&k, &u);
    }
}

/// Traces `n_photons` photons, in photon-index order.
pub fn simulate_paths(medium: &Medium, n_photons: usize, seed: u64) -> Vec<PathRecord> {
    (0..n_photons as u64).into_par_iter().map(|idx| trace_photon(medium, &mut photon_rng(seed, idx))).collect()
}

/// Equal-weight ensemble of transmitted path Jones matrices.
pub fn simulate(medium: &Medium, n_photons: usize, seed: u64) -> Result<KrausEnsemble> {
    medium.validate()?;
    if n_photons == 0 {
        return Err(Error::InvalidArgument("n_photons must be at least 1".into()));
    }
    let jones: Vec<Matrix2<C64>> =
        simulate_paths(medium, n_photons, seed).into_iter().filter(|p| p.transmitted).map(|p| p.jones).collect();
    if jones.is_empty() {
        return Err(Error::NoTransmission);
    }
    KrausEnsemble::uniform(jones)
}

/// Keeps at most `max_items` elements chosen by reservoir sampling (in
/// original order) and reassigns equal weights.
pub fn reservoir_subsample(ch: &KrausEnsemble, max_items: usize, seed: u64) -> Result<KrausEnsemble> {
    if ch.len() <= max_items {
        return Ok(ch.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir: Vec<usize> = (0..max_items).collect();
    for i in max_items..ch.len() {
        let j = rng.random_range(0..=i);
        if j < max_items {
            reservoir[j] = i;
        }
    }
    reservoir.sort_unstable();
    let w = 1.0 / max_items as f64;
    KrausEnsemble::new(reservoir.into_iter().map(|i| KrausItem::new(w, ch.items()[i].jones)).collect())
}

/// Simulated channel at one effective thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPoint {
    pub eta: f64,
    pub mueller: MuellerMatrix,
    pub transmittance: f64,
    pub n_transmitted: usize,
    /// Isotropic depolarization parameter fitted to the Bell-state response.
    pub m_fit: f64,
}

/// Isotropic `m` for a Mueller matrix, fitted from the `|Ψ+⟩` two-photon
/// response `M K_bell Mᵀ`.
pub fn isotropic_m(mueller: &MuellerMatrix) -> f64 {
    let k_in = CorrelationTensor::bell();
    let k_out = propagate_tensor_normalized(mueller, &k_in);
    fit_diagonal(&k_in, &k_out, DiagonalModel::Isotropic).params[0]
}

/// Simulates the template medium at each effective thickness in `eta_grid`
/// by adjusting the slab thickness.
pub fn mueller_vs_eta(template: &Medium, eta_grid: &[f64], n_photons: usize, seed: u64) -> Result<Vec<EtaPoint>> {
    if eta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("eta grid must be strictly increasing".into()));
    }
    eta_grid
        .iter()
        .map(|&eta| {
            let medium = template.with_effective_thickness(eta);
            let ch = simulate(&medium, n_photons, seed)?;
            let (mueller, transmittance) = mueller_from_kraus(&ch)?;
            Ok(EtaPoint { eta, mueller, transmittance, n_transmitted: ch.len(), m_fit: isotropic_m(&mueller) })
        })
        .collect()
}
