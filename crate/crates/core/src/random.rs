//! Random states, unitaries and channels for property tests and synthetic data.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{KrausEnsemble, KrausItem};
use crate::linalg::C64;
use crate::polarization::{DensityMatrix, StokesVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Matrix with orthonormal columns, Haar distributed.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix column phases so the distribution is Haar
    for c in 0..cols {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..rows {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let q = random_isometry(rng, 2, 2);
    Matrix2::from_fn(|r, c| q[(r, c)])
}

pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    DensityMatrix::from_pure(&random_pure_vector(rng, dim)).expect("normalized pure state")
}

/// Full-rank mixed state `G G† / Tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, dim);
    let m = &g * g.adjoint();
    DensityMatrix::from_unnormalized(m).expect("Ginibre state is valid").0
}

/// Pure product state `|a⟩⊗|b⟩` with random single-photon factors.
pub fn random_pure_product<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let a = random_pure(rng, 2);
    let b = random_pure(rng, 2);
    DensityMatrix::product(&a, &b).expect("product of valid states")
}

/// Physical Stokes vector with `S0 = 1` and a uniformly drawn degree of
/// polarization.
pub fn random_stokes<R: Rng + ?Sized>(rng: &mut R) -> StokesVector {
    let dir: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let dop: f64 = rng.random();
    StokesVector::new(1.0, dop * dir[0] / norm, dop * dir[1] / norm, dop * dir[2] / norm)
}

/// Trace-preserving ensemble of `n` Kraus operators, taken as the 2×2 blocks
/// of a random `2n × 2` isometry.
pub fn random_cptp_ensemble<R: Rng + ?Sized>(rng: &mut R, n: usize) -> KrausEnsemble {
    let v = random_isometry(rng, 2 * n, 2);
    let mut items = Vec::with_capacity(n);
    for k in 0..n {
        let block = Matrix2::from_fn(|r, c| v[(2 * k + r, c)]);
        let w = block.iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0;
        let jones = if w > 0.0 { block.unscale(w.sqrt()) } else { Matrix2::identity() };
        items.push(KrausItem::new(w, jones));
    }
    // renormalize the weights against rounding drift
    let total: f64 = items.iter().map(|it| it.weight).sum();
    for it in &mut items {
        it.weight /= total;
    }
    KrausEnsemble::new(items).expect("isometry blocks form a valid ensemble")
}

/// Equal-weight ensemble of random Jones matrices scaled so each has largest
/// singular value at most one (a lossy, diattenuating channel).
pub fn random_lossy_ensemble<R: Rng + ?Sized>(rng: &mut R, n: usize) -> KrausEnsemble {
    let jones = (0..n)
        .map(|_| {
            let g = Matrix2::from_fn(|_, _| gaussian(rng));
            let s = crate::linalg::singular_values2(&g)[0];
            g.unscale(s)
        })
        .collect();
    KrausEnsemble::uniform(jones).expect("contractive Jones matrices")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cptp_ensembles_preserve_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            let ch = random_cptp_ensemble(&mut rng, n);
            let t = ch.trace_operator();
            assert!((t - Matrix2::identity()).camax() < 1e-12);
        }
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary2(&mut rng);
        assert!((u.adjoint() * u - Matrix2::identity()).camax() < 1e-14);
    }
}
