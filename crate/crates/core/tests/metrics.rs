use nalgebra::DMatrix;
use qpol2::channel::{apply_one_photon, apply_two_photon_independent, kraus_from_diagonal_mueller, Arm};
use qpol2::linalg::{self, C64};
use qpol2::metrics::*;
use qpol2::polarization::{bell_psi_plus, pauli_pair, werner, DensityMatrix};
use qpol2::random::{random_density, random_pure, random_pure_product};
use qpol2::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn concurrence_oracle(rho: &DensityMatrix) -> f64 {
    let flip = linalg::to_dynamic4(&pauli_pair(3, 3));
    let tilde = &flip * rho.matrix().map(|z| z.conj()) * &flip;
    let prod: DMatrix<C64> = rho.matrix() * tilde;
    let eig = prod.eigenvalues().expect("Schur converges");
    let mut l: Vec<f64> = eig.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

#[test]
fn reference_states() {
    let bell = bell_psi_plus();
    assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-10);
    assert!((purity(&bell) - 1.0).abs() < 1e-14);
    assert!(von_neumann_entropy(&bell).unwrap() < 1e-10);
    let mixed = DensityMatrix::maximally_mixed(4).unwrap();
    assert!(concurrence(&mixed).unwrap() < 1e-12);
    assert!((purity(&mixed) - 0.25).abs() < 1e-15);
    assert!((von_neumann_entropy(&mixed).unwrap() - 2.0).abs() < 1e-12);
    let hh =
        DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
    assert!(concurrence(&hh).unwrap() < 1e-10);
    assert!(matches!(dephasing_strength(&hh, &hh), Err(Error::DephasingUndefined)));
    assert!(concurrence(&DensityMatrix::maximally_mixed(2).unwrap()).is_err());
}

#[test]
fn werner_family() {
    for i in 0..=20 {
        let p = i as f64 / 20.0;
        let rho = werner(p).unwrap();
        let expected = ((3.0 * p - 1.0) / 2.0).max(0.0);
        assert!((concurrence(&rho).unwrap() - expected).abs() < 1e-9, "p = {p}");
        assert!((von_neumann_entropy(&rho).unwrap() - werner_entropy(p)).abs() < 1e-10);
        assert!((purity(&rho) - (1.0 + 3.0 * p * p) / 4.0).abs() < 1e-14);
    }
    assert!((werner_entropy(0.5) - 1.548_794_940_695_398_5).abs() < 1e-9);
}

#[test]
fn concurrence_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..20 {
        let rho = match k % 3 {
            0 => random_pure(&mut rng, 4),
            1 => random_density(&mut rng, 4),
            _ => random_pure_product(&mut rng),
        };
        let c = concurrence(&rho).unwrap();
        let o = concurrence_oracle(&rho);
        assert!((c - o).abs() < 1e-6, "state {k}: {c} vs {o}");
        assert!((0.0..=1.0 + 1e-12).contains(&c));
        let pure = (purity(&rho) - 1.0).abs() < 1e-9;
        assert_eq!(pure, von_neumann_entropy(&rho).unwrap() < 1e-9, "state {k}");
    }
}

#[test]
fn isotropic_sweep_laws() {
    let rows = isotropic_sweep(0.0, 1.0, 101).unwrap();
    for r in &rows {
        let m = r.m;
        assert!((r.opp.purity - purity_closed_form(m, m, m, ProbeMode::Opp)).abs() < 1e-12);
        assert!((r.tpp.purity - purity_closed_form(m, m, m, ProbeMode::Tpp)).abs() < 1e-12);
        assert!((r.opp.concurrence - ((3.0 * m - 1.0) / 2.0).max(0.0)).abs() < 1e-8);
        assert!((r.tpp.concurrence - ((3.0 * m * m - 1.0) / 2.0).max(0.0)).abs() < 1e-8);
        assert!((r.opp.dephasing.unwrap() - (1.0 - m)).abs() < 1e-12);
        assert!((r.tpp.dephasing.unwrap() - (1.0 - m * m)).abs() < 1e-12);
        assert!(r.tpp.purity <= r.opp.purity + 1e-15);
        assert!(r.tpp.concurrence <= r.opp.concurrence + 1e-12);
    }
    for w in rows.windows(2) {
        assert!(w[1].opp.purity > w[0].opp.purity);
        assert!(w[1].tpp.purity >= w[0].tpp.purity);
        assert!(w[1].opp.concurrence >= w[0].opp.concurrence - 1e-12);
        assert!(w[1].tpp.entropy <= w[0].tpp.entropy + 1e-12);
    }
    let half = isotropic_sweep_point(0.5).unwrap();
    assert!((half.opp.purity - 0.4375).abs() < 1e-14);
    assert!((half.tpp.purity - 0.296875).abs() < 1e-14);
}

#[test]
fn concurrence_thresholds() {
    let eps = 1e-4;
    let opp = 1.0 / 3.0;
    let tpp = 1.0 / 3f64.sqrt();
    assert!(isotropic_sweep_point(opp - eps).unwrap().opp.concurrence < 1e-10);
    assert!(isotropic_sweep_point(opp + eps).unwrap().opp.concurrence > 0.0);
    assert!(isotropic_sweep_point(tpp - eps).unwrap().tpp.concurrence < 1e-10);
    assert!(isotropic_sweep_point(tpp + eps).unwrap().tpp.concurrence > 0.0);
}

#[test]
fn anisotropic_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bell = bell_psi_plus();
    let mut checked = 0;
    while checked < 30 {
        let m: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let Ok(ch) = kraus_from_diagonal_mueller(m[0], m[1], m[2]) else { continue };
        let (opp, _) = apply_one_photon(&ch, &bell, Arm::First).unwrap();
        let (tpp, _) = apply_two_photon_independent(&ch, &bell).unwrap();
        assert!((purity(&opp) - purity_closed_form(m[0], m[1], m[2], ProbeMode::Opp)).abs() < 1e-12);
        assert!((purity(&tpp) - purity_closed_form(m[0], m[1], m[2], ProbeMode::Tpp)).abs() < 1e-12);
        assert!((purity_from_tensor(&tpp).unwrap() - purity(&tpp)).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn sensitivity_matches_stencil() {
    let h = 1e-3;
    let m_of = |eta: f64| (-0.8 * eta).exp();
    let dm = |eta: f64| -0.8 * m_of(eta);
    for mode in [ProbeMode::Opp, ProbeMode::Tpp] {
        let gamma = |eta: f64| {
            let m = m_of(eta);
            purity_closed_form(m, m, m, mode)
        };
        for eta in [0.05, 0.2, 0.5, 1.0] {
            let fd = (-gamma(eta + 2.0 * h) + 8.0 * gamma(eta + h) - 8.0 * gamma(eta - h) + gamma(eta - 2.0 * h))
                / (12.0 * h);
            let analytic = purity_sensitivity(m_of(eta), dm(eta), mode);
            assert!((fd - analytic).abs() < 1e-9 * analytic.abs().max(1.0), "{mode:?} {eta}");
        }
    }
    assert!((purity_sensitivity(0.5, -1.0, ProbeMode::Opp) + 0.75).abs() < 1e-15);
    assert!((purity_sensitivity(0.5, -1.0, ProbeMode::Tpp) + 0.375).abs() < 1e-15);
}

#[test]
fn report_fields() {
    let bell = bell_psi_plus();
    let ch = kraus_from_diagonal_mueller(0.7, 0.7, 0.7).unwrap();
    let (out, _) = apply_two_photon_independent(&ch, &bell).unwrap();
    let r = MetricsReport::compute(&out, &bell).unwrap();
    assert!((r.purity - purity_closed_form(0.7, 0.7, 0.7, ProbeMode::Tpp)).abs() < 1e-12);
    assert!((r.dephasing.unwrap() - 0.51).abs() < 1e-12);
    assert!(r.entropy > 0.0 && r.concurrence > 0.0);
}

#[test]
fn sweep_rejects_bad_ranges() {
    assert!(isotropic_sweep(0.5, 0.2, 5).is_err());
    assert!(isotropic_sweep(0.0, 1.5, 5).is_err());
    assert!(isotropic_sweep(0.0, 1.0, 1).is_err());
}
