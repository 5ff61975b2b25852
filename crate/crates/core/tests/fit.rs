use nalgebra::Matrix4;
use qpol2::channel::{mueller_from_kraus, propagate_tensor, propagate_tensor_normalized, KrausEnsemble, MuellerMatrix};
use qpol2::fit::*;
use qpol2::polarization::{correlation_tensor, CorrelationTensor};
use qpol2::random::{random_density, random_pure, random_pure_product, random_unitary2};
use qpol2::scatter::{simulate, Medium};
use qpol2::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn realizable_mueller(rng: &mut ChaCha8Rng) -> MuellerMatrix {
    let u = random_unitary2(rng);
    let (rot, _) = mueller_from_kraus(&KrausEnsemble::single(u).unwrap()).unwrap();
    let d = MuellerMatrix::diagonal(rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.5..1.0));
    MuellerMatrix::from_normalized(rot.matrix() * d.matrix())
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn diagonal_gradient_matches_finite_differences() {
    let mut r = rng(1);
    let k_in = correlation_tensor(&random_density(&mut r, 4)).unwrap();
    let k_out = correlation_tensor(&random_density(&mut r, 4)).unwrap();
    for model in [DiagonalModel::Diagonal, DiagonalModel::Isotropic] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..model.n_params()).map(|_| r.random_range(0.0..1.0)).collect();
            let g = diagonal_gradient(&k_in, &k_out, model, &x);
            let fd = central_difference(|p| diagonal_objective(&k_in, &k_out, model, p), &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{model:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn general_gradient_matches_finite_differences() {
    let mut r = rng(2);
    let pairs: Vec<(CorrelationTensor, CorrelationTensor)> = (0..2)
        .map(|_| {
            (
                correlation_tensor(&random_density(&mut r, 4)).unwrap(),
                correlation_tensor(&random_density(&mut r, 4)).unwrap(),
            )
        })
        .collect();
    for _ in 0..20 {
        let x: Vec<f64> = (0..15).map(|_| r.random_range(-1.0..1.0)).collect();
        let g = general_gradient(&pairs, &x);
        let fd = central_difference(|p| general_objective(&pairs, p), &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn diagonal_grid_recovery() {
    let k_in = CorrelationTensor::bell();
    let levels = [0.2, 0.4, 0.6, 0.8, 1.0];
    for &a in &levels {
        for &b in &levels {
            for &c in &levels {
                let k_out = propagate_tensor(&MuellerMatrix::diagonal(a, b, c), &k_in);
                let fit = fit_diagonal(&k_in, &k_out, DiagonalModel::Diagonal);
                assert!(fit.converged);
                for (p, t) in fit.params.iter().zip([a, b, c]) {
                    assert!((p - t).abs() < 1e-8, "({a}, {b}, {c}) -> {:?}", fit.params);
                }
            }
        }
    }
}

#[test]
fn diagonal_fit_tolerates_noise() {
    let mut r = rng(3);
    let k_in = CorrelationTensor::bell();
    for _ in 0..20 {
        let truth = [r.random_range(0.3..1.0), r.random_range(0.3..1.0), r.random_range(0.3..1.0)];
        let clean = propagate_tensor(&MuellerMatrix::diagonal(truth[0], truth[1], truth[2]), &k_in).0;
        let mut noisy = clean + Matrix4::from_fn(|_, _| 1e-3 * r.sample::<f64, _>(StandardNormal));
        noisy[(0, 0)] = 1.0;
        let fit = fit_diagonal(&k_in, &CorrelationTensor(noisy), DiagonalModel::Diagonal);
        for (p, t) in fit.params.iter().zip(truth) {
            assert!((p - t).abs() < 5e-3, "{truth:?} -> {:?}", fit.params);
        }
    }
}

#[test]
fn isotropic_fit_on_werner_output() {
    let k_in = CorrelationTensor::bell();
    for m in [0.0, 0.3, 0.7, 1.0] {
        let k_out = propagate_tensor(&MuellerMatrix::diagonal(m, m, m), &k_in);
        let fit = fit_diagonal(&k_in, &k_out, DiagonalModel::Isotropic);
        assert!((fit.params[0] - m).abs() < 1e-8);
        assert_eq!(fit.model, FitModel::Isotropic);
    }
}

#[test]
fn bad_inputs_rejected() {
    let k = CorrelationTensor::bell();
    let bad = CorrelationTensor::diagonal([2.0, 0.0, 0.0, 0.0]);
    assert!(fit_diagonal_with(&bad, &k, DiagonalModel::Diagonal, None, &LmOptions::default()).is_err());
    let nan = CorrelationTensor::diagonal([1.0, f64::NAN, 0.0, 0.0]);
    let failed = fit_diagonal(&k, &nan, DiagonalModel::Diagonal);
    assert!(failed.params.iter().all(|p| p.is_nan()) && !failed.converged);
    assert!(fit_diagonal_with(&k, &k, DiagonalModel::Diagonal, Some(&[0.5]), &LmOptions::default()).is_err());
    assert!(fit_general(&[]).is_err());
}

#[test]
fn stabilizer_dimensions() {
    assert_eq!(stabilizer_dimension(&[CorrelationTensor::bell()]).lie_algebra_dim, 6);
    let mixed = CorrelationTensor::diagonal([1.0, 0.0, 0.0, 0.0]);
    assert_eq!(stabilizer_dimension(&[mixed]).lie_algebra_dim, 12);
    assert_eq!(stabilizer_dimension(&[]).lie_algebra_dim, 16);
    let mut r = rng(4);
    for _ in 0..20 {
        let p = correlation_tensor(&random_pure_product(&mut r)).unwrap();
        assert_eq!(stabilizer_dimension(&[p]).lie_algebra_dim, 9);
        assert_eq!(stabilizer_dimension(&[CorrelationTensor::bell(), p]).lie_algebra_dim, 1);
        let e = correlation_tensor(&random_pure(&mut r, 4)).unwrap();
        assert_eq!(stabilizer_dimension(&[CorrelationTensor::bell(), e]).lie_algebra_dim, 0);
    }
}

#[test]
fn stabilizer_shrinks_with_more_inputs() {
    let mut r = rng(5);
    for _ in 0..10 {
        let mut inputs = Vec::new();
        let mut previous = 16;
        for _ in 0..4 {
            inputs.push(correlation_tensor(&random_density(&mut r, 4)).unwrap());
            let dim = stabilizer_dimension(&inputs).lie_algebra_dim;
            assert!(dim <= previous);
            previous = dim;
        }
    }
}

#[test]
fn stabilizer_generates_invisible_changes() {
    let k = CorrelationTensor::bell();
    let basis = stabilizer_basis(&[k]);
    assert_eq!(basis.len(), 6);
    let m = MuellerMatrix::diagonal(0.9, 0.8, 0.7);
    let target = propagate_tensor(&m, &k);
    for x in basis {
        assert!((x * k.0 + k.0 * x.transpose()).amax() < 1e-10);
        let o = (x * 0.4).exp();
        let shifted = MuellerMatrix::from_normalized(m.matrix() * o);
        assert!((propagate_tensor(&shifted, &k).0 - target.0).amax() < 1e-10);
    }
}

#[test]
fn general_fit_with_two_entangled_inputs() {
    let mut r = rng(6);
    for trial in 0..5 {
        let truth = realizable_mueller(&mut r);
        let second = correlation_tensor(&random_pure(&mut r, 4)).unwrap();
        let pairs: Vec<_> =
            [CorrelationTensor::bell(), second].into_iter().map(|k| (k, propagate_tensor(&truth, &k))).collect();
        let fit = fit_general(&pairs).unwrap();
        let err = (fit.mueller().matrix() - truth.matrix()).amax();
        assert!(err < 1e-6, "trial {trial}: error {err}");
        assert!(fit.residual < 1e-12);
    }
}

#[test]
fn general_fit_single_bell_is_underdetermined() {
    let k = CorrelationTensor::bell();
    let out = propagate_tensor(&MuellerMatrix::diagonal(0.9, 0.9, 0.9), &k);
    assert!(matches!(fit_general(&[(k, out)]), Err(Error::Underdetermined(6))));
}

#[test]
fn general_fit_is_seeded() {
    let mut r = rng(7);
    let truth = realizable_mueller(&mut r);
    let pairs: Vec<_> = (0..2)
        .map(|_| {
            let k = correlation_tensor(&random_density(&mut r, 4)).unwrap();
            (k, propagate_tensor(&truth, &k))
        })
        .collect();
    let opts = GeneralFitOptions { seed: 99, ..GeneralFitOptions::default() };
    assert_eq!(fit_general_with(&pairs, &opts).unwrap(), fit_general_with(&pairs, &opts).unwrap());
}

#[test]
fn single_pixel_image() {
    let k_in = CorrelationTensor::bell();
    let px = propagate_tensor(&MuellerMatrix::diagonal(0.5, 0.6, 0.7), &k_in);
    let map = reconstruct_image(&k_in, &[px], 1, 1, DiagonalModel::Diagonal).unwrap();
    assert_eq!((map.width, map.height), (1, 1));
    for (p, t) in map.pixel(0, 0).iter().zip([0.5, 0.6, 0.7]) {
        assert!((p - t).abs() < 1e-8);
    }
    assert!(map.failures.is_empty());
    assert!(reconstruct_image(&k_in, &[px], 0, 1, DiagonalModel::Diagonal).is_err());
}

#[test]
fn image_planes_follow_a_gradient() {
    let k_in = CorrelationTensor::bell();
    let (w, h) = (8, 6);
    let truth = |x: usize, y: usize| (0.3 + 0.05 * x as f64, 0.4 + 0.05 * y as f64, 0.9);
    let pixels: Vec<_> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (a, b, c) = truth(x, y);
            propagate_tensor(&MuellerMatrix::diagonal(a, b, c), &k_in)
        })
        .collect();
    let map = reconstruct_image(&k_in, &pixels, w, h, DiagonalModel::Diagonal).unwrap();
    let plane = map.plane(1);
    for y in 0..h {
        for x in 0..w {
            assert!((plane[y * w + x] - truth(x, y).1).abs() < 1e-8);
        }
    }
    assert!(map.max_residual() < 1e-12);
}

#[test]
fn scattering_pipeline_similarity() {
    let template = Medium::new(10.0, 0.9, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
    let ch = simulate(&template.with_effective_thickness(0.26), 50_000, 12).unwrap();
    let (truth, _) = mueller_from_kraus(&ch).unwrap();
    let k_in = CorrelationTensor::bell();
    let k_out = propagate_tensor_normalized(&truth, &k_in);
    let fit = fit_diagonal(&k_in, &k_out, DiagonalModel::Diagonal);
    assert!(mueller_similarity(&fit.mueller(), &truth) > 0.9);
    assert!((mueller_similarity(&truth, &truth) - 1.0).abs() < 1e-15);
}
