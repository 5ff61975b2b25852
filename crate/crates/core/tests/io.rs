use qpol2::channel::MuellerMatrix;
use qpol2::io::*;
use qpol2::metrics::isotropic_sweep;
use qpol2::polarization::{correlation_tensor, CorrelationTensor};
use qpol2::random::{random_cptp_ensemble, random_density, random_lossy_ensemble};
use qpol2::tomography::simulate_counts;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn density_file_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for dim in [2, 4] {
        let rho = random_density(&mut rng, dim);
        let path = dir.path().join(format!("rho{dim}.json"));
        write_density(&path, &rho).unwrap();
        assert_eq!(read_density(&path).unwrap(), rho);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.trim_start().starts_with("{\n  \"schema\": \"qpol2/v1\""));
    }
}

#[test]
fn kraus_file_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for ch in [random_cptp_ensemble(&mut rng, 5), random_lossy_ensemble(&mut rng, 3)] {
        let path = dir.path().join("ch.json");
        write_kraus(&path, &ch).unwrap();
        assert_eq!(read_kraus(&path).unwrap(), ch);
    }
}

#[test]
fn tensor_and_mueller_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = correlation_tensor(&random_density(&mut rng, 4)).unwrap();
    let path = dir.path().join("k.csv");
    write_tensor(&path, &k).unwrap();
    assert_eq!(read_tensor(&path).unwrap(), k);
    let m = MuellerMatrix::diagonal(0.25, 0.5, 0.75);
    let mp = dir.path().join("m.csv");
    write_mueller(&mp, &m).unwrap();
    assert_eq!(read_mueller(&mp).unwrap(), m);
    std::fs::write(&mp, "# unnormalized\n2,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n").unwrap();
    assert_eq!(read_mueller(&mp).unwrap(), MuellerMatrix::diagonal(0.5, 0.5, 0.5));
    assert!(matrix4_from_csv("1,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n").is_err());
    assert!(matrix4_from_csv("1,0,0,0\n0,1,0,0\n0,0,1,0\n").is_err());
}

#[test]
fn counts_csv_roundtrip() {
    let counts = simulate_counts(&qpol2::polarization::werner(0.7).unwrap(), 1000, 5, true).unwrap();
    let text = counts_to_csv(&counts);
    assert_eq!(text.lines().count(), 37);
    let back = counts_from_csv(&text).unwrap();
    for (a, b) in counts.iter().zip(&back) {
        assert_eq!((a.setting_a, a.setting_b, a.observed, a.pairs), (b.setting_a, b.setting_b, b.observed, b.pairs));
    }
    assert!(counts_from_csv("a,b\nH,H,1,1\n").is_err());
    assert!(counts_from_csv(&format!("{COUNTS_HEADER}\nH,X,1,1\n")).is_err());
}

#[test]
fn sweep_csv_layout() {
    let rows = isotropic_sweep(0.0, 1.0, 11).unwrap();
    let text = sweep_to_csv(&rows);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0], SWEEP_HEADER);
    assert!(lines.iter().all(|l| l.split(',').count() == 9));
    let half: Vec<f64> = lines[6].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(half[0], 0.5);
    assert!((half[3] - 0.4375).abs() < 1e-14);
    assert!((half[4] - 0.296875).abs() < 1e-14);
}

#[test]
fn grid_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pixels: Vec<CorrelationTensor> =
        (0..6).map(|_| correlation_tensor(&random_density(&mut rng, 4)).unwrap()).collect();
    let mut buf = Vec::new();
    write_grid(&mut buf, 3, 2, &pixels).unwrap();
    assert_eq!(buf.len(), 16 + 6 * 128);
    let (w, h, back) = read_grid(buf.as_slice()).unwrap();
    assert_eq!((w, h), (3, 2));
    assert_eq!(back, pixels);
    assert!(read_grid(&buf[..buf.len() - 1]).is_err());
    assert!(write_grid(Vec::new(), 2, 2, &pixels).is_err());
}

#[test]
fn float_formatting_roundtrips() {
    for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn schema_is_checked() {
    let v: serde_json::Value = from_json("{\"a\": 1}").unwrap();
    assert_eq!(v["a"], 1);
    assert!(from_json::<serde_json::Value>("{\"schema\": \"other/v9\"}").is_err());
}
