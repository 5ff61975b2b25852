use std::fmt::Display;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use qpol2::channel::{
    apply_one_photon, apply_two_photon, kraus_from_diagonal_mueller, mueller_from_kraus, Arm, TwoPhotonMode,
};
use qpol2::fit::{fit_diagonal_with, fit_general_with, reconstruct_image, DiagonalModel, GeneralFitOptions, LmOptions};
use qpol2::metrics::{isotropic_sweep, MetricsReport};
use qpol2::polarization::{correlation_tensor, density_to_stokes};
use qpol2::scatter::{self, effective_thickness, isotropic_m, Medium, DEFAULT_ACCEPTANCE_DEG};
use qpol2::tomography::{fidelity, reconstruct, simulate_counts};
use qpol2::{io, CorrelationTensor, DensityMatrix, Error, KrausEnsemble};

use crate::{ArmArg, ModelArg, PropagateMode};

/// Command failure, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Domain or runtime failure (exit 1).
    Runtime(anyhow::Error),
    /// Bad arguments, unreadable files or schema errors (exit 2).
    Usage(anyhow::Error),
    /// General fit with a non-identifiable input set (exit 3).
    NonIdentifiable(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::NonIdentifiable(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Runtime(e) | Failure::Usage(e) | Failure::NonIdentifiable(e) => e,
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

trait OrFail<T> {
    fn usage(self, ctx: impl Display) -> std::result::Result<T, Failure>;
    fn runtime(self, ctx: impl Display) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFail<T> for std::result::Result<T, E> {
    fn usage(self, ctx: impl Display) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into().context(ctx.to_string())))
    }

    fn runtime(self, ctx: impl Display) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into().context(ctx.to_string())))
    }
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).runtime(format!("writing {}", path.display()))
}

fn out_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).runtime(format!("creating {}", dir.display()))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_state(path: &Path) -> std::result::Result<DensityMatrix, Failure> {
    io::read_density(path).usage(format!("reading state {}", path.display()))
}

/// Density-matrix JSON (converted to its tensor) or 4×4 tensor CSV.
fn read_tensor_like(path: &Path) -> std::result::Result<CorrelationTensor, Failure> {
    let ctx = format!("reading tensor {}", path.display());
    if is_json(path) {
        let rho = io::read_density(path).usage(&ctx)?;
        correlation_tensor(&rho).usage(&ctx)
    } else {
        io::read_tensor(path).usage(&ctx)
    }
}

/// Kraus JSON, or a diagonal Mueller CSV realized as a Pauli channel.
fn read_channel(path: &Path) -> std::result::Result<KrausEnsemble, Failure> {
    let ctx = format!("reading channel {}", path.display());
    if is_json(path) {
        return io::read_kraus(path).usage(&ctx);
    }
    let text = fs::read_to_string(path).usage(&ctx)?;
    let m = io::matrix4_from_csv(&text).usage(&ctx)?;
    let m00 = m[(0, 0)];
    if !(m00 > 0.0) {
        return Err(Failure::Usage(anyhow!("{ctx}: M00 must be positive")));
    }
    let m = m / m00;
    let off = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].abs());
    if off.fold(0.0, f64::max) > 1e-12 {
        return Err(Failure::Usage(anyhow!(
            "{ctx}: only diagonal Mueller matrices can be realized; pass a Kraus JSON"
        )));
    }
    kraus_from_diagonal_mueller(m[(1, 1)], m[(2, 2)], m[(3, 3)]).runtime(&ctx)
}

// ---------------------------------------------------------------------------

pub fn sweep(m_min: f64, m_max: f64, steps: usize, out: Option<&Path>) -> CmdResult {
    let rows = isotropic_sweep(m_min, m_max, steps).map_err(|e| match e {
        Error::InvalidArgument(_) => Failure::Usage(e.into()),
        e => Failure::Runtime(e.into()),
    })?;
    let csv = io::sweep_to_csv(&rows);
    match out {
        Some(p) => write(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Debug, Deserialize)]
struct McConfig {
    mu_s: f64,
    g: f64,
    #[serde(default)]
    d: Option<f64>,
    #[serde(default)]
    acceptance_deg: Option<f64>,
    n_photons: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    eta_grid: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct McSummary {
    eta: f64,
    m: f64,
    transmittance: f64,
    n_photons: usize,
    n_transmitted: usize,
    seed: u64,
}

pub fn mc(config: &Path, seed: u64, out: &Path, max_paths: usize) -> CmdResult {
    let ctx = format!("reading config {}", config.display());
    let text = fs::read_to_string(config).usage(&ctx)?;
    let cfg: McConfig = io::from_json(&text).usage(&ctx)?;
    if let Some(s) = cfg.seed.filter(|&s| s != seed) {
        log::warn!("--seed {seed} overrides config seed {s}");
    }
    let acceptance = cfg.acceptance_deg.unwrap_or(DEFAULT_ACCEPTANCE_DEG).to_radians();
    if cfg.n_photons == 0 {
        return Err(Failure::Usage(anyhow!("{ctx}: n_photons must be at least 1")));
    }
    out_dir(out)?;

    if let Some(grid) = &cfg.eta_grid {
        let template = Medium::new(cfg.mu_s, cfg.g, cfg.d.unwrap_or(0.0), acceptance).usage(&ctx)?;
        let points = scatter::mueller_vs_eta(&template, grid, cfg.n_photons, seed).map_err(|e| match e {
            Error::InvalidArgument(_) => Failure::Usage(e.into()),
            e => Failure::Runtime(e.into()),
        })?;
        let mut csv = String::from("eta,m,transmittance,n_transmitted\n");
        println!("eta,m,transmittance,n_transmitted");
        for (i, p) in points.iter().enumerate() {
            let row = format!(
                "{},{},{},{}",
                io::fmt_f64(p.eta),
                io::fmt_f64(p.m_fit),
                io::fmt_f64(p.transmittance),
                p.n_transmitted
            );
            println!("{row}");
            csv.push_str(&row);
            csv.push('\n');
            io::write_mueller(&out.join(format!("mueller_eta{i}.csv")), &p.mueller).runtime("writing Mueller CSV")?;
        }
        return write(&out.join("eta_sweep.csv"), &csv);
    }

    let d = cfg.d.ok_or_else(|| Failure::Usage(anyhow!("{ctx}: \"d\" is required without \"eta_grid\"")))?;
    let medium = Medium::new(cfg.mu_s, cfg.g, d, acceptance).usage(&ctx)?;
    let ch = scatter::simulate(&medium, cfg.n_photons, seed).runtime("simulating")?;
    let (mueller, transmittance) = mueller_from_kraus(&ch).runtime("computing Mueller matrix")?;
    let summary = McSummary {
        eta: effective_thickness(&medium),
        m: isotropic_m(&mueller),
        transmittance,
        n_photons: cfg.n_photons,
        n_transmitted: ch.len(),
        seed,
    };
    let written =
        if max_paths > 0 { scatter::reservoir_subsample(&ch, max_paths, seed).runtime("subsampling")? } else { ch };
    io::write_kraus(&out.join("ensemble.json"), &written).runtime("writing ensemble")?;
    io::write_mueller(&out.join("mueller.csv"), &mueller).runtime("writing Mueller CSV")?;
    write(&out.join("summary.json"), &io::to_json(&summary).runtime("serializing")?)?;
    println!("eta {} m {}", io::fmt_f64(summary.eta), io::fmt_f64(summary.m));
    Ok(())
}

pub fn propagate(state: &Path, channel: &Path, mode: PropagateMode, arm: ArmArg, out: &Path) -> CmdResult {
    let rho = read_state(state)?;
    let ch = read_channel(channel)?;
    if rho.dim() == 2 && mode != PropagateMode::Opp {
        return Err(Failure::Usage(anyhow!("two-photon modes need a 4x4 state")));
    }
    let (rho_out, transmittance) = match mode {
        PropagateMode::Opp => {
            let arm = match (rho.dim(), arm) {
                (2, _) => Arm::None,
                (_, ArmArg::First) => Arm::First,
                (_, ArmArg::Second) => Arm::Second,
            };
            apply_one_photon(&ch, &rho, arm)
        }
        PropagateMode::TppIndependent => apply_two_photon(&ch, &rho, TwoPhotonMode::Independent),
        PropagateMode::TppCorrelated => apply_two_photon(&ch, &rho, TwoPhotonMode::Correlated),
    }
    .runtime("applying channel")?;

    out_dir(out)?;
    io::write_density(&out.join("state.json"), &rho_out).runtime("writing state")?;
    if rho_out.dim() == 2 {
        let s = density_to_stokes(&rho_out).runtime("computing Stokes vector")?;
        let fields: Vec<String> = s.0.iter().map(|&x| io::fmt_f64(x)).collect();
        println!("stokes {}", fields.join(","));
    } else {
        let k = correlation_tensor(&rho_out).runtime("computing tensor")?;
        io::write_tensor(&out.join("tensor.csv"), &k).runtime("writing tensor")?;
        let metrics = MetricsReport::compute(&rho_out, &rho).runtime("computing metrics")?;
        let json = io::to_json(&metrics).runtime("serializing")?;
        write(&out.join("metrics.json"), &json)?;
        print!("{json}");
    }
    println!("transmittance {}", io::fmt_f64(transmittance));
    Ok(())
}

pub fn tomo(state: &Path, pairs: u64, seed: u64, noisy: bool, out: &Path) -> CmdResult {
    let rho = read_state(state)?;
    if rho.dim() != 4 {
        return Err(Failure::Usage(anyhow!("tomography needs a 4x4 state")));
    }
    if pairs == 0 {
        return Err(Failure::Usage(anyhow!("--pairs must be positive")));
    }
    let counts = simulate_counts(&rho, pairs, seed, noisy).runtime("simulating counts")?;
    out_dir(out)?;
    write(&out.join("counts.csv"), &io::counts_to_csv(&counts))?;
    let rec = reconstruct(&counts).runtime("reconstructing")?;
    io::write_density(&out.join("reconstructed.json"), &rec).runtime("writing state")?;
    let f = fidelity(&rho, &rec).runtime("computing fidelity")?;
    println!("fidelity {}", io::fmt_f64(f));
    Ok(())
}

pub fn fit(
    kin: &[std::path::PathBuf],
    kout: &[std::path::PathBuf],
    model: ModelArg,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    if kin.len() != kout.len() {
        return Err(Failure::Usage(anyhow!("{} --kin paths but {} --kout paths", kin.len(), kout.len())));
    }
    let pairs = kin
        .iter()
        .zip(kout)
        .map(|(a, b)| Ok((read_tensor_like(a)?, read_tensor_like(b)?)))
        .collect::<std::result::Result<Vec<_>, Failure>>()?;
    let emit = |json: String| -> CmdResult {
        match out {
            Some(p) => write(p, &json),
            None => {
                print!("{json}");
                Ok(())
            }
        }
    };

    let result = match model {
        ModelArg::General => {
            let opts = GeneralFitOptions { seed, ..GeneralFitOptions::default() };
            match fit_general_with(&pairs, &opts) {
                Ok(r) => r,
                Err(Error::Underdetermined(dim)) => {
                    let inputs: Vec<CorrelationTensor> = pairs.iter().map(|(k, _)| *k).collect();
                    let report = qpol2::fit::stabilizer_dimension(&inputs);
                    emit(io::to_json(&report).runtime("serializing")?)?;
                    return Err(Failure::NonIdentifiable(anyhow!(
                        "underdetermined: stabilizer algebra of the inputs has dimension {dim}"
                    )));
                }
                Err(e @ (Error::InvalidTrace(_) | Error::InvalidArgument(_))) => return Err(Failure::Usage(e.into())),
                Err(e) => return Err(Failure::Runtime(e.into())),
            }
        }
        ModelArg::Isotropic | ModelArg::Diagonal => {
            if pairs.len() != 1 {
                return Err(Failure::Usage(anyhow!("diagonal models take exactly one --kin/--kout pair")));
            }
            let m = if model == ModelArg::Isotropic { DiagonalModel::Isotropic } else { DiagonalModel::Diagonal };
            fit_diagonal_with(&pairs[0].0, &pairs[0].1, m, None, &LmOptions::default()).usage("fitting")?
        }
    };
    emit(io::to_json(&result).runtime("serializing")?)?;
    if result.converged {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow!("fit did not converge after {} iterations", result.iterations)))
    }
}

#[derive(Serialize)]
struct ImageSummary {
    width: usize,
    height: usize,
    model: DiagonalModel,
    max_residual: f64,
    mean_residual: f64,
    failed_pixels: usize,
}

fn plane_csv(values: &[f64], width: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(width) {
        let fields: Vec<String> = row.iter().map(|&x| io::fmt_f64(x)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn image(kin: &Path, grid: &Path, model: ModelArg, out: &Path) -> CmdResult {
    let model = match model {
        ModelArg::Isotropic => DiagonalModel::Isotropic,
        ModelArg::Diagonal => DiagonalModel::Diagonal,
        ModelArg::General => {
            return Err(Failure::Usage(anyhow!("image reconstruction supports isotropic and diagonal models")))
        }
    };
    let k_in = read_tensor_like(kin)?;
    let ctx = format!("reading grid {}", grid.display());
    let file = File::open(grid).usage(&ctx)?;
    let (width, height, pixels) = io::read_grid(BufReader::new(file)).usage(&ctx)?;
    let map = reconstruct_image(&k_in, &pixels, width, height, model).usage("reconstructing image")?;
    if !map.failures.is_empty() {
        log::warn!("{} pixel fits did not converge", map.failures.len());
    }
    out_dir(out)?;
    let names: &[&str] = match model {
        DiagonalModel::Isotropic => &["m"],
        DiagonalModel::Diagonal => &["m11", "m22", "m33"],
    };
    for (p, name) in names.iter().enumerate() {
        write(&out.join(format!("{name}.csv")), &plane_csv(&map.plane(p), width))?;
    }
    write(&out.join("residual.csv"), &plane_csv(&map.residuals, width))?;
    let summary = ImageSummary {
        width,
        height,
        model,
        max_residual: map.max_residual(),
        mean_residual: map.mean_residual(),
        failed_pixels: map.failures.len(),
    };
    let json = io::to_json(&summary).context("serializing").map_err(Failure::Runtime)?;
    write(&out.join("summary.json"), &json)?;
    print!("{json}");
    Ok(())
}
