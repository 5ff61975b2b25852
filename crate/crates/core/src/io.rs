//! File formats: density-matrix and Kraus JSON, 4×4 CSV, counts and sweep
//! CSV, and the binary tensor grid.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{KrausEnsemble, KrausItem, MuellerMatrix};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::metrics::SweepRow;
use crate::polarization::{CorrelationTensor, DensityMatrix};
use crate::tomography::CountRecord;

pub const SCHEMA: &str = "qpol2/v1";

/// Serializes `value` as pretty JSON with a leading `"schema"` field.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut v {
        let mut out = serde_json::Map::new();
        out.insert("schema".into(), Value::String(SCHEMA.into()));
        out.extend(std::mem::take(map));
        v = Value::Object(out);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn check_schema(v: &Value) -> Result<()> {
    match v.get("schema") {
        None => Ok(()),
        Some(Value::String(s)) if s == SCHEMA => Ok(()),
        Some(other) => Err(Error::Parse(format!("unsupported schema {other}"))),
    }
}

/// Parses JSON written by [`to_json`]; a missing `"schema"` is accepted.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let v: Value = serde_json::from_str(text)?;
    check_schema(&v)?;
    Ok(serde_json::from_value(v)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// density matrices

#[derive(Debug, Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn split_complex(m: &DMatrix<C64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)].re).collect()).collect();
    let im = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)].im).collect()).collect();
    (re, im)
}

fn join_complex(re: &[Vec<f64>], im: &[Vec<f64>], dim: usize) -> Result<DMatrix<C64>> {
    let ok = |rows: &[Vec<f64>]| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if !ok(re) || !ok(im) {
        return Err(Error::Parse(format!("expected {dim}x{dim} \"re\" and \"im\" arrays")));
    }
    Ok(DMatrix::from_fn(dim, dim, |r, c| C64::new(re[r][c], im[r][c])))
}

pub fn density_to_json(rho: &DensityMatrix) -> Result<String> {
    let (re, im) = split_complex(rho.matrix());
    to_json(&DensityJson { dim: rho.dim(), re, im })
}

pub fn density_from_json(text: &str) -> Result<DensityMatrix> {
    let d: DensityJson = from_json(text)?;
    if d.dim != 2 && d.dim != 4 {
        return Err(Error::Parse(format!("dim must be 2 or 4, got {}", d.dim)));
    }
    DensityMatrix::new(join_complex(&d.re, &d.im, d.dim)?)
}

pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_text(path, &density_to_json(rho)?)
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    density_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Kraus ensembles

#[derive(Debug, Serialize, Deserialize)]
struct KrausItemJson {
    w: f64,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KrausJson {
    items: Vec<KrausItemJson>,
}

pub fn kraus_to_json(ch: &KrausEnsemble) -> Result<String> {
    let items = ch
        .items()
        .iter()
        .map(|it| {
            let re = (0..2).map(|r| (0..2).map(|c| it.jones[(r, c)].re).collect()).collect();
            let im = (0..2).map(|r| (0..2).map(|c| it.jones[(r, c)].im).collect()).collect();
            KrausItemJson { w: it.weight, re, im }
        })
        .collect();
    to_json(&KrausJson { items })
}

pub fn kraus_from_json(text: &str) -> Result<KrausEnsemble> {
    let k: KrausJson = from_json(text)?;
    let items = k
        .items
        .iter()
        .map(|it| {
            let m = join_complex(&it.re, &it.im, 2)?;
            Ok(KrausItem::new(it.w, Matrix2::from_fn(|r, c| m[(r, c)])))
        })
        .collect::<Result<Vec<_>>>()?;
    KrausEnsemble::new(items)
}

pub fn write_kraus(path: &Path, ch: &KrausEnsemble) -> Result<()> {
    write_text(path, &kraus_to_json(ch)?)
}

pub fn read_kraus(path: &Path) -> Result<KrausEnsemble> {
    kraus_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// 4×4 CSV

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix4_to_csv(m: &Matrix4<f64>) -> String {
    let mut s = String::new();
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| fmt_f64(m[(r, c)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn matrix4_from_csv(text: &str) -> Result<Matrix4<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(parse_f64).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(Error::Parse("expected 4 lines of 4 comma-separated values".into()));
    }
    Ok(Matrix4::from_fn(|r, c| rows[r][c]))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

pub fn write_tensor(path: &Path, k: &CorrelationTensor) -> Result<()> {
    write_text(path, &matrix4_to_csv(&k.0))
}

pub fn read_tensor(path: &Path) -> Result<CorrelationTensor> {
    Ok(CorrelationTensor(matrix4_from_csv(&fs::read_to_string(path)?)?))
}

pub fn write_mueller(path: &Path, m: &MuellerMatrix) -> Result<()> {
    write_text(path, &matrix4_to_csv(m.matrix()))
}

/// Reads a Mueller CSV, normalizing by `M_00`.
pub fn read_mueller(path: &Path) -> Result<MuellerMatrix> {
    MuellerMatrix::new(matrix4_from_csv(&fs::read_to_string(path)?)?)
}

// ---------------------------------------------------------------------------
// counts and sweep CSV

pub const COUNTS_HEADER: &str = "setting_a,setting_b,pairs,counts";

pub fn counts_to_csv(counts: &[CountRecord]) -> String {
    let mut s = String::from(COUNTS_HEADER);
    s.push('\n');
    for c in counts {
        s.push_str(&format!("{},{},{},{}\n", c.setting_a, c.setting_b, c.pairs, c.observed));
    }
    s
}

/// Parses a counts CSV. The expected rate is not stored in the file and is
/// set to `counts / pairs`.
pub fn counts_from_csv(text: &str) -> Result<Vec<CountRecord>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h.replace(' ', "") == COUNTS_HEADER => {}
        _ => return Err(Error::Parse(format!("counts CSV must start with {COUNTS_HEADER:?}"))),
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad counts row {l:?}")));
            }
            let pairs: u64 = f[2].parse().map_err(|_| Error::Parse(format!("bad pairs {:?}", f[2])))?;
            let observed: u64 = f[3].parse().map_err(|_| Error::Parse(format!("bad counts {:?}", f[3])))?;
            Ok(CountRecord {
                setting_a: f[0].parse()?,
                setting_b: f[1].parse()?,
                rate: if pairs == 0 { 0.0 } else { observed as f64 / pairs as f64 },
                observed,
                pairs,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "m,concurrence_opp,concurrence_tpp,purity_opp,purity_tpp,entropy_opp,entropy_tpp,dephasing_opp,dephasing_tpp";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "nan".into());
        let fields = [
            fmt_f64(r.m),
            fmt_f64(r.opp.concurrence),
            fmt_f64(r.tpp.concurrence),
            fmt_f64(r.opp.purity),
            fmt_f64(r.tpp.purity),
            fmt_f64(r.opp.entropy),
            fmt_f64(r.tpp.entropy),
            opt(r.opp.dephasing),
            opt(r.tpp.dephasing),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// binary grid

/// `u64` width, `u64` height, then 16 `f64` per pixel (row-major tensor,
/// pixels row-major), all little-endian.
pub fn write_grid<W: Write>(mut w: W, width: usize, height: usize, pixels: &[CorrelationTensor]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Dimension { expected: width * height, got: pixels.len() });
    }
    w.write_all(&(width as u64).to_le_bytes())?;
    w.write_all(&(height as u64).to_le_bytes())?;
    for k in pixels {
        for r in 0..4 {
            for c in 0..4 {
                w.write_all(&k.0[(r, c)].to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<(usize, usize, Vec<CorrelationTensor>)> {
    let mut buf8 = [0u8; 8];
    let mut read_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut buf8)?;
        Ok(u64::from_le_bytes(buf8))
    };
    let width = read_u64(&mut r)? as usize;
    let height = read_u64(&mut r)? as usize;
    let n = width.checked_mul(height).ok_or_else(|| Error::Parse("grid size overflows".into()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != n * 128 {
        return Err(Error::Parse(format!("grid body has {} bytes, expected {}", body.len(), n * 128)));
    }
    let pixels = body
        .chunks_exact(128)
        .map(|chunk| {
            let vals: Vec<f64> =
                chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
            CorrelationTensor(Matrix4::from_fn(|r, c| vals[4 * r + c]))
        })
        .collect();
    Ok((width, height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::bell_psi_plus;

    #[test]
    fn density_roundtrip_is_exact() {
        let rho = bell_psi_plus();
        let text = density_to_json(&rho).unwrap();
        assert!(text.contains("\"schema\": \"qpol2/v1\""));
        assert_eq!(density_from_json(&text).unwrap(), rho);
    }

    #[test]
    fn rejects_wrong_schema() {
        let text = r#"{"schema":"other","dim":2,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}"#;
        assert!(density_from_json(text).is_err());
        let text = r#"{"dim":2,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]]}"#;
        assert!(density_from_json(text).is_ok());
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let m = Matrix4::from_fn(|r, c| (r as f64 + 0.1) / (c as f64 + 3.0) * std::f64::consts::PI);
        assert_eq!(matrix4_from_csv(&matrix4_to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn kraus_roundtrip() {
        let ch = KrausEnsemble::pauli_channel([0.4, 0.3, 0.2, 0.1]).unwrap();
        let back = kraus_from_json(&kraus_to_json(&ch).unwrap()).unwrap();
        assert_eq!(back.items(), ch.items());
    }

    #[test]
    fn grid_roundtrip() {
        let pixels = vec![CorrelationTensor::bell(), CorrelationTensor::diagonal([1.0, 0.5, 0.25, 0.125])];
        let mut buf = Vec::new();
        write_grid(&mut buf, 2, 1, &pixels).unwrap();
        assert_eq!(buf.len(), 16 + 2 * 128);
        let (w, h, back) = read_grid(buf.as_slice()).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(back, pixels);
        assert!(read_grid(&buf[..100]).is_err());
    }
}
