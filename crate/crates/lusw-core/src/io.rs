//! Durable artifacts: binary field snapshots and the diagnostics CSV.
//!
//! Snapshot layout (all little-endian):
//!   magic "LUSW" | version u32 | j u32 | m u32 | fields u32 (= 3)
//!   | reserved u32 | time f64 | config digest u64
//!   | payload: three m×m f64 row-major physical-space fields u₁, u₂, h.
//!
//! Physical samples rather than coefficients keep the files inspectable by
//! any toolchain; the grid oversamples the retained band, so the spectral
//! content is recovered exactly on read.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::{lp, synthesize, transform, GridSpec};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"LUSW";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub j: u32,
    pub m: u32,
    pub fields: u32,
    pub time: f64,
    pub digest: u64,
}

/// Write raw physical-space payloads; the bit-exact layer of the format.
pub fn write_snapshot_raw(
    path: &Path,
    j: u32,
    time: f64,
    digest: u64,
    fields: &[Array2<f64>; 3],
) -> Result<()> {
    let m = fields[0].nrows();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&j.to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&3u32.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    w.write_all(&digest.to_le_bytes())?;
    for field in fields {
        for v in field.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_snapshot(
    path: &Path,
    state: &State,
    grid: &GridSpec,
    time: f64,
    digest: u64,
) -> Result<()> {
    let m = grid.points();
    let fields = [
        synthesize(&state.u[0], m)?,
        synthesize(&state.u[1], m)?,
        synthesize(&state.h, m)?,
    ];
    write_snapshot_raw(path, grid.level(), time, digest, &fields)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated payload".into()))?;
    Ok(f64::from_le_bytes(b))
}

/// Read header and raw physical-space payloads; the exact inverse of
/// `write_snapshot_raw`, byte for byte.
pub fn read_snapshot_raw(
    path: &Path,
    expected_digest: Option<u64>,
) -> Result<(SnapshotHeader, [Array2<f64>; 3])> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} (expected {SNAPSHOT_VERSION})"
        )));
    }
    let j = read_u32(&mut r)?;
    let m = read_u32(&mut r)? as usize;
    let fields = read_u32(&mut r)?;
    let _reserved = read_u32(&mut r)?;
    let time = read_f64(&mut r)?;
    let digest = read_u64(&mut r)?;
    if fields != 3 {
        return Err(Error::Format(format!(
            "expected 3 fields, header says {fields}"
        )));
    }
    if let Some(expected) = expected_digest {
        if digest != expected {
            return Err(Error::Format(format!(
                "config digest mismatch: file {digest:#x}, expected {expected:#x}"
            )));
        }
    }
    let mut read_field = || -> Result<Array2<f64>> {
        let mut values = Array2::zeros((m, m));
        for i in 0..m {
            for jj in 0..m {
                values[(i, jj)] = read_f64(&mut r)?;
            }
        }
        Ok(values)
    };
    let payload = [read_field()?, read_field()?, read_field()?];
    let header = SnapshotHeader {
        version,
        j,
        m: m as u32,
        fields,
        time,
        digest,
    };
    Ok((header, payload))
}

/// Read a snapshot back as a spectral state (reconstruction exact to the
/// quadrature round-off, ~1e-12 in coefficients). When `expected_digest`
/// is given, a mismatch is a format error.
pub fn read_snapshot(path: &Path, expected_digest: Option<u64>) -> Result<(SnapshotHeader, State)> {
    let (header, payload) = read_snapshot_raw(path, expected_digest)?;
    let j = header.j;
    let restore = |values: &Array2<f64>| -> Result<_> {
        Ok(lp::project(&transform(values)?, j).resize_block(j))
    };
    let state = State {
        u: [restore(&payload[0])?, restore(&payload[1])?],
        h: restore(&payload[2])?,
    };
    Ok((header, state))
}

/// Fixed CSV schema: floats printed with 17 significant digits so parsing
/// them back is bit-exact; NaNs are written as "nan" and flagged.
pub struct CsvSummary {
    pub rows: usize,
    pub nan_present: bool,
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: &Path) -> Result<CsvSummary> {
    let mut w = BufWriter::new(File::create(path)?);
    let flux_len = records.iter().map(|r| r.flux.len()).max().unwrap_or(0);
    let mut header = String::from("t,E_swe,l2,u_k2,h_k2,cancel1,cancel2,weak_lhs");
    for j in 0..flux_len {
        header.push_str(&format!(",gamma_flux_{}", 1u64 << j));
    }
    writeln!(w, "{header}")?;
    let mut nan_present = false;
    for rec in records {
        nan_present |= !rec.is_finite();
        let mut row = vec![
            fmt_float(rec.t),
            fmt_float(rec.energy),
            fmt_float(rec.l2),
            fmt_float(rec.u_k2),
            fmt_float(rec.h_k2),
            fmt_float(rec.cancel1),
            fmt_float(rec.cancel2),
            fmt_float(rec.weak_lhs),
        ];
        for j in 0..flux_len {
            row.push(fmt_float(rec.flux.get(j).copied().unwrap_or(f64::NAN)));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(CsvSummary {
        rows: records.len(),
        nan_present,
    })
}
