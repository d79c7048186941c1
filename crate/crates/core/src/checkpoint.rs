//! Binary checkpoint files for spectral fields.
//!
//! Layout (all little-endian): the magic bytes `RNLS`, then `u32` version,
//! `u32` N_hermite, `u32` M_quad, `u32` N_z, then `f64` L_z, σ, λ and time,
//! followed by the coefficients as interleaved `f64` (re, im) in `n1`, `n2`, `k`
//! order, and finally a `u32` CRC-32 of all preceding bytes so that corrupted
//! payloads are rejected rather than silently loaded.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{Basis, BasisSpec, SpectralField};
use crate::error::{Result, RnlsError};

const MAGIC: &[u8; 4] = b"RNLS";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 4 * 8;
const TRAILER_LEN: usize = 4;

/// Contents of a checkpoint besides the coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub n_hermite: usize,
    pub m_quad: usize,
    pub n_z: usize,
    pub l_z: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub time: f64,
}

/// Serialise a field with its model parameters.
pub fn encode(c: &SpectralField, sigma: f64, lambda: f64) -> Vec<u8> {
    let spec = &c.basis.spec;
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * c.coeffs.len() + TRAILER_LEN);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, spec.n_hermite as u32, spec.m_quad as u32, spec.n_z as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [spec.l_z, sigma, lambda, c.time] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in &c.coeffs {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("length checked"))
}

fn read_f64(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("length checked"))
}

/// Parse the header of a checkpoint byte stream.
pub fn decode_header(bytes: &[u8]) -> Result<CheckpointHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(RnlsError::Checkpoint(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(RnlsError::Checkpoint("bad magic".into()));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(RnlsError::Checkpoint(format!("unsupported version {version}")));
    }
    let h = CheckpointHeader {
        n_hermite: read_u32(bytes, 8) as usize,
        m_quad: read_u32(bytes, 12) as usize,
        n_z: read_u32(bytes, 16) as usize,
        l_z: read_f64(bytes, 20),
        sigma: read_f64(bytes, 28),
        lambda: read_f64(bytes, 36),
        time: read_f64(bytes, 44),
    };
    let expected = HEADER_LEN + 16 * (h.n_hermite + 1) * (h.n_hermite + 1) * h.n_z + TRAILER_LEN;
    if bytes.len() != expected {
        return Err(RnlsError::Checkpoint(format!(
            "expected {expected} bytes for the declared sizes, found {}",
            bytes.len()
        )));
    }
    let body = expected - TRAILER_LEN;
    if crc32fast::hash(&bytes[..body]) != read_u32(bytes, body) {
        return Err(RnlsError::Checkpoint("checksum mismatch".into()));
    }
    if ![h.l_z, h.sigma, h.lambda, h.time].iter().all(|v| v.is_finite()) {
        return Err(RnlsError::Checkpoint("non-finite header value".into()));
    }
    Ok(h)
}

/// Decode a checkpoint; the basis is rebuilt from the stored sizes with `n_theta`.
pub fn decode(bytes: &[u8], n_theta: usize) -> Result<(SpectralField, CheckpointHeader)> {
    let h = decode_header(bytes)?;
    let spec = BasisSpec { n_hermite: h.n_hermite, m_quad: h.m_quad, n_z: h.n_z, l_z: h.l_z, n_theta };
    let basis = Basis::new(spec).map_err(|e| RnlsError::Checkpoint(format!("invalid stored basis: {e}")))?;
    decode_into(bytes, &basis).map(|c| (c, h))
}

/// Decode a checkpoint into an existing basis with matching sizes.
pub fn decode_into(bytes: &[u8], basis: &Arc<Basis>) -> Result<SpectralField> {
    let h = decode_header(bytes)?;
    let s = &basis.spec;
    if h.n_hermite != s.n_hermite || h.m_quad != s.m_quad || h.n_z != s.n_z || h.l_z != s.l_z {
        return Err(RnlsError::Checkpoint("checkpoint resolution does not match the basis".into()));
    }
    let coeffs: Vec<Complex64> = bytes[HEADER_LEN..bytes.len() - TRAILER_LEN]
        .chunks_exact(16)
        .map(|ch| Complex64::new(read_f64(ch, 0), read_f64(ch, 8)))
        .collect();
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(RnlsError::Checkpoint("non-finite coefficient".into()));
    }
    let mut field = SpectralField::from_coeffs(basis, coeffs)?;
    field.time = h.time;
    Ok(field)
}

/// Write a checkpoint file.
pub fn write(path: &Path, c: &SpectralField, sigma: f64, lambda: f64) -> Result<()> {
    fs::write(path, encode(c, sigma, lambda))?;
    Ok(())
}

/// Read a checkpoint file.
pub fn read(path: &Path, n_theta: usize) -> Result<(SpectralField, CheckpointHeader)> {
    let bytes = fs::read(path)?;
    decode(&bytes, n_theta)
}
