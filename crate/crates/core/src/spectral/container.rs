//! Binary field container.
//!
//! Layout: a 32-byte little-endian header
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..4   | magic `NSEF`                              |
//! | 4..8   | format version (`u32`, currently 1)       |
//! | 8..20  | points per axis `n_x, n_y, n_z` (`u32`)   |
//! | 20..24 | component count (`u32`)                   |
//! | 24..28 | payload kind (`0` = `f64`, `1` = boolean) |
//! | 28..32 | reserved, zero                            |
//!
//! followed by the physical-space samples, component-major, each component in
//! row-major `(x, y, z)` order: 8-byte little-endian floats, or one byte per
//! cell (0/1) for boolean masks. A JSON sidecar `<file>.json` records the grid,
//! normalisation and provenance.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::{Grid3, VectorField};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NSEF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    F64,
    Bool,
}

impl PayloadKind {
    fn code(self) -> u32 {
        match self {
            PayloadKind::F64 => 0,
            PayloadKind::Bool => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Real(Vec<Array3<f64>>),
    Mask(Array3<bool>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub grid: Grid3,
    pub components: u32,
    pub payload: PayloadKind,
    pub normalization: String,
    pub layout: String,
    pub provenance: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn header(grid: Grid3, components: u32, kind: PayloadKind) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(MAGIC);
    let n = grid.n() as u32;
    for (i, v) in [VERSION, n, n, n, components, kind.code(), 0].iter().enumerate() {
        h[4 + 4 * i..8 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    h
}

fn write_sidecar(
    path: &Path,
    grid: Grid3,
    components: u32,
    payload: PayloadKind,
    provenance: serde_json::Value,
) -> Result<()> {
    let sidecar = Sidecar {
        format: "NSEF".into(),
        version: VERSION,
        grid,
        components,
        payload,
        normalization: "physical-space samples at x_i = i*length/n; spectral coefficients \
                        divide by n^3 so exp(i k.x) has unit coefficient"
            .into(),
        layout: "component-major, row-major (x, y, z), little-endian".into(),
        provenance,
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn write_real(
    path: &Path,
    grid: Grid3,
    comps: &[Array3<f64>],
    provenance: serde_json::Value,
) -> Result<()> {
    let cells = grid.n().pow(3);
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * cells * comps.len());
    bytes.extend_from_slice(&header(grid, comps.len() as u32, PayloadKind::F64));
    for c in comps {
        if c.dim() != grid.physical_shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", grid.physical_shape()),
                got: format!("{:?}", c.dim()),
            });
        }
        for v in c.iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    write_sidecar(path, grid, comps.len() as u32, PayloadKind::F64, provenance)
}

pub fn write_vector_field(path: &Path, v: &VectorField, provenance: serde_json::Value) -> Result<()> {
    write_real(path, v.grid(), &v.to_physical(), provenance)
}

pub fn write_mask(
    path: &Path,
    grid: Grid3,
    mask: &Array3<bool>,
    provenance: serde_json::Value,
) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + mask.len());
    bytes.extend_from_slice(&header(grid, 1, PayloadKind::Bool));
    bytes.extend(mask.iter().map(|&b| b as u8));
    fs::write(path, bytes)?;
    write_sidecar(path, grid, 1, PayloadKind::Bool, provenance)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Read a container and its sidecar. Without a sidecar the box is assumed to
/// be `(2π)³`.
pub fn read(path: &Path) -> Result<(Grid3, Payload)> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
        return Err(Error::Container(format!("{}: missing NSEF header", path.display())));
    }
    let version = read_u32(&bytes, 4);
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let (nx, ny, nz) = (read_u32(&bytes, 8), read_u32(&bytes, 12), read_u32(&bytes, 16));
    if nx != ny || ny != nz {
        return Err(Error::Container(format!("anisotropic grid {nx}x{ny}x{nz} is not supported")));
    }
    let comps = read_u32(&bytes, 20) as usize;
    let kind = read_u32(&bytes, 24);
    let n = nx as usize;
    let grid = match fs::read_to_string(sidecar_path(path)) {
        Ok(text) => {
            let sidecar: Sidecar = serde_json::from_str(&text)?;
            if sidecar.grid.n() != n {
                return Err(Error::Container("sidecar grid disagrees with header".into()));
            }
            sidecar.grid
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Grid3::periodic(n)?,
        Err(e) => return Err(e.into()),
    };
    let cells = n * n * n;
    let body = &bytes[HEADER_LEN..];
    let shape = grid.physical_shape();
    match kind {
        0 => {
            if body.len() != 8 * cells * comps {
                return Err(Error::Container(format!(
                    "payload has {} bytes, expected {}",
                    body.len(),
                    8 * cells * comps
                )));
            }
            let arrays = body
                .chunks_exact(8 * cells)
                .map(|chunk| {
                    let vals: Vec<f64> = chunk
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                        .collect();
                    Array3::from_shape_vec(shape, vals).expect("length checked")
                })
                .collect();
            Ok((grid, Payload::Real(arrays)))
        }
        1 => {
            if comps != 1 || body.len() != cells {
                return Err(Error::Container("malformed boolean payload".into()));
            }
            let vals: Vec<bool> = body.iter().map(|&b| b != 0).collect();
            Ok((grid, Payload::Mask(Array3::from_shape_vec(shape, vals).expect("length checked"))))
        }
        other => Err(Error::Container(format!("unknown payload kind {other}"))),
    }
}

pub fn read_vector_field(path: &Path) -> Result<VectorField> {
    match read(path)? {
        (grid, Payload::Real(arrays)) if arrays.len() == 3 => {
            let arrays: [Array3<f64>; 3] = arrays.try_into().expect("three components");
            VectorField::from_physical(&arrays, grid)
        }
        _ => Err(Error::Container(format!(
            "{}: expected a three-component real field",
            path.display()
        ))),
    }
}
