//! Binary field snapshots.
//!
//! Layout (little endian): the 8-byte magic `OVFIELD1`, `n: u32`,
//! `kind: u8` (0 scalar, 1 vector, 2 symmetric tensor), `time: f64`, then the
//! physical values of each component in row-major order as `f64`. A JSON
//! sidecar with the grid metadata is written next to the binary file.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{GridSpec, BOX_LENGTH};
use super::types::{ScalarField, SymTensor2, VectorField2};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"OVFIELD1";
const HEADER_LEN: usize = 8 + 4 + 1 + 8;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldSnapshot {
    Scalar(ScalarField),
    Vector(VectorField2),
    Tensor(SymTensor2),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub dx: f64,
    pub box_length: f64,
    pub dealias_cutoff: usize,
    pub kind: String,
    pub components: Vec<String>,
    pub time: f64,
    pub layout: String,
}

impl FieldSnapshot {
    pub fn kind_code(&self) -> u8 {
        match self {
            FieldSnapshot::Scalar(_) => 0,
            FieldSnapshot::Vector(_) => 1,
            FieldSnapshot::Tensor(_) => 2,
        }
    }

    fn components(&self) -> Vec<(&'static str, &ScalarField)> {
        match self {
            FieldSnapshot::Scalar(f) => vec![("f", f)],
            FieldSnapshot::Vector(v) => vec![("u", &v.u), ("v", &v.v)],
            FieldSnapshot::Tensor(t) => vec![("xx", &t.xx), ("xy", &t.xy), ("yy", &t.yy)],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.components()[0].1.grid()
    }

    pub fn meta(&self, time: f64) -> SnapshotMeta {
        let g = self.grid();
        SnapshotMeta {
            n: g.n(),
            dx: g.dx(),
            box_length: BOX_LENGTH,
            dealias_cutoff: g.dealias_cutoff(),
            kind: ["scalar", "vector", "symtensor"][self.kind_code() as usize].to_string(),
            components: self.components().iter().map(|(c, _)| c.to_string()).collect(),
            time,
            layout: "row-major, x fastest".to_string(),
        }
    }

    pub fn to_bytes(&self, time: f64) -> Vec<u8> {
        let comps = self.components();
        let n = self.grid().n();
        let mut out = Vec::with_capacity(HEADER_LEN + comps.len() * n * n * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.push(self.kind_code());
        out.extend_from_slice(&time.to_le_bytes());
        for (_, c) in comps {
            for v in c.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, f64)> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(Error::input("not an OVFIELD1 snapshot"));
        }
        let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let kind = bytes[12];
        let time = f64::from_le_bytes(bytes[13..21].try_into().expect("8 bytes"));
        let grid = GridSpec::new(n)?;
        let ncomp = match kind {
            0 => 1,
            1 => 2,
            2 => 3,
            k => return Err(Error::input(format!("unknown snapshot kind {k}"))),
        };
        let expected = HEADER_LEN + ncomp * n * n * 8;
        if bytes.len() != expected {
            return Err(Error::input(format!(
                "snapshot has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let mut fields = bytes[HEADER_LEN..]
            .chunks_exact(n * n * 8)
            .map(|chunk| {
                let values = chunk
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect();
                ScalarField::new(&grid, values)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mut next = || fields.next().expect("component count checked");
        let snap = match kind {
            0 => FieldSnapshot::Scalar(next()),
            1 => FieldSnapshot::Vector(VectorField2 { u: next(), v: next() }),
            _ => FieldSnapshot::Tensor(SymTensor2 {
                xx: next(),
                xy: next(),
                yy: next(),
            }),
        };
        Ok((snap, time))
    }
}

/// Writes `<path>` and the sidecar `<path>.json`; returns the sidecar path.
pub fn write_snapshot(path: &Path, snapshot: &FieldSnapshot, time: f64) -> Result<PathBuf> {
    let mut file = fs::File::create(path)?;
    file.write_all(&snapshot.to_bytes(time))?;
    let sidecar = sidecar_path(path);
    fs::write(&sidecar, serde_json::to_string_pretty(&snapshot.meta(time))?)?;
    Ok(sidecar)
}

pub fn read_snapshot(path: &Path) -> Result<(FieldSnapshot, f64)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    FieldSnapshot::from_bytes(&bytes)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
