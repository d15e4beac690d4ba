//! Field snapshots: a text header terminated by `end_header\n`, then every
//! component as little-endian `f64` in node order, components slowest-varying.
//!
//! ```text
//! strang-ac snapshot
//! format_version=1
//! model=matrix
//! d=2
//! n=64
//! m=2
//! components=4
//! tau=1e-2
//! step=300
//! time=3e0
//! endianness=little
//! end_header
//! <components · n^d · 8 bytes>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::config::Model;
use super::field::Field;
use super::HarnessError;
use crate::spectral::{ScalarField, TorusGrid};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "strang-ac snapshot";
const END: &str = "end_header";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub model: Model,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub step: usize,
}

impl SnapshotHeader {
    pub fn components(&self) -> usize {
        match self.model {
            Model::Vector => self.m,
            Model::Matrix => self.m * self.m,
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub field: Field,
}

pub fn write_snapshot(path: &Path, field: &Field, tau: f64, step: usize) -> Result<(), HarnessError> {
    let grid = field.grid();
    let header = SnapshotHeader {
        format_version: FORMAT_VERSION,
        model: field.model(),
        d: grid.dim(),
        n: grid.n(),
        m: field.m(),
        tau,
        step,
    };
    let mut out = Vec::with_capacity(256 + 8 * grid.len() * header.components());
    write!(
        out,
        "{MAGIC}\nformat_version={}\nmodel={}\nd={}\nn={}\nm={}\ncomponents={}\ntau={:e}\nstep={}\ntime={:e}\nendianness=little\n{END}\n",
        header.format_version,
        header.model,
        header.d,
        header.n,
        header.m,
        header.components(),
        header.tau,
        header.step,
        header.time(),
    )
    .expect("writing to a Vec cannot fail");
    for c in field.components() {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

fn malformed(path: &Path, why: impl Into<String>) -> HarnessError {
    HarnessError::Snapshot {
        path: path.to_path_buf(),
        reason: why.into(),
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut next_line = |reader: &mut BufReader<std::fs::File>| -> Result<String, HarnessError> {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| HarnessError::io(path, e))?;
        if read == 0 {
            return Err(malformed(path, "truncated header"));
        }
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next_line(&mut reader)? != MAGIC {
        return Err(malformed(path, "not a snapshot file"));
    }
    let mut fields = std::collections::HashMap::new();
    loop {
        let l = next_line(&mut reader)?;
        if l == END {
            break;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| malformed(path, format!("bad header line `{l}`")))?;
        fields.insert(key.to_string(), value.to_string());
    }
    let get = |key: &str| -> Result<&String, HarnessError> {
        fields.get(key).ok_or_else(|| malformed(path, format!("missing `{key}`")))
    };
    let num = |key: &str| -> Result<usize, HarnessError> {
        get(key)?
            .parse()
            .map_err(|_| malformed(path, format!("bad `{key}`")))
    };
    let format_version = num("format_version")? as u32;
    if format_version != FORMAT_VERSION {
        return Err(malformed(path, format!("unsupported format version {format_version}")));
    }
    if get("endianness")? != "little" {
        return Err(malformed(path, "only little-endian data is supported"));
    }
    let header = SnapshotHeader {
        format_version,
        model: get("model")?.parse().map_err(|_| malformed(path, "bad `model`"))?,
        d: num("d")?,
        n: num("n")?,
        m: num("m")?,
        tau: get("tau")?.parse().map_err(|_| malformed(path, "bad `tau`"))?,
        step: num("step")?,
    };
    if num("components")? != header.components() {
        return Err(malformed(path, "component count does not match model and m"));
    }
    let grid = TorusGrid::new(header.d, header.n).map_err(|e| malformed(path, e.to_string()))?;
    let mut components = Vec::with_capacity(header.components());
    let mut bytes = vec![0u8; 8 * grid.len()];
    for _ in 0..header.components() {
        reader
            .read_exact(&mut bytes)
            .map_err(|_| malformed(path, "truncated data"))?;
        let values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect();
        components.push(ScalarField::new(grid.clone(), values).map_err(|e| malformed(path, e.to_string()))?);
    }
    if reader.read(&mut [0u8; 1]).map_err(|e| HarnessError::io(path, e))? != 0 {
        return Err(malformed(path, "trailing data"));
    }
    let field = Field::from_components(header.model, header.m, components)?;
    Ok(Snapshot { header, field })
}
