//! Snapshot files: one JSON header line followed by `n × n` little-endian
//! `f64` samples in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::spectral::{Field, GridSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema: u32,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub t: f64,
    pub alpha: f64,
    pub s: f64,
    pub field: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub alpha: f64,
    pub s: f64,
    pub name: String,
    pub field: Field,
}

impl Snapshot {
    pub fn header(&self) -> SnapshotHeader {
        SnapshotHeader {
            schema: SCHEMA_VERSION,
            n: self.field.grid().n(),
            length: self.field.grid().length(),
            t: self.t,
            alpha: self.alpha,
            s: self.s,
            field: self.name.clone(),
        }
    }
}

pub fn encode_snapshot<W: Write>(snap: &Snapshot, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &snap.header())?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(snap.field.values().len() * 8);
    for v in snap.field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn decode_snapshot<R: Read>(input: R) -> Result<Snapshot> {
    let mut reader = BufReader::new(input);
    let mut line = Vec::new();
    reader.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(SqgError::Snapshot("missing header line".into()));
    }
    let raw: serde_json::Value = serde_json::from_slice(&line[..line.len() - 1])?;
    let schema = raw
        .get("schema")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| SqgError::Snapshot("header has no schema version".into()))?;
    if schema != SCHEMA_VERSION as u64 {
        return Err(SqgError::Snapshot(format!(
            "unsupported schema version {schema} (reader supports {SCHEMA_VERSION})"
        )));
    }
    let header: SnapshotHeader = serde_json::from_value(raw)?;
    let grid = GridSpec::new(header.n, header.length)?;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    let expected = grid.len() * 8;
    if payload.len() != expected {
        return Err(SqgError::Snapshot(format!(
            "shape mismatch: payload has {} bytes, header n = {} needs {expected}",
            payload.len(),
            header.n
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Snapshot {
        t: header.t,
        alpha: header.alpha,
        s: header.s,
        name: header.field,
        field: Field::from_values(&grid, values)?,
    })
}

pub fn write_snapshot(path: impl AsRef<Path>, snap: &Snapshot) -> Result<()> {
    let mut buf = Vec::new();
    encode_snapshot(snap, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    decode_snapshot(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let g = GridSpec::new(16, 3.0).unwrap();
        Snapshot {
            t: 0.25,
            alpha: 1.0,
            s: 0.6,
            name: "theta".into(),
            field: Field::from_fn(&g, |x, y| (x * 1.3).sin() * y.exp()),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = sample();
        let mut buf = Vec::new();
        encode_snapshot(&s, &mut buf).unwrap();
        let back = decode_snapshot(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_payload_is_shape_error() {
        let mut buf = Vec::new();
        encode_snapshot(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        let err = decode_snapshot(&buf[..]).unwrap_err();
        assert!(err.to_string().contains("shape mismatch"), "{err}");
    }

    #[test]
    fn future_schema_rejected() {
        let mut buf = Vec::new();
        encode_snapshot(&sample(), &mut buf).unwrap();
        let pos = buf.windows(10).position(|w| w == b"\"schema\":1").unwrap();
        buf[pos + 9] = b'2';
        let err = decode_snapshot(&buf[..]).unwrap_err();
        assert!(err.to_string().contains("schema version 2"), "{err}");
    }
}
