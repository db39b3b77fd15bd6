//! Binary state dumps: magic, header length, JSON header, little-endian f64 data.
//!
//! Layout: `b"IFSNAP01"`, `u64` LE header byte count, UTF-8 JSON header,
//! then `zeta` and `psi` as `n_points` f64 values each.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PeriodicGrid;
use crate::two_fluid::InterfaceState;
use crate::units::DimensionlessParams;

pub const MAGIC: &[u8; 8] = b"IFSNAP01";
const MAX_HEADER: u64 = 1 << 20;
const MAX_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub n_points: usize,
    pub length: f64,
    pub time: f64,
    pub params: DimensionlessParams,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub state: InterfaceState,
}

pub fn encode(state: &InterfaceState, time: f64) -> Result<Vec<u8>> {
    let header = SnapshotHeader {
        n_points: state.grid.len(),
        length: state.grid.length(),
        time,
        params: state.params,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + json.len() + 16 * header.n_points);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in state.zeta.iter().chain(&state.psi) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Snapshot(format!(
            "truncated {what}: need {n} bytes, have {}",
            bytes.len()
        )));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode(mut bytes: &[u8]) -> Result<Snapshot> {
    let magic = take(&mut bytes, 8, "magic")?;
    if magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8, "header length")?.try_into().unwrap());
    if len > MAX_HEADER {
        return Err(Error::Snapshot(format!(
            "header length {len} exceeds limit"
        )));
    }
    let header: SnapshotHeader = serde_json::from_slice(take(&mut bytes, len as usize, "header")?)
        .map_err(|e| Error::Snapshot(format!("header: {e}")))?;
    let n = header.n_points;
    if n > MAX_POINTS {
        return Err(Error::Snapshot(format!("n_points {n} exceeds limit")));
    }
    if bytes.len() != 16 * n {
        return Err(Error::Snapshot(format!(
            "expected {} data bytes, found {}",
            16 * n,
            bytes.len()
        )));
    }
    if !header.time.is_finite() {
        return Err(Error::Snapshot("time must be finite".into()));
    }
    let grid = PeriodicGrid::new(n, header.length).map_err(|e| Error::Snapshot(e.to_string()))?;
    let params = DimensionlessParams::from_nondim(&header.params.nondim_inputs())
        .map_err(|e| Error::Snapshot(format!("params: {e}")))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (zeta, psi) = values.split_at(n);
    let state = InterfaceState::new(grid, zeta.to_vec(), psi.to_vec(), params)
        .map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(Snapshot {
        time: header.time,
        state,
    })
}

pub fn write_file(path: &std::path::Path, state: &InterfaceState, time: f64) -> Result<()> {
    std::fs::write(path, encode(state, time)?)?;
    Ok(())
}

pub fn read_file(path: &std::path::Path) -> Result<Snapshot> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::NondimInputs;

    fn state() -> InterfaceState {
        let g = PeriodicGrid::standard(16).unwrap();
        let p = DimensionlessParams::from_nondim(&NondimInputs {
            rhobar_plus: 0.6,
            depth_ratio: 1.5,
            eps: 0.2,
            mu: 0.3,
            bond: f64::INFINITY,
        })
        .unwrap();
        let zeta = g.trig_field(&[(1.0, 0.5, 0.0)]);
        let psi = g.trig_field(&[(2.0, 0.0, 0.25)]);
        InterfaceState::new(g, zeta, psi, p).unwrap()
    }

    #[test]
    fn round_trip() {
        let s = state();
        let bytes = encode(&s, 1.25).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back.time, 1.25);
        assert_eq!(back.state.zeta, s.zeta);
        assert_eq!(back.state.psi, s.psi);
        assert!(back.state.params.bond.is_infinite());
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&state(), 0.0).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut huge = bytes.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode(&huge).is_err());
        assert!(decode(&[]).is_err());
    }
}
