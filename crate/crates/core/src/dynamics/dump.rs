//! Little-endian state dumps: `N: u64`, `ε: f64`, `τ: f64`, `k: u64`, then the
//! `N + 1` nodal values as `f64`.

use std::io::{self, Read, Write};

use crate::energy::lattice::LatticeField;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct StateDump {
    pub springs: u64,
    pub eps: f64,
    pub tau: f64,
    pub step: u64,
    pub values: Vec<f64>,
}

pub fn write_state_dump<T: Real, W: Write>(out: &mut W, field: &LatticeField<T>, tau: f64, step: u64) -> io::Result<()> {
    let mut buf = Vec::with_capacity(32 + 8 * field.values().len());
    buf.extend_from_slice(&(field.springs() as u64).to_le_bytes());
    buf.extend_from_slice(&field.spacing().to_f64_lossy().to_le_bytes());
    buf.extend_from_slice(&tau.to_le_bytes());
    buf.extend_from_slice(&step.to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn read_state_dump<R: Read>(input: &mut R) -> io::Result<StateDump> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let springs = u64::from_le_bytes(next(input)?);
    let eps = f64::from_le_bytes(next(input)?);
    let tau = f64::from_le_bytes(next(input)?);
    let step = u64::from_le_bytes(next(input)?);
    let values = (0..=springs).map(|_| next(input).map(f64::from_le_bytes)).collect::<io::Result<_>>()?;
    Ok(StateDump { springs, eps, tau, step, values })
}
