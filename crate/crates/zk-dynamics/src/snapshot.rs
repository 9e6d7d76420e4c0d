//! Binary snapshots: the magic `ZKS1`, then `u32 nx`, `u32 ny`,
//! `f64 x_half_width`, `f64 torus_scale`, `f64 t`, `f64 c`, `f64 rho` and the
//! `nx·ny` samples with `x` fastest, all little-endian.

use std::io::{Read, Write};
use std::sync::Arc;

use zk_grid::{Field2D, Grid2D};

use crate::modulated::ModulatedState;
use crate::DynError;

pub const MAGIC: &[u8; 4] = b"ZKS1";

pub fn write_snapshot<W: Write>(mut w: W, state: &ModulatedState) -> Result<(), DynError> {
    let g = state.v.grid();
    let io = |e: std::io::Error| DynError::Io(e.to_string());
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(g.nx() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(g.ny() as u32).to_le_bytes()).map_err(io)?;
    for x in [g.x_half_width(), g.torus_scale(), state.t, state.c, state.rho] {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    let mut buf = Vec::with_capacity(8 * g.len());
    for v in state.v.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io)?;
    Ok(())
}

/// Reads a snapshot; the grid is rebuilt from the header.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<ModulatedState, DynError> {
    let io = |e: std::io::Error| DynError::Io(e.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(DynError::Format(format!("bad magic {magic:?}")));
    }
    let mut u4 = [0u8; 4];
    r.read_exact(&mut u4).map_err(io)?;
    let nx = u32::from_le_bytes(u4) as usize;
    r.read_exact(&mut u4).map_err(io)?;
    let ny = u32::from_le_bytes(u4) as usize;
    let mut f = [0.0f64; 5];
    let mut u8b = [0u8; 8];
    for slot in f.iter_mut() {
        r.read_exact(&mut u8b).map_err(io)?;
        *slot = f64::from_le_bytes(u8b);
    }
    let grid: Arc<Grid2D> = Grid2D::new(f[0], nx, f[1], ny).map_err(|e| DynError::Format(e.to_string()))?;
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw).map_err(io)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let v = Field2D::from_values(&grid, values).map_err(|e| DynError::Format(e.to_string()))?;
    Ok(ModulatedState { v, c: f[3], rho: f[4], t: f[2] })
}
