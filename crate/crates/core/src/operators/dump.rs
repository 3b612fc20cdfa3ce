//! Binary dump of the dense operator blocks.
//!
//! ```text
//! magic      8 bytes  "NBEMOPS1"
//! pairing    u32      0 = p1-dual0, 1 = p1-dp0
//! n_primal   u64
//! n_flux     u64
//! V          n_flux * n_flux doubles
//! K          n_flux * n_primal doubles
//! W          n_primal * n_primal doubles
//! ```
//!
//! Integers and doubles are little-endian, matrices row-major. Mass
//! matrices are not stored; they are cheap to rebuild from the mesh.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::{OperatorBlocks, Pairing};

const MAGIC: &[u8; 8] = b"NBEMOPS1";

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("not an operator dump (bad magic)")]
    BadMagic,
    #[error("unknown pairing tag {0}")]
    BadPairing(u32),
    #[error("dump is too large for this platform")]
    TooLarge,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense blocks read back from a dump.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpedBlocks {
    pub pairing: Pairing,
    pub v: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

fn write_matrix<W: Write>(out: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(input: &mut R, rows: usize, cols: usize) -> std::io::Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut buf = [0u8; 8];
    for i in 0..rows {
        for j in 0..cols {
            input.read_exact(&mut buf)?;
            m[(i, j)] = f64::from_le_bytes(buf);
        }
    }
    Ok(m)
}

pub fn write_blocks<W: Write>(blocks: &OperatorBlocks, mut out: W) -> Result<(), DumpError> {
    out.write_all(MAGIC)?;
    let tag: u32 = match blocks.pairing {
        Pairing::P1Dual0 => 0,
        Pairing::P1DP0 => 1,
    };
    out.write_all(&tag.to_le_bytes())?;
    out.write_all(&(blocks.primal_dofs() as u64).to_le_bytes())?;
    out.write_all(&(blocks.flux_dofs() as u64).to_le_bytes())?;
    write_matrix(&mut out, &blocks.v)?;
    write_matrix(&mut out, &blocks.k)?;
    write_matrix(&mut out, &blocks.w)?;
    out.flush()?;
    Ok(())
}

pub fn read_blocks<R: Read>(mut input: R) -> Result<DumpedBlocks, DumpError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DumpError::BadMagic);
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let pairing = match u32::from_le_bytes(b4) {
        0 => Pairing::P1Dual0,
        1 => Pairing::P1DP0,
        other => return Err(DumpError::BadPairing(other)),
    };
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let np = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| DumpError::TooLarge)?;
    input.read_exact(&mut b8)?;
    let nf = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| DumpError::TooLarge)?;
    let v = read_matrix(&mut input, nf, nf)?;
    let k = read_matrix(&mut input, nf, np)?;
    let w = read_matrix(&mut input, np, np)?;
    Ok(DumpedBlocks { pairing, v, k, w })
}
