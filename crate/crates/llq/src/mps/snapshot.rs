//! Binary checkpoint format for [`SymmetricMps`].
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "LLQMPS\x00" + format version byte
//! n_sites  u64
//! n_max    u8
//! charge   u64      total particle number
//! center   u64      orthogonality center
//! per site:
//!   n_blocks u64
//!   per block: q u64, n u8, nrows u64, ncols u64,
//!              nrows*ncols complex entries (re f64, im f64), column-major
//! ```
//!
//! Loading re-derives the bond bases from the block shapes and validates the
//! charge selection rules, so a corrupted or hand-edited file is rejected
//! rather than producing an inconsistent state.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use super::{BondBasis, SymmetricMps};

const MAGIC: &[u8; 7] = b"LLQMPS\x00";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not an MPS snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u8),
    #[error("snapshot is structurally inconsistent: {0}")]
    Corrupt(String),
}

impl SymmetricMps {
    pub fn save_snapshot<W: Write>(&self, mut w: W) -> Result<(), SnapshotError> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        w.write_all(&(self.sites.len() as u64).to_le_bytes())?;
        w.write_all(&[self.n_max])?;
        w.write_all(&(self.total_charge as u64).to_le_bytes())?;
        w.write_all(&(self.center as u64).to_le_bytes())?;
        for blocks in &self.sites {
            w.write_all(&(blocks.len() as u64).to_le_bytes())?;
            for (&(q, n), block) in blocks {
                w.write_all(&(q as u64).to_le_bytes())?;
                w.write_all(&[n])?;
                w.write_all(&(block.nrows() as u64).to_le_bytes())?;
                w.write_all(&(block.ncols() as u64).to_le_bytes())?;
                for z in block.iter() {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load_snapshot<R: Read>(mut r: R) -> Result<Self, SnapshotError> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = read_u8(&mut r)?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let n_sites = read_u64(&mut r)? as usize;
        if n_sites == 0 {
            return Err(SnapshotError::Corrupt("zero sites".into()));
        }
        let n_max = read_u8(&mut r)?;
        let total_charge = read_u64(&mut r)? as u32;
        let center = read_u64(&mut r)? as usize;
        if center >= n_sites {
            return Err(SnapshotError::Corrupt(format!(
                "center {center} out of range for {n_sites} sites"
            )));
        }
        let mut sites = Vec::with_capacity(n_sites);
        for site in 0..n_sites {
            let n_blocks = read_u64(&mut r)? as usize;
            let mut blocks = BTreeMap::new();
            for _ in 0..n_blocks {
                let q = read_u64(&mut r)? as u32;
                let n = read_u8(&mut r)?;
                if n > n_max {
                    return Err(SnapshotError::Corrupt(format!(
                        "site {site}: occupation {n} above cutoff {n_max}"
                    )));
                }
                let nrows = read_u64(&mut r)? as usize;
                let ncols = read_u64(&mut r)? as usize;
                if nrows == 0 || ncols == 0 || nrows * ncols > (1 << 28) {
                    return Err(SnapshotError::Corrupt(format!(
                        "site {site}: implausible block shape {nrows}x{ncols}"
                    )));
                }
                let mut data = Vec::with_capacity(nrows * ncols);
                for _ in 0..nrows * ncols {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    data.push(C64::new(re, im));
                }
                blocks.insert((q, n), DMatrix::from_vec(nrows, ncols, data));
            }
            sites.push(blocks);
        }
        let bonds = derive_bonds(&sites, n_sites, total_charge)?;
        let state = SymmetricMps { n_max, total_charge, bonds, sites, center };
        state.check_structure().map_err(SnapshotError::Corrupt)?;
        Ok(state)
    }

    pub fn save_snapshot_file<P: AsRef<Path>>(&self, path: P) -> Result<(), SnapshotError> {
        let file = std::fs::File::create(path)?;
        self.save_snapshot(io::BufWriter::new(file))
    }

    pub fn load_snapshot_file<P: AsRef<Path>>(path: P) -> Result<Self, SnapshotError> {
        let file = std::fs::File::open(path)?;
        Self::load_snapshot(io::BufReader::new(file))
    }
}

fn derive_bonds(
    sites: &[super::Blocks],
    n_sites: usize,
    total_charge: u32,
) -> Result<Vec<BondBasis>, SnapshotError> {
    let mut bonds = vec![BTreeMap::<u32, usize>::new(); n_sites + 1];
    bonds[0].insert(0, 1);
    for (site, blocks) in sites.iter().enumerate() {
        for (&(q, n), block) in blocks {
            match bonds[site].get(&q) {
                Some(&d) if d != block.nrows() => {
                    return Err(SnapshotError::Corrupt(format!(
                        "site {site}: left dimension of charge {q} disagrees ({d} vs {})",
                        block.nrows()
                    )));
                }
                Some(_) => {}
                None => {
                    return Err(SnapshotError::Corrupt(format!(
                        "site {site}: left charge {q} has no support"
                    )));
                }
            }
            let qr = q + n as u32;
            match bonds[site + 1].get(&qr) {
                Some(&d) if d != block.ncols() => {
                    return Err(SnapshotError::Corrupt(format!(
                        "site {site}: right dimension of charge {qr} disagrees ({d} vs {})",
                        block.ncols()
                    )));
                }
                Some(_) => {}
                None => {
                    bonds[site + 1].insert(qr, block.ncols());
                }
            }
        }
    }
    if bonds[n_sites].iter().collect::<Vec<_>>() != vec![(&total_charge, &1)] {
        return Err(SnapshotError::Corrupt(format!(
            "right boundary does not close on charge {total_charge} with dimension 1"
        )));
    }
    Ok(bonds
        .into_iter()
        .map(|m| BondBasis::from_sorted(m.into_iter().collect()))
        .collect())
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8, SnapshotError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, SnapshotError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, SnapshotError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
