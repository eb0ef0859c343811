//! Two-site operators in particle-number block form.
//!
//! A two-site operator that commutes with the total particle number is block
//! diagonal in the combined occupation ν = n₁ + n₂. Gates are stored as one
//! dense matrix per ν block over the pair basis returned by [`pair_states`],
//! which is also the row/column convention used when the state applies them.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::MpsError;

/// All (n₁, n₂) with n₁ + n₂ = ν and both occupations within the cutoff,
/// ordered by ascending n₁.
pub fn pair_states(nu: u8, n_max: u8) -> Vec<(u8, u8)> {
    let lo = nu.saturating_sub(n_max);
    let hi = nu.min(n_max);
    (lo..=hi).map(|n1| (n1, nu - n1)).collect()
}

/// A number-conserving operator on two adjacent sites.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteOp {
    n_max: u8,
    /// blocks[ν] over the [`pair_states`] basis, ν = 0..=2·n_max.
    blocks: Vec<DMatrix<C64>>,
}

impl TwoSiteOp {
    /// Assemble from per-ν blocks; dimensions must match the pair bases.
    pub fn from_blocks(n_max: u8, blocks: Vec<DMatrix<C64>>) -> Result<Self, MpsError> {
        if blocks.len() != 2 * n_max as usize + 1 {
            return Err(MpsError::OperatorDimensionMismatch {
                expected: 2 * n_max as usize + 1,
                got: blocks.len(),
            });
        }
        for (nu, block) in blocks.iter().enumerate() {
            let dim = pair_states(nu as u8, n_max).len();
            if block.nrows() != dim || block.ncols() != dim {
                return Err(MpsError::OperatorDimensionMismatch { expected: dim, got: block.nrows() });
            }
        }
        Ok(Self { n_max, blocks })
    }

    /// Validate and decompose a dense d²×d² matrix (basis |n₁n₂⟩ at index
    /// n₁·d + n₂, d = n_max + 1). Any matrix element connecting different
    /// total occupations marks the operator as non-conserving and is
    /// rejected.
    pub fn from_dense(n_max: u8, dense: &DMatrix<C64>) -> Result<Self, MpsError> {
        let d = n_max as usize + 1;
        if dense.nrows() != d * d || dense.ncols() != d * d {
            return Err(MpsError::OperatorDimensionMismatch { expected: d * d, got: dense.nrows() });
        }
        let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for r in 0..d * d {
            for c in 0..d * d {
                let nu_r = r / d + r % d;
                let nu_c = c / d + c % d;
                if nu_r != nu_c && dense[(r, c)].norm() > 1e-14 * scale {
                    return Err(MpsError::NonConservingGate);
                }
            }
        }
        let blocks = (0..=2 * n_max)
            .map(|nu| {
                let pairs = pair_states(nu, n_max);
                DMatrix::from_fn(pairs.len(), pairs.len(), |i, j| {
                    let (r1, r2) = pairs[i];
                    let (c1, c2) = pairs[j];
                    dense[(r1 as usize * d + r2 as usize, c1 as usize * d + c2 as usize)]
                })
            })
            .collect();
        Ok(Self { n_max, blocks })
    }

    pub fn identity(n_max: u8) -> Self {
        let blocks = (0..=2 * n_max)
            .map(|nu| {
                let dim = pair_states(nu, n_max).len();
                DMatrix::identity(dim, dim)
            })
            .collect();
        Self { n_max, blocks }
    }

    pub fn n_max(&self) -> u8 {
        self.n_max
    }

    pub fn block(&self, nu: u8) -> &DMatrix<C64> {
        &self.blocks[nu as usize]
    }

    /// Hermitian conjugate (reverses a unitary gate).
    pub fn adjoint(&self) -> Self {
        Self { n_max: self.n_max, blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// Expand back to the dense d²×d² matrix.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.n_max as usize + 1;
        let mut out = DMatrix::zeros(d * d, d * d);
        for (nu, block) in self.blocks.iter().enumerate() {
            let pairs = pair_states(nu as u8, self.n_max);
            for (i, &(r1, r2)) in pairs.iter().enumerate() {
                for (j, &(c1, c2)) in pairs.iter().enumerate() {
                    out[(r1 as usize * d + r2 as usize, c1 as usize * d + c2 as usize)] =
                        block[(i, j)];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_basis_enumeration() {
        assert_eq!(pair_states(0, 2), vec![(0, 0)]);
        assert_eq!(pair_states(2, 2), vec![(0, 2), (1, 1), (2, 0)]);
        assert_eq!(pair_states(3, 2), vec![(1, 2), (2, 1)]);
        assert_eq!(pair_states(4, 2), vec![(2, 2)]);
    }

    #[test]
    fn dense_round_trip() {
        let op = TwoSiteOp::identity(3);
        let back = TwoSiteOp::from_dense(3, &op.to_dense()).unwrap();
        assert_eq!(op, back);
    }

    #[test]
    fn rejects_non_conserving_matrix() {
        let d = 3usize; // n_max = 2
        let mut dense = DMatrix::<C64>::zeros(d * d, d * d);
        // |01> -> |02| transfer changes the pair total: must be rejected.
        dense[(2, 1)] = C64::new(1.0, 0.0);
        assert_eq!(TwoSiteOp::from_dense(2, &dense), Err(MpsError::NonConservingGate));
    }
}
