//! Verified SVD for the complex blocks arising in two-site updates.
//!
//! TEBD constantly factors nearly rank-deficient wave tensors (a product
//! state plus O(dt) corrections), and `nalgebra`'s bidiagonal-implicit-shift
//! SVD was observed to return misaligned factors on exactly such matrices —
//! unitary U and correct singular values whose product misses the input by
//! ~1e-5 (see the regression test below). Every fast factorization is
//! therefore verified by full reconstruction, and on failure the block is
//! refactored with a one-sided Jacobi sweep, which orthogonalizes the
//! columns directly and cannot misalign factors. The verification costs a
//! fraction of the factorization itself and the fallback triggers rarely, so
//! the fast path sets the throughput.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub(crate) struct BlockSvd {
    /// Orthonormal columns, one per singular value (descending).
    pub u: DMatrix<C64>,
    pub values: Vec<f64>,
    /// Orthonormal rows.
    pub v_t: DMatrix<C64>,
}

const MAX_SWEEPS: usize = 60;
const ORTHO_TOL: f64 = 1e-15;
/// Acceptance threshold for the reconstruction residual of the fast path,
/// relative to the largest singular value.
const VERIFY_TOL: f64 = 2e-13;

/// Thin SVD with singular values sorted in descending order; fast path with
/// reconstruction verification, Jacobi fallback.
pub(crate) fn svd(mat: &DMatrix<C64>) -> BlockSvd {
    if let Some(fast) = fast_svd(mat) {
        if reconstruction_ok(mat, &fast) {
            return fast;
        }
    }
    jacobi_svd(mat)
}

fn fast_svd(mat: &DMatrix<C64>) -> Option<BlockSvd> {
    let fact = mat.clone().try_svd(true, true, 1e-14, 500)?;
    let u = fact.u?;
    let v_t = fact.v_t?;
    let values: Vec<f64> = fact.singular_values.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(BlockSvd { u, values, v_t })
}

fn reconstruction_ok(mat: &DMatrix<C64>, s: &BlockSvd) -> bool {
    let k = s.values.len();
    let scale = s.values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut scaled_u = s.u.clone();
    for (c, &v) in s.values.iter().enumerate().take(k) {
        scaled_u.column_mut(c).scale_mut(v);
    }
    let rec = scaled_u * &s.v_t;
    let worst = (rec - mat).iter().map(|z| z.norm()).fold(0.0, f64::max);
    worst <= VERIFY_TOL * scale
}

/// One-sided Jacobi SVD; unconditionally accurate for these block sizes.
pub(crate) fn jacobi_svd(mat: &DMatrix<C64>) -> BlockSvd {
    let (rows, cols) = mat.shape();
    if rows < cols {
        // M = (M†)† = (U' Σ V'†)† = V' Σ U'†.
        let flipped = jacobi_svd(&mat.adjoint());
        return BlockSvd {
            u: flipped.v_t.adjoint(),
            values: flipped.values,
            v_t: flipped.u.adjoint(),
        };
    }
    if rows > cols {
        // Householder QR first; Jacobi then works on the square factor.
        let qr = mat.clone().qr();
        let inner = svd_square(qr.r());
        return BlockSvd { u: qr.q() * inner.u, values: inner.values, v_t: inner.v_t };
    }
    svd_square(mat.clone())
}

/// Singular values only (descending); the rotations are still applied but no
/// factor bookkeeping is needed.
pub(crate) fn singular_values(mat: &DMatrix<C64>) -> Vec<f64> {
    let work = if mat.nrows() < mat.ncols() { mat.adjoint() } else { mat.clone() };
    let work = if work.nrows() > work.ncols() { work.qr().r() } else { work };
    let (w, _) = orthogonalize_columns(work, false);
    let mut values: Vec<f64> = w.column_iter().map(|c| c.norm()).collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("norms are finite"));
    values
}

fn svd_square(mat: DMatrix<C64>) -> BlockSvd {
    let n = mat.ncols();
    let (w, v) = orthogonalize_columns(mat, true);
    let v = v.expect("requested");
    let mut order: Vec<(f64, usize)> =
        w.column_iter().enumerate().map(|(j, c)| (c.norm(), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("norms are finite").then(a.1.cmp(&b.1)));
    let mut u = DMatrix::<C64>::zeros(w.nrows(), n);
    let mut v_t = DMatrix::<C64>::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (slot, &(sigma, j)) in order.iter().enumerate() {
        values.push(sigma);
        if sigma > 0.0 {
            let scale = C64::new(1.0 / sigma, 0.0);
            u.column_mut(slot).copy_from(&(w.column(j) * scale));
        }
        v_t.row_mut(slot).copy_from(&v.column(j).adjoint());
    }
    BlockSvd { u, values, v_t }
}

/// Hestenes one-sided Jacobi: sweep over column pairs, rotating each pair so
/// that the columns become orthogonal, until every pair satisfies
/// |⟨w_p, w_q⟩| ≤ tol·‖w_p‖‖w_q‖. Returns the rotated matrix (columns =
/// σ·u) and, when requested, the accumulated rotations V with M = W V†.
fn orthogonalize_columns(
    mut w: DMatrix<C64>,
    track_v: bool,
) -> (DMatrix<C64>, Option<DMatrix<C64>>) {
    let n = w.ncols();
    let mut v = track_v.then(|| DMatrix::<C64>::identity(n, n));
    if n < 2 {
        return (w, v);
    }
    // Columns below the roundoff floor of the largest column carry no usable
    // direction; rotating two of them against each other never converges.
    let floor = w
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0, f64::max)
        * (f64::EPSILON * f64::EPSILON);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut a = 0.0;
                let mut b = 0.0;
                let mut c = C64::ZERO;
                for r in 0..w.nrows() {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    a += wp.norm_sqr();
                    b += wq.norm_sqr();
                    c += wp.conj() * wq;
                }
                if a == 0.0 || b == 0.0 || (a <= floor && b <= floor) {
                    continue;
                }
                if c.norm_sqr() <= ORTHO_TOL * ORTHO_TOL * a * b {
                    continue;
                }
                rotated = true;
                // Fold the phase of c into column q, then apply the real
                // Jacobi rotation diagonalizing [[a, |c|], [|c|, b]].
                let abs_c = c.norm();
                let phase = (c / abs_c).conj();
                let zeta = (b - a) / (2.0 * abs_c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..w.nrows() {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)] * phase;
                    w[(r, p)] = cs * wp - sn * wq;
                    w[(r, q)] = sn * wp + cs * wq;
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vp = v[(r, p)];
                        let vq = v[(r, q)] * phase;
                        v[(r, p)] = cs * vp - sn * vq;
                        v[(r, q)] = sn * vp + cs * vq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(s: &BlockSvd) -> DMatrix<C64> {
        let k = s.values.len();
        let mut m = DMatrix::<C64>::zeros(s.u.nrows(), s.v_t.ncols());
        for i in 0..k {
            for a in 0..s.u.nrows() {
                for b in 0..s.v_t.ncols() {
                    m[(a, b)] += s.u[(a, i)] * s.values[i] * s.v_t[(i, b)];
                }
            }
        }
        m
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check(mat: &DMatrix<C64>) {
        let s = svd(mat);
        assert!(max_abs(&(reconstruct(&s) - mat)) < 1e-13 * (1.0 + max_abs(mat)));
        let k = s.values.len();
        // Orthonormal factors on the numerically non-null part (directions
        // of singular values at the roundoff floor are arbitrary).
        let floor = 1e-14 * s.values.first().copied().unwrap_or(0.0);
        let uu = s.u.adjoint() * &s.u;
        let vv = &s.v_t * s.v_t.adjoint();
        for i in 0..k {
            for j in 0..k {
                if s.values[i] <= floor || s.values[j] <= floor {
                    continue;
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((uu[(i, j)].norm() - expect).abs() < 1e-13, "u not orthonormal");
                assert!((vv[(i, j)].norm() - expect).abs() < 1e-13, "v not orthonormal");
            }
        }
        // Descending order.
        for wpair in s.values.windows(2) {
            assert!(wpair[0] >= wpair[1]);
        }
    }

    #[test]
    fn random_shapes() {
        let mut seed = 7u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for trial in 0..40 {
            let r = 1 + trial % 9;
            let c = 1 + (trial * 5) % 11;
            let m = DMatrix::<C64>::from_fn(r, c, |_, _| C64::new(rng(), rng()));
            check(&m);
        }
    }

    #[test]
    fn graded_spectrum_keeps_small_values() {
        let mut seed = 3u64;
        let mut rng = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for _ in 0..20 {
            let mut m = DMatrix::<C64>::zeros(7, 5);
            for scale in [1.0, 1e-3, 1e-6, 1e-9] {
                let u = DMatrix::<C64>::from_fn(7, 1, |_, _| C64::new(rng(), rng()));
                let v = DMatrix::<C64>::from_fn(1, 5, |_, _| C64::new(rng(), rng()));
                m += u * v * C64::new(scale, 0.0);
            }
            check(&m);
        }
    }

    #[test]
    fn zero_and_rank_one() {
        check(&DMatrix::<C64>::zeros(4, 3));
        let m = DMatrix::<C64>::from_fn(5, 4, |r, c| C64::new((r + 1) as f64 * (c + 1) as f64, 0.0));
        let s = svd(&m);
        assert!(s.values[1] < 1e-13 * s.values[0]);
        check(&m);
    }

    /// Regression: a wave-tensor block from a fourth-order TEBD step. The
    /// `nalgebra` SVD returns correct singular values and a unitary U for
    /// this matrix, yet U·Σ·V† misses M by 3.6e-5 (the factors come back
    /// misaligned), which silently corrupted the evolved state. The check
    /// here is exactly the reconstruction property that failed.
    #[test]
    fn near_rank_one_wave_tensor_block() {
        let entries = [
            (6.32304999209851347e-7, 1.98257447095810278e-3),
            (9.99994520837548473e-1, -1.99925941593676856e-4),
            (2.55045423302706846e-21, 7.99687723181884704e-18),
            (8.06714682061868618e-15, -1.20322901966853508e-18),
            (-3.46342991965127839e-9, 1.14856008247587495e-12),
            (3.71443873633752871e-10, 1.74691992566416184e-6),
        ];
        let m = DMatrix::<C64>::from_fn(3, 2, |r, c| {
            let (re, im) = entries[r * 2 + c];
            C64::new(re, im)
        });
        check(&m);
    }
}
