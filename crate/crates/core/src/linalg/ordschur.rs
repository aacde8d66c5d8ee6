//! Reordering of a real Schur form.
//!
//! Adjacent diagonal blocks are exchanged with the Sylvester-equation method:
//! for T = [[T11, T12], [0, T22]], the columns of [X; I] with
//! T11 X - X T22 = -T12 span the invariant subspace belonging to T22, so a QR
//! factorisation of that tall matrix yields the orthogonal exchange. Selected
//! eigenvalues are bubbled to the top-left corner.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat;

use super::schur::{schur_eigenvalues, Schur};

/// Diagonal block layout of a quasi upper triangular matrix.
fn blocks_of(t: &Mat) -> Vec<(usize, usize)> {
    let n = t.rows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let size = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
        blocks.push((i, size));
        i += size;
    }
    blocks
}

fn block_selected(
    t: &Mat,
    start: usize,
    size: usize,
    select: &impl Fn(Complex64) -> bool,
) -> Result<bool> {
    let eigs = schur_eigenvalues(&t.block(start, start, size, size));
    let flags: Vec<bool> = eigs.iter().map(|&e| select(e)).collect();
    if size == 2 && flags[0] != flags[1] {
        return Err(Error::ReorderFailed {
            reason: format!("2x2 block at {start} has eigenvalues on both sides of the selection"),
        });
    }
    Ok(flags[0])
}

/// Move every eigenvalue satisfying `select` to the top-left of the Schur
/// form, preserving A = Q T Qᵀ. Returns the dimension of the leading
/// invariant subspace (number of selected eigenvalues).
pub fn order_schur(schur: &mut Schur, select: impl Fn(Complex64) -> bool) -> Result<usize> {
    loop {
        let blocks = blocks_of(&schur.t);
        let mut selected = Vec::with_capacity(blocks.len());
        for &(start, size) in &blocks {
            selected.push(block_selected(&schur.t, start, size, &select)?);
        }
        let swap_at = (0..blocks.len().saturating_sub(1))
            .find(|&i| !selected[i] && selected[i + 1]);
        match swap_at {
            Some(i) => swap_adjacent(schur, blocks[i].0, blocks[i].1, blocks[i + 1].1)?,
            None => break,
        }
    }
    Ok(schur_eigenvalues(&schur.t)
        .into_iter()
        .filter(|&e| select(e))
        .count())
}

/// Exchange the adjacent diagonal blocks of sizes `p` (at `i`) and `q`
/// (at `i + p`).
fn swap_adjacent(schur: &mut Schur, i: usize, p: usize, q: usize) -> Result<()> {
    let t11 = schur.t.block(i, i, p, p);
    let t22 = schur.t.block(i + p, i + p, q, q);
    let t12 = schur.t.block(i, i + p, p, q);
    let w = p + q;

    // Solve T11 X - X T22 = -T12 via the Kronecker system
    // (I_q ⊗ T11 - T22ᵀ ⊗ I_p) vec(X) = -vec(T12), column-major vec.
    let mut kron = Mat::zeros(p * q, p * q);
    for col in 0..q {
        for row in 0..p {
            let eq = col * p + row;
            for k in 0..p {
                kron[(eq, col * p + k)] += t11[(row, k)];
            }
            for k in 0..q {
                kron[(eq, k * p + row)] -= t22[(k, col)];
            }
        }
    }
    let mut rhs = Mat::zeros(p * q, 1);
    for col in 0..q {
        for row in 0..p {
            rhs[(col * p + row, 0)] = -t12[(row, col)];
        }
    }
    let x = kron.solve(&rhs).map_err(|_| Error::ReorderFailed {
        reason: format!("Sylvester system singular when swapping blocks at {i}"),
    })?;

    // Stack M = [X; I_q]; the orthogonal factor of its QR moves the T22
    // invariant subspace to the front of the window.
    let mut m = Mat::zeros(w, q);
    for col in 0..q {
        for row in 0..p {
            m[(row, col)] = x[(col * p + row, 0)];
        }
        m[(p + col, col)] = 1.0;
    }
    let wq = householder_q(&m);

    // Window transform: T <- (I ⊕ Wᵀ ⊕ I) T (I ⊕ W ⊕ I), Q <- Q (I ⊕ W ⊕ I).
    let n = schur.t.rows();
    let wt = wq.transpose();
    let rows = schur.t.block(i, 0, w, n);
    schur.t.set_block(i, 0, &(&wt * &rows));
    let cols = schur.t.block(0, i, n, w);
    schur.t.set_block(0, i, &(&cols * &wq));
    let qcols = schur.q.block(0, i, n, w);
    schur.q.set_block(0, i, &(&qcols * &wq));

    // The exchange zeroes the (trailing, leading) block up to roundoff;
    // enforce it exactly so the block structure stays well defined.
    for r in 0..p {
        for c in 0..q {
            schur.t[(i + q + r, i + c)] = 0.0;
        }
    }
    if q == 1 && p == 1 {
        schur.t[(i + 1, i)] = 0.0;
    }
    Ok(())
}

/// Orthogonal factor of the QR factorisation of `m` (rows x cols,
/// rows >= cols), returned as the full square rows x rows matrix.
fn householder_q(m: &Mat) -> Mat {
    let rows = m.rows();
    let cols = m.cols();
    let mut r = m.clone();
    let mut q = Mat::identity(rows);
    for k in 0..cols.min(rows - 1) {
        let mut alpha = 0.0;
        for i in k..rows {
            alpha += r[(i, k)] * r[(i, k)];
        }
        alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        if r[(k, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v = vec![0.0; rows];
        for i in k..rows {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v vᵀ / (vᵀv); apply to R on the left, fold into Q on the right
        for j in 0..cols {
            let dot: f64 = (k..rows).map(|i| v[i] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                r[(i, j)] -= f * v[i];
            }
        }
        for row in 0..rows {
            let dot: f64 = (k..rows).map(|i| q[(row, i)] * v[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                q[(row, i)] -= f * v[i];
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::schur::real_schur;
    use approx::assert_relative_eq;

    fn sorted_eigs(eigs: &[Complex64]) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = eigs.iter().map(|e| (e.re, e.im)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn check_ordered(a: &Mat, select: impl Fn(Complex64) -> bool + Copy) {
        let n = a.rows();
        let mut s = real_schur(a).unwrap();
        let before = sorted_eigs(&schur_eigenvalues(&s.t));
        let k = order_schur(&mut s, select).unwrap();

        let qtq = &s.q.transpose() * &s.q;
        assert!((&qtq - &Mat::identity(n)).max_abs() < 1e-11);
        let rebuilt = &(&s.q * &s.t) * &s.q.transpose();
        let scale = a.frobenius_norm().max(1.0);
        assert!((&rebuilt - a).frobenius_norm() / scale < 1e-11);

        let after = sorted_eigs(&schur_eigenvalues(&s.t));
        for (x, y) in before.iter().zip(&after) {
            assert_relative_eq!(x.0, y.0, max_relative = 1e-8, epsilon = 1e-8);
            assert_relative_eq!(x.1, y.1, max_relative = 1e-8, epsilon = 1e-8);
        }

        let eigs = schur_eigenvalues(&s.t);
        for (idx, e) in eigs.iter().enumerate() {
            if idx < k {
                assert!(select(*e), "leading eigenvalue {e} not selected");
            } else {
                assert!(!select(*e), "trailing eigenvalue {e} selected");
            }
        }
    }

    #[test]
    fn reorders_diagonal_real_eigenvalues() {
        let a = Mat::diag(&[3.0, -1.0, 2.0, -4.0]);
        check_ordered(&a, |e| e.re < 0.0);
    }

    #[test]
    fn reorders_mixed_complex_and_real() {
        // block diagonal: complex pair Re=+1, real -2, complex pair Re=-3, real +5
        let a = Mat::from_rows(&[
            &[1.0, 2.0, 0.1, 0.0, 0.0, 0.0],
            &[-2.0, 1.0, 0.0, 0.2, 0.0, 0.0],
            &[0.0, 0.0, -2.0, 0.3, 0.1, 0.0],
            &[0.0, 0.0, 0.0, -3.0, 4.0, 0.0],
            &[0.0, 0.0, 0.0, -4.0, -3.0, 0.5],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 5.0],
        ]);
        check_ordered(&a, |e| e.re < 0.0);
    }

    #[test]
    fn random_dense_reordering() {
        let mut state = 777u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in [4usize, 6, 8] {
            let a = Mat::from_fn(n, n, |_, _| next() * 4.0);
            check_ordered(&a, |e| e.re < 0.0);
        }
    }

    #[test]
    fn selecting_everything_is_a_no_op_count() {
        let a = Mat::diag(&[1.0, 2.0, 3.0]);
        let mut s = real_schur(&a).unwrap();
        let k = order_schur(&mut s, |_| true).unwrap();
        assert_eq!(k, 3);
    }
}
