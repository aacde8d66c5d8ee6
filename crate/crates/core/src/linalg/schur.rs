//! Real Schur decomposition for small dense matrices.
//!
//! Householder reduction to Hessenberg form followed by the Francis
//! double-shift QR iteration, accumulating the orthogonal transformations.
//! The iteration follows the classic EISPACK `orthes`/`hqr2` scheme, kept in
//! Schur form (quasi upper triangular `T` with 1x1 and 2x2 diagonal blocks)
//! instead of running the eigenvector back-substitution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// A = Q * T * Qᵀ with Q orthogonal and T quasi upper triangular.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: Mat,
    pub q: Mat,
}

/// Householder reduction to upper Hessenberg form; returns (H, Q) with
/// QᵀAQ = H.
pub fn hessenberg(a: &Mat) -> (Mat, Mat) {
    assert!(a.is_square());
    let n = a.rows();
    let mut h = a.clone();
    let mut v = Mat::identity(n);
    if n <= 2 {
        return (h, v);
    }
    let mut ort = vec![0.0; n];
    let high = n - 1;

    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // Similarity transformation H = (I - u uᵀ/h) H (I - u uᵀ/h)
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }

    // Accumulate the transformations (ortran).
    for m in (1..high).rev() {
        if h[(m, m - 1)] != 0.0 {
            for i in (m + 1)..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = 0.0;
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                // double division avoids possible underflow
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    v[(i, j)] += g * ort[i];
                }
            }
        }
    }

    // Entries below the first subdiagonal are eliminated exactly.
    for i in 2..n {
        for j in 0..(i - 1) {
            h[(i, j)] = 0.0;
        }
    }
    (h, v)
}

/// Real Schur decomposition via Francis double-shift QR.
pub fn real_schur(a: &Mat) -> Result<Schur> {
    assert!(a.is_square());
    let (mut h, mut v) = hessenberg(a);
    francis(&mut h, &mut v)?;
    Ok(Schur { t: h, q: v })
}

#[allow(clippy::too_many_lines)]
fn francis(hm: &mut Mat, vm: &mut Mat) -> Result<()> {
    let size = hm.rows();
    let nn = size as isize;
    if nn == 0 {
        return Ok(());
    }
    let mut n = nn - 1;
    let low: isize = 0;
    let high: isize = nn - 1;
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);

    let h = |m: &Mat, i: isize, j: isize| m[(i as usize, j as usize)];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += h(hm, i, j).abs();
        }
    }
    if norm == 0.0 {
        return Ok(());
    }

    let mut iter = 0;
    let mut total_iter = 0usize;
    let max_total = 60 * size.max(1);

    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            let mut s = h(hm, l - 1, l - 1).abs() + h(hm, l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if h(hm, l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            hm[(n as usize, n as usize)] += exshift;
            if n > low {
                hm[(n as usize, (n - 1) as usize)] = 0.0;
            }
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found: either a real pair (split with a rotation) or
            // a complex pair (kept as a 2x2 block).
            let w = h(hm, n, n - 1) * h(hm, n - 1, n);
            p = (h(hm, n - 1, n - 1) - h(hm, n, n)) / 2.0;
            q = p * p + w;
            let mut z = q.abs().sqrt();
            hm[(n as usize, n as usize)] += exshift;
            hm[((n - 1) as usize, (n - 1) as usize)] += exshift;

            if q > 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                let x = h(hm, n, n - 1);
                let s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                let rr = (p * p + q * q).sqrt();
                p /= rr;
                q /= rr;
                for j in (n - 1)..nn {
                    let zz = h(hm, n - 1, j);
                    hm[((n - 1) as usize, j as usize)] = q * zz + p * h(hm, n, j);
                    hm[(n as usize, j as usize)] = q * h(hm, n, j) - p * zz;
                }
                for i in 0..=n {
                    let zz = h(hm, i, n - 1);
                    hm[(i as usize, (n - 1) as usize)] = q * zz + p * h(hm, i, n);
                    hm[(i as usize, n as usize)] = q * h(hm, i, n) - p * zz;
                }
                for i in low..=high {
                    let zz = h(vm, i, n - 1);
                    vm[(i as usize, (n - 1) as usize)] = q * zz + p * h(vm, i, n);
                    vm[(i as usize, n as usize)] = q * h(vm, i, n) - p * zz;
                }
                hm[(n as usize, (n - 1) as usize)] = 0.0;
            }
            if n - 1 > low {
                hm[((n - 1) as usize, (n - 2) as usize)] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            // Form shift.
            let mut x = h(hm, n, n);
            let mut y = 0.0;
            let mut w = 0.0;
            if l < n {
                y = h(hm, n - 1, n - 1);
                w = h(hm, n, n - 1) * h(hm, n - 1, n);
            }

            // Wilkinson's original ad hoc shift
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    hm[(i as usize, i as usize)] -= x;
                }
                let s = h(hm, n, n - 1).abs() + h(hm, n - 1, n - 2).abs();
                y = 0.75 * s;
                x = y;
                w = -0.4375 * s * s;
            }

            // MATLAB's new ad hoc shift
            if iter == 30 {
                let mut s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        hm[(i as usize, i as usize)] -= s;
                    }
                    exshift += s;
                    w = 0.964;
                    y = w;
                    x = y;
                }
            }

            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                if std::env::var("SCHUR_DEBUG").is_ok() {
                    eprintln!(
                        "stalled: n={n} l={l} iter={iter} h[n][n-1]={:.3e} h[n-1][n-2]={:.3e} \
                         h[n][n]={:.3e} h[n-1][n-1]={:.3e}",
                        h(hm, n, n - 1),
                        if n - 1 > 0 { h(hm, n - 1, n - 2) } else { f64::NAN },
                        h(hm, n, n),
                        h(hm, n - 1, n - 1)
                    );
                }
                return Err(Error::EigenNoConvergence { size, norm });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                let z = h(hm, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h(hm, m + 1, m) + h(hm, m, m + 1);
                q = h(hm, m + 1, m + 1) - z - rr - ss;
                r = h(hm, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h(hm, m, m - 1).abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h(hm, m - 1, m - 1).abs() + z.abs() + h(hm, m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                hm[(i as usize, (i - 2) as usize)] = 0.0;
                if i > m + 2 {
                    hm[(i as usize, (i - 3) as usize)] = 0.0;
                }
            }

            // Double QR step on rows l..n and columns m..n.
            for k in m..n {
                let notlast = k != n - 1;
                let mut colscale = 0.0;
                if k != m {
                    p = h(hm, k, k - 1);
                    q = h(hm, k + 1, k - 1);
                    r = if notlast { h(hm, k + 2, k - 1) } else { 0.0 };
                    colscale = p.abs() + q.abs() + r.abs();
                    if colscale == 0.0 {
                        continue;
                    }
                    p /= colscale;
                    q /= colscale;
                    r /= colscale;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    // the reflector annihilates the rest of the column
                    hm[(k as usize, (k - 1) as usize)] = -s * colscale;
                    hm[((k + 1) as usize, (k - 1) as usize)] = 0.0;
                    if notlast {
                        hm[((k + 2) as usize, (k - 1) as usize)] = 0.0;
                    }
                } else if l != m {
                    hm[(k as usize, (k - 1) as usize)] = -h(hm, k, k - 1);
                }
                p += s;
                let x = p / s;
                let y = q / s;
                let z = r / s;
                q /= p;
                r /= p;

                // Row modification
                for j in k..nn {
                    let mut pp = h(hm, k, j) + q * h(hm, k + 1, j);
                    if notlast {
                        pp += r * h(hm, k + 2, j);
                        hm[((k + 2) as usize, j as usize)] -= pp * z;
                    }
                    hm[(k as usize, j as usize)] -= pp * x;
                    hm[((k + 1) as usize, j as usize)] -= pp * y;
                }

                // Column modification
                let upper = if n < k + 3 { n } else { k + 3 };
                for i in 0..=upper {
                    let mut pp = x * h(hm, i, k) + y * h(hm, i, k + 1);
                    if notlast {
                        pp += z * h(hm, i, k + 2);
                        hm[(i as usize, (k + 2) as usize)] -= pp * r;
                    }
                    hm[(i as usize, k as usize)] -= pp;
                    hm[(i as usize, (k + 1) as usize)] -= pp * q;
                }

                // Accumulate transformations
                for i in low..=high {
                    let mut pp = x * h(vm, i, k) + y * h(vm, i, k + 1);
                    if notlast {
                        pp += z * h(vm, i, k + 2);
                        vm[(i as usize, (k + 2) as usize)] -= pp * r;
                    }
                    vm[(i as usize, k as usize)] -= pp;
                    vm[(i as usize, (k + 1) as usize)] -= pp * q;
                }
            }
        }
    }

    // The bulge chase leaves roundoff-size residue strictly below the first
    // subdiagonal; the converged form is quasi-triangular, so clear it. A
    // residue that is not negligible signals a failed iteration.
    let mut worst: f64 = 0.0;
    let mut worst_at = (0usize, 0usize);
    for i in 2..size {
        for j in 0..(i - 1) {
            if hm[(i, j)].abs() > worst {
                worst = hm[(i, j)].abs();
                worst_at = (i, j);
            }
            hm[(i, j)] = 0.0;
        }
    }
    if worst > 1e-8 * norm {
        if std::env::var("SCHUR_DEBUG").is_ok() {
            eprintln!("residue {worst:.3e} at {worst_at:?}, norm {norm:.3e}");
        }
        return Err(Error::EigenNoConvergence { size, norm });
    }
    Ok(())
}

/// Eigenvalues read off the quasi-triangular factor of a real Schur form.
pub fn schur_eigenvalues(t: &Mat) -> Vec<Complex64> {
    let n = t.rows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let a = t[(i, i)];
            let b = t[(i, i + 1)];
            let c = t[(i + 1, i)];
            let d = t[(i + 1, i + 1)];
            let mean = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc < 0.0 {
                let im = (-disc).sqrt();
                out.push(Complex64::new(mean, im));
                out.push(Complex64::new(mean, -im));
            } else {
                let sq = disc.sqrt();
                out.push(Complex64::new(mean + sq, 0.0));
                out.push(Complex64::new(mean - sq, 0.0));
            }
            i += 2;
        } else {
            out.push(Complex64::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn check_schur(a: &Mat, tol: f64) -> Schur {
        let s = real_schur(a).unwrap();
        let n = a.rows();
        let qtq = &s.q.transpose() * &s.q;
        assert!(
            (&qtq - &Mat::identity(n)).max_abs() < tol,
            "Q not orthogonal: {}",
            (&qtq - &Mat::identity(n)).max_abs()
        );
        let rebuilt = &(&s.q * &s.t) * &s.q.transpose();
        let scale = a.frobenius_norm().max(1.0);
        assert!(
            (&rebuilt - a).frobenius_norm() / scale < tol,
            "QTQ' != A: {}",
            (&rebuilt - a).frobenius_norm() / scale
        );
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                assert_eq!(s.t[(i, j)], 0.0, "entry ({i},{j}) below subdiagonal");
            }
        }
        let mut prev = false;
        for i in 1..n {
            let nz = s.t[(i, i - 1)] != 0.0;
            assert!(!(prev && nz), "adjacent 2x2 blocks overlap at row {i}");
            prev = nz;
        }
        s
    }

    #[test]
    fn diagonal_matrix() {
        let a = Mat::diag(&[3.0, -1.0, 2.0]);
        let s = check_schur(&a, 1e-13);
        let mut eigs: Vec<f64> = schur_eigenvalues(&s.t).iter().map(|e| e.re).collect();
        eigs.sort_by(f64::total_cmp);
        assert_relative_eq!(eigs[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eigs[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn undamped_oscillator_pair() {
        // [[0, 1], [-4, 0]] has eigenvalues +/- 2i.
        let a = Mat::from_rows(&[&[0.0, 1.0], &[-4.0, 0.0]]);
        let s = check_schur(&a, 1e-13);
        let eigs = schur_eigenvalues(&s.t);
        let mut ims: Vec<f64> = eigs.iter().map(|e| e.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_relative_eq!(ims[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(ims[1], 2.0, epsilon = 1e-12);
        for e in &eigs {
            assert_relative_eq!(e.re, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_matrices_satisfy_schur_identities() {
        // simple LCG keeps the test self-contained and deterministic
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in [2usize, 3, 4, 5, 6, 8, 12] {
            let a = Mat::from_fn(n, n, |_, _| next() * 5.0);
            check_schur(&a, 1e-11);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut state = 12345u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in [3usize, 5, 7] {
            let a = Mat::from_fn(n, n, |_, _| next() * 3.0);
            let s = real_schur(&a).unwrap();
            let eigs = schur_eigenvalues(&s.t);
            let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let eig_sum: f64 = eigs.iter().map(|e| e.re).sum();
            assert_relative_eq!(trace, eig_sum, max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn upper_triangular_input_is_fixed_point() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 4.0], &[0.0, -3.0, 5.0], &[0.0, 0.0, 7.0]]);
        let s = check_schur(&a, 1e-12);
        let eigs = schur_eigenvalues(&s.t);
        let mut res: Vec<f64> = eigs.iter().map(|e| e.re).collect();
        res.sort_by(f64::total_cmp);
        assert_relative_eq!(res[0], -3.0, epsilon = 1e-11);
        assert_relative_eq!(res[1], 2.0, epsilon = 1e-11);
        assert_relative_eq!(res[2], 7.0, epsilon = 1e-11);
    }
}
