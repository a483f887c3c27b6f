//! Small dense complex Schur machinery for the Krylov projection:
//! Householder reduction, single-shift QR, diagonal reordering and
//! triangular eigenvectors.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Unitary G = [[c, s], [-conj(s), c]] with G [x; y] = [r; 0].
fn givens(x: C, y: C) -> (f64, C) {
    if y == ZERO {
        return (1.0, ZERO);
    }
    if x == ZERO {
        return (0.0, y.conj() / y.norm());
    }
    let rho = x.norm().hypot(y.norm());
    let phase = x / x.norm();
    (x.norm() / rho, phase * y.conj() / rho)
}

fn rotate_rows(a: &mut Mat<C>, k: usize, cs: f64, sn: C, cols: std::ops::Range<usize>) {
    for j in cols {
        let (p, q) = (a[(k, j)], a[(k + 1, j)]);
        a[(k, j)] = cs * p + sn * q;
        a[(k + 1, j)] = -sn.conj() * p + cs * q;
    }
}

fn rotate_cols(a: &mut Mat<C>, k: usize, cs: f64, sn: C, rows: std::ops::Range<usize>) {
    for i in rows {
        let (p, q) = (a[(i, k)], a[(i, k + 1)]);
        a[(i, k)] = cs * p + sn.conj() * q;
        a[(i, k + 1)] = -sn * p + cs * q;
    }
}

/// Overwrites `a` with an upper Hessenberg matrix; `a_in = q H q^H`.
pub fn hessenberg(a: &mut Mat<C>, q: &mut Mat<C>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0 == ZERO { C::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        for j in 0..n {
            let s: C = v.iter().enumerate().map(|(r, vr)| vr.conj() * a[(k + 1 + r, j)]).sum();
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= 2.0 * vr * s;
            }
        }
        for m in [&mut *a, &mut *q] {
            for i in 0..n {
                let s: C = v.iter().enumerate().map(|(r, vr)| m[(i, k + 1 + r)] * vr).sum();
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= 2.0 * s * vr.conj();
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

fn wilkinson(a: C, b: C, c: C, d: C) -> C {
    let half = 0.5 * (a - d);
    let disc = (half * half + b * c).sqrt();
    let m = 0.5 * (a + d);
    let (e1, e2) = (m + disc, m - disc);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Reduces Hessenberg `h` to upper triangular Schur form, accumulating the
/// rotations into `z`.
pub fn schur(h: &mut Mat<C>, z: &mut Mat<C>) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| h[(i, j)].norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut ihi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while ihi > 0 {
        let mut l = ihi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == ihi {
            ihi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 60 * n {
            return Err(Error::ConvergenceFailure { residual: h[(ihi, ihi - 1)].norm() });
        }
        let mu = if iter % 11 == 10 {
            h[(ihi, ihi)] + 0.75 * h[(ihi, ihi - 1)].norm()
        } else {
            wilkinson(h[(ihi - 1, ihi - 1)], h[(ihi - 1, ihi)], h[(ihi, ihi - 1)], h[(ihi, ihi)])
        };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..ihi {
            let (cs, sn) = givens(x, y);
            let start = if k > l { k - 1 } else { l };
            rotate_rows(h, k, cs, sn, start..n);
            rotate_cols(h, k, cs, sn, 0..(k + 3).min(ihi + 1));
            rotate_cols(z, k, cs, sn, 0..n);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < ihi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Swaps diagonal entries k and k+1 of triangular `t`, updating `z`.
fn swap_adjacent(t: &mut Mat<C>, z: &mut Mat<C>, k: usize) {
    let n = t.nrows();
    let (t11, t22) = (t[(k, k)], t[(k + 1, k + 1)]);
    let (cs, sn) = givens(t[(k, k + 1)], t22 - t11);
    rotate_rows(t, k, cs, sn, k..n);
    rotate_cols(t, k, cs, sn, 0..k + 2);
    rotate_cols(z, k, cs, sn, 0..n);
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Moves the `count` diagonal entries of largest modulus to the top, in
/// descending order.
pub fn order_by_modulus(t: &mut Mat<C>, z: &mut Mat<C>, count: usize) {
    let n = t.nrows();
    for target in 0..count.min(n) {
        let mut best = target;
        for i in target + 1..n {
            if t[(i, i)].norm() > t[(best, best)].norm() {
                best = i;
            }
        }
        for k in (target..best).rev() {
            swap_adjacent(t, z, k);
        }
    }
}

/// Eigenvector of triangular `t` for diagonal entry `i`, supported on 0..=i.
pub fn triangular_eigenvector(t: &Mat<C>, i: usize) -> Vec<C> {
    let lambda = t[(i, i)];
    let tiny = f64::EPSILON * lambda.norm().max(f64::MIN_POSITIVE);
    let mut w = vec![ZERO; i + 1];
    w[i] = C::new(1.0, 0.0);
    for j in (0..i).rev() {
        let s: C = (j + 1..=i).map(|l| t[(j, l)] * w[l]).sum();
        let mut den = t[(j, j)] - lambda;
        if den.norm() < tiny {
            den = C::new(tiny, 0.0);
        }
        w[j] = -s / den;
    }
    w
}

/// Eigenvalues of a general dense matrix via the routines above.
pub fn eigenvalues(a: &Mat<C>) -> Result<Vec<C>> {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = Mat::<C>::identity(n, n);
    hessenberg(&mut h, &mut q);
    schur(&mut h, &mut q)?;
    Ok((0..n).map(|i| h[(i, i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Mat<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn max_diff(a: &Mat<C>, b: &Mat<C>) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    fn reconstruct(z: &Mat<C>, t: &Mat<C>) -> Mat<C> {
        z * t * z.adjoint()
    }

    #[test]
    fn schur_reconstructs() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (30, 4)] {
            let a = random(n, seed);
            let mut t = a.clone();
            let mut z = Mat::<C>::identity(n, n);
            hessenberg(&mut t, &mut z);
            assert!(max_diff(&reconstruct(&z, &t), &a) < 1e-12);
            schur(&mut t, &mut z).unwrap();
            assert!(max_diff(&reconstruct(&z, &t), &a) < 1e-11);
            for j in 0..n {
                for i in j + 1..n {
                    assert_eq!(t[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn matches_faer_eigenvalues() {
        let a = random(25, 9);
        let mut ours = eigenvalues(&a).unwrap();
        let mut theirs = a.eigenvalues().unwrap();
        let key = |z: &C| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        ours.sort_by_key(key);
        theirs.sort_by_key(key);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn reorder_and_eigenvectors() {
        let n = 12;
        let a = random(n, 5);
        let mut t = a.clone();
        let mut z = Mat::<C>::identity(n, n);
        hessenberg(&mut t, &mut z);
        schur(&mut t, &mut z).unwrap();
        order_by_modulus(&mut t, &mut z, 5);
        assert!(max_diff(&reconstruct(&z, &t), &a) < 1e-11);
        for i in 0..4 {
            assert!(t[(i, i)].norm() >= t[(i + 1, i + 1)].norm());
        }
        for i in 0..n {
            let w = triangular_eigenvector(&t, i);
            let mut wf = Mat::<C>::zeros(n, 1);
            for (k, v) in w.iter().enumerate() {
                wf[(k, 0)] = *v;
            }
            let y = &z * &wf;
            let r = &a * &y - &y * faer::Scale(t[(i, i)]);
            let rn = (0..n).map(|k| r[(k, 0)].norm_sqr()).sum::<f64>().sqrt();
            let yn = (0..n).map(|k| y[(k, 0)].norm_sqr()).sum::<f64>().sqrt();
            assert!(rn < 1e-10 * yn);
        }
    }
}
