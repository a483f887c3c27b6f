//! Krylov-Schur iteration for the largest-modulus eigenvalues of an
//! operator given only by its action.

use faer::Mat;
use num_complex::Complex64;

use super::schur;
use crate::error::{Error, Result};

type C = Complex64;

pub struct KrylovOptions {
    pub nev: usize,
    pub ncv: usize,
    /// Converged when the Ritz residual is below `tol * |theta|`.
    pub tol: f64,
    pub max_restarts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RitzValue {
    pub theta: C,
    pub residual: f64,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Two passes of classical Gram-Schmidt; returns the accumulated projections.
fn orthogonalize(basis: &[Vec<C>], w: &mut [C]) -> Vec<C> {
    let mut h = vec![C::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        for (k, v) in basis.iter().enumerate() {
            let p = dot(v, w);
            h[k] += p;
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= p * y);
        }
    }
    h
}

fn probe(dim: usize, salt: usize) -> Vec<C> {
    (0..dim)
        .map(|a| {
            let t = (a + 7 * salt) as f64;
            C::new(1.0 + 0.3 * (1.7 * t + 0.3).cos(), 0.45 * (0.9 * t).sin())
        })
        .collect()
}

pub fn largest_modulus<F>(dim: usize, mut op: F, opts: &KrylovOptions) -> Result<Vec<RitzValue>>
where
    F: FnMut(&[C], &mut [C]) -> Result<()>,
{
    let m = opts.ncv.min(dim);
    let nev = opts.nev.min(m);
    assert!(nev >= 1);
    let exhaustive = m == dim;
    if !exhaustive {
        assert!(m > nev, "ncv must exceed nev");
    }
    let mut v: Vec<Vec<C>> = Vec::with_capacity(m + 1);
    let mut start = probe(dim, 0);
    let s = norm(&start);
    start.iter_mut().for_each(|z| *z /= s);
    v.push(start);
    let mut hbar = Mat::<C>::zeros(m + 1, m);
    let mut k = 0usize;
    let mut worst = f64::INFINITY;
    let mut w = vec![C::new(0.0, 0.0); dim];

    for _ in 0..opts.max_restarts {
        for j in k..m {
            op(&v[j], &mut w)?;
            let h = orthogonalize(&v[..=j], &mut w);
            for (i, hi) in h.iter().enumerate() {
                hbar[(i, j)] = *hi;
            }
            let hn = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let beta = norm(&w);
            if j + 1 == dim {
                hbar[(j + 1, j)] = C::new(0.0, 0.0);
                v.truncate(j + 1);
                v.push(vec![C::new(0.0, 0.0); dim]);
                continue;
            }
            let next = if beta > 1e-13 * hn {
                hbar[(j + 1, j)] = C::new(beta, 0.0);
                w.iter().map(|z| z / beta).collect()
            } else {
                // Invariant subspace: continue with a fresh direction.
                hbar[(j + 1, j)] = C::new(0.0, 0.0);
                let mut r = probe(dim, j + 1);
                orthogonalize(&v[..=j], &mut r);
                let rn = norm(&r);
                r.iter_mut().for_each(|z| *z /= rn);
                r
            };
            v.truncate(j + 1);
            v.push(next);
        }

        let mut t = Mat::<C>::from_fn(m, m, |i, j| hbar[(i, j)]);
        let mut z = Mat::<C>::identity(m, m);
        schur::hessenberg(&mut t, &mut z);
        schur::schur(&mut t, &mut z)?;
        let keep = if exhaustive { nev } else { (nev + (m - nev) / 2).clamp(nev, m - 1) };
        schur::order_by_modulus(&mut t, &mut z, keep);

        // Residual row b Z of the Krylov-Schur relation.
        let bz: Vec<C> = (0..m).map(|i| (0..m).map(|j| hbar[(m, j)] * z[(j, i)]).sum()).collect();
        let mut out = Vec::with_capacity(nev);
        worst = 0.0;
        for i in 0..nev {
            let y = schur::triangular_eigenvector(&t, i);
            let res = y.iter().zip(&bz).map(|(a, b)| a * b).sum::<C>().norm() / norm(&y);
            let theta = t[(i, i)];
            worst = worst.max(res / theta.norm().max(f64::MIN_POSITIVE));
            out.push(RitzValue { theta, residual: res });
        }
        if exhaustive || worst <= opts.tol {
            return Ok(out);
        }

        let mut nv: Vec<Vec<C>> = (0..keep)
            .map(|i| {
                let mut col = vec![C::new(0.0, 0.0); dim];
                for j in 0..m {
                    let zji = z[(j, i)];
                    col.iter_mut().zip(&v[j]).for_each(|(a, b)| *a += zji * b);
                }
                col
            })
            .collect();
        nv.push(std::mem::take(&mut v[m]));
        v = nv;
        hbar = Mat::<C>::zeros(m + 1, m);
        for i in 0..keep {
            for j in i..keep {
                hbar[(i, j)] = t[(i, j)];
            }
            hbar[(keep, i)] = bz[i];
        }
        k = keep;
    }
    Err(Error::ConvergenceFailure { residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_dominant_eigenvalues_of_a_diagonal_operator() {
        let dim = 300;
        let diag: Vec<C> = (0..dim)
            .map(|k| C::new(1.0 / (1.0 + k as f64), 0.1 * (k as f64).sin()))
            .collect();
        let opts = KrylovOptions { nev: 6, ncv: 30, tol: 1e-12, max_restarts: 200 };
        let vals = largest_modulus(dim, |x, y| {
            y.iter_mut().zip(x).zip(&diag).for_each(|((a, b), d)| *a = d * b);
            Ok(())
        }, &opts)
        .unwrap();
        let mut want = diag.clone();
        want.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        for (r, w) in vals.iter().zip(&want) {
            assert!((r.theta - w).norm() < 1e-10, "{} vs {}", r.theta, w);
        }
    }

    #[test]
    fn exhaustive_small_operator() {
        let dim = 5;
        let opts = KrylovOptions { nev: 5, ncv: 20, tol: 1e-12, max_restarts: 3 };
        let vals = largest_modulus(dim, |x, y| {
            for i in 0..dim {
                y[i] = C::new((i + 1) as f64, 0.0) * x[i] + if i + 1 < dim { x[i + 1] } else { C::new(0.0, 0.0) };
            }
            Ok(())
        }, &opts)
        .unwrap();
        let mut got: Vec<f64> = vals.iter().map(|r| r.theta.re).collect();
        got.sort_by(f64::total_cmp);
        for (i, g) in got.iter().enumerate() {
            assert!((g - (i + 1) as f64).abs() < 1e-10);
        }
    }
}
