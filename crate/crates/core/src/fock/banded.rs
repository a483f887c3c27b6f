//! Banded LU with partial pivoting, column-major band storage.
//!
//! Element (i, c) lives at `c * ldab + kl + ku + i - c`; pivoting widens the
//! upper band of U to `kl + ku`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub struct BandedLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factors `A - shift * I` where `A` is given by its nonzero triplets.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
        shift: Complex64,
    ) -> Result<Self> {
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandedLu { n, kl, kv, ldab, ab: vec![Complex64::new(0.0, 0.0); ldab * n], ipiv: vec![0; n] };
        for (i, c, v) in entries {
            assert!(i <= c + kl && c <= i + ku, "entry ({i}, {c}) outside the band");
            let k = lu.at(i, c);
            lu.ab[k] += v;
        }
        for j in 0..n {
            let k = lu.at(j, j);
            lu.ab[k] -= shift;
        }
        lu.decompose()?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, c: usize) -> usize {
        c * self.ldab + self.kv + i - c
    }

    fn decompose(&mut self) -> Result<()> {
        let n = self.n;
        let mut ju = 0usize;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let base = self.at(j, j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let m = self.ab[base + r].norm();
                if m > best {
                    best = m;
                    jp = r;
                }
            }
            self.ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::SingularShift { column: j });
            }
            ju = ju.max((j + self.kv - self.kl + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (a, b) = (self.at(j, c), self.at(j + jp, c));
                    self.ab.swap(a, b);
                }
            }
            let inv = 1.0 / self.ab[base];
            for r in 1..=km {
                self.ab[base + r] *= inv;
            }
            for c in j + 1..=ju {
                let ujc = self.ab[self.at(j, c)];
                if ujc == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let col = self.at(j + 1, c);
                for r in 0..km {
                    let l = self.ab[base + 1 + r];
                    self.ab[col + r] -= l * ujc;
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let km = self.kl.min(n - 1 - j);
            let base = self.at(j, j);
            for r in 1..=km {
                b[j + r] -= self.ab[base + r] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.at(j, j)];
            let bj = b[j];
            let lo = j.saturating_sub(self.kv);
            let col = self.at(lo, j);
            for (k, i) in (lo..j).enumerate() {
                b[i] -= self.ab[col + k] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, kl, ku) in &[(1usize, 0usize, 0usize), (7, 2, 3), (40, 5, 1), (60, 9, 12)] {
            let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
            let mut trip = Vec::new();
            for i in 0..n {
                for c in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // Weak diagonal so that pivoting is exercised.
                    let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    dense[i][c] = v;
                    trip.push((i, c, v));
                }
            }
            let shift = Complex64::new(0.3, -0.1);
            let lu = BandedLu::factor(n, kl, ku, trip, shift).unwrap();
            let x: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
            let mut b: Vec<Complex64> = (0..n)
                .map(|i| (0..n).map(|c| dense[i][c] * x[c]).sum::<Complex64>() - shift * x[i])
                .collect();
            lu.solve_in_place(&mut b);
            let err = b.iter().zip(&x).map(|(a, e)| (a - e).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8 * n as f64, "n = {n}: err {err}");
        }
    }

    #[test]
    fn reports_singular() {
        let trip = vec![(0, 0, Complex64::new(1.0, 0.0)), (1, 1, Complex64::new(2.0, 0.0))];
        assert!(matches!(
            BandedLu::factor(2, 0, 0, trip, Complex64::new(2.0, 0.0)),
            Err(Error::SingularShift { column: 1 })
        ));
    }
}
