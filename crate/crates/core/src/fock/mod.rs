//! Truncated number-state transition matrix of the single-mode model, its
//! slow spectrum and steady state.
//!
//! The density matrix element rho_{ij} is flattened to `(N + 1) i + j`
//! (0-based). Row index is the destination element, column the source.

pub mod banded;
pub mod krylov;
pub mod schur;

use std::io::Write;

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meanfield::pi_factor;
use crate::params::{dimensionless, ReducedParams};
use banded::BandedLu;
use krylov::KrylovOptions;

type C = Complex64;

/// Largest matrix dimension handled by full dense diagonalization.
pub const DENSE_MAX_DIM: usize = 2500;
/// Population allowed in the top two levels before the cutoff is rejected.
pub const LEAK_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_CUTOFF: usize = 200;
/// Shift used for inverse iteration, relative to the largest entry.
const SHIFT_REL: f64 = 1e-6;
/// Extra eigenvalues computed around the shift beyond those requested.
const EXTRA_NEV: usize = 10;

#[derive(Debug, Clone)]
pub struct FockLiouvillian {
    pub cutoff: usize,
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C>,
    pub params: ReducedParams,
}

pub fn build_liouvillian(r: &ReducedParams, cutoff: usize) -> Result<FockLiouvillian> {
    if cutoff < 2 {
        return Err(Error::InvalidParams("cutoff must be >= 2".into()));
    }
    if r.drive1 != C::new(0.0, 0.0) {
        return Err(Error::UnsupportedDrive);
    }
    let side = cutoff + 1;
    let dim = side * side;
    let (gamma, g, e) = (r.gamma, r.g, r.e);
    let g1 = gamma.re;
    let g2 = r.gamma2eff;
    let sq = |x: f64| x.sqrt();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(7 * dim);
    let mut vals = Vec::with_capacity(7 * dim);
    row_ptr.push(0);
    let mut row: Vec<(usize, C)> = Vec::with_capacity(7);
    for i in 0..side {
        for j in 0..side {
            let (fi, fj) = (i as f64, j as f64);
            row.clear();
            let mut add = |k: isize, l: isize, v: C| {
                if k >= 0 && l >= 0 && (k as usize) < side && (l as usize) < side && v != C::new(0.0, 0.0) {
                    row.push((k as usize * side + l as usize, v));
                }
            };
            let (ii, jj) = (i as isize, j as isize);
            add(ii - 2, jj, C::new(0.5 * e * sq(fi * (fi - 1.0)), 0.0));
            add(ii, jj + 2, C::new(-0.5 * e * sq((fj + 1.0) * (fj + 2.0)), 0.0));
            add(ii, jj - 2, C::new(0.5 * e * sq(fj * (fj - 1.0)), 0.0));
            add(ii + 2, jj, C::new(-0.5 * e * sq((fi + 1.0) * (fi + 2.0)), 0.0));
            add(
                ii,
                jj,
                -(gamma * fi + gamma.conj() * fj + 0.5 * g * fi * (fi - 1.0) + 0.5 * g.conj() * fj * (fj - 1.0)),
            );
            add(ii + 2, jj + 2, C::new(g2 * sq((fi + 1.0) * (fi + 2.0) * (fj + 1.0) * (fj + 2.0)), 0.0));
            add(ii + 1, jj + 1, C::new(2.0 * g1 * sq((fi + 1.0) * (fj + 1.0)), 0.0));
            row.sort_by_key(|(c, _)| *c);
            for (c, v) in row.drain(..) {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
    }
    Ok(FockLiouvillian { cutoff, dim, row_ptr, cols, vals, params: *r })
}

impl FockLiouvillian {
    pub fn index(&self, i: usize, j: usize) -> usize {
        (self.cutoff + 1) * i + j
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, alpha: usize, beta: usize) -> C {
        let (lo, hi) = (self.row_ptr[alpha], self.row_ptr[alpha + 1]);
        match self.cols[lo..hi].binary_search(&beta) {
            Ok(k) => self.vals[lo + k],
            Err(_) => C::new(0.0, 0.0),
        }
    }

    /// (row, column, value) in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C)> + '_ {
        (0..self.dim).flat_map(move |a| {
            (self.row_ptr[a]..self.row_ptr[a + 1]).map(move |k| (a, self.cols[k], self.vals[k]))
        })
    }

    pub fn apply(&self, x: &[C], y: &mut [C]) {
        for (a, ya) in y.iter_mut().enumerate() {
            *ya = (self.row_ptr[a]..self.row_ptr[a + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum();
        }
    }

    /// Largest entry modulus.
    pub fn scale(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// (sub, super) bandwidths in the flattened ordering.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(kl, ku), (a, b, _)| {
            if a > b {
                (kl.max(a - b), ku)
            } else {
                (kl, ku.max(b - a))
            }
        })
    }

    pub fn to_dense(&self) -> Mat<C> {
        let mut m = Mat::<C>::zeros(self.dim, self.dim);
        for (a, b, v) in self.triplets() {
            m[(a, b)] = v;
        }
        m
    }

    /// Flattened indices with (i - j) of the given parity.
    pub fn sector(&self, odd: bool) -> Vec<usize> {
        let side = self.cutoff + 1;
        (0..self.dim).filter(|a| (((a / side) + (a % side)) % 2 == 1) == odd).collect()
    }

    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.cutoff, self.dim, self.nnz())?;
        for (a, b, v) in self.triplets() {
            writeln!(w, "{a} {b} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    fn shifted_lu(&self, shift: C) -> Result<BandedLu> {
        let (kl, ku) = self.bandwidths();
        BandedLu::factor(self.dim, kl, ku, self.triplets(), shift)
    }

    /// Real shift used by the inverse-iteration paths.
    pub fn shift(&self) -> f64 {
        let s = self.scale();
        if s > 0.0 {
            SHIFT_REL * s
        } else {
            SHIFT_REL
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralPath {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Sorted by descending real part, ties by ascending |Im|. On the
    /// shift-invert path these are the rightmost of the eigenvalues nearest
    /// the shift, which covers eps0 and eps1 but may skip fast-rotating modes.
    pub eigenvalues: Vec<C>,
    pub eps0: C,
    /// Tunneling eigenvalue.
    pub eps1: C,
    pub rho_ss: Mat<C>,
    /// -2 / Re(eps1), in ms for kHz rates.
    pub t_n: f64,
    pub eps1_imag: f64,
    pub scale: f64,
    pub rho_min_eigenvalue: f64,
    pub top_population: f64,
    /// ||L rho|| / (||L||_F ||rho||)
    pub steady_residual: f64,
    pub path: SpectralPath,
}

/// Sorts by descending real part; entries whose real parts agree to
/// `1e-10 * scale` are ordered by ascending |Im|, and conjugate partners
/// (|Im| equal to the same tolerance) by Im.
pub fn order_spectrum(mut v: Vec<C>, scale: f64) -> Vec<C> {
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    v.sort_by(|a, b| b.re.total_cmp(&a.re));
    for_runs(&mut v, tol, |z| z.re, |run| {
        run.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
        for_runs(run, tol, |z| -z.im.abs(), |pair| pair.sort_by(|a, b| a.im.total_cmp(&b.im)));
    });
    v
}

/// Calls `f` on each maximal run whose consecutive keys (descending) differ by at most `tol`.
fn for_runs(v: &mut [C], tol: f64, key: impl Fn(&C) -> f64, mut f: impl FnMut(&mut [C])) {
    let mut start = 0;
    while start < v.len() {
        let mut end = start + 1;
        while end < v.len() && key(&v[end - 1]) - key(&v[end]) <= tol {
            end += 1;
        }
        f(&mut v[start..end]);
        start = end;
    }
}

/// Full spectrum, one dense eigenproblem per parity sector.
pub fn dense_eigenvalues(l: &FockLiouvillian) -> Result<Vec<C>> {
    let mut all = Vec::with_capacity(l.dim);
    for odd in [false, true] {
        let idx = l.sector(odd);
        let mut pos = vec![usize::MAX; l.dim];
        for (k, a) in idx.iter().enumerate() {
            pos[*a] = k;
        }
        let mut m = Mat::<C>::zeros(idx.len(), idx.len());
        for (a, b, v) in l.triplets() {
            debug_assert!(pos[a] != usize::MAX && pos[b] != usize::MAX || pos[a] == pos[b]);
            if pos[a] != usize::MAX && pos[b] != usize::MAX {
                m[(pos[a], pos[b])] = v;
            }
        }
        all.extend(m.eigenvalues().map_err(|_| Error::DenseEigen)?);
    }
    Ok(all)
}

/// The `count` eigenvalues nearest the inverse-iteration shift.
pub fn shift_invert_eigenvalues(l: &FockLiouvillian, count: usize) -> Result<Vec<C>> {
    let sigma = C::new(l.shift(), 0.0);
    let lu = l.shifted_lu(sigma)?;
    let opts = KrylovOptions {
        nev: count,
        ncv: (2 * count + 20).max(40),
        tol: 1e-13,
        max_restarts: 300,
    };
    let ritz = krylov::largest_modulus(
        l.dim,
        |x, y| {
            y.copy_from_slice(x);
            lu.solve_in_place(y);
            Ok(())
        },
        &opts,
    )?;
    Ok(ritz.iter().map(|r| sigma + 1.0 / r.theta).collect())
}

/// Steady state by inverse iteration from the identity, Hermitized and
/// trace-normalized. Returns the matrix and its relative flux residual.
pub fn steady_state(l: &FockLiouvillian) -> Result<(Mat<C>, f64)> {
    let side = l.cutoff + 1;
    let lu = l.shifted_lu(C::new(l.shift(), 0.0))?;
    let mut x = vec![C::new(0.0, 0.0); l.dim];
    for i in 0..side {
        x[l.index(i, i)] = C::new(1.0, 0.0);
    }
    let norm_l = l.frobenius().max(f64::MIN_POSITIVE);
    let mut y = vec![C::new(0.0, 0.0); l.dim];
    let mut residual = f64::INFINITY;
    for _ in 0..30 {
        lu.solve_in_place(&mut x);
        let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= xn);
        l.apply(&x, &mut y);
        residual = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm_l;
        if residual <= 1e-13 {
            break;
        }
    }
    let trace: C = (0..side).map(|i| x[l.index(i, i)]).sum();
    let mut rho = Mat::<C>::from_fn(side, side, |i, j| x[l.index(i, j)] / trace);
    let herm = Mat::<C>::from_fn(side, side, |i, j| 0.5 * (rho[(i, j)] + rho[(j, i)].conj()));
    rho = herm;
    let tr: f64 = (0..side).map(|i| rho[(i, i)].re).sum();
    for i in 0..side {
        for j in 0..side {
            rho[(i, j)] /= tr;
        }
    }
    for i in 0..side {
        rho[(i, i)].im = 0.0;
    }
    Ok((rho, residual))
}

fn top_population(rho: &Mat<C>) -> f64 {
    let n = rho.nrows();
    rho[(n - 1, n - 1)].re + rho[(n - 2, n - 2)].re
}

pub fn spectrum(l: &FockLiouvillian, k_requested: usize) -> Result<SpectrumResult> {
    let path = if l.dim <= DENSE_MAX_DIM { SpectralPath::Dense } else { SpectralPath::ShiftInvert };
    spectrum_with(l, k_requested, path)
}

pub fn spectrum_with(l: &FockLiouvillian, k_requested: usize, path: SpectralPath) -> Result<SpectrumResult> {
    if k_requested < 2 {
        return Err(Error::InvalidParams("k_requested must be >= 2".into()));
    }
    let k = k_requested.min(l.dim);
    let scale = l.scale();
    let raw = match path {
        SpectralPath::Dense => dense_eigenvalues(l)?,
        SpectralPath::ShiftInvert => shift_invert_eigenvalues(l, (k + EXTRA_NEV).min(l.dim))?,
    };
    let mut eigenvalues = order_spectrum(raw, scale);
    eigenvalues.truncate(k);
    let (eps0, eps1) = (eigenvalues[0], eigenvalues[1]);
    if eps0.norm() > 1e-8 * scale.max(1.0) {
        log::warn!("eps0 = {eps0} is not negligible against scale {scale}");
    }
    if eps1.im.abs() > 1e-6 * eps1.re.abs() {
        log::info!("tunneling eigenvalue carries Im = {:e}", eps1.im);
    }
    let (rho_ss, steady_residual) = steady_state(l)?;
    let top = top_population(&rho_ss);
    if top > LEAK_TOL {
        return Err(Error::TruncationLeak { population: top, cutoff: l.cutoff });
    }
    let rho_min_eigenvalue = rho_ss
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::DenseEigen)?
        .first()
        .copied()
        .unwrap_or(0.0);
    Ok(SpectrumResult {
        eigenvalues,
        eps0,
        eps1,
        rho_ss,
        t_n: -2.0 / eps1.re,
        eps1_imag: eps1.im,
        scale,
        rho_min_eigenvalue,
        top_population: top,
        steady_residual,
        path,
    })
}

pub fn tunneling_time_fock(s: &SpectrumResult) -> Result<f64> {
    if !(s.eps1.re < 0.0) {
        return Err(Error::NonDecaying { re: s.eps1.re });
    }
    Ok(-2.0 / s.eps1.re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_n: f64,
    pub parity: f64,
}

pub fn moments(rho: &Mat<C>) -> Moments {
    let (mut mean_n, mut parity) = (0.0, 0.0);
    for i in 0..rho.nrows() {
        let p = rho[(i, i)].re;
        mean_n += i as f64 * p;
        parity += if i % 2 == 0 { p } else { -p };
    }
    Moments { mean_n, parity }
}

pub fn choose_cutoff(r: &ReducedParams, tol: f64) -> Result<usize> {
    choose_cutoff_max(r, tol, DEFAULT_MAX_CUTOFF)
}

/// Doubling search for the smallest cutoff whose steady state keeps less
/// than `tol` above level N - 2. The last attempt is clamped to `max`.
pub fn choose_cutoff_max(r: &ReducedParams, tol: f64, max: usize) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be > 0".into()));
    }
    let start = if r.e == 0.0 {
        2
    } else {
        let dp = dimensionless(r)?;
        let ct = dp.c_tilde;
        let intensity = if ct.norm() < 1.0 { pi_factor(ct)? - ct.re } else { 0.0 };
        ((3.0 * dp.n * intensity.max(1.0)).ceil() as usize).max(2)
    };
    let mut n = start.min(max).max(2);
    loop {
        let l = build_liouvillian(r, n)?;
        let (rho, _) = steady_state(&l)?;
        if top_population(&rho) < tol {
            return Ok(n);
        }
        if n >= max {
            return Err(Error::CutoffUnbounded { max });
        }
        n = (2 * n).min(max);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(g1: f64, delta: f64, g2: f64, chi: f64, e: f64) -> ReducedParams {
        ReducedParams::new(g1, delta, g2, chi, e).unwrap()
    }

    #[test]
    fn drive_entry() {
        let l = build_liouvillian(&params(2.0, 0.0, 1.0, 0.1, 10.0), 6).unwrap();
        let v = l.entry(l.index(2, 0), l.index(0, 0));
        assert_relative_eq!(v.re, 5.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(v.re, 7.0711, epsilon = 1e-4);
    }

    #[test]
    fn zero_rates_give_zero_matrix() {
        let r = ReducedParams {
            gamma: C::new(0.0, 0.0),
            g: C::new(0.0, 0.0),
            gamma2eff: 0.0,
            e: 0.0,
            drive1: C::new(0.0, 0.0),
        };
        let l = build_liouvillian(&r, 4).unwrap();
        assert_eq!(l.nnz(), 0);
    }

    #[test]
    fn dimension_at_large_cutoff() {
        let l = build_liouvillian(&params(2.0, 0.0, 1.0, 0.1, 10.0), 70).unwrap();
        assert_eq!(l.dim, 5041);
        assert_eq!(l.bandwidths(), (2 * 70 + 2, 2 * 70 + 4));
    }

    #[test]
    fn rejects_single_photon_drive() {
        let mut r = params(2.0, 0.0, 1.0, 0.1, 10.0);
        r.drive1 = C::new(0.1, 0.0);
        assert!(matches!(build_liouvillian(&r, 4), Err(Error::UnsupportedDrive)));
    }

    #[test]
    fn triplet_dump_header() {
        let l = build_liouvillian(&params(1.0, 0.2, 0.5, 0.1, 2.0), 3).unwrap();
        let mut buf = Vec::new();
        l.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("3 16 {}", l.nnz()));
        assert_eq!(lines.count(), l.nnz());
    }

    #[test]
    fn pure_decay_relaxes_to_vacuum() {
        let r = params(1.5, 0.3, 0.5, 0.2, 0.0);
        let l = build_liouvillian(&r, 6).unwrap();
        let s = spectrum(&l, 3).unwrap();
        assert!((s.rho_ss[(0, 0)].re - 1.0).abs() < 1e-12);
        let m = moments(&s.rho_ss);
        assert!(m.mean_n.abs() < 1e-12);
        assert_eq!(choose_cutoff(&r, 1e-8).unwrap(), 2);
    }

    #[test]
    fn moments_of_number_states() {
        let mut rho = Mat::<C>::zeros(3, 3);
        rho[(0, 0)] = C::new(1.0, 0.0);
        assert_eq!(moments(&rho), Moments { mean_n: 0.0, parity: 1.0 });
        rho[(0, 0)] = C::new(0.0, 0.0);
        rho[(1, 1)] = C::new(1.0, 0.0);
        assert_eq!(moments(&rho), Moments { mean_n: 1.0, parity: -1.0 });
    }

    #[test]
    fn fock_time_formula() {
        let mut s = spectrum(&build_liouvillian(&params(1.0, 0.0, 1.0, 0.0, 1.0), 16).unwrap(), 2).unwrap();
        s.eps1 = C::new(-0.1, 1e-9);
        assert_relative_eq!(tunneling_time_fock(&s).unwrap(), 20.0, epsilon = 1e-12);
        s.eps1 = C::new(0.0, 0.0);
        assert!(matches!(tunneling_time_fock(&s), Err(Error::NonDecaying { .. })));
    }

    #[test]
    fn tunneling_mode_is_slow_and_real() {
        let l = build_liouvillian(&params(2.0, 0.0, 1.0, 0.1, 10.0), 40).unwrap();
        let s = spectrum(&l, 4).unwrap();
        assert!(s.eps1.re < 0.0);
        assert!(s.eps1.im.abs() < 1e-3 * s.eps1.re.abs());
        assert!(s.eps0.norm() <= 1e-8 * s.scale);
    }

    #[test]
    fn ordering_breaks_ties_by_imaginary_part() {
        let v = vec![C::new(-1.0, 2.0), C::new(0.0, 0.0), C::new(-1.0, -0.5), C::new(-1.0, 0.5)];
        let o = order_spectrum(v, 1.0);
        assert_eq!(o, vec![C::new(0.0, 0.0), C::new(-1.0, -0.5), C::new(-1.0, 0.5), C::new(-1.0, 2.0)]);
        // Rounding noise in a conjugate pair must not decide the order.
        let a = [C::new(-3.5, 1.1 + 4e-12), C::new(-3.5 - 2e-11, -1.1)];
        let b = [C::new(-3.5 - 2e-11, 1.1), C::new(-3.5, -1.1 - 4e-12)];
        let (oa, ob) = (order_spectrum(a.to_vec(), 10.0), order_spectrum(b.to_vec(), 10.0));
        assert!(oa[0].im < 0.0 && ob[0].im < 0.0);
    }

    #[test]
    fn weak_drive_cutoff() {
        // n close to 4
        let r = params(2.0, 0.0, 1.0, 0.0, 4.0);
        let n = choose_cutoff(&r, 1e-8).unwrap();
        assert!((12..=30).contains(&n), "cutoff {n}");
    }

    #[test]
    fn cutoff_bounded() {
        let r = params(0.5, 0.0, 0.05, 0.0, 5.0);
        assert!(matches!(choose_cutoff_max(&r, 1e-8, 20), Err(Error::CutoffUnbounded { max: 20 })));
    }
}
