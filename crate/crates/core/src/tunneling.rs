//! Barrier geometry in the rotated (u, v) frame and the analytic switching
//! time between the two classical minima.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::pi_factor;
use crate::params::DimensionlessParams;
use crate::potential::PhaseSpacePoint;

/// Quantities that must be real on the tunneling line may carry at most
/// this much imaginary residue.
pub const IMAGINARY_TOL: f64 = 1e-8;
const FOLD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierQuantities {
    pub b: Complex64,
    pub r: f64,
    pub psi: f64,
    pub phi: f64,
    /// Positive minimum location; the partner sits at `-u_min`.
    pub u_min: f64,
    pub phi_o: f64,
    pub phi_c: f64,
    pub d2_uu_o: f64,
    pub d2_vv_o: f64,
    pub d2_uu_c: f64,
    pub d2_vv_c: f64,
    pub c_bar: Complex64,
    pub n: f64,
    pub theta: f64,
}

fn check_fold(phi: f64) -> Result<f64> {
    let c2 = (2.0 * phi).cos();
    if c2.abs() < FOLD_TOL {
        return Err(Error::DomainFold);
    }
    Ok(c2)
}

pub fn uv_transform(pt: PhaseSpacePoint, theta: f64, phi: f64) -> Result<(Complex64, Complex64)> {
    check_fold(phi)?;
    let a = pt.beta.asin();
    let ap = pt.beta_plus.asin();
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let u = e(-theta / 2.0 + phi) * a + e(theta / 2.0 - phi) * ap;
    let v = e(-theta / 2.0 - phi) * a - e(theta / 2.0 + phi) * ap;
    Ok((u, v))
}

/// (Upsilon_+, Upsilon_-), the arcsines of (beta, beta_plus).
pub fn upsilon(u: Complex64, v: Complex64, theta: f64, phi: f64) -> Result<(Complex64, Complex64)> {
    let c2 = check_fold(phi)?;
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let up = (e(theta / 2.0 + phi) * u + e(theta / 2.0 - phi) * v) / (2.0 * c2);
    let um = (e(-theta / 2.0 - phi) * u - e(-theta / 2.0 + phi) * v) / (2.0 * c2);
    Ok((up, um))
}

pub fn inverse_uv(u: Complex64, v: Complex64, theta: f64, phi: f64) -> Result<PhaseSpacePoint> {
    let (up, um) = upsilon(u, v, theta, phi)?;
    Ok(PhaseSpacePoint::new(up.sin(), um.sin()))
}

/// Potential in (u, v), written with the Jacobian-shifted coupling c_bar.
pub fn potential_uv(
    u: Complex64,
    v: Complex64,
    c_bar: Complex64,
    n: f64,
    theta: f64,
    phi: f64,
) -> Result<Complex64> {
    let (up, um) = upsilon(u, v, theta, phi)?;
    let cp = up.cos();
    let cm = um.cos();
    Ok(-n * (2.0 * up.sin() * um.sin() + c_bar * (cp * cp).ln() + c_bar.conj() * (cm * cm).ln()))
}

fn real(quantity: &'static str, z: Complex64) -> Result<f64> {
    if !(z.im.abs() < IMAGINARY_TOL) {
        return Err(Error::ImaginaryResidue { quantity, im: z.im });
    }
    Ok(z.re)
}

/// Classical amplitude built from c_bar, principal square root.
pub fn barrier_amplitude(c_bar: Complex64) -> Result<Complex64> {
    let pi = pi_factor(c_bar)?;
    Ok((1.0 + (c_bar * c_bar - c_bar.norm_sqr()) / 2.0 - c_bar * pi).sqrt())
}

pub fn barrier_quantities(c_bar: Complex64, n: f64, theta: f64) -> Result<BarrierQuantities> {
    if !(n > 0.0) {
        return Err(Error::OutsideRegime("n must be > 0".into()));
    }
    if !(c_bar.norm() < 1.0) {
        return Err(Error::OutsideRegime(format!("|c_bar| = {} >= 1", c_bar.norm())));
    }
    if !((c_bar - 1.0 / (2.0 * n)).re > 0.0) {
        return Err(Error::OutsideRegime("Re(c_tilde) <= 0".into()));
    }
    let b = barrier_amplitude(c_bar)?;
    let bc = b.conj();
    let z = b.asin();
    let (r, psi) = (z.norm(), z.arg());
    let phi = psi - theta / 2.0;
    let c2 = check_fold(phi)?;
    let two_c2 = 2.0 * c2 * c2;
    let cb = c_bar;
    let cbc = c_bar.conj();
    let q = 1.0 - b * b;
    let qc = 1.0 - bc * bc;

    let phi_c = -n * (2.0 * b.norm_sqr() + cb * q.ln() + cbc * qc.ln());
    let ep = Complex64::from_polar(1.0, theta + 2.0 * phi);
    let em = Complex64::from_polar(1.0, theta - 2.0 * phi);
    let uu_o = n * (-2.0 + cb * ep + cbc * ep.conj()) / two_c2;
    let vv_o = n * (2.0 + cb * em + cbc * em.conj()) / two_c2;
    let s = q.sqrt() * qc.sqrt();
    let bsq = b.norm_sqr();
    let uu_c = n / two_c2
        * (-2.0 * s + 2.0 * (theta + 2.0 * phi).cos() * bsq + cb * ep / q + cbc * ep.conj() / qc);
    let vv_c = n / two_c2
        * (2.0 * s + 2.0 * (theta - 2.0 * phi).cos() * bsq + cb * em / q + cbc * em.conj() / qc);

    let bq = BarrierQuantities {
        b,
        r,
        psi,
        phi,
        u_min: (2.0 * r * c2).abs(),
        phi_o: 0.0,
        phi_c: real("Phi_c", phi_c)?,
        d2_uu_o: real("Phi_uu(o)", uu_o)?,
        d2_vv_o: real("Phi_vv(o)", vv_o)?,
        d2_uu_c: real("Phi_uu(c)", uu_c)?,
        d2_vv_c: real("Phi_vv(c)", vv_c)?,
        c_bar,
        n,
        theta,
    };
    let signs = [
        ("Phi_uu(o)", bq.d2_uu_o, bq.d2_uu_o < 0.0),
        ("Phi_vv(o)", bq.d2_vv_o, bq.d2_vv_o > 0.0),
        ("Phi_uu(c)", bq.d2_uu_c, bq.d2_uu_c > 0.0),
        ("Phi_vv(c)", bq.d2_vv_c, bq.d2_vv_c > 0.0),
    ];
    for (quantity, value, ok) in signs {
        if !ok {
            return Err(Error::SignatureViolation { quantity, value });
        }
    }
    Ok(bq)
}

/// Switching time in ms from the saddle and minimum curvatures.
pub fn tunneling_time(dp: &DimensionlessParams, g_abs: f64) -> Result<f64> {
    let bq = barrier_quantities(dp.c_bar, dp.n, dp.theta)?;
    Ok(time_from_barrier(&bq, g_abs))
}

pub fn time_from_barrier(bq: &BarrierQuantities, g_abs: f64) -> f64 {
    let c2 = (2.0 * bq.phi).cos();
    let ratio = -bq.d2_vv_o / (bq.d2_uu_o * bq.d2_uu_c * bq.d2_vv_c);
    2.0 * PI / (g_abs * c2) * ratio.sqrt() * (bq.phi_o - bq.phi_c).exp()
}

/// The same time written directly in the model parameters, with the
/// square-root product collapsed to |c_bar|.
pub fn tunneling_time_expanded(c_bar: Complex64, n: f64, theta: f64, e: f64) -> Result<f64> {
    let bq = barrier_quantities(c_bar, n, theta)?;
    let (b, phi) = (bq.b, bq.phi);
    let bc = b.conj();
    let q = 1.0 - b * b;
    let qc = 1.0 - bc * bc;
    let cbc = c_bar.conj();
    let ep = Complex64::from_polar(1.0, theta + 2.0 * phi);
    let em = Complex64::from_polar(1.0, theta - 2.0 * phi);
    let abs_cb = c_bar.norm();
    let bsq = b.norm_sqr();
    let exponent = n * (2.0 * bsq + c_bar * q.ln() + cbc * qc.ln());
    let f1 = c_bar * em / q + cbc * em.conj() / qc + 2.0 * abs_cb + 2.0 * bsq * (theta - 2.0 * phi).cos();
    let f2 = c_bar * ep / q + cbc * ep.conj() / qc - 2.0 * abs_cb + 2.0 * bsq * (theta + 2.0 * phi).cos();
    let f3 = 2.0 + c_bar * em + cbc * em.conj();
    let f4 = 2.0 - c_bar * ep - cbc * ep.conj();
    let t = 4.0 * PI * (2.0 * phi).cos() / e * exponent.exp() * (f3 / (f1 * f2 * f4)).sqrt();
    real("T", t)
}

/// All-real limit of the switching time, in ms.
pub fn tunneling_time_real(c_bar: f64, n: f64, e: f64) -> Result<f64> {
    if !(c_bar > 0.0 && c_bar < 1.0) {
        return Err(Error::OutsideRegime(format!("c_bar = {c_bar} not in (0, 1)")));
    }
    Ok(PI * (1.0 + c_bar).sqrt() / (e * (1.0 - c_bar))
        * (2.0 * n * (1.0 - c_bar + c_bar * c_bar.ln())).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{dimensionless, ReducedParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn uv_origin_and_real_limit() {
        let z = c(0.0, 0.0);
        assert_eq!(uv_transform(PhaseSpacePoint::new(z, z), 0.3, 0.2).unwrap(), (z, z));
        let s = c(0.6, 0.0);
        let (u, v) = uv_transform(PhaseSpacePoint::new(s, s), 0.0, 0.0).unwrap();
        assert_relative_eq!(u.re, 2.0 * 0.6f64.asin(), epsilon = 1e-15);
        assert_eq!(u.im, 0.0);
        assert_eq!(v, z);
    }

    #[test]
    fn uv_fold() {
        let z = c(0.1, 0.0);
        let pt = PhaseSpacePoint::new(z, z);
        assert!(matches!(uv_transform(pt, 0.0, PI / 4.0), Err(Error::DomainFold)));
    }

    #[test]
    fn uv_round_trip() {
        let pt = PhaseSpacePoint::new(c(0.3, 0.2), c(-0.1, 0.4));
        let (u, v) = uv_transform(pt, 0.4, 0.1).unwrap();
        let back = inverse_uv(u, v, 0.4, 0.1).unwrap();
        assert!((back.beta - pt.beta).norm() < 1e-12);
        assert!((back.beta_plus - pt.beta_plus).norm() < 1e-12);
    }

    #[test]
    fn classical_point_on_u_axis() {
        let cb = c(0.33, 0.17) + 1.0 / 6.0;
        let theta = 0.1f64.atan();
        let bq = barrier_quantities(cb, 3.0, theta).unwrap();
        let (u, v) = uv_transform(PhaseSpacePoint::new(bq.b, bq.b.conj()), theta, bq.phi).unwrap();
        assert!((u.re - bq.u_min).abs() < 1e-10);
        assert!(u.im.abs() < 1e-10);
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn real_barrier() {
        let bq = barrier_quantities(c(0.5, 0.0), 10.0, 0.0).unwrap();
        assert_relative_eq!(bq.b.re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(bq.psi, 0.0);
        assert_eq!(bq.phi, 0.0);
        let height = 2.0 * 10.0 * (1.0 - 0.5 + 0.5 * 0.5f64.ln());
        assert_relative_eq!(bq.phi_c, -height, epsilon = 1e-12);
        assert_relative_eq!(bq.phi_o - bq.phi_c, 3.06853, epsilon = 1e-5);
    }

    #[test]
    fn fig_parameters_are_real() {
        let cb = c(0.33, 0.17) + 1.0 / 6.0;
        let bq = barrier_quantities(cb, 3.0, 0.1f64.atan()).unwrap();
        let q = 1.0 - bq.b * bq.b;
        let qc = 1.0 - bq.b.conj() * bq.b.conj();
        assert!(((q * qc).re - cb.norm_sqr()).abs() < 1e-12);
        assert!((q * qc).im.abs() < 1e-12);
    }

    #[test]
    fn regime_errors() {
        assert!(matches!(barrier_quantities(c(1.1, 0.0), 10.0, 0.0), Err(Error::OutsideRegime(_))));
        assert!(matches!(barrier_quantities(c(0.01, 0.0), 10.0, 0.0), Err(Error::OutsideRegime(_))));
        assert!(tunneling_time_real(1.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn real_time_value() {
        let oracle = PI * 1.5f64.sqrt() / (10.0 * 0.5) * 3.068_528_194_400_547f64.exp();
        let t = tunneling_time_real(0.5, 10.0, 10.0).unwrap();
        assert_relative_eq!(t, oracle, max_relative = 1e-12);
        assert!((t - 16.55).abs() < 0.01);
        // e = |g| n with |g| = 1
        let dp = DimensionlessParams {
            epsilon: c(10.0, 0.0),
            n: 10.0,
            c: c(0.5 + 0.05, 0.0),
            d: c(0.0, 0.0),
            theta: 0.0,
            c_tilde: c(0.45, 0.0),
            c_bar: c(0.5, 0.0),
        };
        assert_relative_eq!(tunneling_time(&dp, 1.0).unwrap(), t, max_relative = 1e-12);
    }

    #[test]
    fn real_time_limits() {
        let a = tunneling_time_real(0.4, 5.0, 3.0).unwrap();
        let b = tunneling_time_real(0.4, 10.0, 3.0).unwrap();
        assert_relative_eq!(b.ln() - a.ln(), 10.0 * (0.6 + 0.4 * 0.4f64.ln()), max_relative = 1e-12);
        let near = tunneling_time_real(1.0 - 1e-9, 5.0, 3.0).unwrap();
        assert!(near > 1e8);
    }

    #[test]
    fn increasing_in_drive() {
        let mut last = 0.0;
        for k in 0..=8 {
            let e = 8.0 + 0.5 * k as f64;
            let r = ReducedParams::new(2.0, 0.0, 1.0, 0.1, e).unwrap();
            let t = tunneling_time(&dimensionless(&r).unwrap(), r.g.norm()).unwrap();
            assert!(t > last);
            last = t;
        }
    }

    proptest! {
        #[test]
        fn generic_matches_expanded(r in 0.05f64..0.9, a in -1.2f64..1.2, n in 2.0f64..30.0, theta in -0.6f64..0.6) {
            let cb = Complex64::from_polar(r, a);
            prop_assume!((cb - 1.0 / (2.0 * n)).re > 0.0);
            let Ok(bq) = barrier_quantities(cb, n, theta) else { return Ok(()); };
            let g_abs = 1.7;
            let t1 = time_from_barrier(&bq, g_abs);
            let t2 = tunneling_time_expanded(cb, n, theta, g_abs * n).unwrap();
            prop_assert!((t1 - t2).abs() <= 1e-9 * t1);
        }

        #[test]
        fn identity_and_signs(r in 0.05f64..0.95, a in -1.4f64..1.4, theta in -0.5f64..0.5) {
            let cb = Complex64::from_polar(r, a);
            let n = 20.0;
            prop_assume!((cb - 1.0 / (2.0 * n)).re > 0.0);
            if let Ok(bq) = barrier_quantities(cb, n, theta) {
                let q = 1.0 - bq.b * bq.b;
                let qc = 1.0 - bq.b.conj() * bq.b.conj();
                prop_assert!((q * qc - cb.norm_sqr()).norm() < 1e-12);
                prop_assert!(bq.d2_uu_o < 0.0 && bq.d2_vv_o > 0.0);
                prop_assert!(bq.d2_uu_c > 0.0 && bq.d2_vv_c > 0.0);
            }
        }
    }
}
