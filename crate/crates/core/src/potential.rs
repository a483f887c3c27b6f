//! The complex steady-state potential on the (beta, beta_plus) phase space,
//! its stationary points and the tilted manifold through them.
//!
//! The conjugate half of the potential is evaluated as the complex
//! conjugate of the direct half at conjugated arguments. The two agree with
//! the principal-branch reading everywhere except on the log branch cut,
//! where this choice keeps the potential real whenever
//! `beta_plus = +-conj(beta)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meanfield::pi_factor;

const THRESHOLD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpacePoint {
    pub beta: Complex64,
    pub beta_plus: Complex64,
}

impl PhaseSpacePoint {
    pub fn new(beta: Complex64, beta_plus: Complex64) -> Self {
        PhaseSpacePoint { beta, beta_plus }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    Origin,
    Classical,
    Quantum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Curvature {
    Minimum,
    Saddle,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub point: PhaseSpacePoint,
    pub kind: Kind,
    pub phi_value: f64,
    /// Imaginary part of the potential, kept as a realness diagnostic.
    pub phi_imag: f64,
    /// Row-major [[d11, d12], [d21, d22]].
    pub hessian: [[Complex64; 2]; 2],
    pub hessian_det: f64,
    pub classification: Curvature,
}

fn on_singularity(z: Complex64) -> bool {
    (z - 1.0).norm() < f64::EPSILON || (z + 1.0).norm() < f64::EPSILON
}

/// Direct half: y x + c ln(1 - x^2) + d (ln(1 + x) - ln(1 - x)).
fn half(x: Complex64, y: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let mut v = y * x + c * (1.0 - x * x).ln();
    if d != Complex64::new(0.0, 0.0) {
        v += d * ((1.0 + x).ln() - (1.0 - x).ln());
    }
    v
}

pub fn potential_value(
    pt: PhaseSpacePoint,
    c_tilde: Complex64,
    n: f64,
    d: Complex64,
) -> Result<Complex64> {
    if on_singularity(pt.beta) || on_singularity(pt.beta_plus) {
        return Err(Error::BoundarySingularity);
    }
    let direct = half(pt.beta, pt.beta_plus, c_tilde, d);
    let mirror = half(pt.beta_plus.conj(), pt.beta.conj(), c_tilde, d).conj();
    Ok(-n * (direct + mirror))
}

/// Exponent of the unnormalized steady-state weight, principal logs throughout.
pub fn ln_steady_state_weight(
    pt: PhaseSpacePoint,
    c_tilde: Complex64,
    n: f64,
    d: Complex64,
) -> Result<Complex64> {
    if on_singularity(pt.beta) || on_singularity(pt.beta_plus) {
        return Err(Error::BoundarySingularity);
    }
    let (b, bp) = (pt.beta, pt.beta_plus);
    let (ct, dc) = (c_tilde.conj(), d.conj());
    Ok(n * ((c_tilde + d) * (1.0 + b).ln()
        + (c_tilde - d) * (1.0 - b).ln()
        + (ct + dc) * (1.0 + bp).ln()
        + (ct - dc) * (1.0 - bp).ln()
        + 2.0 * bp * b))
}

/// Unnormalized steady-state weight. On the boundary it vanishes when every
/// exponent touching the singular factor has positive real part.
pub fn steady_state_weight(
    pt: PhaseSpacePoint,
    c_tilde: Complex64,
    n: f64,
    d: Complex64,
) -> Result<Complex64> {
    let exps = [
        (pt.beta, -1.0, c_tilde + d),
        (pt.beta, 1.0, c_tilde - d),
        (pt.beta_plus, -1.0, (c_tilde + d).conj()),
        (pt.beta_plus, 1.0, (c_tilde - d).conj()),
    ];
    let mut boundary = false;
    for (z, at, e) in exps {
        if (z - at).norm() < f64::EPSILON {
            if e.re <= 0.0 {
                return Err(Error::BoundarySingularity);
            }
            boundary = true;
        }
    }
    if boundary {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(ln_steady_state_weight(pt, c_tilde, n, d)?.exp())
}

/// (dPhi/dbeta, dPhi/dbeta_plus)
pub fn gradient(pt: PhaseSpacePoint, c_tilde: Complex64, n: f64, d: Complex64) -> [Complex64; 2] {
    let (b, bp) = (pt.beta, pt.beta_plus);
    let q = 1.0 - b * b;
    let qp = 1.0 - bp * bp;
    [
        n * (-2.0 * bp + 2.0 * c_tilde * b / q) - 2.0 * n * d / q,
        n * (-2.0 * b + 2.0 * c_tilde.conj() * bp / qp) - 2.0 * n * d.conj() / qp,
    ]
}

pub fn hessian(
    pt: PhaseSpacePoint,
    c_tilde: Complex64,
    n: f64,
    d: Complex64,
) -> [[Complex64; 2]; 2] {
    let (b, bp) = (pt.beta, pt.beta_plus);
    let q = 1.0 - b * b;
    let qp = 1.0 - bp * bp;
    let h11 = 2.0 * n * (c_tilde * (1.0 + b * b) - 2.0 * d * b) / (q * q);
    let h22 = 2.0 * n * (c_tilde.conj() * (1.0 + bp * bp) - 2.0 * d.conj() * bp) / (qp * qp);
    let off = Complex64::new(-2.0 * n, 0.0);
    [[h11, off], [off, h22]]
}

pub fn classify(h: &[[Complex64; 2]; 2]) -> (f64, Curvature) {
    let det = (h[0][0] * h[1][1] - h[0][1] * h[1][0]).re;
    let class = if det < 0.0 {
        Curvature::Saddle
    } else if h[0][0].re > 0.0 {
        Curvature::Minimum
    } else {
        Curvature::Maximum
    };
    (det, class)
}

pub fn origin_det(c_tilde: Complex64, n: f64) -> f64 {
    4.0 * n * n * (c_tilde.norm_sqr() - 1.0)
}

pub fn classical_det(c_tilde: Complex64, n: f64) -> Result<f64> {
    let pi = pi_factor(c_tilde)?;
    Ok(16.0 * n * n * pi * (pi - c_tilde.re) / c_tilde.norm_sqr())
}

pub fn quantum_det(c_tilde: Complex64, n: f64) -> Result<f64> {
    let pi = pi_factor(c_tilde)?;
    Ok(16.0 * n * n * pi * (pi + c_tilde.re) / c_tilde.norm_sqr())
}

fn build(pt: PhaseSpacePoint, kind: Kind, c_tilde: Complex64, n: f64) -> StationaryPoint {
    let zero = Complex64::new(0.0, 0.0);
    // Off the log singularities by construction.
    let phi = potential_value(pt, c_tilde, n, zero).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let h = hessian(pt, c_tilde, n, zero);
    let (det, class) = classify(&h);
    StationaryPoint {
        point: pt,
        kind,
        phi_value: phi.re,
        phi_imag: phi.im,
        hessian: h,
        hessian_det: det,
        classification: class,
    }
}

/// Picks the sign of `beta_plus` that zeroes the gradient.
fn matched(beta: Complex64, candidate: Complex64, c_tilde: Complex64, n: f64) -> PhaseSpacePoint {
    let zero = Complex64::new(0.0, 0.0);
    let score = |bp: Complex64| {
        let g = gradient(PhaseSpacePoint::new(beta, bp), c_tilde, n, zero);
        g[0].norm() + g[1].norm()
    };
    let bp = if score(candidate) <= score(-candidate) { candidate } else { -candidate };
    PhaseSpacePoint::new(beta, bp)
}

/// Origin, the classical pair and the quantum pair for the drive-free model.
pub fn stationary_points_4d(c_tilde: Complex64, n: f64) -> Result<Vec<StationaryPoint>> {
    let zero = Complex64::new(0.0, 0.0);
    let origin = build(PhaseSpacePoint::new(zero, zero), Kind::Origin, c_tilde, n);
    let abs = c_tilde.norm();
    if (abs - 1.0).abs() < THRESHOLD_TOL {
        return Err(Error::ThresholdDegeneracy);
    }
    if abs > 1.0 {
        return Err(Error::NoNontrivialRoots { origin: Box::new(origin) });
    }
    let pi = pi_factor(c_tilde)?;
    let ct = c_tilde.conj();
    let base = 1.0 + (c_tilde * c_tilde - c_tilde.norm_sqr()) / 2.0;
    let base_conj = 1.0 + (ct * ct - c_tilde.norm_sqr()) / 2.0;
    let bc = (base - c_tilde * pi).sqrt();
    let bc_plus = (base_conj - ct * pi).sqrt();
    let bq = (base + c_tilde * pi).sqrt();
    let bq_plus = (base_conj + ct * pi).sqrt();

    let mut out = vec![origin];
    for s in [1.0, -1.0] {
        out.push(build(matched(s * bc, bc_plus, c_tilde, n), Kind::Classical, c_tilde, n));
    }
    for s in [1.0, -1.0] {
        out.push(build(matched(s * bq, bq_plus, c_tilde, n), Kind::Quantum, c_tilde, n));
    }
    Ok(out)
}

/// Tilted plane through the classical points, pinned to the real boundary.
/// The cosine factor is exactly zero on |x| = 1 or |y| = 1.
pub fn manifold_point(x: f64, y: f64, phi: f64, p: f64) -> PhaseSpacePoint {
    let edge = |t: f64| {
        if t.abs() >= 1.0 {
            0.0
        } else {
            (t * FRAC_PI_2).cos().powf(p)
        }
    };
    let tilt = phi.tan() * edge(x) * edge(y);
    PhaseSpacePoint::new(Complex64::new(x, x * tilt), Complex64::new(y, -y * tilt))
}

/// Tilt angle that carries the manifold through the positive classical point.
pub fn classical_tilt(c_tilde: Complex64) -> Result<f64> {
    let pi = pi_factor(c_tilde)?;
    let b = (1.0 + (c_tilde * c_tilde - c_tilde.norm_sqr()) / 2.0 - c_tilde * pi).sqrt();
    Ok(b.arg())
}
