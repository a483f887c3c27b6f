//! Mean-field stationary states, their linear stability and the phase
//! diagram in the complex c plane.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const BOUNDARY_TOL: f64 = 1e-12;
const STEP_ERROR_MAX: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Vacuum,
    /// Intensity Pi(c) - Re c.
    PositiveBranch,
    /// Intensity -Pi(c) - Re c.
    NegativeBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldRoot {
    pub beta: Complex64,
    pub branch: Branch,
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    I,
    II,
    III,
}

impl Region {
    pub fn code(self) -> u8 {
        match self {
            Region::I => 1,
            Region::II => 2,
            Region::III => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRegion {
    pub region: Region,
    pub stable_roots: Vec<MeanFieldRoot>,
    pub unstable_roots: Vec<MeanFieldRoot>,
}

pub fn pi_factor(c: Complex64) -> Result<f64> {
    if c.im.abs() > 1.0 {
        return Err(Error::OutsideDomain { im: c.im });
    }
    Ok((1.0 - c.im * c.im).sqrt())
}

/// Right-hand side of the scaled amplitude equation.
pub fn drift(beta: Complex64, c: Complex64, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta) * ((1.0 - beta * beta) * beta.conj() - c * beta)
}

/// |(1 - beta^2) beta* - c beta|
pub fn residual(beta: Complex64, c: Complex64) -> f64 {
    ((1.0 - beta * beta) * beta.conj() - c * beta).norm()
}

fn pair(beta: Complex64, branch: Branch) -> [MeanFieldRoot; 2] {
    let intensity = beta.norm_sqr();
    [
        MeanFieldRoot { beta, branch, intensity },
        MeanFieldRoot { beta: -beta, branch, intensity },
    ]
}

/// Vacuum first, then the positive and negative branch pairs when they exist.
pub fn stationary_points(c: Complex64) -> Vec<MeanFieldRoot> {
    let mut roots = vec![MeanFieldRoot {
        beta: Complex64::new(0.0, 0.0),
        branch: Branch::Vacuum,
        intensity: 0.0,
    }];
    let Ok(pi) = pi_factor(c) else {
        return roots;
    };
    let base = 1.0 + (c * c - c.norm_sqr()) / 2.0;
    let abs_c = c.norm();
    if (c.re < 0.0 && c.im.abs() <= 1.0) || abs_c < 1.0 {
        roots.extend(pair((base - c * pi).sqrt(), Branch::PositiveBranch));
    }
    if c.re < 0.0 && c.im.abs() < 1.0 && abs_c > 1.0 {
        roots.extend(pair((base + c * pi).sqrt(), Branch::NegativeBranch));
    }
    roots
}

/// Linearization eigenvalues (lambda_+, lambda_-) about a stationary amplitude.
pub fn stability_eigenvalues(beta: Complex64, c: Complex64, theta: f64) -> (Complex64, Complex64) {
    if residual(beta, c) > 1e-8 {
        log::warn!("stability requested at a non-stationary amplitude {beta}");
    }
    let a = 2.0 * beta.norm_sqr() + c;
    let tr = (Complex64::from_polar(1.0, theta) * a).re;
    let rad = Complex64::new(tr * tr - a.norm_sqr() + (1.0 - beta * beta).norm_sqr(), 0.0).sqrt();
    (-tr + rad, -tr - rad)
}

pub fn is_stable(lambda: (Complex64, Complex64)) -> bool {
    lambda.0.re < 0.0 && lambda.1.re < 0.0
}

fn region_of(c: Complex64) -> Region {
    let abs_c = c.norm();
    if abs_c < 1.0 {
        Region::II
    } else if c.re < 0.0 && c.im.abs() < 1.0 {
        Region::III
    } else {
        Region::I
    }
}

pub fn classify_phase(c: Complex64) -> Result<PhaseRegion> {
    if (c.norm() - 1.0).abs() < BOUNDARY_TOL || (c.im * c.im - 1.0).abs() < BOUNDARY_TOL {
        return Err(Error::BoundaryCase { re: c.re, im: c.im });
    }
    let region = region_of(c);
    let (stable_roots, unstable_roots) = stationary_points(c).into_iter().partition(|r| {
        match (region, r.branch) {
            (Region::II, Branch::Vacuum) => false,
            (_, Branch::NegativeBranch) => false,
            _ => true,
        }
    });
    Ok(PhaseRegion { region, stable_roots, unstable_roots })
}

/// A coupling phase compatible with non-negative two-photon loss and
/// positive damping for this c, i.e. |theta| <= pi/2 and
/// Re(e^{i theta} c) > 0. Returns the midpoint of the admissible interval.
pub fn physical_theta(c: Complex64) -> Option<f64> {
    let alpha = c.arg();
    let mut best: Option<(f64, f64)> = None;
    for k in -1..=1 {
        let shift = 2.0 * std::f64::consts::PI * k as f64;
        let lo = (-FRAC_PI_2 - alpha + shift).max(-FRAC_PI_2);
        let hi = (FRAC_PI_2 - alpha + shift).min(FRAC_PI_2);
        if hi > lo && best.map_or(true, |(l, h)| hi - lo > h - l) {
            best = Some((lo, hi));
        }
    }
    best.map(|(lo, hi)| 0.5 * (lo + hi))
}

fn rk4_step(beta: Complex64, c: Complex64, theta: f64, h: f64) -> Complex64 {
    let k1 = drift(beta, c, theta);
    let k2 = drift(beta + 0.5 * h * k1, c, theta);
    let k3 = drift(beta + 0.5 * h * k2, c, theta);
    let k4 = drift(beta + h * k3, c, theta);
    beta + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Fixed-step RK4 trajectory sampled at every step, starting with `beta0`.
/// The final step is shortened to land exactly on `tau_end`.
pub fn integrate(
    beta0: Complex64,
    c: Complex64,
    theta: f64,
    tau_end: f64,
    dtau: f64,
) -> Result<Vec<Complex64>> {
    if !(dtau > 0.0 && tau_end > 0.0) {
        return Err(Error::InvalidParams("dtau and tau_end must be > 0".into()));
    }
    let steps = (tau_end / dtau).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut beta = beta0;
    let mut tau = 0.0;
    out.push(beta);
    for _ in 0..steps {
        let h = dtau.min(tau_end - tau);
        let full = rk4_step(beta, c, theta, h);
        let half = rk4_step(rk4_step(beta, c, theta, 0.5 * h), c, theta, 0.5 * h);
        let estimate = (full - half).norm() / 15.0;
        if !(estimate <= STEP_ERROR_MAX) {
            return Err(Error::StepTooLarge { estimate });
        }
        beta = full;
        tau += h;
        out.push(beta);
    }
    Ok(out)
}
