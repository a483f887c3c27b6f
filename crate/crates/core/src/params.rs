//! Physical circuit parameters, the adiabatically eliminated single-mode
//! model, and its dimensionless scaling.
//!
//! Rates are in kHz, times in ms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pump damping must exceed this multiple of the signal damping before the
/// elimination is considered trustworthy. Violations only log a warning.
pub const ADIABATIC_RATIO: f64 = 10.0;

/// Raw two-mode rates and drives, all in kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub gamma1_1: f64,
    #[serde(default)]
    pub gamma1_2: f64,
    pub gamma2: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub chi: f64,
    pub kappa: f64,
    /// Serialized as `[re, im]`.
    #[serde(default)]
    pub drive1: Complex64,
    pub drive2: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma1_1,
            self.gamma1_2,
            self.gamma2,
            self.delta1,
            self.chi,
            self.kappa,
            self.drive1.re,
            self.drive1.im,
            self.drive2,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite field".into()));
        }
        if self.gamma1_1 <= 0.0 {
            return Err(Error::InvalidParams("gamma1_1 must be > 0".into()));
        }
        if self.gamma2 <= 0.0 {
            return Err(Error::InvalidParams("gamma2 must be > 0".into()));
        }
        if self.gamma1_2 < 0.0 || self.kappa < 0.0 || self.drive2 < 0.0 {
            return Err(Error::InvalidParams(
                "gamma1_2, kappa and drive2 must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn adiabatic_ok(&self) -> bool {
        self.gamma2 >= ADIABATIC_RATIO * self.gamma1_1
    }
}

/// Effective single-mode model after eliminating the pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    /// gamma1_1 + i delta1
    pub gamma: Complex64,
    /// gamma2eff + i chi
    pub g: Complex64,
    pub gamma2eff: f64,
    /// Pump drive transferred through the coupling, kappa drive2 / gamma2.
    pub e: f64,
    pub drive1: Complex64,
}

impl ReducedParams {
    /// Builds the reduced model directly, skipping the two-mode stage.
    pub fn new(gamma1_1: f64, delta1: f64, gamma2eff: f64, chi: f64, e: f64) -> Result<Self> {
        let r = ReducedParams {
            gamma: Complex64::new(gamma1_1, delta1),
            g: Complex64::new(gamma2eff, chi),
            gamma2eff,
            e,
            drive1: Complex64::new(0.0, 0.0),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.norm() == 0.0 {
            return Err(Error::DegenerateNonlinearity);
        }
        if self.gamma.re <= 0.0 {
            return Err(Error::InvalidParams("Re(gamma) must be > 0".into()));
        }
        if self.gamma2eff < 0.0 || self.e < 0.0 {
            return Err(Error::InvalidParams("gamma2eff and E must be >= 0".into()));
        }
        Ok(())
    }

    pub fn gamma1_1(&self) -> f64 {
        self.gamma.re
    }
}

pub fn reduce(p: &PhysicalParams) -> Result<ReducedParams> {
    p.validate()?;
    if !p.adiabatic_ok() {
        log::warn!(
            "gamma2 = {} is below {} x gamma1_1 = {}; adiabatic elimination is doubtful",
            p.gamma2,
            ADIABATIC_RATIO,
            p.gamma1_1
        );
    }
    let gamma2eff = p.gamma1_2 + p.kappa * p.kappa / (2.0 * p.gamma2);
    let g = Complex64::new(gamma2eff, p.chi);
    if g.norm() == 0.0 {
        return Err(Error::DegenerateNonlinearity);
    }
    Ok(ReducedParams {
        gamma: Complex64::new(p.gamma1_1, p.delta1),
        g,
        gamma2eff,
        e: p.kappa * p.drive2 / p.gamma2,
        drive1: p.drive1,
    })
}

/// Scaled model consumed by every analytic formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub epsilon: Complex64,
    /// Saturation photon number |E / g|.
    pub n: f64,
    pub c: Complex64,
    pub d: Complex64,
    /// arg g, in (-pi, pi].
    pub theta: f64,
    /// c - 1/n
    pub c_tilde: Complex64,
    /// c_tilde + 1/(2n)
    pub c_bar: Complex64,
}

pub fn dimensionless(r: &ReducedParams) -> Result<DimensionlessParams> {
    r.validate()?;
    if r.e == 0.0 {
        return Err(Error::ZeroDrive);
    }
    let e = Complex64::new(r.e, 0.0);
    let epsilon = e / r.g;
    let n = epsilon.norm();
    let c = r.gamma / (r.g * n);
    let d = if r.drive1 == Complex64::new(0.0, 0.0) {
        Complex64::new(0.0, 0.0)
    } else {
        r.drive1 * r.g.norm() / (r.g * e * epsilon.sqrt())
    };
    let c_tilde = c - 1.0 / n;
    Ok(DimensionlessParams {
        epsilon,
        n,
        c,
        d,
        theta: r.g.arg(),
        c_tilde,
        c_bar: c_tilde + 1.0 / (2.0 * n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn physical(gamma1_2: f64, gamma2: f64, kappa: f64, drive2: f64) -> PhysicalParams {
        PhysicalParams {
            gamma1_1: 1.0,
            gamma1_2,
            gamma2,
            delta1: 0.0,
            chi: 0.0,
            kappa,
            drive1: Complex64::new(0.0, 0.0),
            drive2,
        }
    }

    #[test]
    fn reduce_pump_transfer() {
        let r = reduce(&physical(0.1, 20.0, 2.0, 40.0)).unwrap();
        assert_relative_eq!(r.gamma2eff, 0.2, epsilon = 1e-15);
        assert_relative_eq!(r.e, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn reduce_without_coupling() {
        let mut p = physical(0.5, 20.0, 0.0, 40.0);
        p.chi = 0.1;
        let r = reduce(&p).unwrap();
        assert_eq!(r.g, Complex64::new(0.5, 0.1));
        assert_eq!(r.e, 0.0);
    }

    #[test]
    fn reduce_unit_two_photon_loss() {
        let r = reduce(&physical(0.0, 20.0, 40f64.sqrt(), 1.0)).unwrap();
        assert_relative_eq!(r.gamma2eff, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn reduce_rejects_degenerate() {
        let p = physical(0.0, 20.0, 0.0, 1.0);
        assert!(matches!(reduce(&p), Err(Error::DegenerateNonlinearity)));
    }

    #[test]
    fn reduce_rejects_bad_rates() {
        let mut p = physical(0.0, 20.0, 1.0, 1.0);
        p.gamma1_1 = 0.0;
        assert!(matches!(reduce(&p), Err(Error::InvalidParams(_))));
        let mut p = physical(0.0, 20.0, 1.0, 1.0);
        p.drive2 = -1.0;
        assert!(matches!(reduce(&p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn adiabatic_flag() {
        let mut p = physical(0.0, 5.0, 1.0, 1.0);
        assert!(!p.adiabatic_ok());
        p.gamma2 = 10.0;
        assert!(p.adiabatic_ok());
        assert!(reduce(&p).is_ok());
    }

    #[test]
    fn saturation_numbers() {
        let a = dimensionless(&ReducedParams::new(2.0, 0.0, 1.0, 0.1, 10.0).unwrap()).unwrap();
        assert!((a.n - 9.95).abs() < 0.005);
        let b = dimensionless(&ReducedParams::new(2.0, 0.0, 0.8, 0.1, 10.0).unwrap()).unwrap();
        assert!((b.n - 12.40).abs() < 0.005);
    }

    #[test]
    fn all_real_case() {
        let dp = dimensionless(&ReducedParams::new(2.0, 0.0, 1.0, 0.0, 10.0).unwrap()).unwrap();
        assert_eq!(dp.n, 10.0);
        assert_relative_eq!(dp.c.re, 0.2, epsilon = 1e-15);
        assert_eq!(dp.c.im, 0.0);
        assert_eq!(dp.theta, 0.0);
        assert_eq!(dp.d, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_drive_rejected() {
        let r = ReducedParams::new(2.0, 0.0, 1.0, 0.1, 0.0).unwrap();
        assert!(matches!(dimensionless(&r), Err(Error::ZeroDrive)));
    }

    #[test]
    fn subharmonic_drive_scaling() {
        let mut r = ReducedParams::new(2.0, 0.3, 1.0, 0.4, 10.0).unwrap();
        r.drive1 = Complex64::new(0.5, -0.2);
        let dp = dimensionless(&r).unwrap();
        let back = dp.d * r.g * r.e * dp.epsilon.sqrt() / r.g.norm();
        assert_relative_eq!((back - r.drive1).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn config_round_trip() {
        let p = physical(0.1, 20.0, 2.0, 40.0);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"drive1\":[0.0,0.0]"));
        let q: PhysicalParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    fn arb_physical() -> impl Strategy<Value = PhysicalParams> {
        (
            0.1f64..5.0,
            0.0f64..2.0,
            5.0f64..200.0,
            -2.0f64..2.0,
            -1.0f64..1.0,
            0.1f64..10.0,
            0.1f64..100.0,
        )
            .prop_map(|(g11, g12, g2, d1, chi, kappa, e2)| PhysicalParams {
                gamma1_1: g11,
                gamma1_2: g12,
                gamma2: g2,
                delta1: d1,
                chi,
                kappa,
                drive1: Complex64::new(0.0, 0.0),
                drive2: e2,
            })
    }

    proptest! {
        #[test]
        fn scaling_identities(p in arb_physical()) {
            let r = reduce(&p).unwrap();
            let dp = dimensionless(&r).unwrap();
            let gabs = r.g.norm();
            prop_assert!(((dp.c * r.g * dp.n).norm() - r.gamma.norm()).abs() <= 1e-12 * r.gamma.norm());
            prop_assert!((dp.c.norm() - r.gamma.norm() / r.e).abs() <= 1e-12 * dp.c.norm());
            let rot = Complex64::from_polar(gabs, dp.theta);
            prop_assert!((rot.re - r.g.re).abs() <= 1e-12 * gabs);
            prop_assert!((rot.im - r.g.im).abs() <= 1e-12 * gabs);
            prop_assert!(dp.theta > -std::f64::consts::PI && dp.theta <= std::f64::consts::PI);
            prop_assert_eq!(dp.c_tilde + 1.0 / dp.n, dp.c - 1.0 / dp.n + 1.0 / dp.n);
            prop_assert_eq!(dp.c_bar, dp.c_tilde + 1.0 / (2.0 * dp.n));
            prop_assert!(((dp.c - dp.c_tilde).re - 1.0 / dp.n).abs() <= 1e-15 * dp.c.norm().max(1.0));
        }
    }
}
