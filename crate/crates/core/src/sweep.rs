//! One-parameter sweeps comparing the analytic and Fock switching times.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fock::{build_liouvillian, choose_cutoff, spectrum, tunneling_time_fock};
use crate::params::{dimensionless, reduce, PhysicalParams};
use crate::tunneling::tunneling_time;

/// Tail tolerance used when the cutoff is chosen automatically.
pub const AUTO_CUTOFF_TOL: f64 = 1e-8;
const FOCK_EIGENVALUES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "gamma1_1")]
    Gamma1_1,
    /// Value is the target effective two-photon loss; gamma1_2 absorbs the
    /// difference from the coupling contribution.
    #[serde(rename = "gamma2eff_via_gamma1_2")]
    Gamma2EffViaGamma1_2,
    /// Raw pump drive.
    #[serde(rename = "E2")]
    E2,
    #[serde(rename = "delta1")]
    Delta1,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "kappa")]
    Kappa,
}

impl Axis {
    pub fn apply(self, base: &PhysicalParams, v: f64) -> Result<PhysicalParams> {
        let mut p = *base;
        match self {
            Axis::Gamma1_1 => p.gamma1_1 = v,
            Axis::Gamma2EffViaGamma1_2 => {
                p.gamma1_2 = v - p.kappa * p.kappa / (2.0 * p.gamma2);
                if p.gamma1_2 < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "gamma2eff = {v} is below the coupling contribution"
                    )));
                }
            }
            Axis::E2 => p.drive2 = v,
            Axis::Delta1 => p.delta1 = v,
            Axis::Chi => p.chi = v,
            Axis::Kappa => p.kappa = v,
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffSpec {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for CutoffSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(CutoffSpec::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 2 => Ok(CutoffSpec::Fixed(n)),
            _ => Err(format!("cutoff must be \"auto\" or an integer >= 2, got {s:?}")),
        }
    }
}

impl fmt::Display for CutoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffSpec::Auto => f.write_str("auto"),
            CutoffSpec::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for CutoffSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CutoffSpec::Auto => s.serialize_str("auto"),
            CutoffSpec::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for CutoffSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => format!("{n}").parse(),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Analytic, Method::Fock]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: PhysicalParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub fock_cutoff: CutoffSpec,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("values must be nonempty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("values must be finite".into()));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config("values must be strictly monotone".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        self.base.validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub swept_value: f64,
    pub n: Option<f64>,
    pub c_tilde: Option<Complex64>,
    /// Re(c_tilde) > 0 and |c_tilde| < 1
    pub regime_ok: bool,
    pub t_analytic_ms: Option<f64>,
    pub t_fock_ms: Option<f64>,
    pub ln_gamma_t_analytic: Option<f64>,
    pub ln_gamma_t_fock: Option<f64>,
    pub cutoff_used: Option<usize>,
    pub error: Option<String>,
    /// Set for computational failures; a regime violation alone is soft.
    #[serde(skip)]
    pub hard_failure: bool,
}

impl SweepRow {
    fn empty(v: f64) -> Self {
        SweepRow {
            swept_value: v,
            n: None,
            c_tilde: None,
            regime_ok: false,
            t_analytic_ms: None,
            t_fock_ms: None,
            ln_gamma_t_analytic: None,
            ln_gamma_t_fock: None,
            cutoff_used: None,
            error: None,
            hard_failure: false,
        }
    }

    fn fail(&mut self, msg: String, hard: bool) {
        self.hard_failure |= hard;
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

pub fn regime_ok(c_tilde: Complex64) -> bool {
    c_tilde.re > 0.0 && c_tilde.norm() < 1.0
}

pub fn evaluate(spec: &SweepSpec, v: f64) -> SweepRow {
    let mut row = SweepRow::empty(v);
    let reduced = spec.axis.apply(&spec.base, v).and_then(|p| reduce(&p));
    let r = match reduced {
        Ok(r) => r,
        Err(e) => {
            row.fail(e.to_string(), true);
            return row;
        }
    };
    let dp = match dimensionless(&r) {
        Ok(dp) => dp,
        Err(e) => {
            row.fail(e.to_string(), true);
            return row;
        }
    };
    row.n = Some(dp.n);
    row.c_tilde = Some(dp.c_tilde);
    row.regime_ok = regime_ok(dp.c_tilde);
    if !row.regime_ok {
        row.fail("outside tunneling regime".into(), false);
        return row;
    }
    let g1 = r.gamma1_1();
    if spec.wants(Method::Analytic) {
        match tunneling_time(&dp, r.g.norm()) {
            Ok(t) => {
                row.t_analytic_ms = Some(t);
                row.ln_gamma_t_analytic = Some((g1 * t).ln());
            }
            Err(e) => row.fail(format!("analytic: {e}"), true),
        }
    }
    if spec.wants(Method::Fock) {
        let fock = (|| {
            let n = match spec.fock_cutoff {
                CutoffSpec::Auto => choose_cutoff(&r, AUTO_CUTOFF_TOL)?,
                CutoffSpec::Fixed(n) => n,
            };
            let s = spectrum(&build_liouvillian(&r, n)?, FOCK_EIGENVALUES)?;
            Ok::<_, Error>((n, tunneling_time_fock(&s)?))
        })();
        match fock {
            Ok((n, t)) => {
                row.cutoff_used = Some(n);
                row.t_fock_ms = Some(t);
                row.ln_gamma_t_fock = Some((g1 * t).ln());
            }
            Err(e) => row.fail(format!("fock: {e}"), true),
        }
    }
    row
}

/// One row per axis value, in axis order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec.values.par_iter().map(|v| evaluate(spec, *v)).collect())
}
