use std::path::PathBuf;

use thiserror::Error;

use crate::potential::StationaryPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate nonlinearity: |g| = 0")]
    DegenerateNonlinearity,
    #[error("zero pump drive: scaled model undefined")]
    ZeroDrive,

    #[error("|Im c| = {im} exceeds 1, no nonzero branch")]
    OutsideDomain { im: f64 },
    #[error("c = {re}{im:+}i lies on a phase boundary")]
    BoundaryCase { re: f64, im: f64 },
    #[error("local error estimate {estimate:e} exceeds 1e-3")]
    StepTooLarge { estimate: f64 },

    #[error("potential evaluated on the log singularity beta = +-1")]
    BoundarySingularity,
    /// Carries the origin, which is still a valid stationary point.
    #[error("|c_tilde| > 1: only the origin is stationary")]
    NoNontrivialRoots { origin: Box<StationaryPoint> },
    #[error("|c_tilde| is within 1e-12 of threshold")]
    ThresholdDegeneracy,

    #[error("cos(2 phi) vanishes, uv transform not invertible")]
    DomainFold,
    #[error("outside the tunneling regime: {0}")]
    OutsideRegime(String),
    #[error("{quantity} has imaginary residue {im:e}")]
    ImaginaryResidue { quantity: &'static str, im: f64 },
    #[error("{quantity} = {value} has the wrong curvature sign")]
    SignatureViolation { quantity: &'static str, value: f64 },

    #[error("single-photon drive is not supported by the transition matrix")]
    UnsupportedDrive,
    #[error("eigensolver did not converge, worst residual {residual:e}")]
    ConvergenceFailure { residual: f64 },
    #[error("steady-state population {population:e} in the top two levels at N = {cutoff}")]
    TruncationLeak { population: f64, cutoff: usize },
    #[error("Re(eps1) = {re} is not decaying")]
    NonDecaying { re: f64 },
    #[error("cutoff search exceeded N = {max}")]
    CutoffUnbounded { max: usize },
    #[error("singular shifted matrix at column {column}")]
    SingularShift { column: usize },
    #[error("dense eigensolver failed")]
    DenseEigen,

    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
