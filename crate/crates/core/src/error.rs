use std::fmt;

use thiserror::Error;

/// Which extremal set a gap integral refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// `∫ dp / (ω − a)`, the minimum of the dispersion.
    Bottom,
    /// `∫ dp / (1 − ω)`, the maximum of the dispersion.
    Top,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Bottom => f.write_str("bottom"),
            Side::Top => f.write_str("top"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("integrand is not finite ({value}) at grid point {point:?}")]
    NonFiniteSample { point: Vec<f64>, value: f64 },

    #[error("integral inconclusive after {refinements} refinements (last value {last_value}, last ratio {last_ratio})")]
    Inconclusive {
        refinements: usize,
        last_value: f64,
        last_ratio: f64,
    },

    #[error("{side} gap integral is inconclusive: {source}")]
    InconclusiveIntegral { side: Side, source: Box<Error> },

    #[error("cusp exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),

    #[error("coupling is unstable: Fourier symbol {value} < 0 at {point:?}")]
    UnstableCoupling { point: Vec<f64>, value: f64 },

    #[error("dispersion relation is constant; extrema must be attained on a null set")]
    DegenerateDispersion,

    #[error("invalid coupling stencil: {0}")]
    InvalidStencil(String),

    #[error("invalid dimension {0}; supported dimensions are 1, 2 and 3")]
    InvalidDimension(usize),

    #[error("parameters (mu, nu) = ({mu}, {nu}) are outside the admissible cone (a = {a})")]
    NonAdmissibleParams { mu: f64, nu: f64, a: f64 },

    #[error("moment is infinite: the {side} gap integral diverges")]
    InfiniteMoment { side: Side },

    #[error("argument {x} is outside the domain (-inf, -1) U (-a, inf) with a = {a}")]
    OutOfDomain { x: f64, a: f64 },

    #[error("no Rayleigh-Jeans equilibrium: ratio {ratio} is outside [{alpha}, {beta}]")]
    NoRJEquilibrium { ratio: f64, alpha: f64, beta: f64 },

    #[error("target (M, E) = ({mass}, {energy}) is not inside the open cone a M < E < M (a = {a})")]
    InadmissibleTarget { mass: f64, energy: f64, a: f64 },

    #[error("regime unavailable: {0}")]
    RegimeUnavailable(String),

    #[error("density is not strictly positive ({value}) at sample {index}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("target (M, E) = ({mass}, {energy}) lies outside the Bose-Einstein region S")]
    OutsideRegionS { mass: f64, energy: f64 },

    #[error("equilibrium parameters (mu, nu) = ({mu}, {nu}) are within the line tolerance of a boundary line, where the density cannot be resolved")]
    Unresolvable { mu: f64, nu: f64 },

    #[error("root finder failed: {0}")]
    RootFinding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that stem from an integral whose finiteness could not be
    /// decided, or from parameters that cannot be represented.
    pub fn is_inconclusive(&self) -> bool {
        matches!(
            self,
            Error::Inconclusive { .. }
                | Error::InconclusiveIntegral { .. }
                | Error::Unresolvable { .. }
        )
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::NonFiniteSample { .. } => "NonFiniteSample",
            Error::Inconclusive { .. } => "Inconclusive",
            Error::Unresolvable { .. } => "Unresolvable",
            Error::InconclusiveIntegral { .. } => "InconclusiveIntegral",
            Error::InvalidExponent(_) => "InvalidExponent",
            Error::UnstableCoupling { .. } => "UnstableCoupling",
            Error::DegenerateDispersion => "DegenerateDispersion",
            Error::InvalidStencil(_) => "InvalidStencil",
            Error::InvalidDimension(_) => "InvalidDimension",
            Error::NonAdmissibleParams { .. } => "NonAdmissibleParams",
            Error::InfiniteMoment { .. } => "InfiniteMoment",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::NoRJEquilibrium { .. } => "NoRJEquilibrium",
            Error::InadmissibleTarget { .. } => "InadmissibleTarget",
            Error::RegimeUnavailable(_) => "RegimeUnavailable",
            Error::NonPositiveDensity { .. } => "NonPositiveDensity",
            Error::OutsideRegionS { .. } => "OutsideRegionS",
            Error::RootFinding(_) => "RootFinding",
        }
    }
}
