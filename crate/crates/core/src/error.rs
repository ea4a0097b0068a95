use alloc::vec::Vec;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical pipeline.
///
/// Variant names are part of the CLI's JSON error reports (see [`Error::name`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(&'static str),
    #[error("evaluation too close to a lattice pole (distance {distance:e})")]
    Pole { distance: f64 },
    #[error("target {target} outside the monotone range [{lo}, {hi}] of the segment")]
    Range { target: f64, lo: f64, hi: f64 },
    #[error("step size underflow at x = {x} (singular potential?)")]
    Integration { x: f64 },
    #[error("solution overflow: {0}")]
    Overflow(&'static str),
    #[error("multipliers degenerate at E = {energy} (D = {discriminant})")]
    EdgeDegeneracy { energy: f64, discriminant: f64 },
    #[error("energy {energy} is within solver tolerance of a band edge")]
    EdgeAmbiguity { energy: f64 },
    #[error("band structure inconsistent with discriminant sign at E = {energy}")]
    ClassificationMismatch { energy: f64 },
    #[error("sampling grid too coarse to separate nodes near x = {x}")]
    GridTooCoarse { x: f64 },
    #[error("transformation is singular: {} node(s) in the working window", nodes.len())]
    SingularTransform { nodes: Vec<f64> },
    #[error("Bloch functions are not sign-normalized at the reference point")]
    Normalization,
    #[error("energy {energy} coincides with a factorization energy")]
    EnergyCollision { energy: f64 },
    #[error("no consistent displacement on the scanned slice")]
    NoIntersection,
    #[error("no interior minimum bracketed")]
    Minimization,
    #[error("function expected real has imaginary part {imag:e}")]
    Reality { imag: f64 },
    #[error("displacement objective is flat")]
    FlatObjective,
    #[error("asymptotic fit did not converge (tail residual {residual:e})")]
    NotConverged { residual: f64 },
    #[error("product vanishes on the grid")]
    ZeroProduct,
    #[error("potential fails the periodicity probe")]
    NotPeriodic,
}

impl Error {
    /// Stable variant name, used in machine-readable reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Pole { .. } => "PoleError",
            Error::Range { .. } => "RangeError",
            Error::Integration { .. } => "IntegrationError",
            Error::Overflow(_) => "OverflowError",
            Error::EdgeDegeneracy { .. } => "EdgeDegeneracy",
            Error::EdgeAmbiguity { .. } => "EdgeAmbiguity",
            Error::ClassificationMismatch { .. } => "ClassificationMismatch",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::SingularTransform { .. } => "SingularTransform",
            Error::Normalization => "NormalizationError",
            Error::EnergyCollision { .. } => "EnergyCollision",
            Error::NoIntersection => "NoIntersection",
            Error::Minimization => "MinimizationError",
            Error::Reality { .. } => "RealityError",
            Error::FlatObjective => "FlatObjective",
            Error::NotConverged { .. } => "NotConverged",
            Error::ZeroProduct => "ZeroProduct",
            Error::NotPeriodic => "NotPeriodic",
        }
    }
}
