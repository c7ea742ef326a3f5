use thiserror::Error;

use crate::expr::ExprError;

/// Evaluation point in extended coordinates `(t, x, y, z)`.
pub type PointContext = [f64; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("associated metric is not positive definite at {point:?} (leading minor {minor} fails)")]
    MetricNotPositiveDefinite { minor: usize, point: PointContext },

    #[error("quantum potential is singular at {point:?}: amplitude below the nodal threshold")]
    QuantumPotentialSingular { point: PointContext },

    #[error("phase is undefined at nodal point {point:?}")]
    UndefinedPhase { point: PointContext },

    #[error("every wave-function sample is below the nodal threshold")]
    AllNodal,

    #[error("Kropina metric is singular: beta = {beta:e} is not above {threshold:e}")]
    KropinaSingular { beta: f64, threshold: f64 },

    #[error("evaluation at {point:?} leaves the domain")]
    DomainBoundary { point: PointContext },

    #[error("invalid initial data: {0}")]
    InvalidInitial(String),

    #[error("coordinate time is not increasing at sample {index}")]
    NonMonotoneTime { index: usize },

    #[error("time windows do not overlap")]
    NoOverlap,

    #[error("conformal factor 4/a^00 = {value:e} is not positive")]
    ConformalSignError { value: f64 },

    #[error("quantum wind denominator vanishes at {point:?}")]
    WindSingular { point: PointContext },

    #[error("wind is not h-unit: |W|_h = {norm}")]
    WindNotUnit { norm: f64 },

    #[error("singular matrix")]
    SingularMatrix,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Expression(#[from] ExprError),
}

impl Error {
    /// Short variant name, stable across releases; used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MetricNotPositiveDefinite { .. } => "MetricNotPositiveDefinite",
            Error::QuantumPotentialSingular { .. } => "QuantumPotentialSingular",
            Error::UndefinedPhase { .. } => "UndefinedPhase",
            Error::AllNodal => "AllNodal",
            Error::KropinaSingular { .. } => "KropinaSingular",
            Error::DomainBoundary { .. } => "DomainBoundary",
            Error::InvalidInitial(_) => "InvalidInitial",
            Error::NonMonotoneTime { .. } => "NonMonotoneTime",
            Error::NoOverlap => "NoOverlap",
            Error::ConformalSignError { .. } => "ConformalSignError",
            Error::WindSingular { .. } => "WindSingular",
            Error::WindNotUnit { .. } => "WindNotUnit",
            Error::SingularMatrix => "SingularMatrix",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidScenario(_) => "InvalidScenario",
            Error::Expression(_) => "ExpressionError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
