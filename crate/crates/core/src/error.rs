use num_complex::Complex64;
use thiserror::Error;

use crate::rational::Point;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WillmoreError {
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("companion-matrix roots are ill-conditioned (residual {residual:.3e} > {tol:.3e})")]
    IllConditionedRoots { residual: f64, tol: f64 },
    #[error("logarithmic obstruction at {pole}: residue {residue}")]
    LogarithmicObstruction { pole: Point, residue: Complex64 },
    #[error("null condition violated: max residual {0:.3e}")]
    NullConditionViolated(f64),
    #[error("pole of order greater than one at {0}")]
    NonSimplePole(Point),
    #[error("end at {0} has vanishing residue vector")]
    ZeroResidueEnd(Point),
    #[error("immersion has no ends")]
    NoEnds,
    #[error("asymptotic normal at {location} is not well defined (spread {spread:.3e})")]
    AsymptoticNormalAmbiguous { location: Point, spread: f64 },
    #[error("point {point} lies within {distance:.3e} of a pole")]
    PoleProximity { point: Complex64, distance: f64 },
    #[error("origin lies on the surface (min |phi|^2 = {0:.3e})")]
    OriginOnSurface(f64),
    #[error("degenerate first fundamental form (EG - F^2 = {0:.3e})")]
    DegenerateMetric(f64),
    #[error("quadrature did not converge: estimate {estimate}, error {error:.3e}")]
    QuadratureNotConverged { estimate: f64, error: f64 },
    #[error("regularized values do not converge (spread {spread:.3e})")]
    NoConvergence { spread: f64 },
    #[error("Gram matrix is ill-conditioned (condition number {0:.3e})")]
    GramIllConditioned(f64),
    #[error("normal graph lost immersivity at t = {0}")]
    ImmersionLost(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, WillmoreError>;
