//! Partitions of the unit cube by hyperplanes orthogonal to the main
//! diagonal: equivolume constructions, stratified sampling, expected L2 star
//! discrepancy, black-box optimisation of the cut positions, and the
//! experiment drivers built on top of them.

pub mod format;
pub mod geometry;
pub mod numeric;
pub mod sampling;
pub mod discrepancy;
pub mod optimize;
pub mod experiments;

use thiserror::Error;

/// Broad class of a failure, for callers that map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid input: fix the parameters and retry.
    Usage,
    /// A numerical routine failed on valid input.
    Numeric,
    /// A stratum is too small to sample.
    Sampling,
}

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Sampling(#[from] sampling::SamplingError),
    #[error(transparent)]
    Discrepancy(#[from] discrepancy::DiscrepancyError),
    #[error(transparent)]
    Optimize(#[from] optimize::OptimizeError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use discrepancy::DiscrepancyError as D;
        use experiments::ExperimentError as X;
        use geometry::GeometryError as G;
        use sampling::SamplingError as S;
        fn geometry(e: &G) -> ErrorKind {
            match e {
                G::Range { .. } | G::NonConvergence { .. } => ErrorKind::Numeric,
                _ => ErrorKind::Usage,
            }
        }
        fn sampling(e: &S) -> ErrorKind {
            match e {
                S::Parameter(_) => ErrorKind::Usage,
                _ => ErrorKind::Sampling,
            }
        }
        fn disc(e: &D) -> ErrorKind {
            match e {
                D::Sampling(s) => sampling(s),
                _ => ErrorKind::Usage,
            }
        }
        match self {
            Error::Geometry(e) => geometry(e),
            Error::Sampling(e) => sampling(e),
            Error::Discrepancy(e) => disc(e),
            Error::Optimize(_) => ErrorKind::Usage,
            Error::Experiment(e) => match e {
                X::Parameter(_) | X::Optimize(_) => ErrorKind::Usage,
                X::Geometry(g) => geometry(g),
                X::Discrepancy(d) => disc(d),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds() {
        let e: Error = geometry::GeometryError::Dimension(0).into();
        assert_eq!(e.kind(), ErrorKind::Usage);
        let e: Error = geometry::GeometryError::NonConvergence { lo: 0.0, hi: 1.0, residual: 1.0 }.into();
        assert_eq!(e.kind(), ErrorKind::Numeric);
        let s = sampling::SamplingError::DegenerateStratum { stratum: 0, volume: 0.0 };
        let e: Error = discrepancy::DiscrepancyError::from(s).into();
        assert_eq!(e.kind(), ErrorKind::Sampling);
    }
}
