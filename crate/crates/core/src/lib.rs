//! Spectral gap and diameter of left-invariant metrics on SU(2).
//!
//! The crate is organised bottom-up:
//!
//! * [`liealg`]: structure constants, brackets, Killing form, subspaces and
//!   the bracket-generation closure.
//! * [`metric`]: inner products on the algebra (Milnor frame, Berger and
//!   naturally reductive constructors) and reductivity predicates.
//! * [`spectrum`]: the first positive Laplace eigenvalue, computed irrep by
//!   irrep, plus the quotient eigenvalue of the Hopf submersion.
//! * [`geodesics`]: Euler–Arnold geodesic flow on unit quaternions and the
//!   eccentricity-based diameter estimator.
//! * [`harness`]: inequality checks, Berger sweeps and report emission.

pub mod error;
pub mod geodesics;
pub mod harness;
pub mod liealg;
pub mod metric;
pub mod spectrum;

pub use error::{Error, Result};
pub use geodesics::{diameter, DiameterEstimate, DiameterParams, GroupPoint};
pub use harness::{ConjectureReport, MetricParams, MetricRecord, ReportFormat};
pub use liealg::{su2, BilinearForm, LieAlgebra, Subspace};
pub use metric::{berger_metric, milnor_metric, Metric};
pub use spectrum::{lambda1, Irrep, SpectrumOptions, SpectrumResult};
