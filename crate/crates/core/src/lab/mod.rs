//! Numerical bench for the linear estimates, the dyadic calculus, the kernel
//! envelope and the fractional Leibniz rule.

pub mod dyadic;
pub mod family;
pub mod kernel;
pub mod leibniz;
pub mod linear;
pub mod report;

pub use family::{FamilyKind, InputFamily};
pub use report::{CaseId, EstimateCase, RatioReport, RatioRow, Report, SlopeFit};
