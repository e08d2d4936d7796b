//! Pseudo-spectral laboratory for the degenerate Zakharov system
//!
//! ```text
//! i(E_t + E_z) + Δ⊥E = nE,    n_tt − Δ⊥n = Δ⊥|E|²
//! ```
//!
//! on a periodic box standing in for R³: explicit linear propagators and
//! fractional operators, mixed space-time norms, a numerical bench for the
//! linear estimates, and a Picard solver for the Duhamel formulation.

pub mod dump;
pub mod error;
pub mod field;
pub mod grid;
pub mod lab;
pub mod multiplier;
pub mod norms;
pub mod numerics;
pub mod propagators;
pub mod series;
pub mod solver;

pub use error::{DzkError, Result};
pub use field::{ScalarField, SpectralField};
pub use grid::{Axis, Grid3};
pub use multiplier::{apply_multiplier, Multiplier};
pub use series::{FieldSeries, SpectralSeries, TimeGrid};
