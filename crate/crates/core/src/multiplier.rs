//! Fourier multipliers `(sigma f^)^vee`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::{wavevector, ScalarField, SpectralField};
use crate::grid::Grid3;

/// A Fourier symbol evaluated on the wavenumber lattice.
///
/// Removable singularities must be resolved inside `symbol` in closed form.
pub trait Multiplier: Sync {
    fn symbol(&self, xi: [f64; 3]) -> Complex64;

    /// Applies the symbol to one coefficient.
    #[inline]
    fn apply_at(&self, xi: [f64; 3], z: Complex64) -> Complex64 {
        self.symbol(xi) * z
    }
}

impl<F> Multiplier for F
where
    F: Fn([f64; 3]) -> Complex64 + Sync,
{
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        self(xi)
    }
}

/// Mode-wise product of two symbols, applied first `.0` then `.1`.
pub struct Product<A, B>(pub A, pub B);

impl<A: Multiplier, B: Multiplier> Multiplier for Product<A, B> {
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        self.1.symbol(xi) * self.0.symbol(xi)
    }

    #[inline]
    fn apply_at(&self, xi: [f64; 3], z: Complex64) -> Complex64 {
        self.1.apply_at(xi, self.0.apply_at(xi, z))
    }
}

/// Mode-wise product `m(xi) * F(xi)`; fails if `m` is not finite on a grid mode.
///
/// `F` is finite by construction, so a non-finite product can only come from
/// the symbol.
pub fn apply_multiplier<M: Multiplier + ?Sized>(f: &SpectralField, m: &M) -> Result<SpectralField> {
    let g = f.grid();
    let out: Result<Vec<Complex64>> = f
        .modes()
        .par_iter()
        .enumerate()
        .map(|(idx, z)| {
            let xi = wavevector(g, idx);
            let w = m.apply_at(xi, *z);
            if w.re.is_finite() && w.im.is_finite() {
                Ok(w)
            } else {
                Err(DzkError::NonFiniteSymbol(xi[0], xi[1], xi[2]))
            }
        })
        .collect();
    Ok(SpectralField::from_raw(g, out?))
}

/// A symbol sampled once on a grid, for reuse across many frames.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: Grid3,
    values: Vec<Complex64>,
}

impl SymbolTable {
    pub fn new<M: Multiplier + ?Sized>(grid: &Grid3, m: &M) -> Result<Self> {
        let values: Result<Vec<Complex64>> = (0..grid.size())
            .into_par_iter()
            .map(|idx| {
                let xi = wavevector(grid, idx);
                let w = m.symbol(xi);
                if w.re.is_finite() && w.im.is_finite() {
                    Ok(w)
                } else {
                    Err(DzkError::NonFiniteSymbol(xi[0], xi[1], xi[2]))
                }
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            values: values?,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.grid() != &self.grid {
            return Err(DzkError::GridMismatch("symbol table on another grid".into()));
        }
        let out = f.modes().par_iter().zip(&self.values).map(|(z, w)| z * w).collect();
        Ok(SpectralField::from_raw(&self.grid, out))
    }
}

/// Physical-space convenience: transform, multiply, transform back.
pub fn apply_to_field<M: Multiplier + ?Sized>(f: &ScalarField, m: &M) -> Result<ScalarField> {
    Ok(apply_multiplier(&f.to_spectral()?, m)?.to_physical())
}
