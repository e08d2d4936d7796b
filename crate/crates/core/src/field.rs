//! Grid functions in physical and spectral representation.
//!
//! The transform convention is `f^(xi) = \int e^{-i x.xi} f dx` with inverse
//! `(2 pi)^{-3} \int e^{i x.xi} f^ dxi`. On the box this becomes
//! `f^_m = h * DFT(f)_m` and `f = (1/V) * sum_m f^_m e^{i x.xi_m}`, so that
//! `||f||^2 = h * sum |f|^2 = (1/V) * sum |f^_m|^2`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::grid::{Axis, Grid3};
use crate::numerics::compensated_sum;

/// Complex samples on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid3,
    values: Vec<Complex64>,
}

/// Fourier coefficients on the wavenumber lattice of a [`Grid3`], FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid3,
    modes: Vec<Complex64>,
}

fn check_finite(v: &[Complex64]) -> Result<()> {
    match v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(i) => Err(DzkError::NonFinite(i)),
        None => Ok(()),
    }
}

impl ScalarField {
    pub fn new(grid: &Grid3, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(DzkError::SizeMismatch {
                expected: grid.size(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Grid3, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.size());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::from_raw(grid, vec![Complex64::default(); grid.size()])
    }

    pub fn constant(grid: &Grid3, c: Complex64) -> Self {
        Self::from_raw(grid, vec![c; grid.size()])
    }

    /// Samples `f(x, y, z)` at the grid points.
    pub fn from_fn<F>(grid: &Grid3, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> Complex64 + Sync,
    {
        let xs = grid.coordinates(Axis::X);
        let ys = grid.coordinates(Axis::Y);
        let zs = grid.coordinates(Axis::Z);
        let values: Vec<Complex64> = (0..grid.size())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = grid.unflat(idx);
                f(xs[i], ys[j], zs[k])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, ix: usize, iy: usize, iz: usize) -> Complex64 {
        self.values[self.grid.flat(ix, iy, iz)]
    }

    /// Forward transform under the fixed convention.
    pub fn to_spectral(&self) -> Result<SpectralField> {
        check_finite(&self.values)?;
        Ok(self.to_spectral_unchecked())
    }

    pub(crate) fn to_spectral_unchecked(&self) -> SpectralField {
        let mut modes = self.values.clone();
        self.grid.fft3(&mut modes, true);
        let h = self.grid.cell_volume();
        modes.par_iter_mut().for_each(|z| *z *= h);
        SpectralField {
            grid: self.grid.clone(),
            modes,
        }
    }

    /// `||f||_{L^2}` by rectangle quadrature on the box.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.cell_volume();
        (h * compensated_sum(self.values.iter().map(|z| z.norm_sqr()))).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|z| z * c).collect())
    }

    pub fn conj(&self) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|z| z.conj()).collect())
    }

    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Drops imaginary parts.
    pub fn real_part(&self) -> Self {
        Self::from_raw(
            &self.grid,
            self.values.iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
        )
    }

    /// Swaps the roles of x and y. Requires `nx == ny` and `lx == ly`.
    pub fn swap_xy(&self) -> Result<Self> {
        let g = &self.grid;
        if g.n(Axis::X) != g.n(Axis::Y) || g.length(Axis::X) != g.length(Axis::Y) {
            return Err(DzkError::GridMismatch("x/y swap needs a square transverse box".into()));
        }
        let [nx, ny, nz] = g.shape();
        let mut v = vec![Complex64::default(); g.size()];
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    v[g.flat(iy, ix, iz)] = self.values[g.flat(ix, iy, iz)];
                }
            }
        }
        Ok(Self::from_raw(g, v))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(DzkError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Pointwise product of the 2/3-truncations, truncated again.
    ///
    /// Equals the truncated exact convolution of the truncated spectra: with
    /// cutoff `K = (n-1)/3` every alias of a product mode lies outside `|m| <= K`.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let a = self.to_spectral()?.truncated().to_physical();
        let b = other.to_spectral()?.truncated().to_physical();
        let prod: Vec<Complex64> = a
            .values
            .par_iter()
            .zip(&b.values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(Self::from_raw(&self.grid, prod)
            .to_spectral_unchecked()
            .truncated()
            .to_physical())
    }

    /// `|f|^2` through [`dealiased_product`](Self::dealiased_product).
    pub fn dealiased_abs2(&self) -> Result<Self> {
        self.dealiased_product(&self.conj())
    }

    /// Fraction of `||f||^2` carried by samples within `fraction` of the box
    /// boundary along any of `axes`.
    pub fn boundary_mass_fraction(&self, axes: &[Axis], fraction: f64) -> f64 {
        let g = &self.grid;
        let near: [Vec<bool>; 3] = [Axis::X, Axis::Y, Axis::Z].map(|a| {
            let l = g.length(a);
            let active = axes.contains(&a);
            g.coordinates(a)
                .into_iter()
                .map(|c| active && c.abs() > 0.5 * l - fraction * l)
                .collect()
        });
        let mut band = 0.0;
        let mut total = 0.0;
        for (idx, z) in self.values.iter().enumerate() {
            let [i, j, k] = g.unflat(idx);
            let m = z.norm_sqr();
            total += m;
            if near[0][i] || near[1][j] || near[2][k] {
                band += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            band / total
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        ScalarField::from_raw(
            &self.grid,
            self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        ScalarField::from_raw(
            &self.grid,
            self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        )
    }
}

impl Mul<Complex64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: Complex64) -> ScalarField {
        self.scale(rhs)
    }
}

impl SpectralField {
    pub fn new(grid: &Grid3, modes: Vec<Complex64>) -> Result<Self> {
        if modes.len() != grid.size() {
            return Err(DzkError::SizeMismatch {
                expected: grid.size(),
                got: modes.len(),
            });
        }
        check_finite(&modes)?;
        Ok(Self {
            grid: grid.clone(),
            modes,
        })
    }

    pub(crate) fn from_raw(grid: &Grid3, modes: Vec<Complex64>) -> Self {
        Self {
            grid: grid.clone(),
            modes,
        }
    }

    pub fn zeros(grid: &Grid3) -> Self {
        Self::from_raw(grid, vec![Complex64::default(); grid.size()])
    }

    /// Builds coefficients from a function of the wavevector.
    pub fn from_symbol<F>(grid: &Grid3, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Complex64 + Sync,
    {
        let modes: Vec<Complex64> = (0..grid.size())
            .into_par_iter()
            .map(|idx| f(wavevector(grid, idx)))
            .collect();
        Self::new(grid, modes)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    pub fn into_modes(self) -> Vec<Complex64> {
        self.modes
    }

    /// Inverse transform under the fixed convention.
    pub fn from_spectral(&self) -> Result<ScalarField> {
        check_finite(&self.modes)?;
        Ok(self.to_physical())
    }

    pub(crate) fn to_physical(&self) -> ScalarField {
        let mut v = self.modes.clone();
        self.grid.fft3(&mut v, false);
        let s = 1.0 / self.grid.volume();
        v.par_iter_mut().for_each(|z| *z *= s);
        ScalarField::from_raw(&self.grid, v)
    }

    /// `(1/V) * sum w(xi) |f^(xi)|^2`, the weighted Parseval sum.
    pub fn weighted_energy<W: Fn([f64; 3]) -> f64 + Sync>(&self, w: W) -> f64 {
        let terms: Vec<f64> = self
            .modes
            .par_iter()
            .enumerate()
            .map(|(idx, z)| w(wavevector(&self.grid, idx)) * z.norm_sqr())
            .collect();
        compensated_sum(terms) / self.grid.volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_energy(|_| 1.0).sqrt()
    }

    /// Zeroes every mode outside the inner 2/3 band of some axis.
    pub fn truncated(&self) -> Self {
        let g = &self.grid;
        let [nx, ny, nz] = g.shape();
        let kc = Axis::ALL.map(|a| g.dealias_cutoff(a));
        let keep = |n: usize, i: usize, c: i64| Grid3::mode_index(n, i).abs() <= c;
        let modes = self
            .modes
            .par_iter()
            .enumerate()
            .map(|(idx, z)| {
                let [i, j, k] = g.unflat(idx);
                if keep(nx, i, kc[0]) && keep(ny, j, kc[1]) && keep(nz, k, kc[2]) {
                    *z
                } else {
                    Complex64::default()
                }
            })
            .collect();
        Self::from_raw(g, modes)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(&self.grid, self.modes.iter().map(|z| z * c).collect())
    }

    pub fn axpy(&mut self, a: Complex64, x: &SpectralField) {
        debug_assert_eq!(self.grid, x.grid);
        self.modes
            .par_iter_mut()
            .zip(&x.modes)
            .for_each(|(y, xv)| *y += a * xv);
    }
}

/// Wavevector `(xi_1, xi_2, xi_3)` of flat FFT-order index `idx`.
#[inline]
pub fn wavevector(grid: &Grid3, idx: usize) -> [f64; 3] {
    let [i, j, k] = grid.unflat(idx);
    [
        grid.wavenumbers(Axis::X)[i],
        grid.wavenumbers(Axis::Y)[j],
        grid.wavenumbers(Axis::Z)[k],
    ]
}
