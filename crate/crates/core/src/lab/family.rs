//! Seeded input families for the estimate bench.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DzkError, Result};
use crate::field::{wavevector, ScalarField, SpectralField};
use crate::grid::{Axis, Grid3};
use crate::propagators::BumpFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    RandomBandlimited,
    Gaussian,
    DyadicTheta,
    Rescaled,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::RandomBandlimited => "random-bandlimited",
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::DyadicTheta => "dyadic-theta",
            FamilyKind::Rescaled => "rescaled",
        }
    }
}

impl FromStr for FamilyKind {
    type Err = DzkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random-bandlimited" => Ok(FamilyKind::RandomBandlimited),
            "gaussian" => Ok(FamilyKind::Gaussian),
            "dyadic-theta" => Ok(FamilyKind::DyadicTheta),
            "rescaled" => Ok(FamilyKind::Rescaled),
            other => Err(DzkError::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

/// A reproducible list of inputs.
///
/// * `RandomBandlimited`: `count` members with coefficients uniform in the
///   square `[-1,1]^2` on integer modes `|m_a| <= band[a]`, unit `L^2` norm.
///   The draw depends only on `(seed, member)`, never on the grid, so the same
///   member can be placed on a refined box.
/// * `Gaussian`: one member per scale `s`, `exp(-(x^2+y^2)/(2 s^2))`, constant in z.
/// * `Rescaled`: the Gaussian of width `width` seen at `(lambda x, lambda y, lambda^2 z)`,
///   one member per `lambda` in `scales`.
/// * `DyadicTheta`: one member per level `k` in `scales`, `f^(xi) = theta^(xi / 2^k)`
///   with `theta^` a smooth radial bump equal to 1 on `1 <= |xi| <= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputFamily {
    pub kind: FamilyKind,
    pub count: usize,
    pub seed: u64,
    pub scales: Vec<f64>,
    pub band: [usize; 3],
    pub width: f64,
    pub real: bool,
}

impl InputFamily {
    pub fn random(count: usize, seed: u64, band: [usize; 3]) -> Self {
        Self {
            kind: FamilyKind::RandomBandlimited,
            count,
            seed,
            scales: Vec::new(),
            band,
            width: 1.0,
            real: false,
        }
    }

    pub fn gaussian(widths: &[f64]) -> Self {
        Self {
            kind: FamilyKind::Gaussian,
            count: widths.len(),
            seed: 0,
            scales: widths.to_vec(),
            band: [0; 3],
            width: 1.0,
            real: false,
        }
    }

    pub fn rescaled(width: f64, lambdas: &[f64]) -> Self {
        Self {
            kind: FamilyKind::Rescaled,
            count: lambdas.len(),
            seed: 0,
            scales: lambdas.to_vec(),
            band: [0; 3],
            width,
            real: false,
        }
    }

    pub fn dyadic_theta(levels: &[u32]) -> Self {
        Self {
            kind: FamilyKind::DyadicTheta,
            count: levels.len(),
            seed: 0,
            scales: levels.iter().map(|&k| k as f64).collect(),
            band: [0; 3],
            width: 1.0,
            real: false,
        }
    }

    /// Real-valued members (hermitian coefficients).
    pub fn real_valued(mut self) -> Self {
        self.real = true;
        self
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Stable label of member `i`.
    pub fn input_id(&self, i: usize) -> String {
        match self.kind {
            FamilyKind::RandomBandlimited => format!("seed{}-{i}", self.seed),
            FamilyKind::Gaussian => format!("sigma={}", self.scales[i]),
            FamilyKind::Rescaled => format!("lambda={}", self.scales[i]),
            FamilyKind::DyadicTheta => format!("k={}", self.scales[i]),
        }
    }

    pub fn spectral_member(&self, grid: &Grid3, i: usize) -> Result<SpectralField> {
        if i >= self.count {
            return Err(DzkError::InvalidParameter(format!(
                "member {i} of a family of {}",
                self.count
            )));
        }
        match self.kind {
            FamilyKind::RandomBandlimited => self.random_member(grid, i),
            FamilyKind::DyadicTheta => theta_datum(grid, self.scales[i] as u32),
            FamilyKind::Gaussian => gaussian_xy(grid, self.scales[i])?.to_spectral(),
            FamilyKind::Rescaled => gaussian_xy(grid, self.width / self.scales[i])?.to_spectral(),
        }
    }

    pub fn member(&self, grid: &Grid3, i: usize) -> Result<ScalarField> {
        match self.kind {
            FamilyKind::Gaussian => gaussian_xy(grid, self.scales[i]),
            FamilyKind::Rescaled => gaussian_xy(grid, self.width / self.scales[i]),
            _ => self.spectral_member(grid, i)?.from_spectral(),
        }
    }

    fn random_member(&self, grid: &Grid3, i: usize) -> Result<SpectralField> {
        let n = grid.shape();
        for a in 0..3 {
            if 2 * self.band[a] >= n[a] {
                return Err(DzkError::InvalidParameter(format!(
                    "band {} does not fit {} samples on axis {}",
                    self.band[a],
                    n[a],
                    Axis::ALL[a]
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let b = self.band.map(|b| b as i64);
        let mut coef = Vec::new();
        for m1 in -b[0]..=b[0] {
            for m2 in -b[1]..=b[1] {
                for m3 in -b[2]..=b[2] {
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    coef.push(([m1, m2, m3], c));
                }
            }
        }
        if self.real {
            // c_m <- (c_m + conj c_{-m}) / 2; the list is symmetric under reversal
            let rev: Vec<Complex64> = coef.iter().rev().map(|(_, c)| c.conj()).collect();
            for ((_, c), r) in coef.iter_mut().zip(rev) {
                *c = 0.5 * (*c + r);
            }
        }
        let v = grid.volume();
        let energy: f64 = coef.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() * v;
        let scale = v / energy.sqrt();
        let mut modes = vec![Complex64::default(); grid.size()];
        for (m, c) in coef {
            let idx = grid.flat(slot(m[0], n[0]), slot(m[1], n[1]), slot(m[2], n[2]));
            modes[idx] = c * scale;
        }
        SpectralField::new(grid, modes)
    }
}

impl fmt::Display for InputFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FamilyKind::RandomBandlimited => write!(
                f,
                "{} count={} seed={} band={}x{}x{}{}",
                self.kind.as_str(),
                self.count,
                self.seed,
                self.band[0],
                self.band[1],
                self.band[2],
                if self.real { " real" } else { "" }
            ),
            FamilyKind::Rescaled => write!(
                f,
                "{} width={} lambda={:?}",
                self.kind.as_str(),
                self.width,
                self.scales
            ),
            _ => write!(f, "{} scales={:?}", self.kind.as_str(), self.scales),
        }
    }
}

fn slot(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// `exp(-(x^2+y^2)/(2 s^2))`, constant along z.
pub fn gaussian_xy(grid: &Grid3, s: f64) -> Result<ScalarField> {
    if !(s.is_finite() && s > 0.0) {
        return Err(DzkError::InvalidParameter(format!("width {s}")));
    }
    ScalarField::from_fn(grid, |x, y, _| {
        Complex64::new((-(x * x + y * y) / (2.0 * s * s)).exp(), 0.0)
    })
}

/// Radial profile equal to 1 on `1 <= r <= 2` and 0 outside `1/2 < r < 4`.
pub fn theta_hat(r: f64) -> f64 {
    let psi = BumpFunction;
    psi.eval(2.0 * r - 1.0) * psi.eval((4.0 - r) / 2.0)
}

/// Datum centered at the origin with `f^(xi) = theta^(|xi| / 2^k)`; errors
/// when the box does not resolve `|xi| < 2^{k+2}` on every axis.
pub fn theta_datum(grid: &Grid3, k: u32) -> Result<SpectralField> {
    let top = 2f64.powi(k as i32 + 2);
    for a in Axis::ALL {
        let kmax = PI * grid.n(a) as f64 / grid.length(a);
        if kmax < top {
            return Err(DzkError::Unresolvable(k));
        }
    }
    let s = 2f64.powi(k as i32);
    let half = grid.lengths().map(|l| 0.5 * l);
    SpectralField::from_symbol(grid, |xi| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        // coefficients are referenced to the box corner
        let shift = -(xi[0] * half[0] + xi[1] * half[1] + xi[2] * half[2]);
        Complex64::from_polar(theta_hat(r / s), shift)
    })
}

/// Maximum `|m_a|` over the support of a spectral field, per axis.
pub fn spectral_extent(f: &SpectralField) -> [f64; 3] {
    let g = f.grid();
    let mut out = [0.0f64; 3];
    for (idx, c) in f.modes().iter().enumerate() {
        if c.norm_sqr() > 0.0 {
            let xi = wavevector(g, idx);
            for a in 0..3 {
                out[a] = out[a].max(xi[a].abs());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_members_have_unit_norm_and_are_reproducible() {
        let g = Grid3::cube(16, 5.0).unwrap();
        let fam = InputFamily::random(3, 11, [3, 2, 1]);
        let a = fam.member(&g, 1).unwrap();
        let b = fam.member(&g, 1).unwrap();
        assert_eq!(a, b);
        assert!((a.l2_norm() - 1.0).abs() < 1e-12);
        assert_ne!(a, fam.member(&g, 2).unwrap());
    }

    #[test]
    fn members_do_not_depend_on_resolution() {
        let coarse = Grid3::cube(16, 5.0).unwrap();
        let fine = Grid3::cube(32, 5.0).unwrap();
        let fam = InputFamily::random(2, 4, [4, 4, 4]);
        let a = fam.member(&coarse, 0).unwrap();
        let b = fam.member(&fine, 0).unwrap();
        // the coarse samples are every other fine sample
        for ix in 0..16 {
            for iy in 0..16 {
                for iz in 0..16 {
                    let d = a.at(ix, iy, iz) - b.at(2 * ix, 2 * iy, 2 * iz);
                    assert!(d.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn real_members_are_real() {
        let g = Grid3::cube(16, 5.0).unwrap();
        let f = InputFamily::random(1, 2, [3, 3, 3]).real_valued().member(&g, 0).unwrap();
        assert!(f.max_imag() < 1e-14);
    }

    #[test]
    fn band_must_fit() {
        let g = Grid3::cube(8, 5.0).unwrap();
        assert!(InputFamily::random(1, 0, [4, 0, 0]).member(&g, 0).is_err());
    }

    #[test]
    fn theta_profile() {
        assert_eq!(theta_hat(1.0), 1.0);
        assert_eq!(theta_hat(2.0), 1.0);
        assert_eq!(theta_hat(0.5), 0.0);
        assert_eq!(theta_hat(4.0), 0.0);
        assert!(theta_hat(3.0) > 0.0 && theta_hat(3.0) < 1.0);
    }

    #[test]
    fn theta_needs_resolution() {
        let g = Grid3::cube(32, 3.0).unwrap();
        assert!(theta_datum(&g, 3).is_ok());
        assert_eq!(theta_datum(&g, 4).unwrap_err(), DzkError::Unresolvable(4));
    }

    #[test]
    fn theta_datum_is_centered() {
        let g = Grid3::cube(32, 3.0).unwrap();
        let f = theta_datum(&g, 2).unwrap().from_spectral().unwrap();
        let c = g.n(Axis::X) / 2;
        assert!((f.at(c, c, c).norm() - f.max_abs()).abs() < 1e-12 * f.max_abs());
        assert!(f.max_imag() < 1e-10 * f.max_abs());
    }
}
