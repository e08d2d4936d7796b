//! Linear flows and fractional operators as explicit Fourier symbols.
//!
//! Every operator comes in two forms: a symbol type implementing
//! [`Multiplier`] (used by the solver and the norms, which stay in spectral
//! space) and a field-level function that transforms, multiplies and
//! transforms back.

use num_complex::Complex64;

use crate::error::{DzkError, Result};
use crate::field::ScalarField;
use crate::grid::Axis;
use crate::multiplier::{apply_to_field, Multiplier};

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, `C^inf` and monotone.
///
/// `psi(x) = s(x) / (s(x) + s(1-x))` with `s(x) = exp(-1/x)` for `x > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpFunction;

impl BumpFunction {
    #[inline]
    fn s(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            let a = Self::s(x);
            a / (a + Self::s(1.0 - x))
        }
    }

    /// First derivative, closed form.
    pub fn d1(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let (a, b) = (Self::s(x), Self::s(1.0 - x));
        let (da, db) = (a / (x * x), -b / ((1.0 - x) * (1.0 - x)));
        (da * b - a * db) / ((a + b) * (a + b))
    }

    /// Second derivative, closed form.
    pub fn d2(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let y = 1.0 - x;
        let (a, b) = (Self::s(x), Self::s(y));
        let da = a / (x * x);
        let dda = a * (1.0 - 2.0 * x) / x.powi(4);
        let db = -b / (y * y);
        let ddb = b * (1.0 - 2.0 * y) / y.powi(4);
        let d = a + b;
        let dd = da + db;
        let num = da * b - a * db;
        let dnum = dda * b - a * ddb;
        (dnum * d - 2.0 * num * dd) / d.powi(3)
    }
}

/// Nonnegative dyadic level `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicIndex(pub u32);

impl DyadicIndex {
    pub fn scale(self) -> f64 {
        2f64.powi(self.0 as i32)
    }
}

#[inline]
fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

#[inline]
fn perp(xi: [f64; 3]) -> f64 {
    (xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

/// `e^{-it(xi_1^2 + xi_2^2 + xi_3)}`, the unitary group of the linear problem.
#[derive(Debug, Clone, Copy)]
pub struct Schrodinger(pub f64);

impl Multiplier for Schrodinger {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::from_polar(1.0, -self.0 * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2]))
    }
}

/// `t * sinc(t r)`, `r = |xi_perp|`: the symbol of `N(t)`.
#[derive(Debug, Clone, Copy)]
pub struct WaveSine(pub f64);

impl Multiplier for WaveSine {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::new(self.0 * sinc(self.0 * perp(xi)), 0.0)
    }
}

/// `cos(t r)`: the symbol of `N'(t)`.
#[derive(Debug, Clone, Copy)]
pub struct WaveCosine(pub f64);

impl Multiplier for WaveCosine {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::new((self.0 * perp(xi)).cos(), 0.0)
    }
}

/// `|xi_perp|`.
#[derive(Debug, Clone, Copy)]
pub struct PerpSqrtLaplacian;

impl Multiplier for PerpSqrtLaplacian {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::new(perp(xi), 0.0)
    }
}

/// `-(xi_1^2 + xi_2^2)`: the transverse Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct PerpLaplacian;

impl Multiplier for PerpLaplacian {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0)
    }
}

/// `|xi_axis|^s` with `s >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct Riesz {
    order: f64,
    axis: Axis,
}

impl Riesz {
    pub fn new(order: f64, axis: Axis) -> Result<Self> {
        if !(order >= 0.0) || !order.is_finite() {
            return Err(DzkError::NegativeOrder(order));
        }
        Ok(Self { order, axis })
    }
}

impl Multiplier for Riesz {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        let a = xi[self.axis.index()].abs();
        let v = if self.order == 0.0 {
            1.0
        } else if a == 0.0 {
            0.0
        } else {
            a.powf(self.order)
        };
        Complex64::new(v, 0.0)
    }
}

/// `(1 + sum_{axes} xi_a^2)^{s/2}`.
#[derive(Debug, Clone, Copy)]
pub struct Bessel {
    pub order: f64,
    pub axes: [bool; 3],
}

impl Bessel {
    pub fn new(order: f64, axes: &[Axis]) -> Self {
        let mut mask = [false; 3];
        for a in axes {
            mask[a.index()] = true;
        }
        Self { order, axes: mask }
    }

    /// Full Bessel potential `J^s` over all three axes.
    pub fn full(order: f64) -> Self {
        Self::new(order, &Axis::ALL)
    }
}

impl Multiplier for Bessel {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        let mut q = 1.0;
        for a in 0..3 {
            if self.axes[a] {
                q += xi[a] * xi[a];
            }
        }
        Complex64::new(q.powf(0.5 * self.order), 0.0)
    }
}

/// `(i xi)^alpha`, the multi-index derivative `d^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Derivative(pub [u32; 3]);

impl Derivative {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// All multi-indices with `|alpha| == n`, in lexicographic order.
    pub fn all_of_order(n: u32) -> Vec<Derivative> {
        let mut out = Vec::new();
        for a in (0..=n).rev() {
            for b in (0..=n - a).rev() {
                out.push(Derivative([a, b, n - a - b]));
            }
        }
        out
    }

    /// Adds one derivative along `axis`.
    pub fn with(self, axis: Axis) -> Self {
        let mut a = self.0;
        a[axis.index()] += 1;
        Derivative(a)
    }
}

impl Multiplier for Derivative {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        for a in 0..3 {
            for _ in 0..self.0[a] {
                z *= Complex64::new(0.0, xi[a]);
            }
        }
        z
    }
}

/// Product `prod_i psi(2^{k+1} - |xi_i|)`, equal to 1 on the cube
/// `|xi_i| <= 2^{k+1} - 1` and supported in `|xi_i| < 2^{k+1}`.
pub fn dyadic_cube(k: u32, xi: [f64; 3]) -> f64 {
    let psi = BumpFunction;
    let top = 2f64.powi(k as i32 + 1);
    xi.iter().map(|x| psi.eval(top - x.abs())).product()
}

/// The level-`k` partition function.
///
/// Level 0 is `prod_i psi(2 - |xi_i|)`; level `k >= 1` is the difference of
/// consecutive cube cut-offs, which coincides with
/// `sum_i psi_1 psi_2 psi_3 psi(|xi_i| - 2^k + 1)` wherever at most one
/// coordinate lies in its transition band and telescopes to an exact
/// partition of unity.
pub fn dyadic_weight(k: DyadicIndex, xi: [f64; 3]) -> f64 {
    match k.0 {
        0 => dyadic_cube(0, xi),
        k => (dyadic_cube(k, xi) - dyadic_cube(k - 1, xi)).max(0.0),
    }
}

/// `bar psi_k^{1/2}`: the symbol of `B_k`.
#[derive(Debug, Clone, Copy)]
pub struct DyadicProjection(pub DyadicIndex);

impl Multiplier for DyadicProjection {
    #[inline]
    fn symbol(&self, xi: [f64; 3]) -> Complex64 {
        Complex64::new(dyadic_weight(self.0, xi).sqrt(), 0.0)
    }
}

/// `E(t) f`.
pub fn schrodinger_group(f: &ScalarField, t: f64) -> Result<ScalarField> {
    apply_to_field(f, &Schrodinger(t))
}

/// `N(t) f = (-Δ⊥)^{-1/2} sin((-Δ⊥)^{1/2} t) f`.
pub fn wave_sine(f: &ScalarField, t: f64) -> Result<ScalarField> {
    apply_to_field(f, &WaveSine(t))
}

/// `N'(t) f = cos((-Δ⊥)^{1/2} t) f`.
pub fn wave_cosine(f: &ScalarField, t: f64) -> Result<ScalarField> {
    apply_to_field(f, &WaveCosine(t))
}

pub fn riesz_derivative(f: &ScalarField, s: f64, axis: Axis) -> Result<ScalarField> {
    apply_to_field(f, &Riesz::new(s, axis)?)
}

pub fn bessel_potential(f: &ScalarField, s: f64, axes: &[Axis]) -> Result<ScalarField> {
    apply_to_field(f, &Bessel::new(s, axes))
}

pub fn perp_sqrt_laplacian(f: &ScalarField) -> Result<ScalarField> {
    apply_to_field(f, &PerpSqrtLaplacian)
}

/// `B_k f`.
pub fn dyadic_projection(f: &ScalarField, k: DyadicIndex) -> Result<ScalarField> {
    apply_to_field(f, &DyadicProjection(k))
}
