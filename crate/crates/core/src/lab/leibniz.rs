//! Fractional Leibniz commutator `D^rho(fg) - f D^rho g - g D^rho f`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::ScalarField;
use crate::grid::{Axis, Grid3};
use crate::lab::family::InputFamily;
use crate::lab::report::{CaseId, EstimateCase, RatioReport, RatioRow};
use crate::multiplier::apply_to_field;
use crate::norms::{spatial_norm, Exponent, MixedNormSpec};
use crate::propagators::Riesz;

#[derive(Debug, Clone, PartialEq)]
pub struct LeibnizParams {
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub p1: Exponent,
    pub p2: Exponent,
    pub q1: Exponent,
    pub q2: Exponent,
    pub axis: Axis,
}

impl Default for LeibnizParams {
    fn default() -> Self {
        let four = Exponent::Finite(4.0);
        Self {
            rho: 0.5,
            rho1: 0.25,
            rho2: 0.25,
            p1: four,
            p2: four,
            q1: four,
            q2: four,
            axis: Axis::X,
        }
    }
}

impl LeibnizParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DzkError::InvalidParameter(m.to_string()));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        for r in [self.rho1, self.rho2] {
            if !(r >= 0.0 && r <= self.rho) {
                return bad("rho1, rho2 must lie in [0, rho]");
            }
        }
        if (self.rho1 + self.rho2 - self.rho).abs() > 1e-12 {
            return bad("rho1 + rho2 must equal rho");
        }
        for e in [self.p1, self.p2, self.q1, self.q2] {
            if !matches!(e, Exponent::Finite(p) if p >= 2.0) {
                return bad("exponents must lie in [2, inf)");
            }
        }
        let half = |a: Exponent, b: Exponent| (a.reciprocal() + b.reciprocal() - 0.5).abs() < 1e-12;
        if !half(self.p1, self.p2) || !half(self.q1, self.q2) {
            return bad("1/p1 + 1/p2 and 1/q1 + 1/q2 must equal 1/2");
        }
        if self.axis == Axis::Z {
            return bad("axis must be x or y");
        }
        Ok(())
    }

    fn norm_spec(&self, p: Exponent, q: Exponent) -> Result<MixedNormSpec> {
        let (a, rest) = match self.axis {
            Axis::X => ("x", "y,z"),
            _ => ("y", "x,z"),
        };
        format!("L{p}:{a} | L{q}:{rest}").parse()
    }
}

fn pointwise(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    f.same_grid(g)?;
    let v: Vec<Complex64> = f.values().par_iter().zip(g.values()).map(|(a, b)| a * b).collect();
    ScalarField::new(f.grid(), v)
}

/// `D^rho(fg) - f D^rho g - g D^rho f` along `axis`.
///
/// Products are taken pointwise; they are exact when the band of `f` plus the
/// band of `g` stays below the Nyquist mode.
pub fn leibniz_commutator(f: &ScalarField, g: &ScalarField, rho: f64, axis: Axis) -> Result<ScalarField> {
    let d = Riesz::new(rho, axis)?;
    let fg = apply_to_field(&pointwise(f, g)?, &d)?;
    let a = pointwise(f, &apply_to_field(g, &d)?)?;
    let b = pointwise(g, &apply_to_field(f, &d)?)?;
    Ok(&(&fg - &a) - &b)
}

/// Commutator ratio over the pairs `(member i, member i+1)` of `family`.
///
/// `lhs = ||commutator||_{L^2}`, `rhs = ||D^{rho1} f||_{L^{p1}_x L^{q1}} ||D^{rho2} g||_{L^{p2}_x L^{q2}}`.
/// Metrics: `constant_residual` (largest `||commutator(f, 1)|| / ||D^rho f||`)
/// and `symmetry` (largest `||C(f,g) - C(g,f)|| / ||C(f,g)||`).
pub fn check_leibniz(params: &LeibnizParams, family: &InputFamily, grid: &Grid3) -> Result<RatioReport> {
    params.validate()?;
    let s1 = params.norm_spec(params.p1, params.q1)?;
    let s2 = params.norm_spec(params.p2, params.q2)?;
    let n = family.len();
    let one = ScalarField::constant(grid, Complex64::new(1.0, 0.0));
    let per: Vec<(RatioRow, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let f = family.member(grid, i)?;
            let g = family.member(grid, (i + 1) % n)?;
            let c = leibniz_commutator(&f, &g, params.rho, params.axis)?;
            let lhs = c.l2_norm();
            let df = apply_to_field(&f, &Riesz::new(params.rho1, params.axis)?)?;
            let dg = apply_to_field(&g, &Riesz::new(params.rho2, params.axis)?)?;
            let rhs = spatial_norm(&df, &s1)?.value * spatial_norm(&dg, &s2)?.value;
            let c1 = leibniz_commutator(&f, &one, params.rho, params.axis)?.l2_norm();
            let dr = apply_to_field(&f, &Riesz::new(params.rho, params.axis)?)?.l2_norm();
            let swapped = leibniz_commutator(&g, &f, params.rho, params.axis)?;
            let sym = if lhs > 0.0 { (&c - &swapped).l2_norm() / lhs } else { 0.0 };
            Ok((RatioRow::new(family.input_id(i), lhs, rhs), c1 / dr, sym))
        })
        .collect::<Result<_>>()?;
    let residual = per.iter().map(|r| r.1).fold(0.0, f64::max);
    let symmetry = per.iter().map(|r| r.2).fold(0.0, f64::max);
    let case = EstimateCase::new(CaseId::LeibnizCommutator)
        .with("rho", params.rho)
        .with("rho1", params.rho1)
        .with("rho2", params.rho2)
        .with("p1", params.p1.to_string())
        .with("p2", params.p2.to_string())
        .with("q1", params.q1.to_string())
        .with("q2", params.q2.to_string());
    let mut rep = RatioReport::new(case, family.to_string(), per.into_iter().map(|r| r.0).collect())?;
    rep.metrics.insert("constant_residual".into(), residual);
    rep.metrics.insert("symmetry".into(), symmetry);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_factor_gives_zero() {
        let g = Grid3::cube(24, 5.0).unwrap();
        let f = InputFamily::random(1, 8, [3, 3, 3]).member(&g, 0).unwrap();
        let one = ScalarField::constant(&g, Complex64::new(1.0, 0.0));
        let c = leibniz_commutator(&f, &one, 0.5, Axis::X).unwrap();
        assert!(c.l2_norm() < 1e-12);
    }

    #[test]
    fn plane_wave_closed_form() {
        // (|a+b|^rho - |a|^rho - |b|^rho) e^{i(a+b)x}
        let g = Grid3::cube(16, 2.0 * std::f64::consts::PI).unwrap();
        let e = |m: f64| ScalarField::from_fn(&g, |x, _, _| Complex64::from_polar(1.0, m * x)).unwrap();
        let c = leibniz_commutator(&e(2.0), &e(3.0), 0.5, Axis::X).unwrap();
        let coef = 5f64.sqrt() - 2f64.sqrt() - 3f64.sqrt();
        let expect = e(5.0).scale(Complex64::new(coef, 0.0));
        assert!(c.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn rejects_bad_exponents() {
        let mut p = LeibnizParams::default();
        p.p1 = Exponent::Finite(3.0);
        assert!(p.validate().is_err());
        let mut p = LeibnizParams::default();
        p.rho2 = 0.3;
        assert!(p.validate().is_err());
    }
}
