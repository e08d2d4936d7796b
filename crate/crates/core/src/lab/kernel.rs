//! The oscillatory kernel `J(x, t) = int e^{i(-t(xi1^2+xi2^2+xi3) + x.xi)} prod psi_i(xi_i) dxi`
//! with `psi_i(xi) = psi(2^{k+1} - |xi|)`, and its envelope.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::lab::report::{CaseId, EstimateCase, RatioReport, RatioRow};
use crate::numerics::fit_line;
use crate::propagators::BumpFunction;

/// Relative agreement required between two successive panel refinements.
pub const QUAD_TOL: f64 = 1e-6;
const DEGREE: usize = 16;
const MAX_PANELS: usize = 1 << 16;

fn rule() -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(DEGREE).expect("nonzero degree"))
}

fn panels_sum<F: Fn(f64) -> Complex64>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: &F) -> Complex64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            let re = rule.integrate(lo, lo + h, |x| f(x).re);
            let im = rule.integrate(lo, lo + h, |x| f(x).im);
            Complex64::new(re, im)
        })
        .sum()
}

/// Composite Gauss-Legendre on `[a, b]`, doubling the panel count until two
/// successive sums agree to [`QUAD_TOL`] relative (or to `floor` absolute).
pub fn adaptive_integral<F>(a: f64, b: f64, start: usize, floor: f64, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let rule = rule();
    let mut panels = start.max(1);
    let mut prev = panels_sum(&rule, a, b, panels, &f);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = panels_sum(&rule, a, b, panels, &f);
        if (next - prev).norm() <= QUAD_TOL * next.norm() + floor {
            return Ok(next);
        }
        prev = next;
    }
    Err(DzkError::QuadratureFailure(format!(
        "no agreement on [{a}, {b}] with {MAX_PANELS} panels"
    )))
}

fn top(k: u32) -> f64 {
    2f64.powi(k as i32 + 1)
}

/// `int psi_i = 2^{k+2} - 1`.
pub fn profile_mass(k: u32) -> f64 {
    2.0 * top(k) - 1.0
}

fn start_panels(a: f64, freq: f64) -> usize {
    // a few panels per oscillation
    ((a * freq / std::f64::consts::PI).ceil() as usize).max(4)
}

/// `J_i(x, t) = int e^{i(x xi - t xi^2)} psi(2^{k+1} - |xi|) dxi`, the factor
/// for the first two axes.
pub fn kernel_factor(k: u32, x: f64, t: f64) -> Result<Complex64> {
    let a = top(k);
    let psi = BumpFunction;
    let floor = 1e-13 * profile_mass(k);
    // the profile is even: 2 int_0^a cos(x xi) e^{-i t xi^2} psi(a - xi)
    let v = adaptive_integral(0.0, a, start_panels(a, x.abs() + 2.0 * t.abs() * a), floor, |xi| {
        Complex64::from_polar(2.0 * (x * xi).cos() * psi.eval(a - xi), -t * xi * xi)
    })?;
    Ok(v)
}

/// `J_3(z, t) = int e^{i(z - t) xi} psi(2^{k+1} - |xi|) dxi`.
pub fn kernel_factor_z(k: u32, z: f64, t: f64) -> Result<Complex64> {
    kernel_factor(k, z - t, 0.0)
}

/// `J(x, t) = J_1(x_1, t) J_2(x_2, t) J_3(x_3, t)`.
pub fn kernel(k: u32, x: [f64; 3], t: f64) -> Result<Complex64> {
    Ok(kernel_factor(k, x[0], t)? * kernel_factor(k, x[1], t)? * kernel_factor_z(k, x[2], t)?)
}

/// Majorant of `|J(x_1, 0, 0, t)|` from two integrations by parts in `xi_1`:
/// `int |psi''/phi'^2 + 6t psi'/phi'^3 + 12t^2 psi/phi'^4| dxi_1 * (2^{k+2}-1)^2`
/// with `phi' = x_1 - 2t xi_1`. Valid for `|x_1| > 2|t| 2^{k+1}`.
pub fn ibp_majorant(k: u32, x1: f64, t: f64) -> Result<f64> {
    let a = top(k);
    if x1.abs() <= 2.0 * t.abs() * a {
        return Err(DzkError::InvalidParameter(format!(
            "phase is stationary inside the support for x1 = {x1}, t = {t}"
        )));
    }
    let psi = BumpFunction;
    let integrand = |xi: f64| {
        let r = a - xi.abs();
        let sgn = xi.signum();
        let p0 = psi.eval(r);
        let p1 = -sgn * psi.d1(r);
        let p2 = psi.d2(r);
        let d = x1 - 2.0 * t * xi;
        Complex64::new(
            (p2 / (d * d) + 6.0 * t * p1 / (d * d * d) + 12.0 * t * t * p0 / (d * d * d * d)).abs(),
            0.0,
        )
    };
    // only the transition bands carry psi' and psi''; the plateau contributes
    // the 12 t^2 psi / phi'^4 term alone
    let m = adaptive_integral(-a, a, 64, 0.0, integrand)?.re;
    Ok(m * profile_mass(k).powi(2))
}

/// Pointwise envelope check `|J(x_1, 0, 0, t)| <= C 2^{3k} min(1, |x_1|^{-2})`.
///
/// Rows are `(t, x_1)` pairs with `lhs = |J|` and `rhs = 2^{3k} min(1, x_1^{-2})`;
/// the max ratio is `C_fit`. Metrics:
/// * `c_fit`, and `c_fit_half` over `|x_1| <= max|x_1| / 2`;
/// * `tail_exponent`: fitted log-log slope of the integration-by-parts
///   majorant at `t = 0` over `|x_1| >= 1`;
/// * `raw_exponent`: fitted slope of `|J|` itself at `t = 0` over `|x_1| >= 1`;
/// * `origin`: `J(0, 0)`.
pub fn kernel_envelope(k: u32, horizon: f64, x1_list: &[f64], t_list: &[f64]) -> Result<RatioReport> {
    if t_list.iter().any(|t| t.abs() > horizon) {
        return Err(DzkError::InvalidParameter("time outside [-T, T]".into()));
    }
    let scale = 2f64.powi(3 * k as i32);
    let pairs: Vec<(f64, f64)> = t_list
        .iter()
        .flat_map(|&t| x1_list.iter().map(move |&x| (t, x)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(t, x)| kernel(k, [x, 0.0, 0.0], t).map(|j| j.norm()))
        .collect::<Result<_>>()?;
    let rows: Vec<RatioRow> = pairs
        .iter()
        .zip(&values)
        .map(|(&(t, x), &v)| {
            let env = scale * (x.abs().powi(-2)).min(1.0);
            RatioRow::new(format!("t={t},x1={x}"), v, env)
                .with("t", t)
                .with("x1", x)
        })
        .collect();
    let xmax = x1_list.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let c_half = rows
        .iter()
        .filter(|r| r.params["x1"].as_f64().unwrap_or(0.0).abs() <= 0.5 * xmax)
        .filter_map(RatioRow::ratio)
        .fold(0.0, f64::max);
    let tail: Vec<f64> = x1_list.iter().copied().filter(|x| x.abs() >= 1.0).collect();
    let mut lx = Vec::new();
    let mut lm = Vec::new();
    let mut lj = Vec::new();
    for &x in &tail {
        lx.push(x.abs().log2());
        lm.push(ibp_majorant(k, x, 0.0)?.log2());
        lj.push(kernel(k, [x, 0.0, 0.0], 0.0)?.norm().log2());
    }
    let case = EstimateCase::new(CaseId::KernelEnvelope)
        .with("k", k)
        .with("T", horizon);
    let mut rep = RatioReport::new(case, format!("x1 in {x1_list:?}, t in {t_list:?}"), rows)?;
    let c_fit = rep.max_ratio().unwrap_or(0.0);
    rep.metrics.insert("c_fit".into(), c_fit);
    rep.metrics.insert("c_fit_half".into(), c_half);
    rep.metrics.insert("tail_exponent".into(), fit_line(&lx, &lm)?.slope);
    rep.metrics.insert("raw_exponent".into(), fit_line(&lx, &lj)?.slope);
    rep.metrics.insert("origin".into(), kernel(k, [0.0; 3], 0.0)?.re);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value_is_cube_of_profile_mass() {
        for k in 0..4 {
            let j = kernel(k, [0.0; 3], 0.0).unwrap();
            let m = profile_mass(k);
            assert!((j.re - m.powi(3)).abs() < 1e-6 * m.powi(3), "k={k}: {j}");
            assert!(j.im.abs() < 1e-9 * m.powi(3));
        }
    }

    #[test]
    fn factor_at_zero_time_is_real_and_even() {
        let a = kernel_factor(2, 3.7, 0.0).unwrap();
        let b = kernel_factor(2, -3.7, 0.0).unwrap();
        assert!(a.im.abs() < 1e-12);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn plateau_part_has_closed_form() {
        // with psi replaced by the indicator of [-c, c] the factor is 2 sin(c x)/x;
        // the smooth profile differs from it by at most the transition width
        let (k, x) = (1u32, 5.0);
        let c = top(k) - 0.5;
        let j = kernel_factor(k, x, 0.0).unwrap().re;
        let box_val = 2.0 * (c * x).sin() / x;
        assert!((j - box_val).abs() < 1.0);
    }

    #[test]
    fn majorant_dominates() {
        for &(x, t) in &[(10.0, 0.0), (30.0, 0.1), (60.0, 0.5)] {
            let j = kernel(2, [x, 0.0, 0.0], t).unwrap().norm();
            let m = ibp_majorant(2, x, t).unwrap();
            assert!(j <= m * (1.0 + 1e-6), "x={x} t={t}: {j} > {m}");
        }
        assert!(ibp_majorant(2, 1.0, 1.0).is_err());
    }
}
