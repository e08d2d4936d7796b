//! Dyadic calculus checks and the sharpness counterexample for the maximal
//! estimate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::{wavevector, SpectralField};
use crate::grid::{Axis, Grid3};
use crate::lab::family::theta_datum;
use crate::lab::report::{CaseId, EstimateCase, SlopeFit};
use crate::multiplier::apply_multiplier;
use crate::norms::sobolev_norm_spectral;
use crate::numerics::trapezoid_weights;
use crate::propagators::{dyadic_weight, DyadicIndex, DyadicProjection};

/// Largest `|sum_{k<=K} w_k(xi) - 1|` over the modes of `grid`, with `K` the
/// first level whose cube covers every mode.
pub fn partition_defect(grid: &Grid3) -> f64 {
    let top = Axis::ALL
        .iter()
        .flat_map(|&a| grid.wavenumbers(a).iter().map(|k| k.abs()))
        .fold(0.0, f64::max);
    let mut levels = 0u32;
    while 2f64.powi(levels as i32 + 1) - 1.0 < top {
        levels += 1;
    }
    (0..grid.size())
        .into_par_iter()
        .map(|idx| {
            let xi = wavevector(grid, idx);
            let s: f64 = (0..=levels).map(|k| dyadic_weight(DyadicIndex(k), xi)).sum();
            (s - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Unit-modulus random-phase coefficients on the support of the level-`k`
/// weight.
pub fn white_in_band(grid: &Grid3, k: u32, seed: u64) -> Result<SpectralField> {
    let top = 2f64.powi(k as i32 + 1);
    for a in Axis::ALL {
        if std::f64::consts::PI * grid.n(a) as f64 / grid.length(a) < top - 1.0 {
            return Err(DzkError::Unresolvable(k));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let v = grid.volume();
    let modes: Vec<Complex64> = (0..grid.size())
        .map(|idx| {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            if dyadic_weight(DyadicIndex(k), wavevector(grid, idx)) > 0.0 {
                Complex64::from_polar(v, theta)
            } else {
                Complex64::default()
            }
        })
        .collect();
    SpectralField::new(grid, modes)
}

/// Slope of `log2(||B_k f_k|| / ||f_k||_{H^s})` against `k`, with `f_k` white
/// on the level-`k` band.
///
/// Metrics: `expected_slope` (`-s`), `partition_defect`, and `leakage`, the
/// largest `||B_k f_{k0}|| / ||f_{k0}||` over `|k - k0| >= 2` for the middle
/// level `k0` of `k_list`.
pub fn check_bk_bound(s: f64, k_list: &[u32], grid: &Grid3, seed: u64) -> Result<SlopeFit> {
    let data: Vec<SpectralField> = k_list
        .iter()
        .map(|&k| white_in_band(grid, k, seed))
        .collect::<Result<_>>()?;
    let mut ord = Vec::new();
    for (&k, f) in k_list.iter().zip(&data) {
        let bk = apply_multiplier(f, &DyadicProjection(DyadicIndex(k)))?.l2_norm();
        ord.push((bk / sobolev_norm_spectral(f, s)).log2());
    }
    let k0 = k_list[k_list.len() / 2];
    let f0 = &data[k_list.len() / 2];
    let n0 = f0.l2_norm();
    let mut leakage: f64 = 0.0;
    let top = k_list.iter().copied().max().unwrap_or(0) + 2;
    for k in 0..=top {
        if k.abs_diff(k0) >= 2 {
            let v = apply_multiplier(f0, &DyadicProjection(DyadicIndex(k)))?.l2_norm();
            leakage = leakage.max(v / n0);
        }
    }
    let case = EstimateCase::new(CaseId::BkBound).with("s", s);
    let abs = k_list.iter().map(|&k| k as f64).collect();
    let mut fit = SlopeFit::new(case, "log2 ||B_k f|| / ||f||_{H^s} vs k", abs, ord)?;
    fit.metrics.insert("expected_slope".into(), -s);
    fit.metrics.insert("partition_defect".into(), partition_defect(grid));
    fit.metrics.insert("leakage".into(), leakage);
    Ok(fit)
}

/// Box and sampling of the counterexample.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSetup {
    pub n: usize,
    pub length: f64,
    pub delta: f64,
    /// Samples across `|x| <= delta 2^{-k}`.
    pub x_samples: usize,
    /// Samples across each of the y, z and t windows.
    pub box_samples: usize,
}

impl Default for CounterexampleSetup {
    fn default() -> Self {
        Self {
            n: 128,
            length: 3.0,
            delta: 0.1,
            x_samples: 9,
            box_samples: 5,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `E(t)f` at the tensor product of off-grid points (box coordinates), by
/// separable partial sums over `xi_3`, then `xi_2`, then `xi_1`. Indexed
/// `[x][y][z][t]`.
pub fn evaluate_at(
    f: &SpectralField,
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
    ts: &[f64],
) -> Vec<Complex64> {
    let g = f.grid();
    let [nx, ny, nz] = g.shape();
    let (k1, k2, k3) = (
        g.wavenumbers(Axis::X),
        g.wavenumbers(Axis::Y),
        g.wavenumbers(Axis::Z),
    );
    // coefficients are referenced to the box corner
    let [ox, oy, oz] = [Axis::X, Axis::Y, Axis::Z].map(|a| g.coordinate(a, 0));
    let nzt = zs.len() * ts.len();
    let e3: Vec<Vec<Complex64>> = zs
        .iter()
        .flat_map(|&z| ts.iter().map(move |&t| z - oz - t))
        .map(|s| k3.iter().map(|&k| Complex64::from_polar(1.0, k * s)).collect())
        .collect();
    let nyzt = ys.len() * nzt;
    let modes = f.modes();
    // B[i1][(y, z, t)] = sum_{i2, i3} f^ e^{i(z-t)xi3} e^{i y xi2 - i t xi2^2}
    let b: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|i1| {
            let mut out = vec![Complex64::default(); nyzt];
            for i2 in 0..ny {
                let row = &modes[g.flat(i1, i2, 0)..g.flat(i1, i2, 0) + nz];
                if row.iter().all(|c| c.norm_sqr() == 0.0) {
                    continue;
                }
                let a: Vec<Complex64> = e3
                    .iter()
                    .map(|e| row.iter().zip(e).map(|(c, w)| c * w).sum())
                    .collect();
                let xi2 = k2[i2];
                for (iy, &y) in ys.iter().enumerate() {
                    for (it, &t) in ts.iter().enumerate() {
                        let w = Complex64::from_polar(1.0, (y - oy) * xi2 - t * xi2 * xi2);
                        for iz in 0..zs.len() {
                            let j = iz * ts.len() + it;
                            out[iy * nzt + j] += a[j] * w;
                        }
                    }
                }
            }
            out
        })
        .collect();
    let inv_v = 1.0 / g.volume();
    let mut u = vec![Complex64::default(); xs.len() * nyzt];
    for (ix, &x) in xs.iter().enumerate() {
        for (i1, bi) in b.iter().enumerate() {
            let xi1 = k1[i1];
            for (j, v) in bi.iter().enumerate() {
                let t = ts[j % ts.len()];
                u[ix * nyzt + j] += v * Complex64::from_polar(inv_v, (x - ox) * xi1 - t * xi1 * xi1);
            }
        }
    }
    u
}

/// `||E(t)f_k||_{L^2_x L^inf_{yzT}}` restricted to the windows of level `k`.
pub fn windowed_maximal(f: &SpectralField, k: u32, setup: &CounterexampleSetup) -> f64 {
    let w = setup.delta * 2f64.powi(-(k as i32));
    let tw = setup.delta * 2f64.powi(-2 * k as i32);
    let xs = linspace(-w, w, setup.x_samples);
    let yz = linspace(0.5 * w, 2.0 * w, setup.box_samples);
    let ts = linspace(0.5 * tw, 2.0 * tw, setup.box_samples);
    let u = evaluate_at(f, &xs, &yz, &yz, &ts);
    let per = u.len() / xs.len();
    let wx = trapezoid_weights(xs.len(), xs[1] - xs[0]);
    let s: f64 = u
        .chunks(per)
        .zip(&wx)
        .map(|(c, w)| {
            let m = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
            w * m * m
        })
        .sum();
    s.sqrt()
}

/// Growth of the maximal norm on dyadic annulus data.
///
/// The first fit is `log2 LHS` against `k`; then one fit of
/// `log2(LHS / ||f_k||_{H^s})` per `s` in `s_list`.
pub fn counterexample_growth(
    s_list: &[f64],
    k_list: &[u32],
    setup: &CounterexampleSetup,
) -> Result<Vec<SlopeFit>> {
    let grid = Grid3::cube(setup.n, setup.length)?;
    let mut lhs = Vec::new();
    let mut data = Vec::new();
    for &k in k_list {
        let f = theta_datum(&grid, k)?;
        lhs.push(windowed_maximal(&f, k, setup));
        data.push(f);
    }
    let abs: Vec<f64> = k_list.iter().map(|&k| k as f64).collect();
    let base = EstimateCase::new(CaseId::Counterexample).with("delta", setup.delta);
    let mut out = Vec::new();
    let mut first = SlopeFit::new(
        base.clone().with("quantity", "lhs"),
        "log2 ||E(t)f_k||_{L2x Linf yzT} vs k",
        abs.clone(),
        lhs.iter().map(|v| v.log2()).collect(),
    )?;
    first.metrics.insert("expected_slope".into(), 2.5);
    out.push(first);
    for &s in s_list {
        let ord: Vec<f64> = lhs
            .iter()
            .zip(&data)
            .map(|(l, f)| (l / sobolev_norm_spectral(f, s)).log2())
            .collect();
        let mut fit = SlopeFit::new(
            base.clone().with("s", s),
            format!("log2 LHS / ||f_k||_{{H^{s}}} vs k"),
            abs.clone(),
            ord,
        )?;
        fit.metrics.insert("expected_slope".into(), 1.0 - s);
        out.push(fit);
    }
    Ok(out)
}
