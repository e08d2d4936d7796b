//! Iterated Lebesgue norms over `(t, x, y, z)` and the composite norms built
//! from them.
//!
//! Spatial integrals use the rectangle rule with the cell spacing (exact for
//! trigonometric polynomials), time integrals the trapezoid rule on the
//! series nodes, and `L^inf` stages the maximum over samples.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::{ScalarField, SpectralField};
use crate::grid::{Axis, Grid3};
use crate::multiplier::{apply_multiplier, Multiplier, Product};
use crate::numerics::{trapezoid_weights, CompensatedSum};
use crate::propagators::{Bessel, Derivative, Riesz};
use crate::series::{FieldSeries, SpectralSeries, TimeGrid};

/// Exponent of the default `+` in `J_z^{1/4+}` and friends.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// A coordinate of space-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dim {
    T,
    X,
    Y,
    Z,
}

impl Dim {
    pub const ALL: [Dim; 4] = [Dim::T, Dim::X, Dim::Y, Dim::Z];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> char {
        match self {
            Dim::T => 't',
            Dim::X => 'x',
            Dim::Y => 'y',
            Dim::Z => 'z',
        }
    }

    fn parse(c: &str) -> Result<Dim> {
        match c.trim() {
            "t" | "T" => Ok(Dim::T),
            "x" => Ok(Dim::X),
            "y" => Ok(Dim::Y),
            "z" => Ok(Dim::Z),
            other => Err(DzkError::InvalidNormSpec(format!("unknown axis `{other}`"))),
        }
    }
}

impl From<Axis> for Dim {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => Dim::X,
            Axis::Y => Dim::Y,
            Axis::Z => Dim::Z,
        }
    }
}

/// A Lebesgue exponent in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(DzkError::InvalidNormSpec(format!("exponent {p} outside [1, inf]")))
        }
    }

    /// `1/p`, zero for `p = inf`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl FromStr for Exponent {
    type Err = DzkError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "Inf" | "infty" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let bad = || DzkError::InvalidNormSpec(format!("bad exponent `{s}`"));
        let p = match s.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                a / b
            }
            None => s.parse().map_err(|_| bad())?,
        };
        Exponent::finite(p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(p) => {
                for den in 1..=12u32 {
                    let num = p * den as f64;
                    if (num - num.round()).abs() < 1e-12 {
                        return if den == 1 {
                            write!(f, "{}", num.round() as i64)
                        } else {
                            write!(f, "{}/{}", num.round() as i64, den)
                        };
                    }
                }
                write!(f, "{p}")
            }
        }
    }
}

/// One `L^p` stage over a joint group of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStage {
    pub axes: Vec<Dim>,
    pub p: Exponent,
}

/// Iterated norm, stages listed outer first (the reading order of
/// `L^2_x L^inf_{yzT}`).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedNormSpec {
    stages: Vec<NormStage>,
}

impl MixedNormSpec {
    pub fn new(stages: Vec<NormStage>) -> Result<Self> {
        let mut seen = [false; 4];
        for st in &stages {
            if st.axes.is_empty() {
                return Err(DzkError::InvalidNormSpec("empty stage".into()));
            }
            for d in &st.axes {
                if std::mem::replace(&mut seen[d.slot()], true) {
                    return Err(DzkError::InvalidNormSpec(format!(
                        "axis {} covered twice",
                        d.name()
                    )));
                }
            }
        }
        for d in [Dim::X, Dim::Y, Dim::Z] {
            if !seen[d.slot()] {
                return Err(DzkError::InvalidNormSpec(format!("axis {} missing", d.name())));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[NormStage] {
        &self.stages
    }

    pub fn covers_time(&self) -> bool {
        self.stages.iter().any(|s| s.axes.contains(&Dim::T))
    }

    /// Every stage with the same exponent `p` over all axes in `dims`.
    pub fn uniform(p: Exponent, dims: &[Dim]) -> Result<Self> {
        Self::new(vec![NormStage {
            axes: dims.to_vec(),
            p,
        }])
    }

    /// The same spec with x and y exchanged.
    pub fn swap_xy(&self) -> Self {
        let stages = self
            .stages
            .iter()
            .map(|s| NormStage {
                axes: s
                    .axes
                    .iter()
                    .map(|d| match d {
                        Dim::X => Dim::Y,
                        Dim::Y => Dim::X,
                        d => *d,
                    })
                    .collect(),
                p: s.p,
            })
            .collect();
        Self { stages }
    }
}

impl FromStr for MixedNormSpec {
    type Err = DzkError;

    fn from_str(s: &str) -> Result<Self> {
        let mut stages = Vec::new();
        for part in s.split('|') {
            let part = part.trim();
            let (p, axes) = part
                .split_once(':')
                .ok_or_else(|| DzkError::InvalidNormSpec(format!("stage `{part}` lacks `:`")))?;
            let p = p
                .trim()
                .strip_prefix('L')
                .ok_or_else(|| DzkError::InvalidNormSpec(format!("stage `{part}` must start with L")))?;
            let axes = axes.split(',').map(Dim::parse).collect::<Result<Vec<_>>>()?;
            stages.push(NormStage {
                axes,
                p: p.parse()?,
            });
        }
        Self::new(stages)
    }
}

impl fmt::Display for MixedNormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, st) in self.stages.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "L{}:", st.p)?;
            for (j, d) in st.axes.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", d.name())?;
            }
        }
        Ok(())
    }
}

/// A measured norm with what was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub spec: String,
    pub horizon: Option<f64>,
}

impl NormValue {
    fn new(value: f64, spec: impl Into<String>, horizon: Option<f64>) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(DzkError::NonFinite(0));
        }
        Ok(Self {
            value,
            spec: spec.into(),
            horizon,
        })
    }
}

/// Named contributions of a composite norm, in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormBreakdown {
    pub terms: Vec<(String, f64)>,
}

impl NormBreakdown {
    pub fn total(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for (_, v) in &self.terms {
            s.add(*v);
        }
        s.value()
    }
}

/// Dense nonnegative tensor indexed `[t][x][y][z]` with per-dimension weights.
struct Tensor {
    shape: [usize; 4],
    weights: [Vec<f64>; 4],
    data: Vec<f64>,
}

impl Tensor {
    /// Collapses one axis: `out[a, b] = op_i(w_i, data[a, i, b])`.
    fn collapse(&mut self, s: usize, max: bool) {
        let shape = self.shape;
        let before: usize = shape[..s].iter().product();
        let n = shape[s];
        let after: usize = shape[s + 1..].iter().product();
        let w = &self.weights[s];
        let data = &self.data;
        let out: Vec<f64> = (0..before)
            .into_par_iter()
            .flat_map_iter(|a| {
                let block = &data[a * n * after..(a + 1) * n * after];
                if max {
                    let mut acc = vec![0.0f64; after];
                    for i in 0..n {
                        for (o, v) in acc.iter_mut().zip(&block[i * after..(i + 1) * after]) {
                            *o = o.max(*v);
                        }
                    }
                    acc
                } else {
                    let mut acc = vec![CompensatedSum::default(); after];
                    for i in 0..n {
                        for (o, v) in acc.iter_mut().zip(&block[i * after..(i + 1) * after]) {
                            o.add(w[i] * v);
                        }
                    }
                    acc.into_iter().map(|c| c.value()).collect()
                }
            })
            .collect();
        self.shape[s] = 1;
        self.weights[s] = vec![1.0];
        self.data = out;
    }

    /// A joint `L^p` stage is the iterated sum of `p`-th powers, one axis at
    /// a time, followed by a single root.
    fn reduce(mut self, stage: &NormStage) -> Tensor {
        let mut axes: Vec<usize> = stage.axes.iter().map(|d| d.slot()).collect();
        axes.sort_unstable();
        // innermost axis first keeps the z-fastest summation order
        axes.reverse();
        match stage.p {
            Exponent::Infinity => {
                for s in axes {
                    self.collapse(s, true);
                }
            }
            Exponent::Finite(p) => {
                let m = self.data.iter().fold(0.0f64, |a, b| a.max(*b));
                if m == 0.0 {
                    for s in axes {
                        self.collapse(s, true);
                    }
                    return self;
                }
                let pw = |x: f64| -> f64 {
                    let y = x / m;
                    if p == 2.0 {
                        y * y
                    } else if p == 4.0 {
                        (y * y) * (y * y)
                    } else {
                        y.powf(p)
                    }
                };
                self.data.par_iter_mut().for_each(|v| *v = pw(*v));
                for s in axes {
                    self.collapse(s, false);
                }
                let r = 1.0 / p;
                self.data.par_iter_mut().for_each(|v| *v = m * v.powf(r));
            }
        }
        self
    }

    fn evaluate(mut self, spec: &MixedNormSpec) -> f64 {
        for st in spec.stages.iter().rev() {
            self = self.reduce(st);
        }
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }
}

fn space_weights(g: &Grid3) -> [Vec<f64>; 3] {
    Axis::ALL.map(|a| vec![g.spacing(a); g.n(a)])
}

/// Mixed norm of a single field; the spec must not mention `t`.
pub fn spatial_norm(f: &ScalarField, spec: &MixedNormSpec) -> Result<NormValue> {
    if spec.covers_time() {
        return Err(DzkError::InvalidNormSpec(
            "t-stage on a single frame".into(),
        ));
    }
    let g = f.grid();
    let [wx, wy, wz] = space_weights(g);
    let [nx, ny, nz] = g.shape();
    let t = Tensor {
        shape: [1, nx, ny, nz],
        weights: [vec![1.0], wx, wy, wz],
        data: f.values().iter().map(|z| z.norm_sqr().sqrt()).collect(),
    };
    NormValue::new(t.evaluate(spec), spec.to_string(), None)
}

/// Mixed norm of a time series.
///
/// A series with more than one frame requires `t` to be covered; a single
/// frame must not use `t`.
pub fn mixed_norm(series: &FieldSeries, spec: &MixedNormSpec) -> Result<NormValue> {
    let nt = series.frames().len();
    if nt == 1 {
        return spatial_norm(series.frame(0), spec);
    }
    if !spec.covers_time() {
        return Err(DzkError::InvalidNormSpec("axis t missing".into()));
    }
    let horizon = Some(series.time().t_end());
    let wt = trapezoid_weights(nt, series.time().step());
    // t alone in the outermost stage: reduce each frame independently
    if spec.stages[0].axes == [Dim::T] {
        let inner = MixedNormSpec {
            stages: spec.stages[1..].to_vec(),
        };
        let per: Result<Vec<f64>> = series
            .frames()
            .par_iter()
            .map(|f| spatial_norm(f, &inner).map(|v| v.value))
            .collect();
        let t = Tensor {
            shape: [nt, 1, 1, 1],
            weights: [wt, vec![1.0], vec![1.0], vec![1.0]],
            data: per?,
        };
        let outer = MixedNormSpec {
            stages: vec![NormStage {
                axes: vec![Dim::T, Dim::X, Dim::Y, Dim::Z],
                p: spec.stages[0].p,
            }],
        };
        return NormValue::new(t.evaluate(&outer), spec.to_string(), horizon);
    }
    let g = series.grid();
    let [wx, wy, wz] = space_weights(g);
    let [nx, ny, nz] = g.shape();
    let data: Vec<f64> = series
        .frames()
        .iter()
        .flat_map(|f| f.values().iter().map(|z| z.norm_sqr().sqrt()))
        .collect();
    let t = Tensor {
        shape: [nt, nx, ny, nz],
        weights: [wt, wx, wy, wz],
        data,
    };
    NormValue::new(t.evaluate(spec), spec.to_string(), horizon)
}

/// Sum of `p`-th powers (or maximum) over the spatial axes of `stage`,
/// without taking the root.
fn stage_partial(mut t: Tensor, stage: &NormStage) -> Tensor {
    let mut axes: Vec<usize> = stage
        .axes
        .iter()
        .filter(|d| **d != Dim::T)
        .map(|d| d.slot())
        .collect();
    axes.sort_unstable();
    axes.reverse();
    match stage.p {
        Exponent::Infinity => {
            for s in axes {
                t.collapse(s, true);
            }
        }
        Exponent::Finite(p) => {
            t.data.par_iter_mut().for_each(|v| *v = v.powf(p));
            for s in axes {
                t.collapse(s, false);
            }
        }
    }
    t
}

/// Mixed norms of the series whose frame `j` is `frame(j)`, evaluated one
/// frame at a time so the whole series is never held in memory.
///
/// Every spec must cover `t`. Frames are requested in order, once each.
pub fn streamed_norms<F>(
    grid: &Grid3,
    time: &TimeGrid,
    mut frame: F,
    specs: &[MixedNormSpec],
) -> Result<Vec<NormValue>>
where
    F: FnMut(usize) -> Result<ScalarField>,
{
    let split: Vec<usize> = specs
        .iter()
        .map(|s| {
            s.stages
                .iter()
                .position(|st| st.axes.contains(&Dim::T))
                .ok_or_else(|| DzkError::InvalidNormSpec("axis t missing".into()))
        })
        .collect::<Result<_>>()?;
    let nt = time.len();
    let wt = trapezoid_weights(nt, time.step());
    let [wx, wy, wz] = space_weights(grid);
    let [nx, ny, nz] = grid.shape();
    let mut acc: Vec<Option<Tensor>> = specs.iter().map(|_| None).collect();
    for j in 0..nt {
        let f = frame(j)?;
        if f.grid() != grid {
            return Err(DzkError::GridMismatch("streamed frame".into()));
        }
        let abs: Vec<f64> = f.values().iter().map(|z| z.norm_sqr().sqrt()).collect();
        for ((spec, &s), slot) in specs.iter().zip(&split).zip(acc.iter_mut()) {
            let mut t = Tensor {
                shape: [1, nx, ny, nz],
                weights: [vec![1.0], wx.clone(), wy.clone(), wz.clone()],
                data: abs.clone(),
            };
            for st in spec.stages[s + 1..].iter().rev() {
                t = t.reduce(st);
            }
            let part = stage_partial(t, &spec.stages[s]);
            match slot {
                None => {
                    let mut first = part;
                    if let Exponent::Finite(_) = spec.stages[s].p {
                        first.data.iter_mut().for_each(|v| *v *= wt[j]);
                    }
                    *slot = Some(first);
                }
                Some(a) => match spec.stages[s].p {
                    Exponent::Infinity => {
                        for (x, y) in a.data.iter_mut().zip(&part.data) {
                            *x = x.max(*y);
                        }
                    }
                    Exponent::Finite(_) => {
                        for (x, y) in a.data.iter_mut().zip(&part.data) {
                            *x += wt[j] * y;
                        }
                    }
                },
            }
        }
    }
    specs
        .iter()
        .zip(&split)
        .zip(acc)
        .map(|((spec, &s), a)| {
            let mut t = a.expect("at least two frames");
            if let Exponent::Finite(p) = spec.stages[s].p {
                t.data.iter_mut().for_each(|v| *v = v.powf(1.0 / p));
            }
            for st in spec.stages[..s].iter().rev() {
                t = t.reduce(st);
            }
            debug_assert_eq!(t.data.len(), 1);
            NormValue::new(t.data[0], spec.to_string(), Some(time.t_end()))
        })
        .collect()
}

/// `( (1/V) sum (1+|xi|^2)^s |f^|^2 )^{1/2}`.
pub fn sobolev_norm_spectral(f: &SpectralField, s: f64) -> f64 {
    f.weighted_energy(|xi| (1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).powf(s))
        .sqrt()
}

/// `H^s` norm.
pub fn sobolev_norm(f: &ScalarField, s: f64) -> Result<NormValue> {
    let v = sobolev_norm_spectral(&f.to_spectral()?, s);
    NormValue::new(v, format!("H^{s}"), None)
}

fn monomial_sq(alpha: Derivative, xi: [f64; 3]) -> f64 {
    (0..3).map(|a| xi[a].powi(2 * alpha.0[a] as i32)).product()
}

/// Squared terms of the `H~2` norm: `H^2` then `D_x^{1/2} d^a`, `D_y^{1/2} d^a`
/// for each `|a| = 2`.
pub fn tilde_h2_breakdown_spectral(f: &SpectralField) -> NormBreakdown {
    let mut terms = vec![("H2".to_string(), sobolev_norm_spectral(f, 2.0))];
    for alpha in Derivative::all_of_order(2) {
        let [a, b, c] = alpha.0;
        for (axis, name) in [(0, 'x'), (1, 'y')] {
            let v = f
                .weighted_energy(|xi| xi[axis].abs() * monomial_sq(alpha, xi))
                .sqrt();
            terms.push((format!("D{name}^1/2 d({a},{b},{c})"), v));
        }
    }
    NormBreakdown { terms }
}

fn quadrature(b: &NormBreakdown) -> f64 {
    let mut s = CompensatedSum::default();
    for (_, v) in &b.terms {
        s.add(v * v);
    }
    s.value().sqrt()
}

/// `H~2` norm: `H^2` and the twelve half-derivative terms summed in quadrature.
pub fn tilde_h2_norm(f: &ScalarField) -> Result<NormValue> {
    let b = tilde_h2_breakdown_spectral(&f.to_spectral()?);
    NormValue::new(quadrature(&b), "H~2", None)
}

/// Half derivative `D^{1/2}` along `axis` composed with `d^alpha`.
fn half_then(axis: Axis, alpha: Derivative) -> Product<Derivative, Riesz> {
    Product(alpha, Riesz::new(0.5, axis).expect("positive order"))
}

fn term(
    spec: &SpectralSeries,
    m: &(impl Multiplier + ?Sized),
    norm: &MixedNormSpec,
) -> Result<f64> {
    Ok(mixed_norm(&spec.physical_with(m)?, norm)?.value)
}

fn label(alpha: Derivative) -> String {
    let [a, b, c] = alpha.0;
    format!("d({a},{b},{c})")
}

/// The Strichartz bundle `X_T` term by term.
pub fn x_t_breakdown(series: &SpectralSeries, eps: f64) -> Result<NormBreakdown> {
    let l4: MixedNormSpec = "L4:x,y,t | L2:z".parse()?;
    let l83: MixedNormSpec = "L8/3:t | L8:x,y | L2:z".parse()?;
    let mut terms = Vec::new();
    for alpha in Derivative::all_of_order(1) {
        let a = label(alpha);
        let m1 = Product(half_then(Axis::X, alpha), Bessel::new(0.25 + eps, &[Axis::Z]));
        terms.push((format!("Jz^(1/4+) Dx^1/2 {a} L4xyT L2z"), term(series, &m1, &l4)?));
        let m2 = Product(alpha, Bessel::new(0.375 + eps, &[Axis::Z]));
        terms.push((format!("Jz^(3/8+) {a} L8/3T L8xy L2z"), term(series, &m2, &l83)?));
        let m3 = Product(alpha, Bessel::new(0.5 + eps, &[Axis::Z]));
        terms.push((format!("Jz^(1/2+) {a} L4xyT L2z"), term(series, &m3, &l4)?));
    }
    let mut low = vec![Derivative([0, 0, 0])];
    low.extend(Derivative::all_of_order(1));
    for alpha in low {
        for axis in [Axis::X, Axis::Y] {
            let d = alpha.with(axis);
            terms.push((format!("{} L4xyT L2z", label(d)), term(series, &d, &l4)?));
        }
    }
    Ok(NormBreakdown { terms })
}

/// `X_T` norm, with the `+` exponents instantiated as `+eps`.
pub fn x_t_norm(series: &FieldSeries, eps: f64) -> Result<NormValue> {
    let b = x_t_breakdown(&series.to_spectral()?, eps)?;
    NormValue::new(b.total(), "X_T", Some(series.time().t_end()))
}

/// Terms of the fixed-point norm `|||E|||`.
pub fn contraction_breakdown(series: &SpectralSeries, eps: f64) -> Result<NormBreakdown> {
    let frames = series.frames();
    let sup_t = |w: &(dyn Fn([f64; 3]) -> f64 + Sync)| -> f64 {
        frames
            .par_iter()
            .map(|f| f.weighted_energy(w).sqrt())
            .reduce(|| 0.0, f64::max)
    };
    let mut terms = vec![(
        "LinfT H2".to_string(),
        sup_t(&|xi: [f64; 3]| (1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).powi(2)),
    )];
    for alpha in Derivative::all_of_order(2) {
        for (axis, name) in [(0usize, 'x'), (1, 'y')] {
            let v = sup_t(&|xi: [f64; 3]| xi[axis].abs() * monomial_sq(alpha, xi));
            terms.push((format!("D{name}^1/2 {} LinfT L2", label(alpha)), v));
        }
    }
    terms.extend(x_t_breakdown(series, eps)?.terms);
    let one = |_: [f64; 3]| num_complex::Complex64::new(1.0, 0.0);
    let plain = series.physical_with(&one)?;
    for s in ["L2:x | Linf:y,z,t", "L2:y | Linf:x,z,t"] {
        terms.push((s.to_string(), mixed_norm(&plain, &s.parse()?)?.value));
    }
    let sx: MixedNormSpec = "Linf:x | L2:y,z,t".parse()?;
    let sy: MixedNormSpec = "Linf:y | L2:x,z,t".parse()?;
    for alpha in Derivative::all_of_order(2) {
        terms.push((
            format!("{} Linfx L2yzT", label(alpha.with(Axis::X))),
            term(series, &alpha.with(Axis::X), &sx)?,
        ));
        terms.push((
            format!("{} Linfy L2xzT", label(alpha.with(Axis::Y))),
            term(series, &alpha.with(Axis::Y), &sy)?,
        ));
    }
    Ok(NormBreakdown { terms })
}

/// `|||E|||` over the series horizon.
pub fn contraction_norm(series: &FieldSeries, eps: f64) -> Result<NormValue> {
    let b = contraction_breakdown(&series.to_spectral()?, eps)?;
    NormValue::new(b.total(), "|||.|||", Some(series.time().t_end()))
}

/// Applies a multiplier to every frame of a spectral series.
pub fn map_spectral<M: Multiplier + ?Sized>(s: &SpectralSeries, m: &M) -> Result<SpectralSeries> {
    let frames: Result<Vec<SpectralField>> = s.frames().par_iter().map(|f| apply_multiplier(f, m)).collect();
    SpectralSeries::new(s.time().clone(), frames?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use crate::series::TimeGrid;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_series(g: &Grid3, nt: usize, seed: u64) -> FieldSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let time = TimeGrid::new(0.7, nt).unwrap();
        let frames = (0..nt)
            .map(|_| {
                let v = (0..g.size())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                ScalarField::new(g, v).unwrap()
            })
            .collect();
        FieldSeries::new(time, frames).unwrap()
    }

    #[test]
    fn spec_parse_and_display() {
        let s: MixedNormSpec = "Linf:x | L2:y,z,t".parse().unwrap();
        assert_eq!(s.to_string(), "Linf:x | L2:y,z,t");
        let s: MixedNormSpec = "L8/3:t | L8:x,y | L2:z".parse().unwrap();
        assert_eq!(s.stages()[0].p, Exponent::Finite(8.0 / 3.0));
        assert_eq!(s.to_string(), "L8/3:t | L8:x,y | L2:z");
        assert_eq!(s.swap_xy().to_string(), "L8/3:t | L8:y,x | L2:z");
        assert!("L2:x | L2:x,y,z".parse::<MixedNormSpec>().is_err());
        assert!("L2:x,y".parse::<MixedNormSpec>().is_err());
        assert!("L0.5:x,y,z".parse::<MixedNormSpec>().is_err());
        assert!("Q2:x,y,z".parse::<MixedNormSpec>().is_err());
        assert!("L2:x,y,w".parse::<MixedNormSpec>().is_err());
    }

    #[test]
    fn separable_product() {
        let g = Grid3::new(16, 8, 8, 4.0, 3.0, 2.0).unwrap();
        let time = TimeGrid::new(1.0, 5).unwrap();
        let a = |x: f64| (-x * x).exp();
        let b = |y: f64, z: f64, t: f64| 1.0 + 0.5 * (y + t).sin() * z.cos();
        let s = FieldSeries::from_fn(time.clone(), |t| {
            ScalarField::from_fn(&g, |x, y, z| Complex64::new(a(x) * b(y, z, t), 0.0))
        })
        .unwrap();
        let v = mixed_norm(&s, &"L2:x | Linf:y,z,t".parse().unwrap()).unwrap().value;
        let hx = g.spacing(Axis::X);
        let la = g.coordinates(Axis::X).iter().map(|&x| a(x).powi(2) * hx).sum::<f64>().sqrt();
        let mut mb: f64 = 0.0;
        for &t in time.nodes() {
            for &y in &g.coordinates(Axis::Y) {
                for &z in &g.coordinates(Axis::Z) {
                    mb = mb.max(b(y, z, t).abs());
                }
            }
        }
        assert!((v - la * mb).abs() < 1e-10 * v);
    }

    #[test]
    fn all_two_is_plain_l2() {
        let g = Grid3::new(8, 6, 4, 2.0, 3.0, 1.0).unwrap();
        let s = random_series(&g, 5, 1);
        let a = mixed_norm(&s, &"L2:x | L2:t,z | L2:y".parse().unwrap()).unwrap().value;
        let b = mixed_norm(&s, &"L2:x,y,z,t".parse().unwrap()).unwrap().value;
        let w = trapezoid_weights(5, s.time().step());
        let direct: f64 = s
            .frames()
            .iter()
            .zip(&w)
            .map(|(f, w)| w * f.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((a - b).abs() < 1e-12 * b);
        assert!((a - direct).abs() < 1e-12 * b);
    }

    #[test]
    fn constant_on_box() {
        let g = Grid3::new(8, 8, 4, 2.0, 3.0, 5.0).unwrap();
        let time = TimeGrid::new(0.5, 9).unwrap();
        let s = FieldSeries::new(time, vec![ScalarField::constant(&g, Complex64::new(1.0, 0.0)); 9]).unwrap();
        let v = mixed_norm(&s, &"L4:x,y,t | L2:z".parse().unwrap()).unwrap().value;
        let exact = (2.0f64 * 3.0 * 0.5).powf(0.25) * 5f64.sqrt();
        assert!((v - exact).abs() < 1e-12);
        // the streaming path for an outer t-stage agrees with the dense path
        let a = mixed_norm(&s, &"L8/3:t | L8:x,y | L2:z".parse().unwrap()).unwrap().value;
        let exact = 0.5f64.powf(3.0 / 8.0) * 6f64.powf(1.0 / 8.0) * 5f64.sqrt();
        assert!((a - exact).abs() < 1e-12);
    }

    #[test]
    fn streaming_and_dense_agree() {
        let g = Grid3::new(8, 8, 4, 2.0, 3.0, 5.0).unwrap();
        let s = random_series(&g, 7, 4);
        let spec: MixedNormSpec = "L3:t | Linf:x | L2:y,z".parse().unwrap();
        let streamed = mixed_norm(&s, &spec).unwrap().value;
        let [nx, ny, nz] = g.shape();
        let tensor = Tensor {
            shape: [7, nx, ny, nz],
            weights: [
                trapezoid_weights(7, s.time().step()),
                vec![g.spacing(Axis::X); nx],
                vec![g.spacing(Axis::Y); ny],
                vec![g.spacing(Axis::Z); nz],
            ],
            data: s.frames().iter().flat_map(|f| f.values().iter().map(|z| z.norm_sqr().sqrt())).collect(),
        };
        let dense = tensor.evaluate(&spec);
        assert!((streamed - dense).abs() < 1e-12 * dense);
    }

    #[test]
    fn time_axis_rules() {
        let g = Grid3::cube(4, 1.0).unwrap();
        let s = random_series(&g, 3, 2);
        assert!(mixed_norm(&s, &"L2:x,y,z".parse().unwrap()).is_err());
        let one = s.truncated(2).unwrap();
        assert!(mixed_norm(&one, &"L2:x,y,z,t".parse().unwrap()).is_ok());
        let f = s.frame(0);
        assert!(spatial_norm(f, &"L2:x,y,z,t".parse().unwrap()).is_err());
        assert!((spatial_norm(f, &"L2:x,y,z".parse().unwrap()).unwrap().value - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn holder_ordering_on_probability_box() {
        // unit box volume and unit horizon make the measure a probability
        let g = Grid3::new(8, 8, 4, 1.0, 1.0, 1.0).unwrap();
        let s = FieldSeries::new(TimeGrid::new(1.0, 5).unwrap(), random_series(&g, 5, 7).frames().to_vec()).unwrap();
        let mut last = 0.0;
        for p in ["1", "2", "8/3", "4", "8", "inf"] {
            let v = mixed_norm(&s, &format!("L2:t | L{p}:x,y | L2:z").parse().unwrap()).unwrap().value;
            assert!(v >= last * (1.0 - 1e-12), "p={p}");
            last = v;
        }
    }

    #[test]
    fn sobolev_basics() {
        let g = Grid3::cube(16, 2.0 * PI).unwrap();
        let s = random_series(&g, 2, 3);
        let f = s.frame(0);
        assert!((sobolev_norm(f, 0.0).unwrap().value - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let wave = ScalarField::from_fn(&g, |x, y, z| Complex64::new(0.0, 2.0 * x - y + 3.0 * z).exp()).unwrap();
        let k2 = 4.0 + 1.0 + 9.0;
        for s in [0.5, 1.0, 2.0] {
            let v = sobolev_norm(&wave, s).unwrap().value;
            let e = (1.0 + k2 as f64).powf(s / 2.0) * wave.l2_norm();
            assert!((v - e).abs() < 1e-12 * e);
        }
    }

    #[test]
    fn tilde_h2_plane_wave() {
        let g = Grid3::cube(16, 2.0 * PI).unwrap();
        let (a, b, c) = (2.0f64, -1.0f64, 3.0f64);
        let wave = ScalarField::from_fn(&g, |x, y, z| Complex64::new(0.0, a * x + b * y + c * z).exp()).unwrap();
        let l2 = wave.l2_norm();
        // hand evaluation: |xi^alpha|^2 over the six |alpha|=2 monomials
        let k = [a, b, c];
        let mut mono = 0.0;
        for i in 0..3 {
            for j in i..3 {
                mono += (k[i] * k[j]).powi(2);
            }
        }
        let h2 = (1.0 + a * a + b * b + c * c).powi(2);
        let exact = (h2 + (a.abs() + b.abs()) * mono).sqrt() * l2;
        let v = tilde_h2_norm(&wave).unwrap().value;
        assert!((v - exact).abs() < 1e-12 * exact, "{v} vs {exact}");
        assert_eq!(tilde_h2_norm(&ScalarField::zeros(&g)).unwrap().value, 0.0);
        let r = random_series(&g, 2, 9);
        let f = r.frame(1);
        assert!(tilde_h2_norm(f).unwrap().value >= sobolev_norm(f, 2.0).unwrap().value);
    }

    #[test]
    fn x_t_plane_wave_closed_form() {
        let g = Grid3::new(8, 8, 8, 2.0 * PI, 2.0 * PI, 2.0 * PI).unwrap();
        let (a, b, c) = (1.0f64, 2.0f64, -1.0f64);
        let time = TimeGrid::new(0.5, 9).unwrap();
        let wave = ScalarField::from_fn(&g, |x, y, z| Complex64::new(0.0, a * x + b * y + c * z).exp()).unwrap();
        let s = FieldSeries::new(time, vec![wave; 9]).unwrap();
        let eps = 0.05;
        // |f| = 1: L4_{xyT} L2_z of m*f is |m| (4pi^2 T)^{1/4} (2pi)^{1/2}
        let big_t: f64 = 0.5;
        let l4 = (4.0 * PI * PI * big_t).powf(0.25) * (2.0 * PI).sqrt();
        let l83 = big_t.powf(3.0 / 8.0) * (4.0 * PI * PI).powf(1.0 / 8.0) * (2.0 * PI).sqrt();
        let k = [a, b, c];
        let jz = |s: f64| (1.0 + c * c).powf(s / 2.0);
        let mut exact = 0.0;
        for i in 0..3 {
            exact += jz(0.25 + eps) * a.abs().sqrt() * k[i].abs() * l4;
            exact += jz(0.375 + eps) * k[i].abs() * l83;
            exact += jz(0.5 + eps) * k[i].abs() * l4;
        }
        for low in [1.0, a.abs(), b.abs(), c.abs()] {
            exact += low * (a.abs() + b.abs()) * l4;
        }
        let v = x_t_norm(&s, eps).unwrap().value;
        assert!((v - exact).abs() < 1e-10 * exact, "{v} vs {exact}");
        let z = FieldSeries::zeros(&g, TimeGrid::new(0.5, 9).unwrap());
        assert_eq!(x_t_norm(&z, eps).unwrap().value, 0.0);
        assert_eq!(contraction_norm(&z, eps).unwrap().value, 0.0);
    }

    #[test]
    fn contraction_dominates_pieces_and_is_monotone_in_t() {
        let g = Grid3::cube(8, 4.0).unwrap();
        let s = random_series(&g, 9, 5);
        let c = contraction_norm(&s, 0.05).unwrap().value;
        let x = x_t_norm(&s, 0.05).unwrap().value;
        let h2 = s.frames().iter().map(|f| sobolev_norm(f, 2.0).unwrap().value).fold(0.0, f64::max);
        assert!(c >= x && c >= h2);
        let short = x_t_norm(&s.truncated(5).unwrap(), 0.05).unwrap().value;
        assert!(short <= x);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn homogeneity(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let g = Grid3::new(8, 4, 4, 2.0, 1.0, 1.5).unwrap();
            let s = random_series(&g, 3, seed);
            let c = Complex64::new(re, im);
            for spec in ["Linf:x | L2:y,z,t", "L8/3:t | L8:x,y | L2:z", "L1:z | L3:x,y,t"] {
                let spec: MixedNormSpec = spec.parse().unwrap();
                let a = mixed_norm(&s.scale(c), &spec).unwrap().value;
                let b = c.norm() * mixed_norm(&s, &spec).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
            }
        }
    }

    #[test]
    fn triangle_inequality() {
        let g = Grid3::new(8, 4, 4, 2.0, 1.0, 1.5).unwrap();
        let specs: Vec<MixedNormSpec> = ["Linf:x | L2:y,z,t", "L8/3:t | L8:x,y | L2:z", "L2:x | Linf:y,z,t"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        for i in 0..100 {
            let a = random_series(&g, 3, 2 * i);
            let b = random_series(&g, 3, 2 * i + 1).scale(Complex64::new(0.3, 2.0));
            let sum = FieldSeries::new(
                a.time().clone(),
                a.frames().iter().zip(b.frames()).map(|(x, y)| x + y).collect(),
            )
            .unwrap();
            for spec in &specs {
                let l = mixed_norm(&sum, spec).unwrap().value;
                let r = mixed_norm(&a, spec).unwrap().value + mixed_norm(&b, spec).unwrap().value;
                assert!(l <= r * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn streaming_matches_in_memory() {
        let g = Grid3::new(8, 6, 4, 2.0, 3.0, 1.5).unwrap();
        let s = random_series(&g, 7, 3);
        let specs: Vec<MixedNormSpec> = [
            "L2:x | Linf:y,z,t",
            "Linf:x | L2:y,z,t",
            "L4:x,y,t | L2:z",
            "L8/3:t | L8:x,y | L2:z",
            "Linf:t | L2:x,y,z",
            "L1:x | L2:y,z,t",
        ]
        .iter()
        .map(|x| x.parse().unwrap())
        .collect();
        let streamed = streamed_norms(&g, s.time(), |j| Ok(s.frame(j).clone()), &specs).unwrap();
        for (spec, v) in specs.iter().zip(&streamed) {
            let w = mixed_norm(&s, spec).unwrap().value;
            assert!((v.value - w).abs() < 1e-12 * w, "{spec}: {} vs {w}", v.value);
        }
    }
}
