//! Ratio and slope checks for the linear group and the wave propagators.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::{wavevector, ScalarField, SpectralField};
use crate::grid::{Axis, Grid3};
use crate::lab::family::InputFamily;
use crate::lab::report::{CaseId, EstimateCase, RatioReport, RatioRow, SlopeFit};
use crate::multiplier::{apply_multiplier, Multiplier, Product, SymbolTable};
use crate::norms::{sobolev_norm_spectral, spatial_norm, streamed_norms, Exponent, MixedNormSpec};
use crate::propagators::{Derivative, PerpSqrtLaplacian, Riesz, Schrodinger, WaveCosine, WaveSine};
use crate::series::TimeGrid;

/// Norms of `t -> E(t) g` on the nodes of `time`, streamed frame by frame.
fn group_norms(g: &SpectralField, time: &TimeGrid, specs: &[MixedNormSpec]) -> Result<Vec<f64>> {
    let nodes = time.nodes();
    let v = streamed_norms(
        g.grid(),
        time,
        |j| apply_multiplier(g, &Schrodinger(nodes[j]))?.from_spectral(),
        specs,
    )?;
    Ok(v.into_iter().map(|n| n.value).collect())
}

/// Norms of `t -> m(t) g` for a time-dependent real symbol family.
fn propagated_norms<M, F>(g: &SpectralField, time: &TimeGrid, m: F, spec: &MixedNormSpec) -> Result<f64>
where
    M: Multiplier,
    F: Fn(f64) -> M,
{
    let nodes = time.nodes();
    let v = streamed_norms(
        g.grid(),
        time,
        |j| apply_multiplier(g, &m(nodes[j]))?.from_spectral(),
        std::slice::from_ref(spec),
    )?;
    Ok(v[0].value)
}

/// Spec with x and y exchanged when the distinguished direction is y.
fn oriented(spec: &str, direction: Axis) -> Result<MixedNormSpec> {
    let s: MixedNormSpec = spec.parse()?;
    match direction {
        Axis::X => Ok(s),
        Axis::Y => Ok(s.swap_xy()),
        Axis::Z => Err(DzkError::InvalidParameter("direction must be x or y".into())),
    }
}

/// Member `i` of `family`, with x and y exchanged when `direction` is y.
fn oriented_member(family: &InputFamily, grid: &Grid3, i: usize, direction: Axis) -> Result<SpectralField> {
    match direction {
        Axis::X => family.spectral_member(grid, i),
        _ => family.member(grid, i)?.swap_xy()?.to_spectral(),
    }
}

fn direction_name(direction: Axis) -> &'static str {
    if direction == Axis::Y {
        "y"
    } else {
        "x"
    }
}

/// Deviations from the exact identities of the linear propagators for one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDefects {
    /// `| ||E(t)f|| - ||f|| | / ||f||`.
    pub isometry: f64,
    /// `||E(t)E(s)f - E(t+s)f|| / ||f||`.
    pub group_law: f64,
    /// `| ||N'(t)f||^2 + ||(-Δ⊥)^{1/2}N(t)f||^2 - ||f||^2 | / ||f||^2`.
    pub energy: f64,
    /// `||N(t)f|| / (|t| ||f||)`.
    pub sine_bound: f64,
    /// `||N'(t)f|| / ||f||`.
    pub cosine_bound: f64,
    /// `||(-Δ⊥)^{1/2}N(t)f|| / ||f||`.
    pub gradient_bound: f64,
}

impl IdentityDefects {
    /// Largest deviation, counting bound ratios only above 1.
    pub fn worst(&self) -> f64 {
        [
            self.isometry,
            self.group_law,
            self.energy,
            self.sine_bound - 1.0,
            self.cosine_bound - 1.0,
            self.gradient_bound - 1.0,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn identity_defects(f: &SpectralField, t: f64, s: f64) -> Result<IdentityDefects> {
    let n = f.l2_norm();
    if n == 0.0 || t == 0.0 {
        return Err(DzkError::InvalidParameter("zero field or zero time".into()));
    }
    let et = apply_multiplier(f, &Schrodinger(t))?;
    let ets = apply_multiplier(&apply_multiplier(f, &Schrodinger(s))?, &Schrodinger(t))?;
    let mut diff = apply_multiplier(f, &Schrodinger(t + s))?;
    diff.axpy(Complex64::new(-1.0, 0.0), &ets);
    let cos = apply_multiplier(f, &WaveCosine(t))?.l2_norm();
    let sin = apply_multiplier(f, &WaveSine(t))?;
    let grad = apply_multiplier(&sin, &PerpSqrtLaplacian)?.l2_norm();
    Ok(IdentityDefects {
        isometry: (et.l2_norm() - n).abs() / n,
        group_law: diff.l2_norm() / n,
        energy: (cos * cos + grad * grad - n * n).abs() / (n * n),
        sine_bound: sin.l2_norm() / (t.abs() * n),
        cosine_bound: cos / n,
        gradient_bound: grad / n,
    })
}

/// `||E(t)f|| / ||f||` over the family; zero members are flagged degenerate.
///
/// The report also carries the worst identity defect over the family
/// (metric `max_defect`).
pub fn check_unitarity(family: &InputFamily, grid: &Grid3, t: f64) -> Result<RatioReport> {
    let rows: Vec<(RatioRow, f64)> = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let f = family.spectral_member(grid, i)?;
            let lhs = apply_multiplier(&f, &Schrodinger(t))?.l2_norm();
            let rhs = f.l2_norm();
            let worst = if rhs > 0.0 {
                identity_defects(&f, t, 0.5 * t)?.worst()
            } else {
                0.0
            };
            Ok((RatioRow::new(family.input_id(i), lhs, rhs), worst))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let case = EstimateCase::new(CaseId::Unitarity).with("t", t);
    let mut rep = RatioReport::new(case, family.to_string(), rows.into_iter().map(|r| r.0).collect())?;
    rep.metrics.insert("max_defect".into(), worst);
    Ok(rep)
}

/// Guard against mass wrapping around the periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMonitor {
    pub axes: Vec<Axis>,
    /// Width of the boundary band as a fraction of the box length.
    pub fraction: f64,
    /// Largest tolerated share of `||u||^2` inside the band.
    pub threshold: f64,
}

impl Default for BoundaryMonitor {
    fn default() -> Self {
        Self {
            axes: vec![Axis::X, Axis::Y],
            fraction: 0.05,
            threshold: 1e-2,
        }
    }
}

impl BoundaryMonitor {
    pub fn check(&self, u: &ScalarField, t: f64) -> Result<f64> {
        let mass = u.boundary_mass_fraction(&self.axes, self.fraction);
        if mass > self.threshold {
            return Err(DzkError::BoundaryContamination {
                mass,
                limit: self.threshold,
                t,
            });
        }
        Ok(mass)
    }
}

/// `t^{-(1/p' - 1/p)}` decay of `||E(t)f||_{L^p_{xy} L^2_z}`: fit of log2 norm
/// against log2 t for the first member of `family`.
///
/// Metrics: `expected_slope`, `constant` (largest
/// `t^{1/p'-1/p} ||E(t)f|| / ||f||_{L^{p'}_{xy}L^2_z}`), `boundary_mass`.
pub fn check_decay(
    p: Exponent,
    family: &InputFamily,
    grid: &Grid3,
    times: &[f64],
    monitor: &BoundaryMonitor,
) -> Result<SlopeFit> {
    let pv = p.value();
    if !(pv >= 2.0) {
        return Err(DzkError::InvalidParameter(format!("decay needs p >= 2, got {pv}")));
    }
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(DzkError::InvalidParameter("decay times must be positive".into()));
    }
    let dual = Exponent::finite(1.0 / (1.0 - p.reciprocal()))?;
    let power = 1.0 - 2.0 * p.reciprocal();
    let lhs_spec: MixedNormSpec = format!("L{p}:x,y | L2:z").parse()?;
    let rhs_spec: MixedNormSpec = format!("L{dual}:x,y | L2:z").parse()?;
    let f = family.spectral_member(grid, 0)?;
    let rhs = spatial_norm(&f.from_spectral()?, &rhs_spec)?.value;
    let mut abs = Vec::new();
    let mut ord = Vec::new();
    let mut constant: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    for &t in times {
        let u = apply_multiplier(&f, &Schrodinger(t))?.from_spectral()?;
        boundary = boundary.max(monitor.check(&u, t)?);
        let lhs = spatial_norm(&u, &lhs_spec)?.value;
        constant = constant.max(lhs * t.powf(power) / rhs);
        abs.push(t.log2());
        ord.push(lhs.log2());
    }
    let case = EstimateCase::new(CaseId::Decay).with("p", p.to_string());
    let mut fit = SlopeFit::new(case, format!("log2 ||E(t)f||_{{{lhs_spec}}} vs log2 t"), abs, ord)?;
    fit.metrics.insert("expected_slope".into(), -power);
    fit.metrics.insert("constant".into(), constant);
    fit.metrics.insert("boundary_mass".into(), boundary);
    Ok(fit)
}

/// The `q` paired with `p` by `2/q = 1 - 2/p`, for `p` in `[2, inf)`.
pub fn admissible_q(p: Exponent) -> Result<Exponent> {
    match p {
        Exponent::Finite(p) if p >= 2.0 => {
            if p == 2.0 {
                Ok(Exponent::Infinity)
            } else {
                Exponent::finite(2.0 * p / (p - 2.0))
            }
        }
        _ => Err(DzkError::InvalidParameter(format!(
            "p = {p} outside [2, inf)"
        ))),
    }
}

pub fn check_admissible(q: Exponent, p: Exponent) -> Result<()> {
    let expect = admissible_q(p)?;
    if (expect.reciprocal() - q.reciprocal()).abs() > 1e-12 {
        return Err(DzkError::InvalidParameter(format!(
            "(q, p) = ({q}, {p}) is not admissible: 2/q must equal 1 - 2/p"
        )));
    }
    Ok(())
}

fn strichartz_spec(q: Exponent, p: Exponent) -> Result<MixedNormSpec> {
    format!("L{q}:t | L{p}:x,y | L2:z").parse()
}

/// `||E(t)f||_{L^q_T L^p_{xy} L^2_z} / ||f||_{L^2}` for several admissible
/// pairs at once, one report per pair.
pub fn strichartz_ratios(
    pairs: &[(Exponent, Exponent)],
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<Vec<RatioReport>> {
    strichartz_ratios_with(pairs, family, grid, |_| Ok(time.clone()))
}

/// As [`strichartz_ratios`] with a time grid chosen per member.
fn strichartz_ratios_with<F>(
    pairs: &[(Exponent, Exponent)],
    family: &InputFamily,
    grid: &Grid3,
    time_for: F,
) -> Result<Vec<RatioReport>>
where
    F: Fn(usize) -> Result<TimeGrid> + Sync,
{
    let specs: Vec<MixedNormSpec> = pairs
        .iter()
        .map(|&(q, p)| {
            check_admissible(q, p)?;
            strichartz_spec(q, p)
        })
        .collect::<Result<_>>()?;
    let per_member: Vec<(Vec<f64>, f64, f64)> = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let f = family.spectral_member(grid, i)?;
            let time = time_for(i)?;
            Ok((group_norms(&f, &time, &specs)?, f.l2_norm(), time.t_end()))
        })
        .collect::<Result<_>>()?;
    pairs
        .iter()
        .enumerate()
        .map(|(k, &(q, p))| {
            let rows = per_member
                .iter()
                .enumerate()
                .map(|(i, (lhs, rhs, t))| RatioRow::new(family.input_id(i), lhs[k], *rhs).with("T", *t))
                .collect();
            let case = EstimateCase::new(CaseId::Strichartz)
                .with("q", q.to_string())
                .with("p", p.to_string())
                .with("T", per_member.first().map_or(0.0, |m| m.2));
            RatioReport::new(case, family.to_string(), rows)
        })
        .collect()
}

pub fn check_strichartz(
    q: Exponent,
    p: Exponent,
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<RatioReport> {
    Ok(strichartz_ratios(&[(q, p)], family, grid, time)?.remove(0))
}

/// Log2 Strichartz ratio against log2 lambda over a parabolic rescaling
/// family, one fit per pair.
///
/// Member `lambda` is evolved on `[0, T / lambda^2]` with the node count of
/// `time`, the image of `[0, T]` under the scaling, so an exact implementation
/// gives slope 0.
pub fn strichartz_rescaling(
    pairs: &[(Exponent, Exponent)],
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<Vec<SlopeFit>> {
    let reports = strichartz_ratios_with(pairs, family, grid, |i| {
        let l = family.scales[i];
        TimeGrid::new(time.t_end() / (l * l), time.len())
    })?;
    let abs: Vec<f64> = family.scales.iter().map(|l| l.log2()).collect();
    reports
        .into_iter()
        .map(|r| {
            let ord = r
                .rows
                .iter()
                .map(|row| {
                    row.ratio()
                        .map(f64::log2)
                        .ok_or_else(|| DzkError::InvalidParameter("degenerate member".into()))
                })
                .collect::<Result<Vec<f64>>>()?;
            let case = r.case.clone().with("family", "rescaled");
            let mut fit = SlopeFit::new(case, "log2 ratio vs log2 lambda", abs.clone(), ord)?;
            fit.metrics.insert("expected_slope".into(), 0.0);
            Ok(fit)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingVariant {
    Hom,
    InhomL2,
    InhomLinf,
}

impl SmoothingVariant {
    pub fn case_id(self) -> CaseId {
        match self {
            SmoothingVariant::Hom => CaseId::SmoothingHom,
            SmoothingVariant::InhomL2 => CaseId::SmoothingInhomL2,
            SmoothingVariant::InhomLinf => CaseId::SmoothingInhomLinf,
        }
    }
}

/// `int_0^t e^{i mu s} ds = t e^{i mu t/2} sinc(mu t/2)`.
fn phase_integral(mu: f64, t: f64) -> Complex64 {
    let h = 0.5 * mu * t;
    let s = if h.abs() < 1e-8 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    Complex64::from_polar(t * s, h)
}

/// Duhamel term `int_0^t E(t - s) G(s) ds` for `G(s) = a cos(nu s) + b sin(nu s)`,
/// integrated exactly mode by mode.
pub fn periodic_forcing_duhamel(
    a: &SpectralField,
    b: &SpectralField,
    nu: f64,
    t: f64,
) -> Result<SpectralField> {
    if a.grid() != b.grid() {
        return Err(DzkError::GridMismatch("forcing components".into()));
    }
    let g = a.grid();
    let modes: Vec<Complex64> = a
        .modes()
        .par_iter()
        .zip(b.modes())
        .enumerate()
        .map(|(idx, (ah, bh))| {
            let xi = wavevector(g, idx);
            let w = xi[0] * xi[0] + xi[1] * xi[1] + xi[2];
            let ep = phase_integral(w + nu, t);
            let em = phase_integral(w - nu, t);
            let c = 0.5 * (ep + em);
            let s = (ep - em) / Complex64::new(0.0, 2.0);
            Complex64::from_polar(1.0, -w * t) * (ah * c + bh * s)
        })
        .collect();
    SpectralField::new(g, modes)
}

/// Smoothing ratios over `family` on `[0, T]`.
///
/// * `Hom`: `||D^{1/2} E(t)f||_{L^inf_x L^2_{yzT}} / ||f||`.
/// * `InhomL2`: `||D^{1/2} int E(t-s)G||_{L^inf_T L^2} / ||G||_{L^1_x L^2_{yzT}}`.
/// * `InhomLinf`: `||d int E(t-s)G||_{L^inf_x L^2_{yzT}} / ||G||_{L^1_x L^2_{yzT}}`.
///
/// The forcing for member `i` is `a cos(2 pi t/T) + b sin(2 pi t/T)` with
/// `a, b` members `i` and `i+1` (cyclically). With `direction = y` the data are
/// transposed and every x in the estimate becomes y.
pub fn check_smoothing(
    variant: SmoothingVariant,
    direction: Axis,
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<RatioReport> {
    let inner = oriented("Linf:x | L2:y,z,t", direction)?;
    let forcing_norm = oriented("L1:x | L2:y,z,t", direction)?;
    let energy: MixedNormSpec = "Linf:t | L2:x,y,z".parse()?;
    let half = Riesz::new(0.5, direction)?;
    let d = Derivative([0, 0, 0]).with(direction);
    let nu = 2.0 * std::f64::consts::PI / time.t_end();
    let nodes = time.nodes();
    let n = family.len();
    let rows: Vec<RatioRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = oriented_member(family, grid, i, direction)?;
            let row = match variant {
                SmoothingVariant::Hom => {
                    let g = apply_multiplier(&a, &half)?;
                    let lhs = group_norms(&g, time, std::slice::from_ref(&inner))?[0];
                    RatioRow::new(family.input_id(i), lhs, a.l2_norm())
                }
                _ => {
                    let b = oriented_member(family, grid, (i + 1) % n, direction)?;
                    let rhs = streamed_norms(
                        grid,
                        time,
                        |j| {
                            let (c, s) = ((nu * nodes[j]).cos(), (nu * nodes[j]).sin());
                            let mut g = a.scale(Complex64::new(c, 0.0));
                            g.axpy(Complex64::new(s, 0.0), &b);
                            g.from_spectral()
                        },
                        std::slice::from_ref(&forcing_norm),
                    )?[0]
                        .value;
                    let table = match variant {
                        SmoothingVariant::InhomL2 => SymbolTable::new(grid, &half)?,
                        _ => SymbolTable::new(grid, &d)?,
                    };
                    let spec = if variant == SmoothingVariant::InhomL2 {
                        &energy
                    } else {
                        &inner
                    };
                    let lhs = streamed_norms(
                        grid,
                        time,
                        |j| table.apply(&periodic_forcing_duhamel(&a, &b, nu, nodes[j])?)?.from_spectral(),
                        std::slice::from_ref(spec),
                    )?[0]
                        .value;
                    RatioRow::new(family.input_id(i), lhs, rhs)
                }
            };
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let case = EstimateCase::new(variant.case_id())
        .with("direction", direction_name(direction))
        .with("T", time.t_end());
    RatioReport::new(case, family.to_string(), rows)
}

/// `||E(t)f||_{L^2_x L^inf_{yzT}} / ||f||_{H^s}` for each `s` in `s_list`.
pub fn check_maximal(
    s_list: &[f64],
    direction: Axis,
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<RatioReport> {
    let spec = oriented("L2:x | Linf:y,z,t", direction)?;
    let per: Vec<Vec<RatioRow>> = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let f = oriented_member(family, grid, i, direction)?;
            let lhs = group_norms(&f, time, std::slice::from_ref(&spec))?[0];
            Ok(s_list
                .iter()
                .map(|&s| {
                    RatioRow::new(family.input_id(i), lhs, sobolev_norm_spectral(&f, s)).with("s", s)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut case = EstimateCase::new(CaseId::Maximal)
        .with("direction", direction_name(direction))
        .with("T", time.t_end());
    if let [s] = s_list {
        case = case.with("s", *s);
    }
    RatioReport::new(case, family.to_string(), per.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveVariant {
    Cos,
    SinH2,
    SinH1,
}

impl WaveVariant {
    pub fn case_id(self) -> CaseId {
        match self {
            WaveVariant::Cos => CaseId::WaveMaximalCos,
            WaveVariant::SinH2 => CaseId::WaveMaximalSin2,
            WaveVariant::SinH1 => CaseId::WaveMaximalSin1,
        }
    }
}

fn wave_lhs(variant: WaveVariant, f: &SpectralField, time: &TimeGrid, spec: &MixedNormSpec) -> Result<f64> {
    match variant {
        WaveVariant::Cos => propagated_norms(f, time, WaveCosine, spec),
        WaveVariant::SinH2 => propagated_norms(f, time, |t| Product(WaveSine(t), PerpSqrtLaplacian), spec),
        WaveVariant::SinH1 => propagated_norms(f, time, WaveSine, spec),
    }
}

/// Wave maximal ratios `LHS / RHS` over real members of `family`:
///
/// * `Cos`: `||N'(t)n||_{L^2_x L^inf_{yzT}} / ||n||_{H^2}`.
/// * `SinH2`: `||(-Δ⊥)^{1/2} N(t)n||_{L^2_x L^inf_{yzT}} / (T ||n||_{H^2})`.
/// * `SinH1`: `||N(t)n||_{L^2_x L^inf_{yzT}} / (T (||n||_{H^1} + ||d_z n||_{H^1}))`.
///
/// Metric `doubling` is the largest `LHS(2T) / LHS(T)` over the family.
pub fn check_wave_maximal(
    variant: WaveVariant,
    family: &InputFamily,
    grid: &Grid3,
    time: &TimeGrid,
) -> Result<RatioReport> {
    let spec: MixedNormSpec = "L2:x | Linf:y,z,t".parse()?;
    let t_end = time.t_end();
    let long = TimeGrid::new(2.0 * t_end, 2 * time.len() - 1)?;
    let dz = Derivative([0, 0, 1]);
    let per: Vec<(RatioRow, f64)> = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let f = family.spectral_member(grid, i)?;
            let lhs = wave_lhs(variant, &f, time, &spec)?;
            let lhs2 = wave_lhs(variant, &f, &long, &spec)?;
            let rhs = match variant {
                WaveVariant::Cos => sobolev_norm_spectral(&f, 2.0),
                WaveVariant::SinH2 => t_end * sobolev_norm_spectral(&f, 2.0),
                WaveVariant::SinH1 => {
                    let fz = apply_multiplier(&f, &dz)?;
                    t_end * (sobolev_norm_spectral(&f, 1.0) + sobolev_norm_spectral(&fz, 1.0))
                }
            };
            let doubling = if lhs > 0.0 { lhs2 / lhs } else { 0.0 };
            Ok((RatioRow::new(family.input_id(i), lhs, rhs), doubling))
        })
        .collect::<Result<_>>()?;
    let doubling = per.iter().map(|r| r.1).fold(0.0, f64::max);
    let case = EstimateCase::new(variant.case_id()).with("T", t_end);
    let mut rep = RatioReport::new(case, family.to_string(), per.into_iter().map(|r| r.0).collect())?;
    rep.metrics.insert("doubling".into(), doubling);
    Ok(rep)
}

/// Relative change of the max ratio between two reports (resolution check).
pub fn max_ratio_change(coarse: &RatioReport, fine: &RatioReport) -> Option<f64> {
    let a = coarse.max_ratio()?;
    let b = fine.max_ratio()?;
    Some((b / a - 1.0).abs())
}

/// Largest relative difference between matching ratios of two reports.
pub fn ratio_mismatch(a: &RatioReport, b: &RatioReport) -> f64 {
    a.rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| match (x.ratio(), y.ratio()) {
            (Some(u), Some(v)) => (u - v).abs() / u.abs().max(v.abs()).max(f64::MIN_POSITIVE),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    fn small() -> (Grid3, TimeGrid) {
        (Grid3::cube(16, 6.0).unwrap(), TimeGrid::new(0.5, 9).unwrap())
    }

    #[test]
    fn admissible_pairs() {
        assert_eq!(admissible_q(Exponent::Finite(2.0)).unwrap(), Exponent::Infinity);
        assert_eq!(admissible_q(Exponent::Finite(4.0)).unwrap(), Exponent::Finite(4.0));
        let q = admissible_q(Exponent::Finite(8.0)).unwrap();
        assert!((q.value() - 8.0 / 3.0).abs() < 1e-14);
        assert!(admissible_q(Exponent::Infinity).is_err());
        assert!(check_admissible(Exponent::Finite(2.0), Exponent::Finite(4.0)).is_err());
    }

    #[test]
    fn unitarity_with_degenerate_member() {
        let (g, _) = small();
        let fam = InputFamily::random(3, 5, [3, 3, 3]);
        let r = check_unitarity(&fam, &g, 1.0).unwrap();
        for x in r.ratios() {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert!(r.metric("max_defect").unwrap() < 1e-12);
        let zero = RatioRow::new("zero", 0.0, ScalarField::zeros(&g).l2_norm());
        assert!(zero.is_degenerate());
    }

    #[test]
    fn strichartz_energy_endpoint_is_one() {
        let (g, t) = small();
        let fam = InputFamily::random(2, 1, [2, 2, 2]);
        let r = check_strichartz(Exponent::Infinity, Exponent::Finite(2.0), &fam, &g, &t).unwrap();
        for x in r.ratios() {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert!(check_strichartz(Exponent::Finite(3.0), Exponent::Finite(4.0), &fam, &g, &t).is_err());
    }

    #[test]
    fn duhamel_matches_simpson_in_time() {
        let (g, _) = small();
        let fam = InputFamily::random(2, 9, [2, 2, 2]);
        let a = fam.spectral_member(&g, 0).unwrap();
        let b = fam.spectral_member(&g, 1).unwrap();
        let (nu, t) = (3.0, 0.7);
        let exact = periodic_forcing_duhamel(&a, &b, nu, t).unwrap();
        // composite Simpson of E(t - s) G(s) on a fine grid
        let m = 400;
        let h = t / m as f64;
        let mut acc = SpectralField::zeros(&g);
        for j in 0..=m {
            let s = j as f64 * h;
            let w = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let mut gs = a.scale(Complex64::new((nu * s).cos(), 0.0));
            gs.axpy(Complex64::new((nu * s).sin(), 0.0), &b);
            let e = apply_multiplier(&gs, &Schrodinger(t - s)).unwrap();
            acc.axpy(Complex64::new(w, 0.0), &e);
        }
        let mut d = exact.clone();
        d.axpy(Complex64::new(-1.0, 0.0), &acc);
        assert!(d.l2_norm() < 1e-6 * exact.l2_norm(), "{}", d.l2_norm());
    }

    #[test]
    fn smoothing_is_symmetric_under_transposition() {
        let (g, t) = small();
        let fam = InputFamily::random(2, 3, [3, 3, 2]);
        for v in [SmoothingVariant::Hom, SmoothingVariant::InhomLinf] {
            let rx = check_smoothing(v, Axis::X, &fam, &g, &t).unwrap();
            let ry = check_smoothing(v, Axis::Y, &fam, &g, &t).unwrap();
            assert!(ratio_mismatch(&rx, &ry) < 1e-10);
        }
    }

    #[test]
    fn maximal_ratio_decreases_with_regularity() {
        let (g, t) = small();
        let fam = InputFamily::random(2, 7, [3, 3, 3]);
        let r = check_maximal(&[1.6, 2.5], Axis::X, &fam, &g, &t).unwrap();
        for pair in r.rows.chunks(2) {
            assert!(pair[0].ratio().unwrap() >= pair[1].ratio().unwrap());
        }
    }

    #[test]
    fn wave_sine_bound_is_linear_for_small_horizon() {
        let g = Grid3::cube(16, 6.0).unwrap();
        let t = TimeGrid::new(0.05, 9).unwrap();
        let fam = InputFamily::random(2, 2, [2, 2, 2]).real_valued();
        let r = check_wave_maximal(WaveVariant::SinH1, &fam, &g, &t).unwrap();
        let d = r.metric("doubling").unwrap();
        assert!(d > 1.8 && d <= 2.2, "{d}");
    }
}
