//! Execution of single cases and their pass/fail rules.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use dzk_core::dump::write_field;
use dzk_core::field::ScalarField;
use dzk_core::grid::Grid3;
use dzk_core::lab::dyadic::{check_bk_bound, counterexample_growth};
use dzk_core::lab::kernel::kernel_envelope;
use dzk_core::lab::leibniz::check_leibniz;
use dzk_core::lab::linear::{
    check_decay, check_maximal, check_smoothing, check_unitarity, check_wave_maximal, max_ratio_change,
    strichartz_ratios, strichartz_rescaling, SmoothingVariant, WaveVariant,
};
use dzk_core::lab::{CaseId, InputFamily, RatioReport, Report, SlopeFit};
use dzk_core::norms::{sobolev_norm, Exponent};
use dzk_core::series::FieldSeries;
use dzk_core::solver::{reference_step, solve_picard, InitialData, SolutionBundle, SolverConfig};

use crate::config::{ExperimentConfig, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extra output of a case besides its reports (manifests, field dumps).
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Outcome of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub case: String,
    pub status: Status,
    pub metrics: BTreeMap<String, f64>,
    /// Failed checks and errors, empty on a pass.
    pub diagnostics: Vec<String>,
    pub reports: Vec<Report>,
    pub payloads: Vec<Payload>,
    /// Files written for this case, relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Default)]
struct Outcome {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
    reports: Vec<Report>,
    payloads: Vec<Payload>,
}

impl Outcome {
    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    /// Records `v` and requires `|v - target| <= tol`.
    fn near(&mut self, key: String, v: f64, target: f64, tol: f64) {
        self.metric(key.clone(), v);
        self.check((v - target).abs() <= tol, || format!("{key} = {v}, expected {target} ± {tol}"));
    }

    fn at_most(&mut self, key: String, v: f64, bound: f64) {
        self.metric(key.clone(), v);
        self.check(v <= bound, || format!("{key} = {v} exceeds {bound}"));
    }

    /// Adds a ratio report, requiring a finite max ratio.
    fn ratio(&mut self, tag: &str, r: RatioReport) {
        let max = r.max_ratio();
        let median = r.median_ratio();
        self.check(max.is_some_and(f64::is_finite), || format!("{tag}: no finite ratio"));
        if let Some(m) = max {
            self.metric(format!("{tag}max_ratio"), m);
        }
        if let Some(m) = median {
            self.metric(format!("{tag}median_ratio"), m);
        }
        for (k, v) in &r.metrics {
            if !matches!(k.as_str(), "max_ratio" | "median_ratio") {
                self.metric(format!("{tag}{k}"), *v);
            }
        }
        self.reports.push(r.into());
    }

    fn slope(&mut self, tag: &str, f: SlopeFit) {
        self.metric(format!("{tag}slope"), f.slope());
        self.metric(format!("{tag}residual"), f.residual());
        for (k, v) in &f.metrics {
            self.metric(format!("{tag}{k}"), *v);
        }
        self.reports.push(f.into());
    }

    fn degenerate(&self) -> bool {
        self.reports
            .iter()
            .any(|r| matches!(r, Report::Ratio(r) if r.degenerate_count() > 0))
    }
}

type CaseResult = dzk_core::Result<()>;

/// Largest relative change allowed under grid refinement.
pub const REFINEMENT_TOL: f64 = 0.2;

fn refined(g: &Grid3) -> dzk_core::Result<Grid3> {
    let [nx, ny, nz] = g.shape();
    let [lx, ly, lz] = g.lengths();
    Grid3::new(2 * nx, 2 * ny, 2 * nz, lx, ly, lz)
}

/// Runs `f` on the configured grid and, with refinement on, on the doubled
/// grid, recording the relative change of the max ratio.
fn family_case<F>(cfg: &ExperimentConfig, out: &mut Outcome, tag: &str, f: F) -> CaseResult
where
    F: Fn(&Grid3) -> dzk_core::Result<RatioReport>,
{
    let coarse = f(&cfg.grid)?;
    if cfg.refine {
        let fine = f(&refined(&cfg.grid)?)?;
        let change = max_ratio_change(&coarse, &fine).unwrap_or(f64::INFINITY);
        out.at_most(format!("{tag}refinement_change"), change, REFINEMENT_TOL);
    }
    out.ratio(tag, coarse);
    Ok(())
}

fn exponent_tag(q: Exponent, p: Exponent) -> String {
    format!("q={q},p={p}.")
}

fn unitarity(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let r = check_unitarity(&cfg.family, &cfg.grid, cfg.unitarity_t)?;
    let dev = r.ratios().iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    out.at_most("max_defect".into(), r.metric("max_defect").unwrap_or(f64::INFINITY), 1e-12);
    out.at_most("isometry_defect".into(), dev, 1e-12);
    out.ratio("", r);
    Ok(())
}

fn decay(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let d = &cfg.decay;
    let family = InputFamily::gaussian(&[d.width]);
    for &p in &d.p {
        let fit = check_decay(p, &family, &d.grid, &d.times, &d.monitor)?;
        let tag = format!("p={p}.");
        let expected = fit.metric("expected_slope").unwrap_or(0.0);
        let rel = if p == Exponent::Infinity { 0.02 } else { 0.05 };
        out.near(format!("{tag}slope_check"), fit.slope(), expected, (rel * expected.abs()).max(0.02));
        if p == Exponent::Infinity {
            let bound = 1.05 / (4.0 * std::f64::consts::PI);
            out.at_most(format!("{tag}constant_check"), fit.metric("constant").unwrap_or(f64::INFINITY), bound);
        }
        out.slope(&tag, fit);
    }
    Ok(())
}

/// Largest tolerated max/median spread of a Strichartz family.
pub const STRICHARTZ_SPREAD: f64 = 5.0;

fn strichartz(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let s = &cfg.strichartz;
    let reports = strichartz_ratios(&s.pairs, &cfg.family, &cfg.grid, &cfg.time)?;
    let fine = if cfg.refine {
        Some(strichartz_ratios(&s.pairs, &cfg.family, &refined(&cfg.grid)?, &cfg.time)?)
    } else {
        None
    };
    for (k, r) in reports.into_iter().enumerate() {
        let (q, p) = s.pairs[k];
        let tag = exponent_tag(q, p);
        let spread = match (r.max_ratio(), r.median_ratio()) {
            (Some(a), Some(b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        };
        out.at_most(format!("{tag}spread"), spread, STRICHARTZ_SPREAD);
        if let Some(fine) = &fine {
            let change = max_ratio_change(&r, &fine[k]).unwrap_or(f64::INFINITY);
            out.at_most(format!("{tag}refinement_change"), change, REFINEMENT_TOL);
        }
        out.ratio(&tag, r);
    }
    if s.rescale {
        let fits = strichartz_rescaling(&s.pairs, &s.rescale_family, &s.rescale_grid, &s.rescale_time)?;
        for (k, f) in fits.into_iter().enumerate() {
            let (q, p) = s.pairs[k];
            let tag = format!("rescale.{}", exponent_tag(q, p));
            out.near(format!("{tag}slope_check"), f.slope(), 0.0, 0.1);
            out.slope(&tag, f);
        }
    }
    Ok(())
}

fn kernel(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let kc = &cfg.kernel;
    for &k in &kc.k {
        let r = kernel_envelope(k, kc.horizon, &kc.x1, &kc.t)?;
        let tag = format!("k={k}.");
        out.near(format!("{tag}tail_check"), r.metric("tail_exponent").unwrap_or(f64::NAN), -2.0, 0.2);
        out.ratio(&tag, r);
    }
    Ok(())
}

fn bk(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let b = &cfg.bk;
    for &s in &b.s {
        let fit = check_bk_bound(s, &b.levels, &b.grid, cfg.seed)?;
        let tag = format!("s={s}.");
        out.at_most(format!("{tag}partition_check"), fit.metric("partition_defect").unwrap_or(f64::INFINITY), 1e-12);
        out.near(format!("{tag}slope_check"), fit.slope(), -s, 0.2);
        out.slope(&tag, fit);
    }
    Ok(())
}

fn counterexample(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let c = &cfg.counterexample;
    let mut fits = counterexample_growth(&c.s, &c.levels, &c.setup)?.into_iter();
    if let Some(lhs) = fits.next() {
        out.near("lhs.slope_check".into(), lhs.slope(), 2.5, 0.3);
        out.slope("lhs.", lhs);
    }
    for (&s, fit) in c.s.iter().zip(fits) {
        let tag = format!("s={s}.");
        if s == 0.0 {
            out.near(format!("{tag}slope_check"), fit.slope(), 1.0, 0.3);
        } else if s >= 2.0 {
            out.at_most(format!("{tag}slope_check"), fit.slope(), 0.15);
        }
        out.slope(&tag, fit);
    }
    Ok(())
}

fn gaussian(g: &Grid3, amp: f64, shift: [f64; 3], phase: f64, with_z: bool) -> dzk_core::Result<ScalarField> {
    ScalarField::from_fn(g, |x, y, z| {
        let dz = if with_z { z - shift[2] } else { 0.0 };
        let r2 = (x - shift[0]).powi(2) + (y - shift[1]).powi(2) + dz * dz;
        Complex64::from_polar(amp * (-0.5 * r2).exp(), phase * x)
    })
}

/// Gaussian data `a e^{-|x-c|^2/2}` with distinct centres, a phase `e^{i x/2}`
/// on `E0`; with `with_z = false` the profiles do not depend on z.
pub fn solver_data(g: &Grid3, amp: f64, with_z: bool) -> dzk_core::Result<InitialData> {
    InitialData::new(
        gaussian(g, amp, [0.3, -0.2, 0.0], 0.5, with_z)?,
        gaussian(g, amp, [0.0, 0.4, 0.2], 0.0, with_z)?,
        gaussian(g, amp, [-0.3, 0.0, 0.0], 0.0, with_z)?,
    )
}

fn relative_diff(a: &FieldSeries, b: &FieldSeries) -> f64 {
    let scale = a.frames().iter().map(ScalarField::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.frames()
        .iter()
        .zip(b.frames())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
        / scale
}

/// Largest `|E(x, y, z) - E(x, y, z_0)|` over frames, relative to `max |E|`.
fn z_variation(e: &FieldSeries) -> f64 {
    let [nx, ny, nz] = e.grid().shape();
    let mut worst = 0.0f64;
    let mut scale = f64::MIN_POSITIVE;
    for f in e.frames() {
        scale = scale.max(f.max_abs());
        for ix in 0..nx {
            for iy in 0..ny {
                let base = f.at(ix, iy, 0);
                for iz in 1..nz {
                    worst = worst.max((f.at(ix, iy, iz) - base).norm());
                }
            }
        }
    }
    worst / scale
}

/// Symmetry defects allowed on solver output.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn solve_symmetry(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let s = &cfg.solver;
    let g = &s.symmetry_grid;
    let flat = solve_picard(&solver_data(g, s.amplitude, false)?, &s.config)?;
    out.at_most("z_variation".into(), z_variation(&flat.e), SYMMETRY_TOL);
    let data = solver_data(g, s.amplitude, true)?;
    let a = solve_picard(&data, &s.config)?;
    let b = solve_picard(&data.swap_xy()?, &s.config)?;
    let defect = relative_diff(&a.e.swap_xy()?, &b.e).max(relative_diff(&a.n.swap_xy()?, &b.n));
    out.at_most("swap_xy_defect".into(), defect, SYMMETRY_TOL);
    Ok(())
}

fn dump(f: &ScalarField) -> dzk_core::Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_field(&mut bytes, f)?;
    Ok(bytes)
}

fn manifest(cfg: &ExperimentConfig, sol: &SolutionBundle, out: &Outcome) -> String {
    use std::fmt::Write as _;
    let s = &cfg.solver;
    let [n, _, _] = s.grid.shape();
    let l = s.grid.lengths()[0];
    let d = &sol.diagnostics;
    let mut m = String::new();
    let _ = writeln!(m, "# solve manifest");
    let _ = writeln!(m, "[data]");
    let _ = writeln!(m, "grid = {n}^3, box [-{h}, {h})^3", h = l / 2.0);
    let _ = writeln!(m, "E0 = {a} exp(-|x - (0.3, -0.2, 0)|^2 / 2) exp(0.5 i x)", a = s.amplitude);
    let _ = writeln!(m, "n0 = {a} exp(-|x - (0, 0.4, 0.2)|^2 / 2)", a = s.amplitude);
    let _ = writeln!(m, "n1 = {a} exp(-|x - (-0.3, 0, 0)|^2 / 2)", a = s.amplitude);
    let _ = writeln!(m, "[config]");
    for line in cfg.echo().lines().filter(|l| l.starts_with("solver.") || l.starts_with("run.")) {
        let _ = writeln!(m, "{line}");
    }
    let _ = writeln!(m, "[iterations]");
    let _ = writeln!(m, "iteration,difference,ratio");
    for (i, diff) in d.differences.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { d.ratios[i - 1].to_string() };
        let _ = writeln!(m, "{},{diff},{ratio}", i + 1);
    }
    let _ = writeln!(m, "[summary]");
    for (k, v) in &out.metrics {
        let _ = writeln!(m, "{k} = {v}");
    }
    m
}

fn solve(cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let s = &cfg.solver;
    let data = solver_data(&s.grid, s.amplitude, true)?;
    let sol = solve_picard(&data, &s.config)?;
    let d = &sol.diagnostics;
    out.check(d.converged, || "Picard iteration did not converge".into());
    out.metric("iterations", d.differences.len() as f64);
    out.metric("achieved_t", d.achieved_t);
    out.metric("halvings", d.halvings as f64);
    out.metric("boundary_mass", d.boundary_mass);
    let late = d.ratios.iter().skip(1).copied().fold(0.0, f64::max);
    out.at_most("late_contraction_ratio".into(), late, 0.5);
    out.at_most("residual".into(), d.residual, 2.0 * s.config.picard_tol);
    out.at_most("mass_drift".into(), d.mass_drift, 1e-6);
    let ref_cfg = SolverConfig {
        t_end: d.achieved_t,
        ..s.config.clone()
    };
    let reference = reference_step(&data, &ref_cfg)?;
    let mismatch = (sol.e.last() - reference.last()).l2_norm() / reference.last().l2_norm();
    out.at_most("reference_mismatch".into(), mismatch, 1e-4);
    let n_t = sol.n.last();
    out.at_most("n_imag".into(), n_t.max_imag(), 1e-10);
    let h2 = sobolev_norm(n_t, 2.0)?.value;
    out.metric("n_h2", h2);
    out.check(h2.is_finite(), || "n(T) has no finite H^2 norm".into());
    if s.symmetry {
        solve_symmetry(cfg, out)?;
    }
    let text = manifest(cfg, &sol, out);
    out.payloads.push(Payload {
        name: "solve-manifest.txt".into(),
        bytes: text.into_bytes(),
    });
    out.payloads.push(Payload {
        name: "solve-E_T.dzk".into(),
        bytes: dump(sol.e.last())?,
    });
    out.payloads.push(Payload {
        name: "solve-n_T.dzk".into(),
        bytes: dump(n_t)?,
    });
    Ok(())
}

fn estimate(id: CaseId, cfg: &ExperimentConfig, out: &mut Outcome) -> CaseResult {
    let fam = &cfg.family;
    let (dir, time) = (cfg.direction, &cfg.time);
    let smoothing = |v: SmoothingVariant, out: &mut Outcome| {
        family_case(cfg, out, "", |g| check_smoothing(v, dir, fam, g, time))
    };
    let wave = |v: WaveVariant, out: &mut Outcome| {
        let real = fam.clone().real_valued();
        family_case(cfg, out, "", |g| check_wave_maximal(v, &real, g, &cfg.wave_time))
    };
    match id {
        CaseId::Unitarity => unitarity(cfg, out),
        CaseId::Decay => decay(cfg, out),
        CaseId::Strichartz => strichartz(cfg, out),
        CaseId::SmoothingHom => smoothing(SmoothingVariant::Hom, out),
        CaseId::SmoothingInhomL2 => smoothing(SmoothingVariant::InhomL2, out),
        CaseId::SmoothingInhomLinf => smoothing(SmoothingVariant::InhomLinf, out),
        CaseId::Maximal => family_case(cfg, out, "", |g| check_maximal(&cfg.maximal_s, dir, fam, g, time)),
        CaseId::WaveMaximalCos => wave(WaveVariant::Cos, out),
        CaseId::WaveMaximalSin2 => wave(WaveVariant::SinH2, out),
        CaseId::WaveMaximalSin1 => wave(WaveVariant::SinH1, out),
        CaseId::KernelEnvelope => kernel(cfg, out),
        CaseId::LeibnizCommutator => {
            family_case(cfg, out, "", |g| check_leibniz(&cfg.leibniz, fam, g))?;
            let r = out.metrics.get("constant_residual").copied().unwrap_or(f64::INFINITY);
            out.at_most("constant_residual".into(), r, 1e-12);
            Ok(())
        }
        CaseId::BkBound => bk(cfg, out),
        CaseId::Counterexample => counterexample(cfg, out),
    }
}

/// Runs one task; errors become failing records.
pub fn execute(task: Task, cfg: &ExperimentConfig) -> ReportRecord {
    let mut out = Outcome::default();
    let res = match task {
        Task::Estimate(id) => estimate(id, cfg, &mut out),
        Task::Solve => solve(cfg, &mut out),
    };
    if let Err(e) = res {
        out.failures.push(format!("error: {e}"));
    }
    out.metric("epsilon", cfg.epsilon);
    let status = if !out.failures.is_empty() {
        Status::Fail
    } else if out.degenerate() {
        Status::Degenerate
    } else {
        Status::Pass
    };
    ReportRecord {
        case: task.name().to_string(),
        status,
        metrics: out.metrics,
        diagnostics: out.failures,
        reports: out.reports,
        payloads: out.payloads,
        artifacts: Vec::new(),
    }
}
