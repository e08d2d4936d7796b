//! Line-oriented experiment configuration.
//!
//! Each non-blank line is `section.key = value`; `#` starts a comment. Lists
//! are comma separated. Every key has a default (see [`DEFAULTS`]), so the
//! empty text is a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use dzk_core::grid::{Axis, Grid3};
use dzk_core::lab::dyadic::CounterexampleSetup;
use dzk_core::lab::leibniz::LeibnizParams;
use dzk_core::lab::linear::{admissible_q, check_admissible, BoundaryMonitor};
use dzk_core::lab::{CaseId, FamilyKind, InputFamily};
use dzk_core::norms::Exponent;
use dzk_core::series::TimeGrid;
use dzk_core::solver::{DealiasRule, SolverConfig};

use crate::error::{Result, RunnerError};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DZK_OUT";

/// `(key, default, meaning)` for every accepted key.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("run.seed", "1", "seed for every random family"),
    ("run.out", "", "output directory (empty: $DZK_OUT, else ./dzk-out)"),
    ("run.epsilon", "0.05", "the epsilon of the '+' exponents"),
    ("grid.nx", "32", "samples along x"),
    ("grid.ny", "32", "samples along y"),
    ("grid.nz", "8", "samples along z"),
    ("grid.lx", "8", "box length along x"),
    ("grid.ly", "8", "box length along y"),
    ("grid.lz", "8", "box length along z"),
    ("time.t_end", "1", "horizon T"),
    ("time.nt", "17", "time nodes on [0, T]"),
    ("family.kind", "random-bandlimited", "random-bandlimited | gaussian | rescaled | dyadic-theta"),
    ("family.count", "10", "members of a random family"),
    ("family.band", "4,4,2", "largest |mode| per axis of a random family"),
    ("family.widths", "0.15", "widths of a gaussian family"),
    ("family.lambdas", "1,2,4", "scales of a rescaled family"),
    ("family.width", "0.64", "base width of a rescaled family"),
    ("family.levels", "2,3,4,5", "levels of a dyadic-theta family"),
    ("estimate.case", "all", "cases to run in order ('all' or ids, 'solve' included)"),
    ("estimate.direction", "x", "x | y, direction of smoothing and maximal estimates"),
    ("estimate.t", "0.7", "time of the unitarity check"),
    ("estimate.refine", "false", "rerun family cases on a doubled grid"),
    ("strichartz.p", "2,4,8", "spatial exponents"),
    ("strichartz.q", "", "time exponents (empty: from 2/q = 1 - 2/p)"),
    ("strichartz.rescale", "true", "also fit the rescaling family"),
    ("rescale.n", "384", "x, y samples of the rescaling grid"),
    ("rescale.nz", "4", "z samples of the rescaling grid"),
    ("rescale.length", "24", "box length of the rescaling grid"),
    ("rescale.width", "0.64", "gaussian width at lambda = 1"),
    ("rescale.lambdas", "1,2,4", "scales"),
    ("rescale.t_end", "0.6144", "horizon at lambda = 1"),
    ("rescale.nt", "33", "time nodes"),
    ("decay.p", "inf,4", "exponents"),
    ("decay.n", "1024", "x, y samples"),
    ("decay.nz", "4", "z samples"),
    ("decay.length", "64", "box length"),
    ("decay.width", "0.15", "gaussian width"),
    ("decay.t_min", "0.05", "first sample time"),
    ("decay.t_max", "0.8", "last sample time"),
    ("decay.samples", "8", "log-spaced sample times"),
    ("decay.monitor_fraction", "0.05", "width of the boundary band"),
    ("decay.monitor_threshold", "0.01", "largest mass share in the band"),
    ("maximal.s", "2", "Sobolev orders of the maximal estimate"),
    ("wave.t_end", "0.1", "horizon of the wave maximal estimates"),
    ("wave.nt", "9", "time nodes of the wave maximal estimates"),
    ("leibniz.rho", "0.5", "order of the commutator"),
    ("leibniz.rho1", "0.25", "order on the first factor"),
    ("leibniz.rho2", "0.25", "order on the second factor"),
    ("leibniz.p1", "4", ""),
    ("leibniz.p2", "4", ""),
    ("leibniz.q1", "4", ""),
    ("leibniz.q2", "4", ""),
    ("leibniz.axis", "x", "x | y"),
    ("kernel.k", "1,3,6", "levels"),
    ("kernel.horizon", "0.05", "T"),
    ("kernel.x1_min", "1", "smallest |x1|"),
    ("kernel.x1_max", "100", "largest |x1|"),
    ("kernel.x1_samples", "21", "log-spaced |x1| samples"),
    ("kernel.t", "0,0.0125,0.025,0.05", "sample times"),
    ("bk.n", "128", "samples per axis (box length 2 pi)"),
    ("bk.s", "0,1,2", "Sobolev orders"),
    ("bk.levels", "1,2,3,4,5", "levels"),
    ("counterexample.n", "128", "samples per axis"),
    ("counterexample.length", "3", "box length"),
    ("counterexample.delta", "0.1", "window scale"),
    ("counterexample.x_samples", "9", "samples across the x window"),
    ("counterexample.box_samples", "5", "samples across each y, z, t window"),
    ("counterexample.levels", "2,3,4,5", "levels"),
    ("counterexample.s", "0,2", "Sobolev orders of the ratio fits"),
    ("solver.n", "32", "samples per axis"),
    ("solver.length", "16", "box length"),
    ("solver.amplitude", "0.1", "amplitude of the gaussian data"),
    ("solver.t_end", "0.1", "horizon"),
    ("solver.nt", "17", "time nodes"),
    ("solver.tol", "1e-8", "Picard tolerance in the contraction norm"),
    ("solver.max_iters", "40", ""),
    ("solver.quadrature_order", "4", "4 (Simpson) or 2 (trapezoid)"),
    ("solver.dealias", "two-thirds", "two-thirds | none"),
    ("solver.substeps", "4", "reference substeps per node"),
    ("solver.halvings", "4", "horizon halvings allowed on non-contraction"),
    ("solver.symmetry", "true", "check z-independence and x<->y symmetry"),
    ("solver.symmetry_n", "32", "samples per axis of the symmetry runs"),
    ("bench.repeats", "5", "timed repetitions per operation"),
];

/// A unit of work in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Estimate(CaseId),
    Solve,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Estimate(c) => c.as_str(),
            Task::Solve => "solve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrichartzSpec {
    pub pairs: Vec<(Exponent, Exponent)>,
    pub rescale: bool,
    pub rescale_grid: Grid3,
    pub rescale_family: InputFamily,
    pub rescale_time: TimeGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySpec {
    pub p: Vec<Exponent>,
    pub grid: Grid3,
    pub width: f64,
    pub times: Vec<f64>,
    pub monitor: BoundaryMonitor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub k: Vec<u32>,
    pub horizon: f64,
    pub x1: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BkSpec {
    pub grid: Grid3,
    pub s: Vec<f64>,
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    pub setup: CounterexampleSetup,
    pub levels: Vec<u32>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub config: SolverConfig,
    pub grid: Grid3,
    pub amplitude: f64,
    pub symmetry: bool,
    pub symmetry_grid: Grid3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Effective value of every key, defaults included.
    pub values: BTreeMap<String, String>,
    pub grid: Grid3,
    pub time: TimeGrid,
    pub family: InputFamily,
    pub tasks: Vec<Task>,
    pub direction: Axis,
    pub unitarity_t: f64,
    pub refine: bool,
    pub strichartz: StrichartzSpec,
    pub decay: DecaySpec,
    pub maximal_s: Vec<f64>,
    pub wave_time: TimeGrid,
    pub leibniz: LeibnizParams,
    pub kernel: KernelSpec,
    pub bk: BkSpec,
    pub counterexample: CounterexampleSpec,
    pub solver: SolverSpec,
    pub bench_repeats: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

fn malformed(key: &str, value: &str, why: impl std::fmt::Display) -> RunnerError {
    RunnerError::MalformedValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: why.to_string(),
    }
}

struct Values<'a>(&'a BTreeMap<String, String>);

impl Values<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).expect("key present in the defaults table")
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e| malformed(key, v, e))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| malformed(key, v, e)))
            .collect()
    }

    fn nonempty<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let l = self.list(key)?;
        if l.is_empty() {
            return Err(malformed(key, self.raw(key), "empty list"));
        }
        Ok(l)
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v: f64 = self.get(key)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(malformed(key, self.raw(key), "must be positive"));
        }
        Ok(v)
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(malformed(key, v, "expected true or false")),
        }
    }

    fn axis(&self, key: &str) -> Result<Axis> {
        match self.raw(key) {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            v => Err(malformed(key, v, "expected x or y")),
        }
    }

    fn exponent(&self, key: &str) -> Result<Exponent> {
        let v = self.raw(key);
        v.parse().map_err(|e| malformed(key, v, e))
    }
}

fn grid_or(key: &str, r: dzk_core::Result<Grid3>) -> Result<Grid3> {
    r.map_err(|e| malformed(key, "", e))
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn tasks(v: &Values) -> Result<Vec<Task>> {
    let raw = v.raw("estimate.case");
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "all" => out.extend(CaseId::ALL.into_iter().map(Task::Estimate)),
            "solve" => out.push(Task::Solve),
            id => out.push(Task::Estimate(
                id.parse().map_err(|_| RunnerError::UnknownCase(id.to_string()))?,
            )),
        }
    }
    if out.is_empty() {
        return Err(malformed("estimate.case", raw, "no cases"));
    }
    Ok(out)
}

fn family(v: &Values, seed: u64) -> Result<InputFamily> {
    let kind: FamilyKind = v.get("family.kind")?;
    Ok(match kind {
        FamilyKind::RandomBandlimited => {
            let band: Vec<usize> = v.list("family.band")?;
            let band: [usize; 3] = band
                .try_into()
                .map_err(|_| malformed("family.band", v.raw("family.band"), "expected three integers"))?;
            let count: usize = v.get("family.count")?;
            if count == 0 {
                return Err(malformed("family.count", "0", "empty family"));
            }
            InputFamily::random(count, seed, band)
        }
        FamilyKind::Gaussian => InputFamily::gaussian(&v.nonempty::<f64>("family.widths")?),
        FamilyKind::Rescaled => InputFamily::rescaled(v.positive("family.width")?, &v.nonempty::<f64>("family.lambdas")?),
        FamilyKind::DyadicTheta => InputFamily::dyadic_theta(&v.nonempty::<u32>("family.levels")?),
    })
}

fn strichartz(v: &Values) -> Result<StrichartzSpec> {
    let ps: Vec<Exponent> = v.nonempty("strichartz.p")?;
    let qs: Vec<Exponent> = v.list("strichartz.q")?;
    let pairs = if qs.is_empty() {
        ps.iter()
            .map(|&p| Ok((admissible_q(p).map_err(|e| malformed("strichartz.p", v.raw("strichartz.p"), e))?, p)))
            .collect::<Result<Vec<_>>>()?
    } else {
        if qs.len() != ps.len() {
            return Err(malformed("strichartz.q", v.raw("strichartz.q"), "one q per p"));
        }
        for (&q, &p) in qs.iter().zip(&ps) {
            check_admissible(q, p).map_err(|e| malformed("strichartz.q", v.raw("strichartz.q"), e))?;
        }
        qs.into_iter().zip(ps).collect()
    };
    let n: usize = v.get("rescale.n")?;
    let nz: usize = v.get("rescale.nz")?;
    let l = v.positive("rescale.length")?;
    Ok(StrichartzSpec {
        pairs,
        rescale: v.bool("strichartz.rescale")?,
        rescale_grid: grid_or("rescale.n", Grid3::new(n, n, nz, l, l, l))?,
        rescale_family: InputFamily::rescaled(v.positive("rescale.width")?, &v.nonempty::<f64>("rescale.lambdas")?),
        rescale_time: TimeGrid::new(v.positive("rescale.t_end")?, v.get("rescale.nt")?)
            .map_err(|e| malformed("rescale.nt", v.raw("rescale.nt"), e))?,
    })
}

fn decay(v: &Values) -> Result<DecaySpec> {
    let n: usize = v.get("decay.n")?;
    let nz: usize = v.get("decay.nz")?;
    let l = v.positive("decay.length")?;
    let samples: usize = v.get("decay.samples")?;
    if samples < 3 {
        return Err(malformed("decay.samples", v.raw("decay.samples"), "at least 3"));
    }
    Ok(DecaySpec {
        p: v.nonempty("decay.p")?,
        grid: grid_or("decay.n", Grid3::new(n, n, nz, l, l, l))?,
        width: v.positive("decay.width")?,
        times: log_space(v.positive("decay.t_min")?, v.positive("decay.t_max")?, samples),
        monitor: BoundaryMonitor {
            axes: vec![Axis::X, Axis::Y],
            fraction: v.positive("decay.monitor_fraction")?,
            threshold: v.positive("decay.monitor_threshold")?,
        },
    })
}

fn solver(v: &Values, epsilon: f64) -> Result<SolverSpec> {
    let dealias_rule = match v.raw("solver.dealias") {
        "two-thirds" => DealiasRule::TwoThirds,
        "none" => DealiasRule::None,
        o => return Err(malformed("solver.dealias", o, "expected two-thirds or none")),
    };
    let config = SolverConfig {
        t_end: v.positive("solver.t_end")?,
        nt: v.get("solver.nt")?,
        picard_tol: v.positive("solver.tol")?,
        max_iters: v.get("solver.max_iters")?,
        duhamel_quadrature_order: v.get("solver.quadrature_order")?,
        dealias_rule,
        epsilon,
        max_halvings: v.get("solver.halvings")?,
        reference_substeps: v.get("solver.substeps")?,
        coupling: true,
    };
    config.validate().map_err(|e| malformed("solver", "", e))?;
    let l = v.positive("solver.length")?;
    Ok(SolverSpec {
        config,
        grid: grid_or("solver.n", Grid3::cube(v.get("solver.n")?, l))?,
        amplitude: v.get("solver.amplitude")?,
        symmetry: v.bool("solver.symmetry")?,
        symmetry_grid: grid_or("solver.symmetry_n", Grid3::cube(v.get("solver.symmetry_n")?, l))?,
    })
}

fn build(values: BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let v = Values(&values);
    let seed: u64 = v.get("run.seed")?;
    let epsilon = v.positive("run.epsilon")?;
    let grid = Grid3::new(
        v.get("grid.nx")?,
        v.get("grid.ny")?,
        v.get("grid.nz")?,
        v.get("grid.lx")?,
        v.get("grid.ly")?,
        v.get("grid.lz")?,
    )
    .map_err(|e| malformed("grid", "", e))?;
    let time = TimeGrid::new(v.get("time.t_end")?, v.get("time.nt")?).map_err(|e| malformed("time", "", e))?;
    let leibniz = LeibnizParams {
        rho: v.get("leibniz.rho")?,
        rho1: v.get("leibniz.rho1")?,
        rho2: v.get("leibniz.rho2")?,
        p1: v.exponent("leibniz.p1")?,
        p2: v.exponent("leibniz.p2")?,
        q1: v.exponent("leibniz.q1")?,
        q2: v.exponent("leibniz.q2")?,
        axis: v.axis("leibniz.axis")?,
    };
    leibniz.validate().map_err(|e| malformed("leibniz", "", e))?;
    let kx = log_space(v.positive("kernel.x1_min")?, v.positive("kernel.x1_max")?, v.get("kernel.x1_samples")?);
    let out = match v.raw("run.out") {
        "" => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("dzk-out"), PathBuf::from),
        p => PathBuf::from(p),
    };
    let cfg = ExperimentConfig {
        grid,
        time,
        family: family(&v, seed)?,
        tasks: tasks(&v)?,
        direction: v.axis("estimate.direction")?,
        unitarity_t: v.get("estimate.t")?,
        refine: v.bool("estimate.refine")?,
        strichartz: strichartz(&v)?,
        decay: decay(&v)?,
        maximal_s: v.nonempty("maximal.s")?,
        wave_time: TimeGrid::new(v.positive("wave.t_end")?, v.get("wave.nt")?)
            .map_err(|e| malformed("wave", "", e))?,
        leibniz,
        kernel: KernelSpec {
            k: v.nonempty("kernel.k")?,
            horizon: v.positive("kernel.horizon")?,
            x1: kx,
            t: v.nonempty("kernel.t")?,
        },
        bk: BkSpec {
            grid: grid_or("bk.n", Grid3::cube(v.get("bk.n")?, 2.0 * std::f64::consts::PI))?,
            s: v.nonempty("bk.s")?,
            levels: v.nonempty("bk.levels")?,
        },
        counterexample: CounterexampleSpec {
            setup: CounterexampleSetup {
                n: v.get("counterexample.n")?,
                length: v.positive("counterexample.length")?,
                delta: v.positive("counterexample.delta")?,
                x_samples: v.get("counterexample.x_samples")?,
                box_samples: v.get("counterexample.box_samples")?,
            },
            levels: v.nonempty("counterexample.levels")?,
            s: v.list("counterexample.s")?,
        },
        solver: solver(&v, epsilon)?,
        bench_repeats: v.get::<usize>("bench.repeats")?.max(1),
        out,
        seed,
        epsilon,
        values: BTreeMap::new(),
    };
    Ok(ExperimentConfig { values, ..cfg })
}

/// Parses configuration text, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut values: BTreeMap<String, String> = DEFAULTS
        .iter()
        .map(|(k, d, _)| (k.to_string(), d.to_string()))
        .collect();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(RunnerError::Syntax(no + 1))?;
        let key = key.trim();
        match values.get_mut(key) {
            Some(slot) => *slot = value.trim().to_string(),
            None => return Err(RunnerError::UnknownKey(key.to_string())),
        }
    }
    build(values)
}

impl ExperimentConfig {
    /// Replaces one key and revalidates.
    pub fn with(&self, key: &str, value: impl ToString) -> Result<Self> {
        let mut values = self.values.clone();
        match values.get_mut(key) {
            Some(slot) => *slot = value.to_string(),
            None => return Err(RunnerError::UnknownKey(key.to_string())),
        }
        build(values)
    }

    /// The effective configuration, one `key = value` line per key in table order.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in DEFAULTS {
            let _ = writeln!(s, "{k} = {}", self.values[*k]);
        }
        s
    }
}
