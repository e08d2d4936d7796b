//! Throughput of the spectral core. Timings never feed back into verdicts.

use std::time::Instant;

use dzk_core::lab::InputFamily;
use dzk_core::multiplier::apply_multiplier;
use dzk_core::norms::{spatial_norm, MixedNormSpec};
use dzk_core::propagators::Schrodinger;

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub op: &'static str,
    pub shape: [usize; 3],
    pub repeats: usize,
    pub mean_seconds: f64,
    pub samples_per_second: f64,
}

fn time<F: FnMut() -> Result<()>>(repeats: usize, mut f: F) -> Result<f64> {
    f()?;
    let start = Instant::now();
    for _ in 0..repeats {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64() / repeats as f64)
}

/// Times forward+inverse transforms, one propagator application, a dealiased
/// product and a mixed norm on the configured grid.
pub fn bench(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let g = &cfg.grid;
    let band = cfg.family.band;
    let f = InputFamily::random(1, cfg.seed, band).member(g, 0)?;
    let fh = f.to_spectral()?;
    let spec: MixedNormSpec = "Linf:x | L2:y,z".parse()?;
    let r = cfg.bench_repeats;
    let mut rows = Vec::new();
    let mut push = |op: &'static str, secs: f64| {
        rows.push(BenchRow {
            op,
            shape: g.shape(),
            repeats: r,
            mean_seconds: secs,
            samples_per_second: g.size() as f64 / secs,
        })
    };
    push("fft-roundtrip", time(r, || {
        f.to_spectral()?.from_spectral()?;
        Ok(())
    })?);
    push("schrodinger", time(r, || {
        apply_multiplier(&fh, &Schrodinger(0.3))?;
        Ok(())
    })?);
    push("dealiased-product", time(r, || {
        f.dealiased_product(&f)?;
        Ok(())
    })?);
    push("mixed-norm", time(r, || {
        spatial_norm(&f, &spec)?;
        Ok(())
    })?);
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Vec<u8> {
    let mut s = String::from("op,nx,ny,nz,repeats,mean_seconds,samples_per_second\n");
    for r in rows {
        let [nx, ny, nz] = r.shape;
        s.push_str(&format!(
            "{},{nx},{ny},{nz},{},{},{}\n",
            r.op, r.repeats, r.mean_seconds, r.samples_per_second
        ));
    }
    s.into_bytes()
}
