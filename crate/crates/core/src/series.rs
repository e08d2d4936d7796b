//! Time grids and time-indexed sequences of fields.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DzkError, Result};
use crate::field::{ScalarField, SpectralField};
use crate::grid::Grid3;
use crate::multiplier::{Multiplier, SymbolTable};

/// Uniform nodes `t_j = j*T/(nt-1)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_end: f64, nt: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(DzkError::InvalidTimeGrid(format!("T = {t_end} must be positive")));
        }
        if nt < 2 {
            return Err(DzkError::InvalidTimeGrid(format!("nt = {nt} must be at least 2")));
        }
        let h = t_end / (nt - 1) as f64;
        let mut nodes: Vec<f64> = (0..nt).map(|j| j as f64 * h).collect();
        nodes[nt - 1] = t_end;
        Ok(Self { t_end, nodes })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn step(&self) -> f64 {
        self.t_end / (self.nodes.len() - 1) as f64
    }

    /// Index of the node equal to `t` (to 1e-12 relative to `T`).
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * self.t_end.max(1.0);
        let j = (t / self.step()).round();
        if j < 0.0 || j as usize >= self.len() || (self.nodes[j as usize] - t).abs() > tol {
            return Err(DzkError::OffGridTime(t));
        }
        Ok(j as usize)
    }

    /// Grid restricted to the first `m` nodes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m < 2 || m > self.len() {
            return Err(DzkError::InvalidTimeGrid(format!("cannot keep {m} nodes")));
        }
        Ok(Self {
            t_end: self.nodes[m - 1],
            nodes: self.nodes[..m].to_vec(),
        })
    }
}

/// One field per time node, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    time: TimeGrid,
    frames: Vec<ScalarField>,
}

impl FieldSeries {
    pub fn new(time: TimeGrid, frames: Vec<ScalarField>) -> Result<Self> {
        if frames.len() != time.len() {
            return Err(DzkError::InvalidTimeGrid(format!(
                "{} frames for {} nodes",
                frames.len(),
                time.len()
            )));
        }
        let g = frames[0].grid();
        if frames.iter().any(|f| f.grid() != g) {
            return Err(DzkError::GridMismatch("frames on different grids".into()));
        }
        Ok(Self { time, frames })
    }

    /// Series built frame by frame from `f(t_j)`.
    pub fn from_fn<F>(time: TimeGrid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<ScalarField> + Sync + Send,
    {
        let frames: Result<Vec<ScalarField>> = time.nodes().par_iter().map(|&t| f(t)).collect();
        Self::new(time, frames?)
    }

    pub fn zeros(grid: &Grid3, time: TimeGrid) -> Self {
        let frames = vec![ScalarField::zeros(grid); time.len()];
        Self { time, frames }
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn frames(&self) -> &[ScalarField] {
        &self.frames
    }

    pub fn frame(&self, j: usize) -> &ScalarField {
        &self.frames[j]
    }

    pub fn grid(&self) -> &Grid3 {
        self.frames[0].grid()
    }

    pub fn last(&self) -> &ScalarField {
        self.frames.last().expect("series is never empty")
    }

    pub fn truncated(&self, m: usize) -> Result<Self> {
        Ok(Self {
            time: self.time.truncated(m)?,
            frames: self.frames[..m].to_vec(),
        })
    }

    pub fn to_spectral(&self) -> Result<SpectralSeries> {
        let frames: Result<Vec<SpectralField>> =
            self.frames.par_iter().map(|f| f.to_spectral()).collect();
        Ok(SpectralSeries {
            time: self.time.clone(),
            frames: frames?,
        })
    }

    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ScalarField) -> Result<ScalarField> + Sync + Send,
    {
        let frames: Result<Vec<ScalarField>> = self.frames.par_iter().map(f).collect();
        Self::new(self.time.clone(), frames?)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.time != other.time || self.grid() != other.grid() {
            return Err(DzkError::GridMismatch("series differ in grid or time".into()));
        }
        let frames = self.frames.iter().zip(&other.frames).map(|(a, b)| a - b).collect();
        Ok(Self {
            time: self.time.clone(),
            frames,
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            time: self.time.clone(),
            frames: self.frames.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn swap_xy(&self) -> Result<Self> {
        self.map(|f| f.swap_xy())
    }
}

/// Spectral frames on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSeries {
    time: TimeGrid,
    frames: Vec<SpectralField>,
}

impl SpectralSeries {
    pub fn new(time: TimeGrid, frames: Vec<SpectralField>) -> Result<Self> {
        if frames.len() != time.len() {
            return Err(DzkError::InvalidTimeGrid("frame count mismatch".into()));
        }
        Ok(Self { time, frames })
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn frames(&self) -> &[SpectralField] {
        &self.frames
    }

    pub fn grid(&self) -> &Grid3 {
        self.frames[0].grid()
    }

    /// Applies `m` to every frame and returns to physical space.
    pub fn physical_with<M: Multiplier + ?Sized>(&self, m: &M) -> Result<FieldSeries> {
        let table = SymbolTable::new(self.grid(), m)?;
        let frames: Result<Vec<ScalarField>> = self
            .frames
            .par_iter()
            .map(|f| Ok(table.apply(f)?.to_physical()))
            .collect();
        FieldSeries::new(self.time.clone(), frames?)
    }

    pub fn to_physical(&self) -> FieldSeries {
        let frames = self.frames.par_iter().map(|f| f.to_physical()).collect();
        FieldSeries {
            time: self.time.clone(),
            frames,
        }
    }
}
