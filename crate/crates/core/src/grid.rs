//! Periodic computational box standing in for R^3.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{DzkError, Result};

/// Spatial axis of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

struct AxisPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Rectangular periodic box `[-L/2, L/2)^3` with `n` samples per axis.
///
/// Samples are stored z-fastest: index `(ix * ny + iy) * nz + iz`.
/// Wavenumbers are stored in FFT order, `k[m] = 2*pi*m/L` for
/// `m = 0..n/2-1` followed by `m = -n/2..-1`.
#[derive(Clone)]
pub struct Grid3 {
    n: [usize; 3],
    len: [f64; 3],
    k: [Arc<Vec<f64>>; 3],
    plans: Arc<[AxisPlans; 3]>,
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.len == other.len
    }
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid3")
            .field("n", &self.n)
            .field("len", &self.len)
            .finish()
    }
}

impl Grid3 {
    pub fn new(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, lz: f64) -> Result<Self> {
        let n = [nx, ny, nz];
        let len = [lx, ly, lz];
        for (a, axis) in Axis::ALL.iter().enumerate() {
            if n[a] % 2 == 1 {
                return Err(DzkError::OddResolution(n[a], axis.name()));
            }
            if n[a] < 4 {
                return Err(DzkError::ResolutionTooSmall(n[a], axis.name()));
            }
            if !(len[a].is_finite() && len[a] > 0.0) {
                return Err(DzkError::InvalidLength(len[a], axis.name()));
            }
        }
        let k = [0, 1, 2].map(|a| Arc::new(wavenumbers(n[a], len[a])));
        let mut planner = FftPlanner::new();
        let plans = [0, 1, 2].map(|a| AxisPlans {
            forward: planner.plan_fft_forward(n[a]),
            inverse: planner.plan_fft_inverse(n[a]),
        });
        Ok(Self {
            n,
            len,
            k,
            plans: Arc::new(plans),
        })
    }

    /// Cubic box with the same resolution and length on every axis.
    pub fn cube(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, n, l, l, l)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.len
    }

    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.n[axis.index()]
    }

    pub fn length(&self, axis: Axis) -> f64 {
        self.len[axis.index()]
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        self.len[axis.index()] / self.n[axis.index()] as f64
    }

    /// Cell volume `h = lx*ly*lz / (nx*ny*nz)`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.size() as f64
    }

    pub fn volume(&self) -> f64 {
        self.len[0] * self.len[1] * self.len[2]
    }

    /// Wavenumbers of `axis` in FFT order.
    pub fn wavenumbers(&self, axis: Axis) -> &[f64] {
        &self.k[axis.index()]
    }

    /// Coordinate of sample `i` along `axis`; the box is centered at 0.
    pub fn coordinate(&self, axis: Axis, i: usize) -> f64 {
        let a = axis.index();
        -0.5 * self.len[a] + i as f64 * self.len[a] / self.n[a] as f64
    }

    pub fn coordinates(&self, axis: Axis) -> Vec<f64> {
        (0..self.n(axis)).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Signed integer mode index for FFT-order position `i` on an axis of `n` samples.
    pub fn mode_index(n: usize, i: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    #[inline]
    pub fn flat(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n[1] + iy) * self.n[2] + iz
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let iz = idx % self.n[2];
        let r = idx / self.n[2];
        [r / self.n[1], r % self.n[1], iz]
    }

    /// Largest retained mode index per axis under the 2/3 rule.
    pub fn dealias_cutoff(&self, axis: Axis) -> i64 {
        ((self.n(axis) - 1) / 3) as i64
    }

    /// Unnormalized in-place 3D DFT (forward: `e^{-i k x}`).
    pub(crate) fn fft3(&self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.size());
        let [nx, ny, nz] = self.n;
        let pick = |a: usize| {
            if forward {
                self.plans[a].forward.clone()
            } else {
                self.plans[a].inverse.clone()
            }
        };
        // z: contiguous rows
        let fz = pick(2);
        data.par_chunks_mut(nz).for_each_init(
            || vec![Complex64::default(); fz.get_inplace_scratch_len()],
            |scratch, row| fz.process_with_scratch(row, scratch),
        );
        // y: strided within each x-slab
        let fy = pick(1);
        data.par_chunks_mut(ny * nz).for_each_init(
            || {
                (
                    vec![Complex64::default(); ny * nz],
                    vec![Complex64::default(); fy.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), slab| {
                strided_pass(slab, buf, ny, nz, 0, nz, &*fy, scratch);
            },
        );
        // x: blocks of contiguous (y,z) columns
        let fx = pick(0);
        let stride = ny * nz;
        let block = BLOCK.min(stride);
        let starts: Vec<usize> = (0..stride).step_by(block).collect();
        let shared: &[Complex64] = data;
        let done: Vec<Vec<Complex64>> = starts
            .par_iter()
            .map_init(
                || vec![Complex64::default(); fx.get_inplace_scratch_len()],
                |scratch, &c0| {
                    let b = block.min(stride - c0);
                    let mut buf = vec![Complex64::default(); b * nx];
                    gather(shared, &mut buf, nx, stride, c0, b);
                    fx.process_with_scratch(&mut buf, scratch);
                    buf
                },
            )
            .collect();
        for (&c0, buf) in starts.iter().zip(&done) {
            let b = buf.len() / nx;
            scatter(data, buf, nx, stride, c0, b);
        }
    }
}

const BLOCK: usize = 64;

/// Copies `b` lines of length `n` (line `j` holds `src[i*stride + c0 + j]`)
/// into contiguous rows of `buf`.
fn gather(src: &[Complex64], buf: &mut [Complex64], n: usize, stride: usize, c0: usize, b: usize) {
    for i in 0..n {
        let row = &src[i * stride + c0..i * stride + c0 + b];
        for (j, v) in row.iter().enumerate() {
            buf[j * n + i] = *v;
        }
    }
}

fn scatter(dst: &mut [Complex64], buf: &[Complex64], n: usize, stride: usize, c0: usize, b: usize) {
    for i in 0..n {
        let row = &mut dst[i * stride + c0..i * stride + c0 + b];
        for (j, v) in row.iter_mut().enumerate() {
            *v = buf[j * n + i];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn strided_pass(
    slab: &mut [Complex64],
    buf: &mut [Complex64],
    n: usize,
    stride: usize,
    c0: usize,
    b: usize,
    fft: &dyn Fft<f64>,
    scratch: &mut [Complex64],
) {
    let buf = &mut buf[..n * b];
    gather(slab, buf, n, stride, c0, b);
    fft.process_with_scratch(buf, scratch);
    scatter(slab, buf, n, stride, c0, b);
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / l;
    (0..n).map(|i| dk * Grid3::mode_index(n, i) as f64).collect()
}
