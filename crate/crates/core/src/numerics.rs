//! Small numerical helpers shared across modules: compensated sums,
//! time-quadrature weights and least-squares line fits.

use crate::error::{DzkError, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Trapezoidal weights on a uniform grid of `n` nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => {
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            w
        }
    }
}

/// Weights integrating over `[t_0, t_j]` with the samples at nodes `0..=j`
/// (or `0..=3` when `j == 1`) of a uniform grid with spacing `h`.
///
/// Even `j` uses composite Simpson; odd `j >= 3` finishes with the 3/8 rule
/// on the last three panels; `j == 1` uses the four-point rule that
/// integrates cubics exactly over the first panel. Returned weights are
/// indexed by node.
pub fn cumulative_weights(j: usize, h: f64) -> Vec<f64> {
    match j {
        0 => vec![0.0],
        1 => vec![9.0 * h / 24.0, 19.0 * h / 24.0, -5.0 * h / 24.0, h / 24.0],
        _ => {
            let mut w = vec![0.0; j + 1];
            let simpson_end = if j % 2 == 0 { j } else { j - 3 };
            let mut i = 0;
            while i < simpson_end {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
                i += 2;
            }
            if j % 2 == 1 {
                let b = simpson_end;
                let c = 3.0 * h / 8.0;
                w[b] += c;
                w[b + 1] += 3.0 * c;
                w[b + 2] += 3.0 * c;
                w[b + 3] += c;
            }
            w
        }
    }
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(DzkError::TooFewPoints(n.min(y.len())));
    }
    let nf = n as f64;
    let mx = compensated_sum(x.iter().copied()) / nf;
    let my = compensated_sum(y.iter().copied()) / nf;
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    if sxx <= 0.0 {
        return Err(DzkError::InvalidParameter("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = compensated_sum(
        x.iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2)),
    );
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_weights_integrate_cubics() {
        let h = 0.1;
        for j in 1..12 {
            let w = cumulative_weights(j, h);
            let q: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| {
                    let t = i as f64 * h;
                    wi * (1.0 + 2.0 * t - t * t + 3.0 * t * t * t)
                })
                .sum();
            let tj = j as f64 * h;
            let exact = tj + tj * tj - tj.powi(3) / 3.0 + 0.75 * tj.powi(4);
            assert!((q - exact).abs() < 1e-13, "j={j} q={q} exact={exact}");
        }
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|a| 2.5 - 0.5 * a).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.5).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        assert!(fit_line(&x[..2], &y[..2]).is_err());
    }
}
