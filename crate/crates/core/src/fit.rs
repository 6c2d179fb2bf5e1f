//! Least-squares fit of a normal curve A·exp(−(x − m)²/(2σ²)) to samples.

use crate::minimize::{nelder_mead_restarting, NelderMeadOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    /// Sum of squared residuals.
    pub residual: f64,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-(x - self.mean).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Fit by Nelder–Mead from moment-based starting values. Returns `None`
/// for fewer than three points or a non-positive total weight.
pub fn fit_gaussian(xs: &[f64], ys: &[f64]) -> Option<GaussianFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let total: f64 = ys.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let m0 = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / total;
    let v0 = xs.iter().zip(ys).map(|(x, y)| (x - m0).powi(2) * y).sum::<f64>() / total;
    let s0 = v0.sqrt().max(1e-6);
    let a0 = ys.iter().copied().fold(f64::MIN, f64::max);
    let sse = |p: &[f64]| {
        let g = GaussianFit {
            amplitude: p[0],
            mean: p[1],
            sigma: p[2].abs().max(1e-12),
            residual: 0.0,
        };
        xs.iter().zip(ys).map(|(&x, &y)| (g.eval(x) - y).powi(2)).sum::<f64>()
    };
    let opts = NelderMeadOptions {
        ftol: 1e-15,
        xtol: 1e-10,
        max_evals: 50_000,
        max_restarts: 12,
    };
    let r = nelder_mead_restarting(sse, &[a0, m0, s0], &[0.1 * a0, 0.1 * s0, 0.1 * s0], &opts);
    Some(GaussianFit {
        amplitude: r.x[0],
        mean: r.x[1],
        sigma: r.x[2].abs(),
        residual: r.fx,
    })
}
