//! Locating the normal/collective boundary from the coherent minimizer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AtomicConfiguration, Couplings, ModelParams};
use crate::surface::{minimize_surface, MinimizeStrategy};

#[derive(Debug, Clone, Copy)]
pub struct BoundaryScan {
    pub lo: f64,
    pub hi: f64,
    /// Grid points in [lo, hi] checked before bisecting.
    pub count: usize,
    /// Final bracket width.
    pub tolerance: f64,
    /// ϱ_c above this counts as collective.
    pub threshold: f64,
}

impl Default for BoundaryScan {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 2.0,
            count: 41,
            tolerance: 1e-7,
            threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryReport {
    /// Midpoint of the final bracket.
    pub mu_c: f64,
    pub bracket: (f64, f64),
    /// √(ΩΔ)/2 (full) or √(ΩΔ) (rotating-wave) for V in double resonance.
    pub analytic: Option<f64>,
    pub minimizations: usize,
}

/// Couplings μ·d for the unit vector d along `direction`.
fn along(direction: &Couplings, mu: f64) -> Couplings {
    let norm = direction.as_array().iter().map(|x| x * x).sum::<f64>().sqrt();
    direction.scaled(mu / norm)
}

fn field_radius(template: &ModelParams, direction: &Couplings, mu: f64, strategy: &MinimizeStrategy) -> Result<f64> {
    let params = template.with_couplings(along(direction, mu));
    match minimize_surface(&params, strategy) {
        Ok(cp) => Ok(cp.rho),
        Err(Error::NonConvergence { best }) => Ok(best.rho),
        Err(e) => Err(e),
    }
}

/// Analytic boundary for V in double resonance, if it applies.
pub fn analytic_boundary(template: &ModelParams) -> Option<f64> {
    if template.config != AtomicConfiguration::V || !template.is_double_resonance() {
        return None;
    }
    let gap = template.level_energies[2] - template.level_energies[0];
    let full = 0.5 * (template.field_freq * gap).sqrt();
    Some(if template.rwa { 2.0 * full } else { full })
}

/// Scan μ along `direction` (normalized) for the first coupling whose
/// minimizer returns ϱ_c above the threshold, then bisect.
pub fn locate_boundary(
    template: &ModelParams,
    direction: &Couplings,
    scan: &BoundaryScan,
    strategy: &MinimizeStrategy,
) -> Result<BoundaryReport> {
    let not_found = || Error::NoTransitionFound {
        lo: scan.lo,
        hi: scan.hi,
    };
    if direction.max() <= 0.0 {
        return Err(Error::InvalidParams("coupling direction must be nonzero".into()));
    }
    template.with_couplings(along(direction, 1.0)).validate()?;
    let count = scan.count.max(2);
    let grid: Vec<f64> = (0..count)
        .map(|k| scan.lo + (scan.hi - scan.lo) * k as f64 / (count - 1) as f64)
        .collect();
    let radii: Vec<f64> = grid
        .par_iter()
        .map(|&mu| field_radius(template, direction, mu, strategy))
        .collect::<Result<_>>()?;
    let mut minimizations = count;
    let first = radii.iter().position(|&r| r > scan.threshold).ok_or_else(not_found)?;
    if first == 0 {
        return Err(not_found());
    }
    let (mut lo, mut hi) = (grid[first - 1], grid[first]);
    while hi - lo > scan.tolerance {
        let mid = 0.5 * (lo + hi);
        minimizations += 1;
        if field_radius(template, direction, mid, strategy)? > scan.threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BoundaryReport {
        mu_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
        analytic: analytic_boundary(template),
        minimizations,
    })
}
