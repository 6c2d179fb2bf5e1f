//! Coherent-state energy surfaces and their minimization.
//!
//! The trial state is the product of a Weyl–Heisenberg coherent state |α}
//! for the field and a totally symmetric U(3) coherent state |γ} for the
//! atoms. Expectation values follow from the generator matrix elements
//!
//!   {γ|A_jk|γ'}        = N γ_j* γ'_k (γ*·γ')^{N−1}
//!   {γ|A_ij A_kl|γ'}   = N γ_i* γ'_l [(N−1) γ'_j γ_k* (γ*·γ')^{N−2} + δ_jk (γ*·γ')^{N−1}]

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::minimize::{nelder_mead_restarting, NelderMeadOptions};
use crate::model::{CoherentPoint, ModelParams, PolarPoint};

/// Expectation of the full Hamiltonian in the normalized product coherent
/// state (`params.rwa` is ignored).
pub fn energy_full(params: &ModelParams, point: &CoherentPoint) -> f64 {
    let g = point.gamma();
    let norm = point.gamma_norm_sq();
    let n = f64::from(params.n_atoms);
    let level: f64 = (0..3).map(|i| params.level_energies[i] * g[i].norm_sqr()).sum();
    let quadrature = 2.0 * point.alpha.re;
    let mut dipole = 0.0;
    for (i, j) in crate::model::Couplings::PAIRS {
        let mu = params.couplings.get(i, j);
        if mu != 0.0 {
            dipole += mu * 2.0 * (g[i].conj() * g[j]).re;
        }
    }
    params.field_freq * point.alpha.norm_sqr() + (n * level - n.sqrt() * dipole * quadrature) / norm
}

/// [`energy_full`] in polar coordinates.
pub fn energy_full_polar(params: &ModelParams, p: &PolarPoint) -> f64 {
    let n = f64::from(params.n_atoms);
    let [w1, w2, w3] = params.level_energies;
    let c = &params.couplings;
    let denom = 1.0 + p.rho2 * p.rho2 + p.rho3 * p.rho3;
    let atomic = n * (w1 + w2 * p.rho2 * p.rho2 + w3 * p.rho3 * p.rho3);
    let bracket = c.mu12 * p.rho2 * p.phi2.cos()
        + c.mu13 * p.rho3 * p.phi3.cos()
        + c.mu23 * p.rho2 * p.rho3 * (p.phi2 - p.phi3).cos();
    params.field_freq * p.rho * p.rho + (atomic - 4.0 * n.sqrt() * bracket * p.rho * p.phi.cos()) / denom
}

/// Expectation of the rotating-wave Hamiltonian (`params.rwa` is ignored).
pub fn energy_rwa(params: &ModelParams, point: &CoherentPoint) -> f64 {
    let g = point.gamma();
    let norm = point.gamma_norm_sq();
    let n = f64::from(params.n_atoms);
    let level: f64 = (0..3).map(|i| params.level_energies[i] * g[i].norm_sqr()).sum();
    let mut dipole = 0.0;
    for (i, j) in crate::model::Couplings::PAIRS {
        let mu = params.couplings.get(i, j);
        if mu != 0.0 {
            // γ_i* γ_j α* + γ_j* γ_i α
            dipole += mu * 2.0 * (g[i].conj() * g[j] * point.alpha.conj()).re;
        }
    }
    params.field_freq * point.alpha.norm_sqr() + (n * level - n.sqrt() * dipole) / norm
}

/// [`energy_rwa`] in polar coordinates.
pub fn energy_rwa_polar(params: &ModelParams, p: &PolarPoint) -> f64 {
    let n = f64::from(params.n_atoms);
    let [w1, w2, w3] = params.level_energies;
    let c = &params.couplings;
    let denom = 1.0 + p.rho2 * p.rho2 + p.rho3 * p.rho3;
    let atomic = n * (w1 + w2 * p.rho2 * p.rho2 + w3 * p.rho3 * p.rho3);
    let bracket = c.mu12 * p.rho2 * (p.phi2 - p.phi).cos()
        + c.mu13 * p.rho3 * (p.phi3 - p.phi).cos()
        + c.mu23 * p.rho2 * p.rho3 * (p.phi3 - p.phi2 - p.phi).cos();
    params.field_freq * p.rho * p.rho + (atomic - 2.0 * n.sqrt() * p.rho * bracket) / denom
}

/// Surface selected by `params.rwa`.
pub fn energy(params: &ModelParams, point: &CoherentPoint) -> f64 {
    if params.rwa {
        energy_rwa(params, point)
    } else {
        energy_full(params, point)
    }
}

/// Coefficient of the interaction term once the angles are eliminated.
fn interaction_factor(params: &ModelParams) -> f64 {
    if params.rwa {
        2.0
    } else {
        4.0
    }
}

/// Surface with all phases at their minimizing values (φ = φ₂ = φ₃ = 0),
/// as a function of the radii. Smooth on all of ℝ³.
pub fn radial_energy(params: &ModelParams, radii: [f64; 3]) -> f64 {
    f64::from(params.n_atoms) * params.level_energies[0] + shifted_radial_energy(params, radii)
}

/// `radial_energy − N ω₁`, which is exactly zero at the origin.
fn shifted_radial_energy(params: &ModelParams, [rho, rho2, rho3]: [f64; 3]) -> f64 {
    let n = f64::from(params.n_atoms);
    let [w1, w2, w3] = params.level_energies;
    let c = &params.couplings;
    let denom = 1.0 + rho2 * rho2 + rho3 * rho3;
    let atomic = n * ((w2 - w1) * rho2 * rho2 + (w3 - w1) * rho3 * rho3);
    let bracket = c.mu12 * rho2 + c.mu13 * rho3 + c.mu23 * rho2 * rho3;
    params.field_freq * rho * rho + (atomic - interaction_factor(params) * n.sqrt() * rho * bracket) / denom
}

/// The discrete angle choice realizing the cosine conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAssignment {
    pub phi: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl PhaseAssignment {
    /// φ = φ₂ = φ₃ = 0 satisfies the conditions of both surfaces when all
    /// couplings are non-negative.
    pub const ZERO: Self = Self {
        phi: 0.0,
        phi2: 0.0,
        phi3: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub rho: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub phases: PhaseAssignment,
    pub energy: f64,
    pub hessian_eigenvalues: [f64; 3],
    pub hessian_positive: bool,
}

impl CriticalPoint {
    pub fn radii(&self) -> [f64; 3] {
        [self.rho, self.rho2, self.rho3]
    }

    pub fn point(&self) -> CoherentPoint {
        CoherentPoint::from_polar(&PolarPoint {
            rho: self.rho,
            phi: self.phases.phi,
            rho2: self.rho2,
            phi2: self.phases.phi2,
            rho3: self.rho3,
            phi3: self.phases.phi3,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeStrategy {
    /// Lattice of starts: this many points per radial axis over [0, ϱ_max].
    pub starts_per_axis: usize,
    /// Overrides ϱ_max = max(4, 4√N max μ / Ω).
    pub rho_max: Option<f64>,
    pub local: NelderMeadOptions,
    /// Central-difference step for the hessian.
    pub hessian_step: f64,
    /// Hessian is positive if its smallest eigenvalue exceeds
    /// `hessian_tol · max(1, |E|)`.
    pub hessian_tol: f64,
}

impl Default for MinimizeStrategy {
    fn default() -> Self {
        Self {
            starts_per_axis: 4,
            rho_max: None,
            local: NelderMeadOptions::default(),
            hessian_step: 1e-4,
            hessian_tol: 1e-8,
        }
    }
}

impl MinimizeStrategy {
    fn rho_max(&self, params: &ModelParams) -> f64 {
        self.rho_max
            .unwrap_or_else(|| (4.0f64).max(4.0 * params.sqrt_n() * params.couplings.max() / params.field_freq))
    }
}

fn hessian(params: &ModelParams, x: [f64; 3], h: f64) -> Matrix3<f64> {
    let f = |y: [f64; 3]| shifted_radial_energy(params, y);
    let mut out = Matrix3::zeros();
    let f0 = f(x);
    for i in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        out[(i, i)] = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        for j in (i + 1)..3 {
            let shifted = |si: f64, sj: f64| {
                let mut y = x;
                y[i] += si * h;
                y[j] += sj * h;
                f(y)
            };
            let v = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0)) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn finish(params: &ModelParams, radii: [f64; 3], strategy: &MinimizeStrategy) -> CriticalPoint {
    let energy = radial_energy(params, radii);
    let eig = hessian(params, radii, strategy.hessian_step).symmetric_eigenvalues();
    let mut eigs = [eig[0], eig[1], eig[2]];
    eigs.sort_by(f64::total_cmp);
    let threshold = strategy.hessian_tol * energy.abs().max(1.0);
    CriticalPoint {
        rho: radii[0],
        rho2: radii[1],
        rho3: radii[2],
        phases: PhaseAssignment::ZERO,
        energy,
        hessian_eigenvalues: eigs,
        hessian_positive: eigs[0] > threshold,
    }
}

fn lexicographic_less(a: &(f64, [f64; 3]), b: &(f64, [f64; 3])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.1 < b.1,
    }
}

/// Lowest local minimum of the angle-reduced surface over ϱ, ϱ₂, ϱ₃ ≥ 0.
///
/// Starts sit on a fixed lattice, so the result is deterministic. Each start
/// runs a restarted Nelder–Mead on E(|ϱ|, |ϱ₂|, |ϱ₃|); the fold is exact
/// because with non-negative couplings flipping a radius's sign can only
/// raise the interaction term. The origin is always a critical point and
/// enters the reduction as a candidate.
pub fn minimize_surface(params: &ModelParams, strategy: &MinimizeStrategy) -> Result<CriticalPoint> {
    let rho_max = strategy.rho_max(params);
    let k = strategy.starts_per_axis.max(1);
    let grid: Vec<f64> = if k == 1 {
        vec![0.5 * rho_max]
    } else {
        (0..k).map(|i| rho_max * i as f64 / (k - 1) as f64).collect()
    };
    let mut starts = Vec::with_capacity(k * k * k);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                starts.push([a, b, c]);
            }
        }
    }
    let step = [0.1 * rho_max; 3];

    let folded = |x: &[f64]| shifted_radial_energy(params, [x[0].abs(), x[1].abs(), x[2].abs()]);
    let runs: Vec<(f64, [f64; 3], bool)> = starts
        .par_iter()
        .map(|s| {
            let r = nelder_mead_restarting(folded, s, &step, &strategy.local);
            let radii = [r.x[0].abs(), r.x[1].abs(), r.x[2].abs()];
            (folded(&radii), radii, r.converged)
        })
        .collect();

    let mut best = (0.0, [0.0; 3]);
    for (fx, radii, _) in &runs {
        let cand = (*fx, *radii);
        if lexicographic_less(&cand, &best) {
            best = cand;
        }
    }
    let point = finish(params, best.1, strategy);
    if !runs.iter().any(|r| r.2) {
        return Err(Error::NonConvergence { best: Box::new(point) });
    }
    Ok(point)
}

/// Expectation values and squared fluctuations for one approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableReport {
    pub energy: f64,
    pub n_photons: f64,
    pub populations: [f64; 3],
    pub m_excitations: f64,
    pub var_photons: f64,
    pub var_populations: [f64; 3],
    pub var_m: f64,
}

impl ObservableReport {
    /// Q_M = Var(M)/⟨M⟩ − 1.
    pub fn mandel_q(&self) -> Result<f64> {
        mandel_q(self.m_excitations, self.var_m)
    }
}

pub(crate) fn mandel_q(mean: f64, var: f64) -> Result<f64> {
    if mean == 0.0 {
        return Err(Error::IndeterminateQ);
    }
    Ok(var / mean - 1.0)
}

/// Normalized ⟨A_jk⟩ (zero-based level indices) in the atomic coherent state.
pub fn coherent_generator(point: &CoherentPoint, n_atoms: u32, j: usize, k: usize) -> Complex64 {
    let g = point.gamma();
    g[j].conj() * g[k] * (f64::from(n_atoms) / point.gamma_norm_sq())
}

/// Normalized ⟨A_ij A_kl⟩ in the atomic coherent state.
pub fn coherent_generator_pair(point: &CoherentPoint, n_atoms: u32, [i, j, k, l]: [usize; 4]) -> Complex64 {
    let g = point.gamma();
    let norm = point.gamma_norm_sq();
    let n = f64::from(n_atoms);
    let delta = if j == k { 1.0 } else { 0.0 };
    g[i].conj() * g[l] * (n / norm) * ((n - 1.0) * g[j] * g[k].conj() / norm + delta)
}

/// Observables of the product coherent state; the energy follows
/// `params.rwa`.
pub fn coherent_expectations(params: &ModelParams, point: &CoherentPoint) -> ObservableReport {
    let n = params.n_atoms;
    let x = point.alpha.norm_sqr();
    let [_, l2, l3] = params.config.lambdas().map(f64::from);
    let pop = |i: usize| coherent_generator(point, n, i, i).re;
    let pair = |i: usize, j: usize| coherent_generator_pair(point, n, [i, i, j, j]).re;

    let populations = [pop(0), pop(1), pop(2)];
    let var_populations = [0, 1, 2].map(|i| (pair(i, i) - populations[i].powi(2)).max(0.0));

    let atomic_m = l2 * populations[1] + l3 * populations[2];
    let atomic_m_sq = l2 * l2 * pair(1, 1) + l3 * l3 * pair(2, 2) + 2.0 * l2 * l3 * pair(1, 2);
    let m = x + atomic_m;
    // field and atoms are uncorrelated: ⟨(a†a)²⟩ = x² + x
    let m_sq = x * x + x + 2.0 * x * atomic_m + atomic_m_sq;

    ObservableReport {
        energy: energy(params, point),
        n_photons: x,
        populations,
        m_excitations: m,
        var_photons: x,
        var_populations,
        var_m: (m_sq - m * m).max(0.0),
    }
}

/// Poisson photon-number distribution of the field coherent state.
pub fn coherent_photon_probability(point: &CoherentPoint, nu: u64) -> f64 {
    poisson(point.alpha.norm_sqr(), nu)
}

pub(crate) fn poisson(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * mean.ln() - mean - ln_factorial(k)).exp()
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomicConfiguration, Couplings};
    use approx::assert_relative_eq;

    fn v_params(mu: f64, theta: f64, n: u32) -> ModelParams {
        ModelParams::v_reference(mu, theta, n).unwrap()
    }

    #[test]
    fn vacuum_energy_is_zero() {
        let p = v_params(0.7, 0.3, 3);
        assert_eq!(energy_full(&p, &CoherentPoint::origin()), 0.0);
        assert_eq!(energy_rwa(&p, &CoherentPoint::origin()), 0.0);
    }

    #[test]
    fn decoupled_field_energy() {
        let p = v_params(0.0, 0.0, 2);
        let pt = CoherentPoint::new(Complex64::new(0.0, 1.7), 0.0.into(), 0.0.into());
        assert_relative_eq!(energy_full(&p, &pt), 1.7 * 1.7, max_relative = 1e-15);
    }

    #[test]
    fn polar_radii_zero_gives_ground_level() {
        let mut p = v_params(0.4, 0.2, 3);
        p.level_energies = [0.25, 1.0, 1.0];
        let polar = PolarPoint {
            rho: 0.0,
            phi: 0.0,
            rho2: 0.0,
            phi2: 0.0,
            rho3: 0.0,
            phi3: 0.0,
        };
        assert_relative_eq!(energy_full_polar(&p, &polar), 0.75, max_relative = 1e-15);
        assert_relative_eq!(energy_rwa_polar(&p, &polar), 0.75, max_relative = 1e-15);
    }

    #[test]
    fn quadrature_phase_kills_interaction() {
        let p = v_params(0.9, 0.4, 2);
        let free = p.with_couplings(Couplings::default());
        let polar = PolarPoint {
            rho: 1.3,
            phi: std::f64::consts::FRAC_PI_2,
            rho2: 0.4,
            phi2: 0.2,
            rho3: 0.8,
            phi3: -0.3,
        };
        assert_relative_eq!(
            energy_full_polar(&p, &polar),
            energy_full_polar(&free, &polar),
            epsilon = 1e-14
        );
    }

    #[test]
    fn v_collective_surface_value() {
        let p = v_params(1.0, std::f64::consts::FRAC_PI_4, 2);
        let r2 = (0.5f64 * 0.75 / 1.25).sqrt();
        let rho = (1.875f64).sqrt();
        let e = energy_full(&p, &CoherentPoint::real(rho, r2, r2));
        assert_relative_eq!(e, -1.125, max_relative = 1e-12);
    }

    #[test]
    fn minimizer_normal_regime_returns_origin() {
        let p = v_params(0.4, std::f64::consts::FRAC_PI_4, 2);
        let cp = minimize_surface(&p, &MinimizeStrategy::default()).unwrap();
        assert!(cp.radii().iter().all(|r| *r < 1e-6), "{cp:?}");
        assert!(cp.energy.abs() < 1e-12);
        assert!(cp.hessian_positive);
    }

    #[test]
    fn minimizer_decoupled_returns_origin() {
        for config in AtomicConfiguration::ALL {
            let p = ModelParams::new(config, 1.0, [0.0, 0.5, 1.2], Couplings::default(), 3, false).unwrap();
            let cp = minimize_surface(&p, &MinimizeStrategy::default()).unwrap();
            assert_eq!(cp.radii(), [0.0; 3]);
        }
    }

    #[test]
    fn minimizer_v_collective() {
        let p = v_params(1.0, std::f64::consts::FRAC_PI_4, 2);
        let cp = minimize_surface(&p, &MinimizeStrategy::default()).unwrap();
        assert_relative_eq!(cp.energy, -1.125, max_relative = 1e-10);
        assert_relative_eq!(cp.rho, 1.369306393762915, max_relative = 1e-7);
        assert_relative_eq!(cp.rho2, 0.5477225575051661, max_relative = 1e-7);
        assert_relative_eq!(cp.rho3, 0.5477225575051661, max_relative = 1e-7);
        assert!(cp.hessian_positive);
        // no radius perturbation lowers the energy
        for i in 0..3 {
            for s in [-1e-4, 1e-4] {
                let mut r = cp.radii();
                r[i] += s;
                assert!(radial_energy(&p, r) >= cp.energy);
            }
        }
    }

    #[test]
    fn coherent_ground_populations() {
        let p = v_params(0.5, 0.3, 4);
        let rep = coherent_expectations(&p, &CoherentPoint::real(0.7, 0.0, 0.0));
        assert_eq!(rep.populations, [4.0, 0.0, 0.0]);
        assert_eq!(rep.var_populations, [0.0; 3]);
    }

    #[test]
    fn coherent_m_statistics_example() {
        let p = v_params(1.0, std::f64::consts::FRAC_PI_4, 2);
        let g = 0.3f64.sqrt();
        let rep = coherent_expectations(&p, &CoherentPoint::real(1.875f64.sqrt(), g, g));
        assert_relative_eq!(rep.m_excitations, 2.625, max_relative = 1e-14);
        assert_relative_eq!(rep.var_m, 2.34375, max_relative = 1e-13);
        assert_relative_eq!(rep.mandel_q().unwrap(), -0.10714285714285714, max_relative = 1e-12);
    }

    #[test]
    fn coherent_q_indeterminate_at_vacuum() {
        let p = v_params(0.2, 0.3, 2);
        let rep = coherent_expectations(&p, &CoherentPoint::origin());
        assert!(matches!(rep.mandel_q(), Err(Error::IndeterminateQ)));
    }
}
