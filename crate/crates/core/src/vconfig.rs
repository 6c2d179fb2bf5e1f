//! Closed forms for the V configuration in double resonance (ω₂ = ω₃).
//!
//! With μ₁₂ = μ cos θ, μ₁₃ = μ sin θ and gap Δ = ω₃ − ω₁, the coherent
//! surface has a nontrivial minimum iff μ² > ΩΔ/4. Functions whose name ends
//! in `_printed` evaluate the reference closed forms, which assume the frame
//! Ω = ω₂ = ω₃ = 1, ω₁ = 0; the `_direct` variants go through [`crate::sacs`]
//! and work for any frequencies.
//!
//! At and below the boundary every minimum collapses to the origin, where
//! the odd SACS is undefined. Odd-branch quantities there are reported as
//! limits along the path the minima follow as μ → μ_c⁺, namely
//! ε·(√(NΔ/Ω), cos θ, sin θ) with ε → 0.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{regime_v, AtomicConfiguration, CoherentPoint, Couplings, ModelParams, ParityBranch, Regime};
use crate::sacs::{self, SacsPoint};
use crate::surface::{coherent_expectations, poisson, ObservableReport};

/// V-configuration parameters in double resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VParams {
    pub mu: f64,
    /// Mixing angle in [0, π/2].
    pub theta: f64,
    /// Field frequency Ω.
    pub field_freq: f64,
    /// Ground-level energy ω₁.
    pub level1: f64,
    /// Common energy ω₂ = ω₃ of the excited levels.
    pub level3: f64,
    pub n_atoms: u32,
}

impl VParams {
    pub fn new(mu: f64, theta: f64, field_freq: f64, level1: f64, level3: f64, n_atoms: u32) -> Result<Self> {
        let vp = Self {
            mu,
            theta,
            field_freq,
            level1,
            level3,
            n_atoms,
        };
        vp.validate()?;
        Ok(vp)
    }

    /// Ω = ω₂ = ω₃ = 1, ω₁ = 0.
    pub fn reference(mu: f64, theta: f64, n_atoms: u32) -> Result<Self> {
        Self::new(mu, theta, 1.0, 0.0, 1.0, n_atoms)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return bad(format!("μ must be finite and ≥ 0, got {}", self.mu));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.theta) {
            return bad(format!("θ must lie in [0, π/2], got {}", self.theta));
        }
        self.to_model_params().map(|_| ())
    }

    pub fn couplings(&self) -> Couplings {
        Couplings::new(self.mu * self.theta.cos(), self.mu * self.theta.sin(), 0.0)
    }

    pub fn to_model_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            AtomicConfiguration::V,
            self.field_freq,
            [self.level1, self.level3, self.level3],
            self.couplings(),
            self.n_atoms,
            false,
        )
    }

    /// Inverse of [`Self::to_model_params`]; requires V, ω₂ = ω₃, μ₂₃ = 0
    /// and no rotating-wave truncation.
    pub fn from_model_params(p: &ModelParams) -> Result<Self> {
        regime_v(p)?;
        if p.rwa {
            return Err(Error::WrongConfiguration {
                required: "full Hamiltonian".into(),
                actual: "rotating-wave approximation".into(),
            });
        }
        let c = p.couplings;
        Self::new(
            c.mu12.hypot(c.mu13),
            c.mu13.atan2(c.mu12),
            p.field_freq,
            p.level_energies[0],
            p.level_energies[2],
            p.n_atoms,
        )
    }

    /// Δ = ω₃ − ω₁.
    pub fn gap(&self) -> f64 {
        self.level3 - self.level1
    }

    /// √(ΩΔ)/2.
    pub fn critical_coupling(&self) -> f64 {
        0.5 * (self.field_freq * self.gap()).sqrt()
    }

    pub fn regime(&self) -> Regime {
        if self.mu * self.mu > self.field_freq * self.gap() / 4.0 {
            Regime::Collective
        } else {
            Regime::Normal
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn is_reference_frame(&self) -> bool {
        self.field_freq == 1.0 && self.level1 == 0.0 && self.level3 == 1.0
    }

    fn require_reference_frame(&self) -> Result<()> {
        if self.is_reference_frame() {
            Ok(())
        } else {
            Err(Error::UnsupportedFrame(format!(
                "Ω = {}, ω₁ = {}, ω₂ = ω₃ = {}",
                self.field_freq, self.level1, self.level3
            )))
        }
    }

    fn n(&self) -> f64 {
        f64::from(self.n_atoms)
    }
}

/// Which state the photon and M statistics refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approximation {
    Coherent,
    Even,
    Odd,
}

impl Approximation {
    pub fn branch(self) -> Option<ParityBranch> {
        match self {
            Self::Coherent => None,
            Self::Even => Some(ParityBranch::Even),
            Self::Odd => Some(ParityBranch::Odd),
        }
    }
}

impl From<ParityBranch> for Approximation {
    fn from(b: ParityBranch) -> Self {
        match b {
            ParityBranch::Even => Self::Even,
            ParityBranch::Odd => Self::Odd,
        }
    }
}

/// r² = |γ₂|² + |γ₃|² at the minimum.
fn atomic_radius_sq(vp: &VParams) -> f64 {
    let q = vp.field_freq * vp.gap() / 4.0;
    let m2 = vp.mu * vp.mu;
    (m2 - q) / (m2 + q)
}

/// (ϱ_c, ϱ₂c, ϱ₃c); all zero in the normal regime.
pub fn critical_point_v(vp: &VParams) -> [f64; 3] {
    if vp.regime() == Regime::Normal {
        return [0.0; 3];
    }
    let r2 = atomic_radius_sq(vp);
    let r = r2.sqrt();
    let (rho2, rho3) = (
        r * vp.theta.cos(),
        if vp.theta == 0.0 { 0.0 } else { r * vp.theta.sin() },
    );
    let c = vp.couplings();
    let rho = 2.0 * vp.n().sqrt() * (c.mu12 * rho2 + c.mu13 * rho3) / (vp.field_freq * (1.0 + r2));
    [rho, rho2, rho3]
}

/// The minimum as a point with all phases zero.
pub fn critical_coherent_point(vp: &VParams) -> CoherentPoint {
    let [a, g2, g3] = critical_point_v(vp);
    CoherentPoint::real(a, g2, g3)
}

/// Direction ε⁻¹·(α, γ₂, γ₃) of the minima as μ → μ_c⁺.
pub fn critical_direction(vp: &VParams) -> CoherentPoint {
    CoherentPoint::real(
        (vp.n() * vp.gap() / vp.field_freq).sqrt(),
        vp.theta.cos(),
        vp.theta.sin(),
    )
}

/// Minimum coherent energy per atom.
pub fn e_min_v(vp: &VParams) -> f64 {
    if vp.regime() == Regime::Normal {
        return vp.level1;
    }
    let q = vp.field_freq * vp.gap() / 4.0;
    let m2 = vp.mu * vp.mu;
    vp.level1 - (m2 - q).powi(2) / (vp.field_freq * m2)
}

/// Mean and variance of the photon number at the minimum (equal, since
/// the field is coherent).
pub fn photon_stats_v(vp: &VParams) -> (f64, f64) {
    if vp.regime() == Regime::Normal {
        return (0.0, 0.0);
    }
    let q = vp.field_freq * vp.gap() / 4.0;
    let m2 = vp.mu * vp.mu;
    let mean = vp.n() * (m2 - q) * (m2 + q) / (vp.field_freq.powi(2) * m2);
    (mean, mean)
}

/// Normal-regime SACS energy per atom: ω₁ for the even branch and
/// ω₁ + ΩΔ/(N(Ω + Δ)) for the odd branch (the boundary-path limit).
pub fn normal_regime_sacs_energy(vp: &VParams, branch: ParityBranch) -> f64 {
    match branch {
        ParityBranch::Even => vp.level1,
        ParityBranch::Odd => {
            let (w, d) = (vp.field_freq, vp.gap());
            vp.level1 + w * d / (vp.n() * (w + d))
        }
    }
}

/// Reference closed form for the SACS energy per atom,
/// E_coh/N ± 2(μ² − 1/(16μ²)) / (1 ± (2μ e^{μ² − 1/(16μ²)})^{2N});
/// 0 and 1/(2N) in the normal regime.
pub fn sacs_energy_printed(vp: &VParams, branch: ParityBranch) -> Result<f64> {
    vp.require_reference_frame()?;
    if vp.regime() == Regime::Normal {
        return Ok(normal_regime_sacs_energy(vp, branch));
    }
    let mu = vp.mu;
    let c = mu * mu - 1.0 / (16.0 * mu * mu);
    let t = 2.0 * vp.n() * ((2.0 * mu).ln() + c);
    let denom = match branch {
        ParityBranch::Even => 1.0 + t.exp(),
        ParityBranch::Odd => -t.exp_m1(),
    };
    Ok(e_min_v(vp) + branch.sign() * 2.0 * c / denom)
}

/// SACS energy per atom at the coherent minimum, via the general
/// expectation values.
pub fn sacs_energy_direct(vp: &VParams, branch: ParityBranch) -> Result<f64> {
    if vp.regime() == Regime::Normal {
        return Ok(normal_regime_sacs_energy(vp, branch));
    }
    let params = vp.to_model_params()?;
    let sp = SacsPoint::new(critical_coherent_point(vp), branch, AtomicConfiguration::V, vp.n_atoms);
    Ok(sacs::sacs_energy(&params, &sp)? / vp.n())
}

/// Reference closed-form photon distributions: Poisson(ν̄) for the coherent state and
/// Poisson(ν̄)·(1 ± (−1)^ν q)/(1 ± q e^{−2ν̄}) with q = (2μ)^{−2N} for the
/// SACS. Normal regime: δ_{ν0}, δ_{ν0}, ½(δ_{ν0} + δ_{ν1}).
pub fn photon_dist_printed(vp: &VParams, approx: Approximation, nu: u64) -> Result<f64> {
    let normal = vp.regime() == Regime::Normal;
    let delta = |k: u64| if nu == k { 1.0 } else { 0.0 };
    if approx == Approximation::Coherent {
        let (mean, _) = photon_stats_v(vp);
        return Ok(if normal { delta(0) } else { poisson(mean, nu) });
    }
    vp.require_reference_frame()?;
    if normal {
        return Ok(match approx {
            Approximation::Odd => 0.5 * (delta(0) + delta(1)),
            _ => delta(0),
        });
    }
    let (nu_bar, _) = photon_stats_v(vp);
    let sign = if approx == Approximation::Even { 1.0 } else { -1.0 };
    let ln_q = -2.0 * vp.n() * (2.0 * vp.mu).ln();
    let parity = if nu.is_multiple_of(2) { 1.0 } else { -1.0 };
    let num = 1.0 + sign * parity * ln_q.exp();
    let den = 1.0 + sign * (ln_q - 2.0 * nu_bar).exp();
    Ok(poisson(nu_bar, nu) * num / den)
}

/// Photon distribution from the general SACS expression at the minimum.
pub fn photon_dist_direct(vp: &VParams, approx: Approximation, nu: u64) -> Result<f64> {
    if vp.regime() == Regime::Normal {
        // the boundary-path limit, general frame
        let a2 = vp.n() * vp.gap() / vp.field_freq;
        let p1 = a2 / (a2 + vp.n());
        let delta = |k: u64| if nu == k { 1.0 } else { 0.0 };
        return Ok(match approx {
            Approximation::Odd => (1.0 - p1) * delta(0) + p1 * delta(1),
            _ => delta(0),
        });
    }
    let point = critical_coherent_point(vp);
    match approx.branch() {
        None => Ok(poisson(point.alpha.norm_sqr(), nu)),
        Some(b) => sacs::photon_probability(&SacsPoint::new(point, b, AtomicConfiguration::V, vp.n_atoms), nu),
    }
}

/// Q_M = Var(M)/⟨M⟩ − 1 at the minimum. In the normal regime the SACS
/// values are the limits +1 (even) and −1 (odd); the coherent state has
/// ⟨M⟩ = 0 there and the quantity is indeterminate.
pub fn mandel_q_m(vp: &VParams, approx: Approximation) -> Result<f64> {
    let params = vp.to_model_params()?;
    if vp.regime() == Regime::Normal {
        return match approx {
            Approximation::Coherent => Err(Error::IndeterminateQ),
            Approximation::Even => Ok(1.0),
            Approximation::Odd => Ok(-1.0),
        };
    }
    let point = critical_coherent_point(vp);
    match approx.branch() {
        None => coherent_expectations(&params, &point).mandel_q(),
        Some(b) => sacs::expect_m_moments(&SacsPoint::new(point, b, AtomicConfiguration::V, vp.n_atoms))?.q(),
    }
}

/// SACS observables at the coherent minimum. In the normal regime these are
/// the boundary-path limits: the even state is the vacuum with all atoms in
/// level 1, the odd state carries one excitation shared between one photon
/// (weight p₁ = a²/(a² + N), a² = NΔ/Ω) and the excited levels
/// (split cos²θ : sin²θ).
pub fn sacs_observables_v(vp: &VParams, branch: ParityBranch) -> Result<ObservableReport> {
    let params = vp.to_model_params()?;
    if vp.regime() == Regime::Collective {
        let sp = SacsPoint::new(critical_coherent_point(vp), branch, AtomicConfiguration::V, vp.n_atoms);
        return sacs::sacs_observables(&params, &sp);
    }
    let n = vp.n();
    let energy = n * normal_regime_sacs_energy(vp, branch);
    Ok(match branch {
        ParityBranch::Even => ObservableReport {
            energy,
            n_photons: 0.0,
            populations: [n, 0.0, 0.0],
            m_excitations: 0.0,
            var_photons: 0.0,
            var_populations: [0.0; 3],
            var_m: 0.0,
        },
        ParityBranch::Odd => {
            let a2 = n * vp.gap() / vp.field_freq;
            let p1 = a2 / (a2 + n);
            let excited = [
                1.0 - p1,
                (1.0 - p1) * vp.theta.cos().powi(2),
                (1.0 - p1) * vp.theta.sin().powi(2),
            ];
            let bernoulli = |q: f64| q * (1.0 - q);
            ObservableReport {
                energy,
                n_photons: p1,
                populations: [n - excited[0], excited[1], excited[2]],
                m_excitations: 1.0,
                var_photons: bernoulli(p1),
                var_populations: excited.map(bernoulli),
                var_m: 0.0,
            }
        }
    })
}

/// ⟨A₂₂⟩, ⟨A₃₃⟩ given ⟨A₁₁⟩: the excited population splits as cos²θ : sin²θ.
pub fn population_relations(a11: f64, theta: f64, n_atoms: u32) -> (f64, f64) {
    let excited = f64::from(n_atoms) - a11;
    (excited * theta.cos().powi(2), excited * theta.sin().powi(2))
}

/// Reference closed form for the linear entropy
/// (1 − e^{N(16μ⁴−1)/(4μ²)})(1 − (2μ)^{4N}) / [2(1 ± (2μ)^{2N} e^{N(8μ⁴−1)/(4μ²)})²],
/// evaluated in logarithms. Normal regime: boundary-path limits 0 and ½.
pub fn linear_entropy_printed(vp: &VParams, branch: ParityBranch) -> Result<f64> {
    vp.require_reference_frame()?;
    if vp.regime() == Regime::Normal {
        return Ok(normal_regime_entropy(vp, branch.into()));
    }
    let n = vp.n();
    let mu2 = vp.mu * vp.mu;
    let ln2mu = (2.0 * vp.mu).ln();
    let a = n * (16.0 * mu2 * mu2 - 1.0) / (4.0 * mu2);
    let b = 4.0 * n * ln2mu;
    let c = 2.0 * n * ln2mu + n * (8.0 * mu2 * mu2 - 1.0) / (4.0 * mu2);
    // numerator e^{a+b}(e^{−a} − 1)(e^{−b} − 1), denominator 2e^{2c}(e^{−c} ± 1)²,
    // and a + b − 2c = N/(4μ²)
    let tail = match branch {
        ParityBranch::Even => (-c).exp() + 1.0,
        ParityBranch::Odd => (-c).exp_m1(),
    };
    Ok((n / (4.0 * mu2)).exp() * (-a).exp_m1() * (-b).exp_m1() / (2.0 * tail * tail))
}

fn normal_regime_entropy(vp: &VParams, approx: Approximation) -> f64 {
    match approx {
        Approximation::Odd => {
            let (w, d) = (vp.field_freq, vp.gap());
            2.0 * w * d / (w + d).powi(2)
        }
        _ => 0.0,
    }
}

/// 1 − tr ρ² of the atomic state at the minimum.
pub fn linear_entropy_direct(vp: &VParams, approx: Approximation) -> Result<f64> {
    let Some(branch) = approx.branch() else {
        return Ok(sacs::coherent_linear_entropy(&critical_coherent_point(vp)));
    };
    if vp.regime() == Regime::Normal {
        return Ok(normal_regime_entropy(vp, approx));
    }
    sacs::linear_entropy(&SacsPoint::new(
        critical_coherent_point(vp),
        branch,
        AtomicConfiguration::V,
        vp.n_atoms,
    ))
}

/// First μ in (lo, hi] where `f` changes sign from positive, located by a
/// scan of `steps` intervals followed by bisection to `tol`.
fn first_sign_change(lo: f64, hi: f64, steps: usize, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let h = (hi - lo) / steps as f64;
    let mut prev = (lo, f(lo)?);
    for k in 1..=steps {
        let mu = lo + h * k as f64;
        let val = f(mu)?;
        if prev.1 > 0.0 && val <= 0.0 {
            let (mut a, mut b) = (prev.0, mu);
            while b - a > tol {
                let m = 0.5 * (a + b);
                if f(m)? > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev = (mu, val);
    }
    Ok(None)
}

/// Coupling where the even-branch Q_M first becomes negative.
pub fn even_q_zero_crossing(template: &VParams, lo: f64, hi: f64) -> Result<Option<f64>> {
    first_sign_change(lo, hi, 2000, 1e-9, |mu| {
        mandel_q_m(&template.with_mu(mu), Approximation::Even)
    })
}

/// First coupling above the boundary where |Q₊ − Q₋| drops below `gap`.
pub fn q_branches_meet(template: &VParams, lo: f64, hi: f64, gap: f64) -> Result<Option<f64>> {
    first_sign_change(lo, hi, 2000, 1e-9, |mu| {
        let v = template.with_mu(mu);
        Ok((mandel_q_m(&v, Approximation::Even)? - mandel_q_m(&v, Approximation::Odd)?).abs() - gap)
    })
}
