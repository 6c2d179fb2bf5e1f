//! Physical model: N_a identical three-level atoms dipole-coupled to one
//! quantized field mode.
//!
//! H = Ω a†a + Σ_j ω_j A_jj − Σ_{j<k} (μ_jk/√N_a)(a† + a)(A_jk + A_kj)
//!
//! The atomic configuration selects which dipole coupling vanishes and the
//! integer weights entering the total excitation number
//! M = a†a + λ₂ A₂₂ + λ₃ A₃₃.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The three dipole-allowed level schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomicConfiguration {
    /// Ladder: 1 ↔ 2 ↔ 3, μ₁₃ = 0.
    Xi,
    /// Two lower levels coupled to the upper one, μ₁₂ = 0.
    Lambda,
    /// One ground level coupled to two excited levels, μ₂₃ = 0.
    V,
}

impl AtomicConfiguration {
    pub const ALL: [AtomicConfiguration; 3] = [Self::Xi, Self::Lambda, Self::V];

    /// (λ₂, λ₃) such that M commutes with the rotating-wave Hamiltonian.
    pub fn excitation_weights(self) -> (u32, u32) {
        match self {
            Self::Xi => (1, 2),
            Self::Lambda => (0, 1),
            Self::V => (1, 1),
        }
    }

    /// Weights for all three levels, λ₁ = 0.
    pub fn lambdas(self) -> [u32; 3] {
        let (l2, l3) = self.excitation_weights();
        [0, l2, l3]
    }

    /// (−1)^λ_i for each level.
    pub fn parity_signs(self) -> [f64; 3] {
        self.lambdas().map(|l| if l % 2 == 0 { 1.0 } else { -1.0 })
    }

    /// Zero-based level pair whose coupling must vanish.
    pub fn forbidden_pair(self) -> (usize, usize) {
        match self {
            Self::Xi => (0, 2),
            Self::Lambda => (0, 1),
            Self::V => (1, 2),
        }
    }

    /// The two dipole-allowed pairs, in (1,2), (1,3), (2,3) order.
    pub fn allowed_pairs(self) -> [(usize, usize); 2] {
        let forbidden = self.forbidden_pair();
        let mut out = [(0, 0); 2];
        let mut k = 0;
        for pair in Couplings::PAIRS {
            if pair != forbidden {
                out[k] = pair;
                k += 1;
            }
        }
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Xi => "xi",
            Self::Lambda => "lambda",
            Self::V => "v",
        }
    }
}

impl fmt::Display for AtomicConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AtomicConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xi" | "ladder" | "ξ" => Ok(Self::Xi),
            "lambda" | "λ" => Ok(Self::Lambda),
            "v" => Ok(Self::V),
            other => Err(Error::InvalidParams(format!("unknown atomic configuration '{other}'"))),
        }
    }
}

/// Dipole couplings μ₁₂, μ₁₃, μ₂₃.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Couplings {
    pub mu12: f64,
    pub mu13: f64,
    pub mu23: f64,
}

impl Couplings {
    /// Zero-based level pairs in storage order.
    pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

    pub fn new(mu12: f64, mu13: f64, mu23: f64) -> Self {
        Self { mu12, mu13, mu23 }
    }

    /// Coupling between zero-based levels `i` and `j` (symmetric).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.mu12,
            (0, 2) => self.mu13,
            (1, 2) => self.mu23,
            _ => 0.0,
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.mu12 = value,
            (0, 2) => self.mu13 = value,
            (1, 2) => self.mu23 = value,
            _ => {}
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.mu12, self.mu13, self.mu23]
    }

    pub fn max(&self) -> f64 {
        self.mu12.max(self.mu13).max(self.mu23)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.mu12 * factor, self.mu13 * factor, self.mu23 * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Field frequency Ω.
    pub field_freq: f64,
    /// Level energies ω₁ ≤ ω₂ ≤ ω₃.
    pub level_energies: [f64; 3],
    pub couplings: Couplings,
    pub n_atoms: u32,
    /// Drop the counter-rotating terms.
    pub rwa: bool,
    pub config: AtomicConfiguration,
}

impl ModelParams {
    pub fn new(
        config: AtomicConfiguration,
        field_freq: f64,
        level_energies: [f64; 3],
        couplings: Couplings,
        n_atoms: u32,
        rwa: bool,
    ) -> Result<Self> {
        let params = Self {
            field_freq,
            level_energies,
            couplings,
            n_atoms,
            rwa,
            config,
        };
        params.validate()?;
        Ok(params)
    }

    /// V configuration in double resonance with μ₁₂ = μ cos θ, μ₁₃ = μ sin θ,
    /// in the Ω = ω₂ = ω₃ = 1, ω₁ = 0 frame.
    pub fn v_reference(mu: f64, theta: f64, n_atoms: u32) -> Result<Self> {
        Self::new(
            AtomicConfiguration::V,
            1.0,
            [0.0, 1.0, 1.0],
            Couplings::new(mu * theta.cos(), mu * theta.sin(), 0.0),
            n_atoms,
            false,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.field_freq.is_finite() && self.field_freq > 0.0) {
            return bad(format!("field frequency must be > 0, got {}", self.field_freq));
        }
        let [w1, w2, w3] = self.level_energies;
        if !(w1.is_finite() && w2.is_finite() && w3.is_finite()) {
            return bad("level energies must be finite".into());
        }
        if !(w1 <= w2 && w2 <= w3) {
            return bad(format!(
                "level energies must satisfy ω₁ ≤ ω₂ ≤ ω₃, got {w1}, {w2}, {w3}"
            ));
        }
        for (k, mu) in self.couplings.as_array().into_iter().enumerate() {
            if !(mu.is_finite() && mu >= 0.0) {
                return bad(format!("coupling #{k} must be finite and ≥ 0, got {mu}"));
            }
        }
        if self.n_atoms == 0 {
            return bad("atom number must be ≥ 1".into());
        }
        let (i, j) = self.config.forbidden_pair();
        if self.couplings.get(i, j) != 0.0 {
            return bad(format!(
                "{} configuration requires μ{}{} = 0",
                self.config,
                i + 1,
                j + 1
            ));
        }
        Ok(())
    }

    pub fn with_couplings(mut self, couplings: Couplings) -> Self {
        self.couplings = couplings;
        self
    }

    pub fn with_rwa(mut self, rwa: bool) -> Self {
        self.rwa = rwa;
        self
    }

    pub fn sqrt_n(&self) -> f64 {
        f64::from(self.n_atoms).sqrt()
    }

    pub fn is_double_resonance(&self) -> bool {
        self.level_energies[1] == self.level_energies[2]
    }
}

/// Variational coordinates (α; γ₂, γ₃) with γ₁ ≡ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentPoint {
    pub alpha: Complex64,
    pub gamma2: Complex64,
    pub gamma3: Complex64,
}

/// Polar form α = ϱ e^{iφ}, γ_j = ϱ_j e^{iφ_j}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub rho: f64,
    pub phi: f64,
    pub rho2: f64,
    pub phi2: f64,
    pub rho3: f64,
    pub phi3: f64,
}

impl CoherentPoint {
    pub fn new(alpha: Complex64, gamma2: Complex64, gamma3: Complex64) -> Self {
        Self { alpha, gamma2, gamma3 }
    }

    pub fn real(alpha: f64, gamma2: f64, gamma3: f64) -> Self {
        Self::new(alpha.into(), gamma2.into(), gamma3.into())
    }

    pub fn origin() -> Self {
        Self::real(0.0, 0.0, 0.0)
    }

    pub fn from_polar(p: &PolarPoint) -> Self {
        Self::new(
            Complex64::from_polar(p.rho, p.phi),
            Complex64::from_polar(p.rho2, p.phi2),
            Complex64::from_polar(p.rho3, p.phi3),
        )
    }

    pub fn to_polar(&self) -> PolarPoint {
        let (rho, phi) = self.alpha.to_polar();
        let (rho2, phi2) = self.gamma2.to_polar();
        let (rho3, phi3) = self.gamma3.to_polar();
        PolarPoint {
            rho,
            phi,
            rho2,
            phi2,
            rho3,
            phi3,
        }
    }

    /// (γ₁, γ₂, γ₃) with γ₁ = 1.
    pub fn gamma(&self) -> [Complex64; 3] {
        [Complex64::new(1.0, 0.0), self.gamma2, self.gamma3]
    }

    /// γ*·γ = 1 + |γ₂|² + |γ₃|².
    pub fn gamma_norm_sq(&self) -> f64 {
        1.0 + self.gamma2.norm_sqr() + self.gamma3.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha, self.gamma2, self.gamma3]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scaled(&self, eps: f64) -> Self {
        Self::new(self.alpha * eps, self.gamma2 * eps, self.gamma3 * eps)
    }
}

/// Parity sector of the total excitation number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityBranch {
    Even,
    Odd,
}

impl ParityBranch {
    pub const BOTH: [ParityBranch; 2] = [Self::Even, Self::Odd];

    /// +1 for even, −1 for odd.
    pub fn sign(self) -> f64 {
        match self {
            Self::Even => 1.0,
            Self::Odd => -1.0,
        }
    }

    /// Whether excitation number `m` belongs to this sector.
    pub fn contains(self, m: u64) -> bool {
        m.is_multiple_of(2) == (self == Self::Even)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Even => "even",
            Self::Odd => "odd",
        }
    }
}

impl fmt::Display for ParityBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parity image (α, (−1)^{λ₂}γ₂, (−1)^{λ₃}γ₃). α is left untouched; the
/// field reflection α → −α is applied separately where the SACS needs it.
pub fn tilde_gamma(config: AtomicConfiguration, point: &CoherentPoint) -> CoherentPoint {
    let [_, s2, s3] = config.parity_signs();
    CoherentPoint::new(point.alpha, point.gamma2 * s2, point.gamma3 * s3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Normal,
    Collective,
}

/// Superradiance test for the V configuration in double resonance.
/// The boundary μ₁₂² + μ₁₃² = Ω(ω₃ − ω₁)/4 itself counts as normal; ω₁ only
/// shifts all energies, so the gap ω₃ − ω₁ is what enters.
pub fn regime_v(params: &ModelParams) -> Result<Regime> {
    if params.config != AtomicConfiguration::V {
        return Err(Error::WrongConfiguration {
            required: "V configuration".into(),
            actual: params.config.to_string(),
        });
    }
    if !params.is_double_resonance() {
        return Err(Error::WrongConfiguration {
            required: "double resonance ω₂ = ω₃".into(),
            actual: format!("ω₂ = {}, ω₃ = {}", params.level_energies[1], params.level_energies[2]),
        });
    }
    let c = &params.couplings;
    let mu_sq = c.mu12 * c.mu12 + c.mu13 * c.mu13;
    let gap = params.level_energies[2] - params.level_energies[0];
    if mu_sq > params.field_freq * gap / 4.0 {
        Ok(Regime::Collective)
    } else {
        Ok(Regime::Normal)
    }
}

/// Full-Hamiltonian couplings μ mapped onto the rotating-wave model with
/// couplings 2μ, whose angle-minimized energy surface coincides.
pub fn rwa_coupling_map(params: &ModelParams) -> ModelParams {
    ModelParams {
        couplings: params.couplings.scaled(2.0),
        rwa: true,
        ..*params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v_params(mu12: f64, mu13: f64) -> ModelParams {
        ModelParams::new(
            AtomicConfiguration::V,
            1.0,
            [0.0, 1.0, 1.0],
            Couplings::new(mu12, mu13, 0.0),
            2,
            false,
        )
        .unwrap()
    }

    #[test]
    fn excitation_weights_table() {
        assert_eq!(AtomicConfiguration::Xi.excitation_weights(), (1, 2));
        assert_eq!(AtomicConfiguration::Lambda.excitation_weights(), (0, 1));
        assert_eq!(AtomicConfiguration::V.excitation_weights(), (1, 1));
    }

    #[test]
    fn allowed_pairs_exclude_forbidden() {
        assert_eq!(AtomicConfiguration::V.allowed_pairs(), [(0, 1), (0, 2)]);
        assert_eq!(AtomicConfiguration::Xi.allowed_pairs(), [(0, 1), (1, 2)]);
        assert_eq!(AtomicConfiguration::Lambda.allowed_pairs(), [(0, 2), (1, 2)]);
    }

    #[test]
    fn tilde_gamma_examples() {
        let p = CoherentPoint::new(
            Complex64::new(0.3, -0.2),
            Complex64::new(1.1, 0.4),
            Complex64::new(-0.5, 0.7),
        );
        let v = tilde_gamma(AtomicConfiguration::V, &p);
        assert_eq!(v.alpha, p.alpha);
        assert_eq!(v.gamma2, -p.gamma2);
        assert_eq!(v.gamma3, -p.gamma3);

        let l = tilde_gamma(AtomicConfiguration::Lambda, &p);
        assert_eq!(l.gamma2, p.gamma2);
        assert_eq!(l.gamma3, -p.gamma3);

        let x = tilde_gamma(AtomicConfiguration::Xi, &p);
        assert_eq!(x.gamma2, -p.gamma2);
        assert_eq!(x.gamma3, p.gamma3);

        let fixed = CoherentPoint::new(p.alpha, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for config in AtomicConfiguration::ALL {
            assert_eq!(tilde_gamma(config, &fixed), fixed);
            assert_eq!(tilde_gamma(config, &tilde_gamma(config, &p)), p);
        }
    }

    #[test]
    fn regime_examples() {
        assert_eq!(regime_v(&v_params(0.0, 0.0)).unwrap(), Regime::Normal);
        let s = 0.5f64.sqrt();
        assert_eq!(regime_v(&v_params(s, s)).unwrap(), Regime::Collective);
        // μ² = 0.25 exactly sits on the boundary
        assert_eq!(regime_v(&v_params(0.5, 0.0)).unwrap(), Regime::Normal);
    }

    #[test]
    fn regime_rejects_other_configurations() {
        let xi = ModelParams::new(
            AtomicConfiguration::Xi,
            1.0,
            [0.0, 1.0, 2.0],
            Couplings::new(0.3, 0.0, 0.3),
            2,
            false,
        )
        .unwrap();
        assert!(matches!(regime_v(&xi), Err(Error::WrongConfiguration { .. })));

        let mut off = v_params(0.3, 0.3);
        off.level_energies = [0.0, 0.9, 1.0];
        assert!(matches!(regime_v(&off), Err(Error::WrongConfiguration { .. })));
    }

    #[test]
    fn rwa_map_doubles_couplings() {
        let p = v_params(0.3, 0.1);
        let m = rwa_coupling_map(&p);
        assert!(m.rwa);
        assert_eq!(m.couplings.mu12, 0.6);
        assert_eq!(m.couplings.mu13, 0.2);
        assert_eq!(m.field_freq, p.field_freq);
        assert_eq!(m.level_energies, p.level_energies);
        assert_eq!(m.n_atoms, p.n_atoms);

        let zero = rwa_coupling_map(&v_params(0.0, 0.0));
        assert_eq!(zero.couplings, Couplings::default());
    }

    #[test]
    fn rwa_map_moves_v_boundary() {
        // full boundary μ_c = 1/2 maps to μ_c^RWA = 1
        let p = v_params(0.5, 0.0);
        let m = rwa_coupling_map(&p);
        assert_eq!(m.couplings.mu12, 1.0);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let ok = v_params(0.1, 0.2);
        assert!(ok.validate().is_ok());
        let mut p = ok;
        p.couplings.mu23 = 0.1;
        assert!(p.validate().is_err());
        let mut p = ok;
        p.level_energies = [0.0, 1.0, 0.5];
        assert!(p.validate().is_err());
        let mut p = ok;
        p.couplings.mu12 = -0.1;
        assert!(p.validate().is_err());
        let mut p = ok;
        p.field_freq = 0.0;
        assert!(p.validate().is_err());
        let mut p = ok;
        p.n_atoms = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn polar_round_trip() {
        let p = CoherentPoint::new(
            Complex64::new(0.3, -0.2),
            Complex64::new(1.1, 0.4),
            Complex64::new(-0.5, 0.7),
        );
        let q = CoherentPoint::from_polar(&p.to_polar());
        assert!((q.alpha - p.alpha).norm() < 1e-15);
        assert!((q.gamma2 - p.gamma2).norm() < 1e-15);
        assert!((q.gamma3 - p.gamma3).norm() < 1e-15);
    }

    #[test]
    fn parity_branch_membership() {
        assert!(ParityBranch::Even.contains(0));
        assert!(ParityBranch::Odd.contains(3));
        assert!(!ParityBranch::Odd.contains(2));
    }
}
