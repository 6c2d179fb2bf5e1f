//! Symmetry-adapted coherent states.
//!
//! |α;γ}± = |α;γ} ± |−α;γ̃},  γ̃ = (γ₁, (−1)^{λ₂}γ₂, (−1)^{λ₃}γ₃)
//!
//! keeps only the even (+) or odd (−) total-excitation components of the
//! product coherent state. Every expectation value is a combination of a
//! "direct" term e^{|α|²}(γ*·γ)^{N−k} and a "cross" term
//! e^{−|α|²}(γ*·γ̃)^{N−k}. Internally both are divided by
//! S = e^{|α|²}(γ*·γ)^N so that nothing overflows; unnormalized values are
//! handed out as [`Scaled`] (mantissa and ln S).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::minimize::{nelder_mead_restarting, NelderMeadOptions};
use crate::model::{tilde_gamma, AtomicConfiguration, CoherentPoint, ModelParams, ParityBranch};
use crate::surface::{ln_factorial, mandel_q, poisson, ObservableReport};

/// Kernels at or below this are treated as zero norm.
pub const NORM_TOLERANCE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacsPoint {
    pub point: CoherentPoint,
    pub branch: ParityBranch,
    pub config: AtomicConfiguration,
    pub n_atoms: u32,
}

impl SacsPoint {
    pub fn new(point: CoherentPoint, branch: ParityBranch, config: AtomicConfiguration, n_atoms: u32) -> Self {
        Self {
            point,
            branch,
            config,
            n_atoms,
        }
    }

    pub fn with_branch(&self, branch: ParityBranch) -> Self {
        Self { branch, ..*self }
    }
}

/// A value stored as `mantissa · e^{ln_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled<T> {
    pub mantissa: T,
    pub ln_scale: f64,
}

impl Scaled<Complex64> {
    /// Plain value; overflows to ±inf for large scales.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.ln_scale.exp()
    }

    /// Ratio of two scaled numbers, computed without forming either.
    pub fn ratio(&self, other: &Self) -> Complex64 {
        self.mantissa / other.mantissa * (self.ln_scale - other.ln_scale).exp()
    }
}

impl Scaled<f64> {
    pub fn value(&self) -> f64 {
        self.mantissa * self.ln_scale.exp()
    }
}

/// Reproducing kernel ₊₋{α;γ|α';γ'}± between two (unnormalized) SACS.
pub fn kernel(
    bra: &CoherentPoint,
    ket: &CoherentPoint,
    branch: ParityBranch,
    config: AtomicConfiguration,
    n_atoms: u32,
) -> Scaled<Complex64> {
    let n = n_atoms as i32;
    let field = bra.alpha.conj() * ket.alpha;
    let g = bra.gamma();
    let gk = ket.gamma();
    let gt = tilde_gamma(config, ket).gamma();
    let dot =
        |a: &[Complex64; 3], b: &[Complex64; 3]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let direct = dot(&g, &gk);
    let cross = dot(&g, &gt);
    let mag = direct.norm().max(cross.norm());
    if mag == 0.0 {
        return Scaled {
            mantissa: Complex64::new(0.0, 0.0),
            ln_scale: 0.0,
        };
    }
    let shift = field.re.abs();
    let mantissa = 2.0
        * ((field - shift).exp() * (direct / mag).powi(n)
            + branch.sign() * (-field - shift).exp() * (cross / mag).powi(n));
    Scaled {
        mantissa,
        ln_scale: shift + f64::from(n_atoms) * mag.ln(),
    }
}

/// Precomputed invariants of one SACS point. All `combo` values are relative
/// to S = e^{x} G^N with x = |α|², G = γ*·γ.
#[derive(Debug, Clone)]
struct Elements {
    n: f64,
    n_atoms: u32,
    sign: f64,
    x: f64,
    alpha: Complex64,
    gamma: [Complex64; 3],
    sigma: [f64; 3],
    lambda: [f64; 3],
    g: f64,
    gt: f64,
    ln_scale: f64,
    kernel: f64,
}

impl Elements {
    fn new(sp: &SacsPoint) -> Result<Self> {
        if !sp.point.is_finite() || sp.n_atoms == 0 {
            return Err(Error::InvalidParams("non-finite point or zero atoms".into()));
        }
        let gamma = sp.point.gamma();
        let sigma = sp.config.parity_signs();
        let g = sp.point.gamma_norm_sq();
        let gt: f64 = (0..3).map(|i| sigma[i] * gamma[i].norm_sqr()).sum();
        let x = sp.point.alpha.norm_sqr();
        let n = f64::from(sp.n_atoms);
        let mut el = Self {
            n,
            n_atoms: sp.n_atoms,
            sign: sp.branch.sign(),
            x,
            alpha: sp.point.alpha,
            gamma,
            sigma,
            lambda: sp.config.lambdas().map(f64::from),
            g,
            gt,
            ln_scale: x + n * g.ln(),
            kernel: 0.0,
        };
        el.kernel = 2.0 * el.combo(0, el.sign);
        if el.kernel.abs() <= NORM_TOLERANCE {
            return Err(Error::DegenerateState);
        }
        Ok(el)
    }

    /// Direct factor e^{x}G^{N−k} / S = G^{−k}.
    fn direct(&self, k: u32) -> f64 {
        self.g.powi(-(k as i32))
    }

    /// Cross factor e^{−x}G̃^{N−k} / S.
    fn cross(&self, k: u32) -> f64 {
        if k > self.n_atoms {
            return 0.0;
        }
        (-2.0 * self.x).exp() * (self.gt / self.g).powi((self.n_atoms - k) as i32) * self.direct(k)
    }

    /// direct(k) + sign·cross(k). The difference is evaluated through
    /// expm1/ln1p so odd states near the origin keep their precision.
    fn combo(&self, k: u32, sign: f64) -> f64 {
        if k > self.n_atoms {
            return 0.0;
        }
        if sign < 0.0 && self.gt > 0.0 {
            // G̃ − G = −2 Σ_{λ odd} |γ_i|² exactly
            let odd_weight: f64 = (0..3)
                .filter(|&i| self.sigma[i] < 0.0)
                .map(|i| self.gamma[i].norm_sqr())
                .sum();
            let log_ratio = (-2.0 * odd_weight / self.g).ln_1p();
            let exponent = -2.0 * self.x + f64::from(self.n_atoms - k) * log_ratio;
            return -exponent.exp_m1() * self.direct(k);
        }
        self.direct(k) + sign * self.cross(k)
    }

    fn scaled(&self, mantissa: Complex64) -> Scaled<Complex64> {
        Scaled {
            mantissa,
            ln_scale: self.ln_scale,
        }
    }

    fn pos(&self, i: usize) -> f64 {
        self.gamma[i].norm_sqr()
    }

    // ---- unnormalized matrix elements, relative to S ----

    fn norm_sq(&self) -> f64 {
        self.kernel
    }

    fn population(&self, i: usize) -> f64 {
        2.0 * self.n * self.pos(i) * self.combo(1, self.sign * self.sigma[i])
    }

    fn photon_number(&self) -> f64 {
        2.0 * self.x * self.combo(0, -self.sign)
    }

    fn photon_number_sq(&self) -> f64 {
        // 2x[(x+1)·direct ± (x−1)·cross]
        2.0 * self.x * (self.x * self.combo(0, self.sign) + self.combo(0, -self.sign))
    }

    fn population_sq(&self, i: usize) -> f64 {
        2.0 * self.n
            * self.pos(i)
            * (self.combo(1, self.sign * self.sigma[i]) + (self.n - 1.0) * self.pos(i) * self.combo(2, self.sign))
    }

    fn generator(&self, i: usize, j: usize) -> Complex64 {
        if self.sigma[i] != self.sigma[j] {
            return Complex64::new(0.0, 0.0);
        }
        self.gamma[i].conj() * self.gamma[j] * (2.0 * self.n * self.combo(1, self.sign * self.sigma[i]))
    }

    fn generator_pair(&self, [i, j, k, l]: [usize; 4]) -> Complex64 {
        let s = &self.sigma;
        let g = &self.gamma;
        let mut out = Complex64::new(0.0, 0.0);
        if j == k && s[i] == s[l] {
            out += g[i].conj() * g[l] * (2.0 * self.n * self.combo(1, self.sign * s[i]));
        }
        if s[i] * s[j] * s[k] * s[l] > 0.0 && self.n_atoms >= 2 {
            out += g[i].conj()
                * g[j]
                * g[k].conj()
                * g[l]
                * (2.0 * self.n * (self.n - 1.0) * self.combo(2, self.sign * s[i] * s[k]));
        }
        out
    }

    /// A_ij a.
    fn generator_annihilate(&self, i: usize, j: usize) -> Complex64 {
        if self.sigma[i] == self.sigma[j] {
            return Complex64::new(0.0, 0.0);
        }
        self.alpha * self.gamma[i].conj() * self.gamma[j] * (2.0 * self.n * self.combo(1, self.sign * self.sigma[i]))
    }

    /// (A_ij + A_ji)(a + a†). The cross term carries (α − α*): the field
    /// overlaps {α|a + a†|−α} = α* − α are purely imaginary.
    fn dipole(&self, i: usize, j: usize) -> f64 {
        if self.sigma[i] == self.sigma[j] {
            return 0.0;
        }
        let gij = self.gamma[i].conj() * self.gamma[j];
        let sym = 2.0 * gij.re; // γ_i*γ_j + γ_j*γ_i
        let anti = 2.0 * gij.im; // (γ_i*γ_j − γ_j*γ_i)/i
        let re_part = 2.0 * self.alpha.re * sym * self.direct(1);
        // (α − α*)(γ_i*γ_j − γ_j*γ_i) = (2i Im α)(i·anti)
        let im_part = -2.0 * self.alpha.im * anti * self.sign * self.sigma[i] * self.cross(1);
        2.0 * self.n * (re_part + im_part)
    }

    fn excitation(&self) -> f64 {
        let atomic: f64 = (1..3).map(|i| self.lambda[i] * self.population(i)).sum();
        self.photon_number() + atomic
    }

    fn excitation_sq(&self) -> f64 {
        let [_, l2, l3] = self.lambda;
        let mut out = self.photon_number_sq();
        for (i, l) in [(1, l2), (2, l3)] {
            if l == 0.0 {
                continue;
            }
            out += l * l * self.population_sq(i);
            // 4Nλ_i|α|²|γ_i|²[direct ∓ (−1)^{λ_i} cross]
            out += 4.0 * self.n * l * self.x * self.pos(i) * self.combo(1, -self.sign * self.sigma[i]);
        }
        if l2 != 0.0 && l3 != 0.0 && self.n_atoms >= 2 {
            out += 4.0
                * self.n
                * (self.n - 1.0)
                * l2
                * l3
                * self.pos(1)
                * self.pos(2)
                * self.combo(2, self.sign * self.sigma[1] * self.sigma[2]);
        }
        out
    }
}

/// Zero-based (i, j) pairs with i ≠ j.
pub const OFF_DIAGONAL: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

/// ‖|α;γ}±‖², i.e. the kernel at coinciding arguments.
pub fn norm_sq(sp: &SacsPoint) -> Result<Scaled<f64>> {
    let el = Elements::new(sp)?;
    Ok(Scaled {
        mantissa: el.norm_sq(),
        ln_scale: el.ln_scale,
    })
}

/// One-body expectations: normalized ⟨A₁₁⟩, ⟨A₂₂⟩, ⟨A₃₃⟩ and ⟨a†a⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneBody {
    pub populations: [f64; 3],
    pub photons: f64,
}

pub fn expect_one_body(sp: &SacsPoint) -> Result<OneBody> {
    let el = Elements::new(sp)?;
    let k = el.kernel;
    Ok(OneBody {
        populations: [0, 1, 2].map(|i| el.population(i) / k),
        photons: el.photon_number() / k,
    })
}

/// Unnormalized one-body matrix elements.
pub fn expect_one_body_unnormalized(sp: &SacsPoint) -> Result<([Scaled<Complex64>; 3], Scaled<Complex64>)> {
    let el = Elements::new(sp)?;
    let pops = [0, 1, 2].map(|i| el.scaled(el.population(i).into()));
    Ok((pops, el.scaled(el.photon_number().into())))
}

/// Quadratic expectations.
#[derive(Debug, Clone)]
pub struct TwoBody {
    /// ⟨A_ii²⟩.
    pub populations_sq: [f64; 3],
    /// ⟨(a†a)²⟩.
    pub photons_sq: f64,
    /// ⟨A_ij⟩ for all nine (i, j).
    pub generators: [[Complex64; 3]; 3],
    n_atoms: u32,
    el: Elements,
}

impl TwoBody {
    /// Normalized ⟨A_ij A_kl⟩ (zero-based indices).
    pub fn generator_pair(&self, idx: [usize; 4]) -> Complex64 {
        self.el.generator_pair(idx) / self.el.kernel
    }

    /// Unnormalized ⟨A_ij A_kl⟩.
    pub fn generator_pair_unnormalized(&self, idx: [usize; 4]) -> Scaled<Complex64> {
        self.el.scaled(self.el.generator_pair(idx))
    }

    /// Σ_{k,j} ⟨A_kj A_jk⟩, equal to N² + 2N on the symmetric irrep.
    pub fn quadratic_casimir(&self) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            for j in 0..3 {
                total += self.generator_pair([k, j, j, k]);
            }
        }
        total
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }
}

pub fn expect_two_body(sp: &SacsPoint) -> Result<TwoBody> {
    let el = Elements::new(sp)?;
    let k = el.kernel;
    let mut generators = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in generators.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = el.generator(i, j) / k;
        }
    }
    Ok(TwoBody {
        populations_sq: [0, 1, 2].map(|i| el.population_sq(i) / k),
        photons_sq: el.photon_number_sq() / k,
        generators,
        n_atoms: sp.n_atoms,
        el,
    })
}

/// Matter–field terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    /// ⟨A_ij a⟩ for every ordered pair i ≠ j, indexed [i][j]; diagonal unused.
    pub generator_annihilate: [[Complex64; 3]; 3],
    /// ⟨(A_ij + A_ji)(a + a†)⟩ for (1,2), (1,3), (2,3).
    pub dipole: [f64; 3],
}

pub fn expect_interaction(sp: &SacsPoint) -> Result<Interaction> {
    let el = Elements::new(sp)?;
    let k = el.kernel;
    let mut ga = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, j) in OFF_DIAGONAL {
        ga[i][j] = el.generator_annihilate(i, j) / k;
    }
    let dipole = crate::model::Couplings::PAIRS.map(|(i, j)| el.dipole(i, j) / k);
    Ok(Interaction {
        generator_annihilate: ga,
        dipole,
    })
}

/// Statistics of the total excitation number M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MMoments {
    pub mean: f64,
    pub mean_sq: f64,
    pub variance: f64,
    /// Var M / ⟨M⟩ − 1; `None` when ⟨M⟩ = 0.
    pub mandel_q: Option<f64>,
}

impl MMoments {
    pub fn q(&self) -> Result<f64> {
        self.mandel_q.ok_or(Error::IndeterminateQ)
    }
}

pub fn expect_m_moments(sp: &SacsPoint) -> Result<MMoments> {
    let el = Elements::new(sp)?;
    let mean = el.excitation() / el.kernel;
    let mean_sq = el.excitation_sq() / el.kernel;
    let variance = mean_sq - mean * mean;
    Ok(MMoments {
        mean,
        mean_sq,
        variance,
        mandel_q: mandel_q(mean, variance).ok(),
    })
}

/// Unnormalized ⟨M⟩ and ⟨M²⟩.
pub fn expect_m_moments_unnormalized(sp: &SacsPoint) -> Result<(Scaled<Complex64>, Scaled<Complex64>)> {
    let el = Elements::new(sp)?;
    Ok((el.scaled(el.excitation().into()), el.scaled(el.excitation_sq().into())))
}

/// Normalized ⟨H⟩ in the SACS; counter-rotating terms are dropped when
/// `params.rwa` is set.
pub fn sacs_energy(params: &ModelParams, sp: &SacsPoint) -> Result<f64> {
    let el = Elements::new(sp)?;
    Ok(energy_from(params, &el) / el.kernel)
}

fn energy_from(params: &ModelParams, el: &Elements) -> f64 {
    let mut e = params.field_freq * el.photon_number();
    for i in 0..3 {
        e += params.level_energies[i] * el.population(i);
    }
    let inv_sqrt_n = 1.0 / el.n.sqrt();
    for (i, j) in crate::model::Couplings::PAIRS {
        let mu = params.couplings.get(i, j);
        if mu == 0.0 {
            continue;
        }
        let term = if params.rwa {
            // A_ij a† + A_ji a, with ⟨A_ij a†⟩ = ⟨A_ji a⟩*
            2.0 * el.generator_annihilate(j, i).re
        } else {
            el.dipole(i, j)
        };
        e -= mu * inv_sqrt_n * term;
    }
    e
}

/// Energy, populations, photon number, M and their fluctuations.
pub fn sacs_observables(params: &ModelParams, sp: &SacsPoint) -> Result<ObservableReport> {
    let el = Elements::new(sp)?;
    let k = el.kernel;
    let pops = [0, 1, 2].map(|i| el.population(i) / k);
    let pops_sq = [0, 1, 2].map(|i| el.population_sq(i) / k);
    let photons = el.photon_number() / k;
    let m = el.excitation() / k;
    Ok(ObservableReport {
        energy: energy_from(params, &el) / k,
        n_photons: photons,
        populations: pops,
        m_excitations: m,
        var_photons: el.photon_number_sq() / k - photons * photons,
        var_populations: [0, 1, 2].map(|i| pops_sq[i] - pops[i] * pops[i]),
        var_m: el.excitation_sq() / k - m * m,
    })
}

/// Probability of ν photons in the SACS.
pub fn photon_probability(sp: &SacsPoint, nu: u64) -> Result<f64> {
    let el = Elements::new(sp)?;
    let parity = if nu.is_multiple_of(2) { 1.0 } else { -1.0 };
    // Σ_n |d_n|²(1 ± (−1)^{ν+λ·n}) / G^N = 1 ± (−1)^ν (G̃/G)^N
    let atomic = {
        let sign = el.sign * parity;
        let shadow = Elements { x: 0.0, ..el.clone() };
        shadow.combo(0, sign)
    };
    Ok(poisson(el.x, nu) * 2.0 * atomic / el.kernel)
}

/// Atomic reduced density matrix ρ± (field traced out), indexed by
/// (n₂, n₃) in lexicographic order over n₂ + n₃ ≤ N.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    pub n_atoms: u32,
    pub labels: Vec<(u32, u32)>,
    pub matrix: DMatrix<Complex64>,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// tr ρ².
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                worst = worst.max((self.matrix[(a, b)] - self.matrix[(b, a)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        // Embed the hermitian matrix as the real symmetric [[Re, −Im], [Im, Re]];
        // each eigenvalue appears twice.
        let d = self.dim();
        let mut real = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for a in 0..d {
            for b in 0..d {
                let z = self.matrix[(a, b)];
                real[(a, b)] = z.re;
                real[(a + d, b + d)] = z.re;
                real[(a, b + d)] = -z.im;
                real[(a + d, b)] = z.im;
            }
        }
        let mut eig: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig.into_iter().step_by(2).collect()
    }
}

/// (n₂, n₃) with n₂ + n₃ ≤ N in lexicographic order.
pub fn atomic_labels(n_atoms: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for n2 in 0..=n_atoms {
        for n3 in 0..=(n_atoms - n2) {
            out.push((n2, n3));
        }
    }
    out
}

pub(crate) fn ln_multinomial(n: u32, parts: [u32; 3]) -> f64 {
    ln_factorial(u64::from(n)) - parts.iter().map(|&k| ln_factorial(u64::from(k))).sum::<f64>()
}

pub fn reduced_density_matrix(sp: &SacsPoint) -> Result<ReducedDensityMatrix> {
    let el = Elements::new(sp)?;
    let labels = atomic_labels(sp.n_atoms);
    let [_, l2, l3] = sp.config.lambdas();
    let half_ln_g = 0.5 * el.n * el.g.ln();
    // d_n / G^{N/2}
    let amps: Vec<Complex64> = labels
        .iter()
        .map(|&(n2, n3)| {
            let mag = (0.5 * ln_multinomial(sp.n_atoms, [sp.n_atoms - n2 - n3, n2, n3]) - half_ln_g).exp();
            sp.point.gamma2.powu(n2) * sp.point.gamma3.powu(n3) * mag
        })
        .collect();
    let parity: Vec<f64> = labels
        .iter()
        .map(|&(n2, n3)| if (l2 * n2 + l3 * n3) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    // e^{x}(1 ± σ_n e^{−2x}) relative to e^{x}
    let field_weight = |sigma: f64| {
        if el.sign * sigma < 0.0 {
            -(-2.0 * el.x).exp_m1()
        } else {
            1.0 + (-2.0 * el.x).exp()
        }
    };
    let d = labels.len();
    let mut matrix = DMatrix::<Complex64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            if parity[a] != parity[b] {
                continue;
            }
            matrix[(a, b)] = amps[a] * amps[b].conj() * (2.0 * field_weight(parity[a]) / el.kernel);
        }
    }
    Ok(ReducedDensityMatrix {
        n_atoms: sp.n_atoms,
        labels,
        matrix,
    })
}

/// 1 − tr(ρ±)².
pub fn linear_entropy(sp: &SacsPoint) -> Result<f64> {
    Ok(reduced_density_matrix(sp)?.linear_entropy())
}

/// Linear entropy of the product coherent state, which is a pure product:
/// always zero.
pub fn coherent_linear_entropy(_point: &CoherentPoint) -> f64 {
    0.0
}

/// Coherent-state energy recovered from the two SACS branches:
/// e^{x}G^N E_coh = ¼ [K₊ E₊ + K₋ E₋]. Returns (E_coh, E₊, E₋, w₊) with
/// w₊ = K₊ / (K₊ + K₋).
pub fn parity_decomposition(params: &ModelParams, point: &CoherentPoint) -> Result<(f64, f64, f64, f64)> {
    let even = Elements::new(&SacsPoint::new(
        *point,
        ParityBranch::Even,
        params.config,
        params.n_atoms,
    ))?;
    let odd = Elements::new(&SacsPoint::new(
        *point,
        ParityBranch::Odd,
        params.config,
        params.n_atoms,
    ))?;
    let e_even = energy_from(params, &even) / even.kernel;
    let e_odd = energy_from(params, &odd) / odd.kernel;
    let w_even = even.kernel / (even.kernel + odd.kernel);
    Ok((w_even * e_even + (1.0 - w_even) * e_odd, e_even, e_odd, w_even))
}

/// Field factor of a coherent-state matrix element {α|F|β}/{α|β}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Identity,
    Annihilate,
    Create,
    Number,
    NumberSq,
    Quadrature,
}

/// Atomic factor {γ|A|δ}/{γ|δ}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomOp {
    Identity,
    Generator(usize, usize),
    GeneratorPair([usize; 4]),
}

fn field_factor(op: FieldOp, bra: Complex64, ket: Complex64) -> Complex64 {
    let z = bra.conj() * ket;
    match op {
        FieldOp::Identity => Complex64::new(1.0, 0.0),
        FieldOp::Annihilate => ket,
        FieldOp::Create => bra.conj(),
        FieldOp::Number => z,
        FieldOp::NumberSq => z * (z + 1.0),
        FieldOp::Quadrature => ket + bra.conj(),
    }
}

/// {γ|A|δ} divided by G^N, via the generator matrix elements.
fn atomic_element(op: AtomOp, bra: &[Complex64; 3], ket: &[Complex64; 3], n_atoms: u32, g: f64) -> Complex64 {
    let n = f64::from(n_atoms);
    let dot: Complex64 = bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum::<Complex64>() / g;
    let bra: Vec<Complex64> = bra.iter().map(|z| z / g.sqrt()).collect();
    let ket: Vec<Complex64> = ket.iter().map(|z| z / g.sqrt()).collect();
    let pow = |k: u32| -> Complex64 {
        if k > n_atoms {
            Complex64::new(0.0, 0.0)
        } else {
            dot.powu(n_atoms - k)
        }
    };
    match op {
        AtomOp::Identity => pow(0),
        AtomOp::Generator(j, k) => bra[j].conj() * ket[k] * n * pow(1),
        AtomOp::GeneratorPair([i, j, k, l]) => {
            let delta = if j == k { pow(1) } else { Complex64::new(0.0, 0.0) };
            let two = if n_atoms >= 2 {
                ket[j] * bra[k].conj() * (n - 1.0) * pow(2)
            } else {
                Complex64::new(0.0, 0.0)
            };
            bra[i].conj() * ket[l] * n * (two + delta)
        }
    }
}

/// Normalized SACS expectation of F ⊗ A assembled from the four
/// coherent-state matrix elements of |α;γ} ± |−α;γ̃}. Independent of the
/// closed forms above.
pub fn assembled_expectation(sp: &SacsPoint, field: FieldOp, atom: AtomOp) -> Result<Complex64> {
    let x = sp.point.alpha.norm_sqr();
    let g = sp.point.gamma_norm_sq();
    let plus = (sp.point.alpha, sp.point.gamma());
    let minus = (-sp.point.alpha, tilde_gamma(sp.config, &sp.point).gamma());
    let sign = sp.branch.sign();
    let element = |bra: &(Complex64, [Complex64; 3]), ket: &(Complex64, [Complex64; 3])| {
        // {α|β} / e^{x}
        let overlap = (bra.0.conj() * ket.0 - x).exp();
        overlap * field_factor(field, bra.0, ket.0) * atomic_element(atom, &bra.1, &ket.1, sp.n_atoms, g)
    };
    let norm = |bra: &(Complex64, [Complex64; 3]), ket: &(Complex64, [Complex64; 3])| {
        (bra.0.conj() * ket.0 - x).exp() * atomic_element(AtomOp::Identity, &bra.1, &ket.1, sp.n_atoms, g)
    };
    let num =
        element(&plus, &plus) + element(&minus, &minus) + sign * (element(&plus, &minus) + element(&minus, &plus));
    let den = norm(&plus, &plus) + norm(&minus, &minus) + sign * (norm(&plus, &minus) + norm(&minus, &plus));
    if den.norm() <= NORM_TOLERANCE {
        return Err(Error::DegenerateState);
    }
    Ok(num / den)
}

/// ⟨M⟩ and ⟨M²⟩ assembled from photon-number and population pieces:
/// M² = (a†a)² + 2 a†a (λ₂A₂₂ + λ₃A₃₃) + (λ₂A₂₂ + λ₃A₃₃)².
pub fn assembled_m_moments(sp: &SacsPoint) -> Result<(f64, f64)> {
    let [_, l2, l3] = sp.config.lambdas().map(f64::from);
    let e = |f: FieldOp, a: AtomOp| assembled_expectation(sp, f, a).map(|z| z.re);
    let pop = |i: usize| AtomOp::Generator(i, i);
    let pair = |i: usize, j: usize| AtomOp::GeneratorPair([i, i, j, j]);
    let mean =
        e(FieldOp::Number, AtomOp::Identity)? + l2 * e(FieldOp::Identity, pop(1))? + l3 * e(FieldOp::Identity, pop(2))?;
    let mean_sq = e(FieldOp::NumberSq, AtomOp::Identity)?
        + 2.0 * l2 * e(FieldOp::Number, pop(1))?
        + 2.0 * l3 * e(FieldOp::Number, pop(2))?
        + l2 * l2 * e(FieldOp::Identity, pair(1, 1))?
        + l3 * l3 * e(FieldOp::Identity, pair(2, 2))?
        + 2.0 * l2 * l3 * e(FieldOp::Identity, pair(1, 2))?;
    Ok((mean, mean_sq))
}

/// Optional refinement: minimize the SACS energy over real coordinates
/// starting from `start` (typically the coherent minimum). Returns the
/// improved point and its energy.
pub fn reminimize_sacs(
    params: &ModelParams,
    branch: ParityBranch,
    start: &CoherentPoint,
    opts: &NelderMeadOptions,
) -> Result<(CoherentPoint, f64)> {
    let f = |x: &[f64]| {
        let sp = SacsPoint::new(
            CoherentPoint::real(x[0], x[1], x[2]),
            branch,
            params.config,
            params.n_atoms,
        );
        sacs_energy(params, &sp).unwrap_or(f64::INFINITY)
    };
    let x0 = [start.alpha.re, start.gamma2.re, start.gamma3.re];
    let step = x0.map(|v| 0.1 * v.abs().max(0.1));
    let r = nelder_mead_restarting(f, &x0, &step, opts);
    let point = CoherentPoint::real(r.x[0], r.x[1], r.x[2]);
    Ok((point, r.fx))
}
