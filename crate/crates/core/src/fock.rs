//! Exact treatment in a truncated Fock ⊗ symmetric-atomic basis.
//!
//! Basis states |ν; n₁, n₂, n₃⟩ are ordered ν-major, then lexicographically
//! in (n₂, n₃). Atomic operators act through occupation-number algebra
//! A_ij|…n_i…n_j…⟩ = √(n_j(n_i+1)) |…n_i+1…n_j−1…⟩.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AtomicConfiguration, CoherentPoint, Couplings, ModelParams, ParityBranch};
use crate::sacs::{atomic_labels, ln_multinomial};
use crate::surface::{ln_factorial, poisson, ObservableReport};

/// |ν; n₁, n₂, n₃⟩ with n₁ + n₂ + n₃ = N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub nu: u32,
    pub occupations: [u32; 3],
}

impl BasisIndex {
    /// m = ν + λ₂n₂ + λ₃n₃.
    pub fn excitation(&self, config: AtomicConfiguration) -> u64 {
        let [_, l2, l3] = config.lambdas();
        u64::from(self.nu) + u64::from(l2 * self.occupations[1]) + u64::from(l3 * self.occupations[2])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSpace {
    pub n_atoms: u32,
    pub nu_max: u32,
    atomic: Vec<(u32, u32)>,
}

impl TruncatedSpace {
    pub fn new(n_atoms: u32, nu_max: u32) -> Self {
        Self {
            n_atoms,
            nu_max,
            atomic: atomic_labels(n_atoms),
        }
    }

    pub fn atomic_dim(&self) -> usize {
        self.atomic.len()
    }

    pub fn dim(&self) -> usize {
        (self.nu_max as usize + 1) * self.atomic_dim()
    }

    pub fn atomic_labels(&self) -> &[(u32, u32)] {
        &self.atomic
    }

    /// Position of (n₂, n₃) among the atomic labels.
    pub fn atomic_index(&self, n2: u32, n3: u32) -> usize {
        let n = self.n_atoms as usize;
        let n2 = n2 as usize;
        n2 * (n + 1) - n2 * n2.saturating_sub(1) / 2 + n3 as usize
    }

    pub fn index(&self, b: &BasisIndex) -> usize {
        b.nu as usize * self.atomic_dim() + self.atomic_index(b.occupations[1], b.occupations[2])
    }

    pub fn basis(&self, idx: usize) -> BasisIndex {
        let d = self.atomic_dim();
        let (n2, n3) = self.atomic[idx % d];
        BasisIndex {
            nu: (idx / d) as u32,
            occupations: [self.n_atoms - n2 - n3, n2, n3],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        (0..self.dim()).map(|i| self.basis(i))
    }

    /// Apply A_ij (zero-based) to a basis state.
    fn generator_on(&self, b: &BasisIndex, i: usize, j: usize) -> Option<(BasisIndex, f64)> {
        let n = b.occupations;
        if i == j {
            return (n[i] > 0).then_some((*b, f64::from(n[i])));
        }
        if n[j] == 0 {
            return None;
        }
        let mut out = *b;
        out.occupations[i] += 1;
        out.occupations[j] -= 1;
        Some((out, (f64::from(n[j]) * f64::from(n[i] + 1)).sqrt()))
    }
}

/// Real symmetric matrix in compressed-row form, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.1)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let f = |(r, out): (usize, &mut f64)| {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        };
        if self.dim > 4096 {
            y.par_iter_mut().enumerate().for_each(f);
        } else {
            y.iter_mut().enumerate().for_each(f);
        }
    }

    fn matvec_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| x[c] * v).sum())
            .collect()
    }

    /// Largest |H_rc − H_cr|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// Dense copy of the principal submatrix on `indices`.
    pub fn dense_block(&self, indices: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = DMatrix::zeros(indices.len(), indices.len());
        for (k, &r) in indices.iter().enumerate() {
            for (c, v) in self.row(r) {
                if pos[c] != usize::MAX {
                    m[(k, pos[c])] = v;
                }
            }
        }
        m
    }

    /// Plain-text matrix market (coordinate, real, symmetric; lower triangle).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        let lower: usize = (0..self.dim).map(|r| self.row(r).filter(|e| e.0 <= r).count()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, lower)?;
        for r in 0..self.dim {
            for (c, v) in self.row(r).filter(|e| e.0 <= r) {
                writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Limits on exact diagonalization.
#[derive(Debug, Clone, Copy)]
pub struct FockOptions {
    /// Refuse to build bases larger than this.
    pub dimension_limit: usize,
    /// Sectors up to this size go to the dense solver; larger ones to Lanczos.
    pub dense_limit: usize,
    /// Initial cutoff for ground-state searches.
    pub initial_nu_max: u32,
    /// Give up doubling beyond this cutoff.
    pub max_nu_max: u32,
    /// Required |E(ν_max) − E(ν_max − 10)|.
    pub cutoff_tolerance: f64,
}

impl Default for FockOptions {
    fn default() -> Self {
        Self {
            dimension_limit: 4_000_000,
            dense_limit: 1_500,
            initial_nu_max: 40,
            max_nu_max: 1_280,
            cutoff_tolerance: 1e-10,
        }
    }
}

/// Which pieces of the light–matter coupling to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coupling {
    /// (A_ij + A_ji)(a + a†).
    Full,
    /// A_ij a† + A_ji a for i < j.
    CoRotating,
    /// A_ij a + A_ji a† for i < j.
    CounterRotating,
}

fn photon_shift(nu: u32, up: bool, nu_max: u32) -> Option<(u32, f64)> {
    if up {
        (nu < nu_max).then(|| (nu + 1, f64::from(nu + 1).sqrt()))
    } else {
        (nu > 0).then(|| (nu - 1, f64::from(nu).sqrt()))
    }
}

fn build(
    params: &ModelParams,
    space: &TruncatedSpace,
    coupling: Coupling,
    diagonal: bool,
    opts: &FockOptions,
) -> Result<SparseSymmetric> {
    let dim = space.dim();
    if dim > opts.dimension_limit {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: opts.dimension_limit,
        });
    }
    let scale = 1.0 / params.sqrt_n();
    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .map(|r| {
            let b = space.basis(r);
            let mut row = Vec::with_capacity(9);
            if diagonal {
                let mut d = params.field_freq * f64::from(b.nu);
                for i in 0..3 {
                    d += params.level_energies[i] * f64::from(b.occupations[i]);
                }
                row.push((r, d));
            }
            for (i, j) in Couplings::PAIRS {
                let mu = params.couplings.get(i, j);
                if mu == 0.0 {
                    continue;
                }
                // (atomic op (to, from), photon up?)
                let terms: &[((usize, usize), bool)] = match coupling {
                    Coupling::Full => &[((i, j), true), ((i, j), false), ((j, i), true), ((j, i), false)],
                    Coupling::CoRotating => &[((i, j), true), ((j, i), false)],
                    Coupling::CounterRotating => &[((i, j), false), ((j, i), true)],
                };
                for &((p, q), up) in terms {
                    let Some((atom, ca)) = space.generator_on(&b, p, q) else {
                        continue;
                    };
                    let Some((nu, cf)) = photon_shift(b.nu, up, space.nu_max) else {
                        continue;
                    };
                    let target = BasisIndex { nu, ..atom };
                    row.push((space.index(&target), -mu * scale * ca * cf));
                }
            }
            row
        })
        .collect();
    // rows hold H|r⟩, i.e. columns; transpose to rows (equal for a symmetric H,
    // but truncation of a† at ν_max must be mirrored)
    let mut transposed: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for (c, col) in rows.into_iter().enumerate() {
        for (r, v) in col {
            transposed[r].push((c, v));
        }
    }
    Ok(SparseSymmetric::from_rows(transposed))
}

/// H of the model (full, or co-rotating only when `params.rwa`).
pub fn build_hamiltonian(params: &ModelParams, space: &TruncatedSpace, opts: &FockOptions) -> Result<SparseSymmetric> {
    let coupling = if params.rwa {
        Coupling::CoRotating
    } else {
        Coupling::Full
    };
    build(params, space, coupling, true, opts)
}

/// The counter-rotating part H_R = −(1/√N) Σ μ_ij (A_ij a + A_ji a†).
pub fn build_counter_rotating(
    params: &ModelParams,
    space: &TruncatedSpace,
    opts: &FockOptions,
) -> Result<SparseSymmetric> {
    build(params, space, Coupling::CounterRotating, false, opts)
}

/// Basis indices split by the parity of m: (even, odd).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParitySectors {
    pub even: Vec<usize>,
    pub odd: Vec<usize>,
}

impl ParitySectors {
    pub fn get(&self, branch: ParityBranch) -> &[usize] {
        match branch {
            ParityBranch::Even => &self.even,
            ParityBranch::Odd => &self.odd,
        }
    }
}

pub fn parity_sectors(space: &TruncatedSpace, config: AtomicConfiguration) -> ParitySectors {
    let (even, odd): (Vec<usize>, Vec<usize>) =
        (0..space.dim()).partition(|&i| space.basis(i).excitation(config).is_multiple_of(2));
    ParitySectors { even, odd }
}

/// Σ |H_rc| over pairs in different sectors.
pub fn cross_sector_norm(h: &SparseSymmetric, space: &TruncatedSpace, config: AtomicConfiguration) -> f64 {
    let parity: Vec<u64> = space.iter().map(|b| b.excitation(config) % 2).collect();
    (0..h.dim)
        .flat_map(|r| h.row(r).map(move |(c, v)| (r, c, v)))
        .filter(|&(r, c, _)| parity[r] != parity[c])
        .map(|(_, _, v)| v.abs())
        .sum()
}

/// Σ |[H, M]_rc| = Σ |H_rc (m_c − m_r)|; zero iff H conserves M.
pub fn excitation_commutator_norm(h: &SparseSymmetric, space: &TruncatedSpace, config: AtomicConfiguration) -> f64 {
    let m: Vec<f64> = space.iter().map(|b| b.excitation(config) as f64).collect();
    (0..h.dim)
        .flat_map(|r| h.row(r).map(move |(c, v)| (r, c, v)))
        .map(|(r, c, v)| (v * (m[c] - m[r])).abs())
        .sum()
}

/// Complex amplitudes over a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub space: TruncatedSpace,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|z| z / n).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Weight on states whose m-parity differs from `branch`.
    pub fn weight_outside(&self, branch: ParityBranch, config: AtomicConfiguration) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| !branch.contains(self.space.basis(*i).excitation(config)))
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Photon-number distribution of the normalized state.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let d = self.space.atomic_dim();
        let total = self.norm_sq();
        self.amplitudes
            .chunks(d)
            .map(|block| block.iter().map(|z| z.norm_sqr()).sum::<f64>() / total)
            .collect()
    }

    /// Atomic reduced density matrix of the normalized state.
    pub fn partial_trace(&self) -> DMatrix<Complex64> {
        let d = self.space.atomic_dim();
        let total = self.norm_sq();
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for block in self.amplitudes.chunks(d) {
            for a in 0..d {
                for b in 0..d {
                    rho[(a, b)] += block[a] * block[b].conj();
                }
            }
        }
        rho / Complex64::from(total)
    }
}

/// Operators whose expectation the oracle evaluates by explicit contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Number,
    NumberSq,
    Generator(usize, usize),
    GeneratorPair([usize; 4]),
    /// A_ij a.
    GeneratorAnnihilate(usize, usize),
    /// (A_ij + A_ji)(a + a†).
    Dipole(usize, usize),
    Excitation(AtomicConfiguration),
    ExcitationSq(AtomicConfiguration),
    Hamiltonian(ModelParams),
    /// (−1)^M.
    Parity(AtomicConfiguration),
}

fn apply_generator(state: &StateVector, i: usize, j: usize) -> Vec<Complex64> {
    let s = &state.space;
    let mut out = vec![Complex64::new(0.0, 0.0); s.dim()];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        if let Some((t, c)) = s.generator_on(&s.basis(idx), i, j) {
            out[s.index(&t)] += amp * c;
        }
    }
    out
}

fn apply_photon(state: &StateVector, up: bool) -> Vec<Complex64> {
    let s = &state.space;
    let mut out = vec![Complex64::new(0.0, 0.0); s.dim()];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        let b = s.basis(idx);
        if let Some((nu, c)) = photon_shift(b.nu, up, s.nu_max) {
            out[s.index(&BasisIndex { nu, ..b })] += amp * c;
        }
    }
    out
}

fn apply_diagonal(state: &StateVector, f: impl Fn(&BasisIndex) -> f64) -> Vec<Complex64> {
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| a * f(&state.space.basis(i)))
        .collect()
}

fn with(state: &StateVector, amplitudes: Vec<Complex64>) -> StateVector {
    StateVector {
        space: state.space.clone(),
        amplitudes,
    }
}

fn apply(state: &StateVector, obs: &Observable) -> Result<Vec<Complex64>> {
    let excitation = |c: AtomicConfiguration| move |b: &BasisIndex| b.excitation(c) as f64;
    Ok(match *obs {
        Observable::Number => apply_diagonal(state, |b| f64::from(b.nu)),
        Observable::NumberSq => apply_diagonal(state, |b| f64::from(b.nu).powi(2)),
        Observable::Generator(i, j) => apply_generator(state, i, j),
        Observable::GeneratorPair([i, j, k, l]) => {
            let inner = with(state, apply_generator(state, k, l));
            apply_generator(&inner, i, j)
        }
        Observable::GeneratorAnnihilate(i, j) => {
            let inner = with(state, apply_photon(state, false));
            apply_generator(&inner, i, j)
        }
        Observable::Dipole(i, j) => {
            let down = apply_photon(state, false);
            let up = apply_photon(state, true);
            let field = with(state, down.iter().zip(&up).map(|(a, b)| a + b).collect());
            let a = apply_generator(&field, i, j);
            let b = apply_generator(&field, j, i);
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
        Observable::Excitation(c) => apply_diagonal(state, excitation(c)),
        Observable::ExcitationSq(c) => apply_diagonal(state, move |b| (b.excitation(c) as f64).powi(2)),
        Observable::Hamiltonian(params) => {
            let h = build_hamiltonian(&params, &state.space, &FockOptions::default())?;
            h.matvec_complex(&state.amplitudes)
        }
        Observable::Parity(c) => apply_diagonal(state, move |b| if b.excitation(c) % 2 == 0 { 1.0 } else { -1.0 }),
    })
}

/// ⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩.
pub fn expect(state: &StateVector, obs: &Observable) -> Result<Complex64> {
    let image = apply(state, obs)?;
    let num: Complex64 = state.amplitudes.iter().zip(&image).map(|(a, b)| a.conj() * b).sum();
    Ok(num / state.norm_sq())
}

/// ⟨ψ|O|ψ⟩ without normalization.
pub fn matrix_element(state: &StateVector, obs: &Observable) -> Result<Complex64> {
    let image = apply(state, obs)?;
    Ok(state.amplitudes.iter().zip(&image).map(|(a, b)| a.conj() * b).sum())
}

/// Cutoff for building a coherent-type state with amplitude α.
pub fn state_cutoff(alpha_sq: f64) -> u32 {
    (alpha_sq + 10.0 * (alpha_sq + 1.0).sqrt() + 20.0).ceil() as u32
}

/// Poisson weight beyond ν_max, summed directly.
fn poisson_tail(x: f64, nu_max: u32) -> f64 {
    let mut tail = 0.0;
    let mut nu = u64::from(nu_max) + 1;
    loop {
        let p = poisson(x, nu);
        tail += p;
        if (nu as f64 > x && p < 1e-18 * tail.max(1e-300)) || p == 0.0 && nu as f64 > x {
            break;
        }
        nu += 1;
    }
    tail
}

/// Unnormalized |α;γ}± expanded directly in the basis.
pub fn build_sacs_vector(
    point: &CoherentPoint,
    branch: ParityBranch,
    config: AtomicConfiguration,
    space: &TruncatedSpace,
) -> Result<StateVector> {
    let x = point.alpha.norm_sqr();
    let tail = poisson_tail(x, space.nu_max);
    if tail >= 1e-14 {
        return Err(Error::TailTooLarge {
            nu_max: space.nu_max as usize,
            tail,
        });
    }
    let n = space.n_atoms;
    let sign = branch.sign();
    let pow = |z: Complex64, k: u32| if k == 0 { Complex64::new(1.0, 0.0) } else { z.powu(k) };
    let amplitudes = space
        .iter()
        .map(|b| {
            let parity = if b.excitation(config) % 2 == 0 { 1.0 } else { -1.0 };
            let weight = 1.0 + sign * parity;
            if weight == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let [_, n2, n3] = b.occupations;
            let mag = (0.5 * (ln_multinomial(n, b.occupations) - ln_factorial(u64::from(b.nu)))).exp();
            pow(point.alpha, b.nu) * pow(point.gamma2, n2) * pow(point.gamma3, n3) * (mag * weight)
        })
        .collect();
    Ok(StateVector {
        space: space.clone(),
        amplitudes,
    })
}

/// An eigenvalue with its eigenvector (largest amplitude made positive).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    pub state: StateVector,
}

/// Lowest `count` eigenpairs of H restricted to `indices`.
pub fn lowest_in_sector(
    h: &SparseSymmetric,
    space: &TruncatedSpace,
    indices: &[usize],
    count: usize,
    opts: &FockOptions,
) -> Result<Vec<Eigenpair>> {
    if indices.is_empty() || count == 0 {
        return Ok(Vec::new());
    }
    let count = count.min(indices.len());
    let (values, vectors) = if indices.len() <= opts.dense_limit {
        let eig = h.dense_block(indices).symmetric_eigen();
        let mut order: Vec<usize> = (0..indices.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = order[..count].iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs: Vec<Vec<f64>> = order[..count]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
            .collect();
        (vals, vecs)
    } else {
        lanczos_lowest(h, indices, count)?
    };
    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(energy, v)| {
            let mut amps = vec![Complex64::new(0.0, 0.0); space.dim()];
            let pivot = v
                .iter()
                .copied()
                .fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            let phase = if pivot < 0.0 { -1.0 } else { 1.0 };
            for (&idx, &x) in indices.iter().zip(&v) {
                amps[idx] = Complex64::new(phase * x, 0.0);
            }
            Eigenpair {
                energy,
                state: StateVector {
                    space: space.clone(),
                    amplitudes: amps,
                },
            }
        })
        .collect())
}

/// Lanczos with full reorthogonalization and explicit restarts from the
/// current Ritz vector, on the principal submatrix `indices`.
fn lanczos_lowest(h: &SparseSymmetric, indices: &[usize], count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = indices.len();
    let mut pos = vec![usize::MAX; h.dim];
    for (k, &i) in indices.iter().enumerate() {
        pos[i] = k;
    }
    let op = |x: &[f64], y: &mut [f64]| {
        let f = |(k, out): (usize, &mut f64)| {
            *out = h
                .row(indices[k])
                .filter(|e| pos[e.0] != usize::MAX)
                .map(|(c, v)| v * x[pos[c]])
                .sum();
        };
        if n > 4096 {
            y.par_iter_mut().enumerate().for_each(f);
        } else {
            y.iter_mut().enumerate().for_each(f);
        }
    };
    let max_krylov = n.min(count * 40 + 160);
    // deterministic, generic start vector
    let mut start: Vec<f64> = (0..n)
        .map(|k| 1.0 + 0.5 * ((k as f64) * 0.618_033_988_75).sin())
        .collect();
    let mut ritz_vals = Vec::new();
    let mut ritz_vecs = Vec::new();
    for _restart in 0..30 {
        let norm = start.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / norm).collect()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        let mut converged = false;
        loop {
            let k = basis.len() - 1;
            op(&basis[k], &mut w);
            let a: f64 = w.iter().zip(&basis[k]).map(|(x, y)| x * y).sum();
            alphas.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let c: f64 = w.iter().zip(q).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let m = alphas.len();
            let exhausted = b < 1e-13 || m >= max_krylov;
            if m >= count && (m.is_multiple_of(10) || exhausted) {
                let t = DMatrix::from_fn(m, m, |r, c| {
                    if r == c {
                        alphas[r]
                    } else if r + 1 == c {
                        betas[r]
                    } else if c + 1 == r {
                        betas[c]
                    } else {
                        0.0
                    }
                });
                let eig = t.symmetric_eigen();
                let mut order: Vec<usize> = (0..m).collect();
                order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
                let done = order[..count].iter().all(|&j| {
                    let resid = (b * eig.eigenvectors[(m - 1, j)]).abs();
                    resid <= 1e-12 * eig.eigenvalues[j].abs().max(1.0)
                });
                ritz_vals = order[..count].iter().map(|&j| eig.eigenvalues[j]).collect();
                ritz_vecs = order[..count]
                    .iter()
                    .map(|&j| {
                        let mut v = vec![0.0; n];
                        for (i, q) in basis.iter().enumerate().take(m) {
                            let c = eig.eigenvectors[(i, j)];
                            v.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
                        }
                        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        v.iter_mut().for_each(|x| *x /= nv);
                        v
                    })
                    .collect();
                if done || b < 1e-13 {
                    converged = true;
                }
                if converged || exhausted {
                    break;
                }
            }
            if exhausted {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        if converged {
            return Ok((ritz_vals, ritz_vecs));
        }
        // restart from the sum of wanted Ritz vectors
        start = vec![0.0; n];
        for v in &ritz_vecs {
            start.iter_mut().zip(v).for_each(|(x, y)| *x += y);
        }
    }
    Err(Error::CutoffNotConverged {
        nu_max: 0,
        delta: f64::NAN,
    })
}

/// Lowest eigenpair of each sector at a certified cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStates {
    pub even: Eigenpair,
    pub odd: Eigenpair,
    pub nu_max: u32,
    /// max over sectors of |E(ν_max) − E(ν_max − 10)|.
    pub cutoff_delta: f64,
}

impl GroundStates {
    pub fn ground(&self) -> &Eigenpair {
        if self.odd.energy < self.even.energy {
            &self.odd
        } else {
            &self.even
        }
    }

    pub fn get(&self, branch: ParityBranch) -> &Eigenpair {
        match branch {
            ParityBranch::Even => &self.even,
            ParityBranch::Odd => &self.odd,
        }
    }
}

/// Per-sector ground energies at a fixed cutoff.
pub fn sector_ground_energies(params: &ModelParams, nu_max: u32, opts: &FockOptions) -> Result<(Eigenpair, Eigenpair)> {
    let space = TruncatedSpace::new(params.n_atoms, nu_max);
    let h = build_hamiltonian(params, &space, opts)?;
    let sectors = parity_sectors(&space, params.config);
    let (even, odd) = rayon::join(
        || lowest_in_sector(&h, &space, &sectors.even, 1, opts),
        || lowest_in_sector(&h, &space, &sectors.odd, 1, opts),
    );
    let pick = |v: Vec<Eigenpair>| v.into_iter().next().ok_or(Error::DegenerateState);
    Ok((pick(even?)?, pick(odd?)?))
}

/// Ground states with the cutoff doubled from `opts.initial_nu_max` until
/// both sector energies move by less than the tolerance between ν_max − 10
/// and ν_max.
pub fn ground_states(params: &ModelParams, opts: &FockOptions) -> Result<GroundStates> {
    params.validate()?;
    let mut nu_max = opts.initial_nu_max.max(11);
    loop {
        let (even, odd) = sector_ground_energies(params, nu_max, opts)?;
        let (even_lo, odd_lo) = sector_ground_energies(params, nu_max - 10, opts)?;
        let delta = (even.energy - even_lo.energy)
            .abs()
            .max((odd.energy - odd_lo.energy).abs());
        if delta < opts.cutoff_tolerance {
            return Ok(GroundStates {
                even,
                odd,
                nu_max,
                cutoff_delta: delta,
            });
        }
        if nu_max * 2 > opts.max_nu_max {
            return Err(Error::CutoffNotConverged {
                nu_max: nu_max as usize,
                delta,
            });
        }
        nu_max *= 2;
    }
}

/// Max entrywise deviation, on rows and columns with ν < ν_max − 2, between
/// U H_R U† (U = e^{iθM}) and cos 2θ H_R + (i/2) sin 2θ [M, H_R].
pub fn rotation_identity_deviation(params: &ModelParams, space: &TruncatedSpace, theta: f64) -> Result<f64> {
    let hr = build_counter_rotating(params, space, &FockOptions::default())?;
    let m: Vec<f64> = space.iter().map(|b| b.excitation(params.config) as f64).collect();
    let interior = |i: usize| space.basis(i).nu + 2 < space.nu_max;
    let mut worst: f64 = 0.0;
    for r in (0..hr.dim).filter(|&r| interior(r)) {
        for (c, v) in hr.row(r).filter(|e| interior(e.0)) {
            let u_r = Complex64::from_polar(1.0, theta * m[r]);
            let u_c = Complex64::from_polar(1.0, theta * m[c]);
            let lhs = u_r * v * u_c.conj();
            let commutator = (m[r] - m[c]) * v;
            let rhs = Complex64::new((2.0 * theta).cos() * v, 0.5 * (2.0 * theta).sin() * commutator);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// Max entrywise |U H_R U† − H_R| on the interior block.
pub fn rotation_invariance_deviation(params: &ModelParams, space: &TruncatedSpace, theta: f64) -> Result<f64> {
    let hr = build_counter_rotating(params, space, &FockOptions::default())?;
    let m: Vec<f64> = space.iter().map(|b| b.excitation(params.config) as f64).collect();
    let interior = |i: usize| space.basis(i).nu + 2 < space.nu_max;
    let mut worst: f64 = 0.0;
    for r in (0..hr.dim).filter(|&r| interior(r)) {
        for (c, v) in hr.row(r).filter(|e| interior(e.0)) {
            let lhs = Complex64::from_polar(1.0, theta * (m[r] - m[c])) * v;
            worst = worst.max((lhs - v).norm());
        }
    }
    Ok(worst)
}

/// Matrix of Σ_j A_kj A_jk (or Σ A_kk when `quadratic` is false) on the
/// atomic space; the Casimirs make these multiples of the identity.
pub fn casimir_matrix(n_atoms: u32, quadratic: bool) -> DMatrix<f64> {
    let space = TruncatedSpace::new(n_atoms, 0);
    let d = space.atomic_dim();
    let mut out = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        e[col] = Complex64::new(1.0, 0.0);
        let basis = StateVector {
            space: space.clone(),
            amplitudes: e,
        };
        let mut image = DVector::<Complex64>::zeros(d);
        for k in 0..3 {
            if quadratic {
                for j in 0..3 {
                    let inner = with(&basis, apply_generator(&basis, j, k));
                    image += DVector::from_vec(apply_generator(&inner, k, j));
                }
            } else {
                image += DVector::from_vec(apply_generator(&basis, k, k));
            }
        }
        for row in 0..d {
            out[(row, col)] = image[row].re;
        }
    }
    out
}

/// One eigenvalue per line, `{:.17e}`.
/// Energy, photon, population and excitation statistics of a state, plus
/// its atomic linear entropy.
pub fn state_observables(params: &ModelParams, state: &StateVector) -> Result<(ObservableReport, f64)> {
    let re = |obs: Observable| expect(state, &obs).map(|z| z.re);
    let n_photons = re(Observable::Number)?;
    let populations = [
        re(Observable::Generator(0, 0))?,
        re(Observable::Generator(1, 1))?,
        re(Observable::Generator(2, 2))?,
    ];
    let mut var_populations = [0.0; 3];
    for i in 0..3 {
        var_populations[i] = re(Observable::GeneratorPair([i, i, i, i]))? - populations[i].powi(2);
    }
    let m = re(Observable::Excitation(params.config))?;
    let report = ObservableReport {
        energy: re(Observable::Hamiltonian(*params))?,
        n_photons,
        populations,
        m_excitations: m,
        var_photons: re(Observable::NumberSq)? - n_photons * n_photons,
        var_populations,
        var_m: re(Observable::ExcitationSq(params.config))? - m * m,
    };
    let rho = state.partial_trace();
    let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
    Ok((report, 1.0 - purity))
}

pub fn write_eigenvalues<W: Write>(values: &[f64], mut w: W) -> io::Result<()> {
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}
