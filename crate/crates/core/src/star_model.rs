//! Eigenstates of the spin star
//! `H = (k/N) sum_i s_i . s_{i+1} + (g/N) (sigma/2) . sum_i s_i`.
//!
//! Within a ring-spin sector `S > 0` the eigenstates are
//! `|Psi^±_M> = a^±_M |up>|M - 1/2> + b^±_M |down>|M + 1/2>`,
//! with `E_+` for total angular momentum `J = S + 1/2` and `E_-` for
//! `J = S - 1/2`. [`StarModel`] builds these states in the full
//! `2^(N+1)`-dimensional space and checks them against `H` directly.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::ring_spectrum::{diagonalize_ring, multiplet_energies, RingConfig, RingSectorSpectrum};
use crate::{Error, HalfInt, Result};

/// Largest ring handled by the dense oracle.
pub const MAX_ORACLE_SITES: usize = 12;

/// Residual bound `|H psi - E psi|` for a built eigenstate.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Branch {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            other => Err(format!("branch must be 'plus' or 'minus', got '{other}'")),
        }
    }
}

/// Binary entropy in bits, `-x log2 x - (1-x) log2 (1-x)`, zero at both ends.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// Coefficients `(a, b)` for `M / S~ = cos_vartheta`.
pub fn coefficients(cos_vartheta: f64, branch: Branch) -> (f64, f64) {
    let up = (0.5 * (1.0 + cos_vartheta)).max(0.0).sqrt();
    let down = (0.5 * (1.0 - cos_vartheta)).max(0.0).sqrt();
    match branch {
        Branch::Plus => (up, down),
        Branch::Minus => (-down, up),
    }
}

/// Checks that `(S, M)` labels a sector of the coupled qubit + spin-`S` system.
pub fn validate_sector(spin: HalfInt, m: HalfInt) -> Result<()> {
    if spin.twice() <= 0 {
        return Err(Error::Domain(format!(
            "ring spin must be positive, got S = {spin}"
        )));
    }
    if (m.twice() + spin.twice()) % 2 == 0 {
        return Err(Error::Domain(format!(
            "M = {m} is incompatible with S = {spin}"
        )));
    }
    if m.abs().twice() > spin.twice() + 1 {
        return Err(Error::Domain(format!(
            "|M| = {} exceeds S + 1/2 for S = {spin}",
            m.abs()
        )));
    }
    Ok(())
}

fn cos_vartheta(spin: HalfInt, m: HalfInt) -> f64 {
    f64::from(m.twice()) / f64::from(spin.twice() + 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarEigenstate {
    spin: HalfInt,
    m: HalfInt,
    branch: Branch,
    a: f64,
    b: f64,
    cos_vartheta: f64,
}

impl StarEigenstate {
    pub fn spin(&self) -> HalfInt {
        self.spin
    }

    /// Total `J^z`.
    pub fn m(&self) -> HalfInt {
        self.m
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Amplitude on `|up>|M - 1/2>`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Amplitude on `|down>|M + 1/2>`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `S~ = S + 1/2`.
    pub fn s_tilde(&self) -> f64 {
        self.spin.value() + 0.5
    }

    /// `M / S~`.
    pub fn cos_vartheta(&self) -> f64 {
        self.cos_vartheta
    }

    pub fn vartheta(&self) -> f64 {
        self.cos_vartheta.acos()
    }

    /// Ring projection paired with the qubit up state.
    pub fn ring_m_up(&self) -> HalfInt {
        self.m - HalfInt::HALF
    }

    /// Ring projection paired with the qubit down state.
    pub fn ring_m_down(&self) -> HalfInt {
        self.m + HalfInt::HALF
    }
}

/// Analytic eigenstate of sector `(S, M)`. The `-` multiplet has
/// `J = S - 1/2`, so it requires `|M| <= S - 1/2`.
pub fn eigenstate(spin: HalfInt, m: HalfInt, branch: Branch) -> Result<StarEigenstate> {
    validate_sector(spin, m)?;
    if branch == Branch::Minus && m.abs().twice() > spin.twice() - 1 {
        return Err(Error::Domain(format!(
            "the minus multiplet has J = S - 1/2; |M| = {} exceeds it for S = {spin}",
            m.abs()
        )));
    }
    let cos_vartheta = cos_vartheta(spin, m);
    let (a, b) = coefficients(cos_vartheta, branch);
    Ok(StarEigenstate {
        spin,
        m,
        branch,
        a,
        b,
        cos_vartheta,
    })
}

/// Qubit-ring entanglement of `|Psi^±_M>` in bits; the same for both branches.
pub fn entanglement(spin: HalfInt, m: HalfInt) -> Result<f64> {
    validate_sector(spin, m)?;
    Ok(binary_entropy(0.5 * (1.0 - cos_vartheta(spin, m))))
}

/// A state of qubit + ring over the computational basis. Index
/// `q << N | r`, with `q = 1` for qubit up and `r` the ring bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseStarState {
    sites: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseStarState {
    pub fn new(sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << (sites + 1) {
            return Err(Error::Domain(format!(
                "expected {} amplitudes for N = {sites}, got {}",
                1usize << (sites + 1),
                amplitudes.len()
            )));
        }
        Ok(DenseStarState { sites, amplitudes })
    }

    pub fn index(sites: usize, qubit_up: bool, ring: usize) -> usize {
        (usize::from(qubit_up) << sites) | ring
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn ring_part(&self, qubit_up: bool) -> &[Complex64] {
        let dim = 1 << self.sites;
        let start = if qubit_up { dim } else { 0 };
        &self.amplitudes[start..start + dim]
    }

    /// Reduced qubit density matrix in the `{|up>, |down>}` basis.
    pub fn reduced_qubit(&self) -> Matrix2<Complex64> {
        let parts = [self.ring_part(true), self.ring_part(false)];
        Matrix2::from_fn(|i, j| {
            parts[i]
                .iter()
                .zip(parts[j])
                .map(|(x, y)| x * y.conj())
                .sum()
        })
    }

    /// Reduced ring density matrix projected on a ring multiplet, given as
    /// real full-space vectors ordered `m = S, S-1, ..., -S`.
    pub fn reduced_ring(&self, ladder: &[Vec<f64>]) -> DMatrix<Complex64> {
        let proj = |v: &[f64], part: &[Complex64]| -> Complex64 {
            v.iter().zip(part).map(|(&x, z)| z * x).sum()
        };
        let mut rho = DMatrix::zeros(ladder.len(), ladder.len());
        for up in [true, false] {
            let part = self.ring_part(up);
            let c: Vec<Complex64> = ladder.iter().map(|v| proj(v, part)).collect();
            for i in 0..c.len() {
                for j in 0..c.len() {
                    rho[(i, j)] += c[i] * c[j].conj();
                }
            }
        }
        rho
    }

    pub fn inner(&self, other: &DenseStarState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }
}

/// The star Hamiltonian for fixed `(N, k, g)` together with its ring spectrum.
#[derive(Clone, Debug)]
pub struct StarModel {
    cfg: RingConfig,
    g: f64,
    spectrum: RingSectorSpectrum,
}

impl StarModel {
    pub fn new(cfg: RingConfig, g: f64) -> Result<Self> {
        if cfg.sites() > MAX_ORACLE_SITES {
            return Err(Error::CapacityExceeded {
                n: cfg.sites(),
                max: MAX_ORACLE_SITES,
            });
        }
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "star coupling g must be positive, got {g}"
            )));
        }
        let spectrum = diagonalize_ring(&cfg)?;
        Ok(StarModel { cfg, g, spectrum })
    }

    pub fn config(&self) -> &RingConfig {
        &self.cfg
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn spectrum(&self) -> &RingSectorSpectrum {
        &self.spectrum
    }

    /// Energy of an analytic eigenstate from the multiplet formulas.
    pub fn energy(&self, state: &StarEigenstate) -> Result<f64> {
        let spin = ring_spin(state.spin())?;
        let (plus, minus) = multiplet_energies(spin, state.m(), &self.cfg, self.g, &self.spectrum)?;
        Ok(match state.branch() {
            Branch::Plus => plus,
            Branch::Minus => minus,
        })
    }

    fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.cfg.sites();
        let ring = self.cfg.k() / n as f64;
        let star = self.g / n as f64;
        let mut pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, ring)).collect();
        pairs.extend((0..n).map(|i| (n, i, star)));
        pairs
    }

    /// `H |psi>` without forming the matrix. The qubit is bit `N`.
    pub fn apply_hamiltonian(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let pairs = self.couplings();
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (s, &amp) in psi.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(i, j, coupling) in &pairs {
                if (s >> i) & 1 == (s >> j) & 1 {
                    out[s] += amp * (0.25 * coupling);
                } else {
                    out[s] -= amp * (0.25 * coupling);
                    out[s ^ (1 << i | 1 << j)] += amp * (0.5 * coupling);
                }
            }
        }
        out
    }

    /// Full matrix of `H`; only sensible for small rings.
    pub fn dense_hamiltonian(&self) -> DMatrix<f64> {
        let dim = 1 << (self.cfg.sites() + 1);
        let pairs = self.couplings();
        let mut h = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            for &(i, j, coupling) in &pairs {
                if (s >> i) & 1 == (s >> j) & 1 {
                    h[(s, s)] += 0.25 * coupling;
                } else {
                    h[(s, s)] -= 0.25 * coupling;
                    h[(s ^ (1 << i | 1 << j), s)] += 0.5 * coupling;
                }
            }
        }
        h
    }

    /// `|H psi - E psi|`.
    pub fn residual(&self, state: &DenseStarState, energy: f64) -> f64 {
        let h_psi = self.apply_hamiltonian(state.amplitudes());
        h_psi
            .iter()
            .zip(state.amplitudes())
            .map(|(h, p)| (h - p * energy).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The ring multiplet ladder `|S, m>` used by the oracle, `m = S..=-S`.
    pub fn ring_ladder(&self, spin: usize) -> Result<Vec<Vec<f64>>> {
        if spin > self.spectrum.max_spin() {
            return Err(Error::Domain(format!(
                "S = {spin} exceeds N/2 = {}",
                self.spectrum.max_spin()
            )));
        }
        Ok(self.spectrum.ladder(spin))
    }

    /// Builds `a |up>|m_-> + b |down>|m_+>` over the full basis and verifies it
    /// is an eigenvector of `H` with the multiplet energy.
    ///
    /// The ring states come from one `S^z` ladder of the lowest spin-`S`
    /// multiplet, so `|m_+>` is `S^+ |m_->` normalized.
    pub fn build_dense_eigenstate(&self, state: &StarEigenstate) -> Result<DenseStarState> {
        let spin = ring_spin(state.spin())?;
        if spin > self.spectrum.max_spin() {
            return Err(Error::Domain(format!(
                "S = {spin} exceeds N/2 = {}",
                self.spectrum.max_spin()
            )));
        }
        let n = self.cfg.sites();
        let ladder = self.spectrum.ladder(spin);
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n + 1)];
        let s2 = 2 * spin as i32;
        for (qubit_up, ring_m, coeff) in [
            (true, state.ring_m_up(), state.a()),
            (false, state.ring_m_down(), state.b()),
        ] {
            if ring_m.abs().twice() > s2 || coeff == 0.0 {
                continue;
            }
            let member = &ladder[((s2 - ring_m.twice()) / 2) as usize];
            for (r, &x) in member.iter().enumerate() {
                amps[DenseStarState::index(n, qubit_up, r)] += Complex64::new(coeff * x, 0.0);
            }
        }
        let dense = DenseStarState::new(n, amps)?;
        let residual = self.residual(&dense, self.energy(state)?);
        if residual > ORACLE_TOLERANCE {
            return Err(Error::OracleMismatch {
                residual,
                tol: ORACLE_TOLERANCE,
            });
        }
        Ok(dense)
    }
}

fn ring_spin(spin: HalfInt) -> Result<usize> {
    if !spin.is_integer() || spin.twice() <= 0 {
        return Err(Error::Domain(format!(
            "an even ring has integer S > 0, got S = {spin}"
        )));
    }
    Ok((spin.twice() / 2) as usize)
}
