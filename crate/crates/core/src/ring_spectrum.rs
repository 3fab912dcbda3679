//! Exact diagonalization of the antiferromagnetic Heisenberg ring
//! `H_B = (k/N) sum_i s_i . s_{i+1}`, resolved by total ring spin `S`.
//!
//! Every total-spin multiplet has a member with `S^z = S`, so the lowest
//! energy of spin `S` is found in the `m = S` magnetization sector. Each
//! sector is diagonalized densely and its eigenstates are labelled by the
//! expectation of `S^2`. Energies are stored dimensionless (`H_B / k`).
//!
//! Basis states are bitmasks: bit `i` is ring site `i`, a set bit is spin up.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, HalfInt, Result};

/// Largest ring accepted by [`diagonalize_ring`].
pub const MAX_RING_SITES: usize = 14;

/// Allowed deviation of `<S^2>` from `S(S+1)` when labelling eigenstates.
pub const S2_TOLERANCE: f64 = 1e-8;

/// Two critical ratios closer than this are reported as coincident.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

/// Eigenvalues closer than this are treated as one degenerate level.
const CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingConfig {
    sites: usize,
    k: f64,
}

impl RingConfig {
    pub fn new(sites: usize, k: f64) -> Result<Self> {
        if sites < 2 || !sites.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "ring size N must be even and >= 2, got {sites}"
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ring coupling k must be positive, got {k}"
            )));
        }
        Ok(RingConfig { sites, k })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// Computational basis states of `sites` spins with exactly `up` spins up.
#[derive(Clone, Debug)]
pub struct SzSector {
    sites: usize,
    up: usize,
    states: Vec<u32>,
}

impl SzSector {
    pub fn new(sites: usize, up: usize) -> Self {
        assert!(
            sites <= 30 && up <= sites,
            "sector ({sites}, {up}) out of range"
        );
        let states = (0u32..1 << sites)
            .filter(|s| s.count_ones() as usize == up)
            .collect();
        SzSector { sites, up, states }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn up(&self) -> usize {
        self.up
    }

    /// Total `S^z` of the sector.
    pub fn magnetization(&self) -> HalfInt {
        HalfInt::from_twice(2 * self.up as i32 - self.sites as i32)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Bitmasks in ascending order.
    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    /// Embeds a sector vector into the full `2^sites` space.
    pub fn embed(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut full = vec![0.0; 1 << self.sites];
        for (&s, &x) in self.states.iter().zip(v.iter()) {
            full[s as usize] = x;
        }
        full
    }
}

fn ring_bonds(sites: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..sites).map(move |i| (i, (i + 1) % sites))
}

/// `H_B / k` restricted to one magnetization sector.
pub fn ring_hamiltonian(sector: &SzSector) -> DMatrix<f64> {
    let scale = 1.0 / sector.sites as f64;
    let dim = sector.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (col, &s) in sector.states.iter().enumerate() {
        for (i, j) in ring_bonds(sector.sites) {
            if (s >> i) & 1 == (s >> j) & 1 {
                h[(col, col)] += 0.25 * scale;
            } else {
                h[(col, col)] -= 0.25 * scale;
                let row = sector
                    .index_of(s ^ (1 << i | 1 << j))
                    .expect("spin flip stays in sector");
                h[(row, col)] += 0.5 * scale;
            }
        }
    }
    h
}

/// Total ring spin squared, `S^2 = 3N/4 + 2 sum_{i<j} s_i . s_j`, in one sector.
pub fn total_spin_squared(sector: &SzSector) -> DMatrix<f64> {
    let n = sector.sites;
    let dim = sector.dim();
    let mut s2 = DMatrix::from_diagonal_element(dim, dim, 0.75 * n as f64);
    for (col, &s) in sector.states.iter().enumerate() {
        for i in 0..n {
            for j in i + 1..n {
                if (s >> i) & 1 == (s >> j) & 1 {
                    s2[(col, col)] += 0.5;
                } else {
                    s2[(col, col)] -= 0.5;
                    let row = sector
                        .index_of(s ^ (1 << i | 1 << j))
                        .expect("spin flip stays in sector");
                    s2[(row, col)] += 1.0;
                }
            }
        }
    }
    s2
}

/// Applies the total lowering operator `S^-`; `to` must have one up spin less.
pub fn apply_lowering(from: &SzSector, to: &SzSector, v: &DVector<f64>) -> DVector<f64> {
    assert_eq!(from.up, to.up + 1, "S^- must lower the up count by one");
    let mut out = DVector::zeros(to.dim());
    for (&s, &x) in from.states.iter().zip(v.iter()) {
        for i in (0..from.sites).filter(|&i| (s >> i) & 1 == 1) {
            out[to.index_of(s & !(1 << i)).expect("lowered state in sector")] += x;
        }
    }
    out
}

/// Applies the total raising operator `S^+`; `to` must have one up spin more.
pub fn apply_raising(from: &SzSector, to: &SzSector, v: &DVector<f64>) -> DVector<f64> {
    assert_eq!(from.up + 1, to.up, "S^+ must raise the up count by one");
    let mut out = DVector::zeros(to.dim());
    for (&s, &x) in from.states.iter().zip(v.iter()) {
        for i in (0..from.sites).filter(|&i| (s >> i) & 1 == 0) {
            out[to.index_of(s | (1 << i)).expect("raised state in sector")] += x;
        }
    }
    out
}

/// Largest `|A_ij - A_ji|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Total spin whose `S(S+1)` matches `s2`.
pub fn spin_label(s2: f64) -> Result<usize> {
    let s = ((-1.0 + (1.0 + 4.0 * s2.max(0.0)).sqrt()) / 2.0).round();
    if (s2 - s * (s + 1.0)).abs() > S2_TOLERANCE {
        return Err(Error::DegeneracyAmbiguity {
            value: s2,
            tol: S2_TOLERANCE,
        });
    }
    Ok(s as usize)
}

/// Lowest ring level of a given total spin.
#[derive(Clone, Debug)]
pub struct RingMultiplet {
    spin: usize,
    energy: f64,
    degenerate: bool,
    top: DVector<f64>,
}

impl RingMultiplet {
    pub fn spin(&self) -> usize {
        self.spin
    }

    /// `E_B(S)`, dimensionless.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// True when more than one spin-`S` state shares the lowest energy; the
    /// stored state is then one deterministic pick from that eigenspace.
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    /// The `m = S` member, in the basis of the `S^z = S` sector.
    pub fn highest_weight(&self) -> &DVector<f64> {
        &self.top
    }
}

#[derive(Clone, Debug)]
pub struct RingSectorSpectrum {
    sites: usize,
    multiplets: Vec<RingMultiplet>,
}

impl RingSectorSpectrum {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn max_spin(&self) -> usize {
        self.sites / 2
    }

    /// `E_B(S)`. Panics if `spin > N/2`.
    pub fn energy(&self, spin: usize) -> f64 {
        self.multiplets[spin].energy
    }

    /// `E_B(0), E_B(1), ..., E_B(N/2)`.
    pub fn energies(&self) -> Vec<f64> {
        self.multiplets.iter().map(|m| m.energy).collect()
    }

    pub fn multiplet(&self, spin: usize) -> Option<&RingMultiplet> {
        self.multiplets.get(spin)
    }

    pub fn multiplets(&self) -> &[RingMultiplet] {
        &self.multiplets
    }

    pub fn lieb_mattis_holds(&self) -> bool {
        self.multiplets
            .windows(2)
            .all(|w| w[0].energy < w[1].energy)
    }

    /// The ladder `|S, S>, |S, S-1>, ..., |S, -S>` of the lowest spin-`S`
    /// multiplet, generated from the highest-weight state by `S^-` and
    /// embedded in the full `2^N` ring space. Successive members are
    /// Condon-Shortley partners, i.e. `S^+ |S, m> ∝ |S, m+1>` with a positive
    /// factor.
    pub fn ladder(&self, spin: usize) -> Vec<Vec<f64>> {
        let half = self.sites / 2;
        let multiplet = &self.multiplets[spin];
        let mut sector = SzSector::new(self.sites, half + spin);
        let mut v = multiplet.top.clone();
        let mut out = vec![sector.embed(&v)];
        for _ in 0..2 * spin {
            let next = SzSector::new(self.sites, sector.up - 1);
            v = apply_lowering(&sector, &next, &v);
            let norm = v.norm();
            v /= norm;
            out.push(next.embed(&v));
            sector = next;
        }
        out
    }
}

fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Lowest spin-`target` eigenstate of `H_B/k` inside a magnetization sector.
fn lowest_of_spin(sector: &SzSector, target: usize) -> Result<RingMultiplet> {
    let h = ring_hamiltonian(sector);
    let s2 = total_spin_squared(sector);
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..sector.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut start = 0;
    while start < order.len() {
        let e0 = eig.eigenvalues[order[start]];
        let mut end = start + 1;
        while end < order.len() && eig.eigenvalues[order[end]] - e0 <= CLUSTER_TOLERANCE {
            end += 1;
        }
        let cols: Vec<DVector<f64>> = order[start..end]
            .iter()
            .map(|&c| eig.eigenvectors.column(c).into_owned())
            .collect();
        let basis = DMatrix::from_columns(&cols);
        // S^2 commutes with H_B, so it can be diagonalized inside the level.
        let projected = basis.transpose() * &s2 * &basis;
        let inner = SymmetricEigen::new(projected);
        let mut inner_order: Vec<usize> = (0..cols.len()).collect();
        inner_order.sort_by(|&a, &b| inner.eigenvalues[a].total_cmp(&inner.eigenvalues[b]));

        let mut found: Option<DVector<f64>> = None;
        let mut count = 0;
        for &i in &inner_order {
            if spin_label(inner.eigenvalues[i])? == target {
                count += 1;
                if found.is_none() {
                    found = Some(&basis * inner.eigenvectors.column(i));
                }
            }
        }
        if let Some(mut top) = found {
            top.normalize_mut();
            fix_sign(&mut top);
            let energy = top.dot(&(&h * &top));
            return Ok(RingMultiplet {
                spin: target,
                energy,
                degenerate: count > 1,
                top,
            });
        }
        start = end;
    }
    Err(Error::OrderingViolation(format!(
        "no spin-{target} state in the S^z = {} sector",
        sector.magnetization()
    )))
}

/// Lowest energy of `H_B/k` in every total-spin sector `S = 0..=N/2`.
pub fn diagonalize_ring(cfg: &RingConfig) -> Result<RingSectorSpectrum> {
    let n = cfg.sites();
    if n > MAX_RING_SITES {
        return Err(Error::CapacityExceeded {
            n,
            max: MAX_RING_SITES,
        });
    }
    let half = n / 2;
    let multiplets = (0..=half)
        .map(|spin| lowest_of_spin(&SzSector::new(n, half + spin), spin))
        .collect::<Result<Vec<_>>>()?;
    Ok(RingSectorSpectrum {
        sites: n,
        multiplets,
    })
}

/// Critical frustration ratios `alpha_0 < alpha_1 < ...` at which the star's
/// ground state moves from ring spin `S` to `S - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDiagram {
    sites: usize,
    alphas: Vec<f64>,
    coincident: Vec<usize>,
}

impl PhaseDiagram {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Indices `n` with `alpha_{n+1}` equal to `alpha_n` within
    /// [`COINCIDENCE_TOLERANCE`].
    pub fn coincident_crossings(&self) -> &[usize] {
        &self.coincident
    }

    /// Ring spin of the star ground state: `N/2` on `[0, alpha_0]` and
    /// `N/2 - n` on `(alpha_{n-1}, alpha_n]`.
    pub fn ground_spin(&self, k_over_g: f64) -> usize {
        self.sites / 2 - self.alphas.iter().filter(|&&a| a < k_over_g).count()
    }
}

/// Crossings of the star ground-state levels between adjacent ring spins.
///
/// For `S >= 1` the lowest star level is `E_-(S) = k E_B(S) - g(S+1)/(2N)`,
/// so two such levels cross at `k/g = 1 / (2N [E_B(S) - E_B(S-1)])`. The
/// `S = 0` sector carries the single level `k E_B(0)`, which moves the last
/// crossing to `k/g = 1 / (N [E_B(1) - E_B(0)])`.
pub fn critical_ratios(spec: &RingSectorSpectrum) -> Result<PhaseDiagram> {
    let n = spec.sites as f64;
    let half = spec.max_spin();
    let mut alphas = Vec::with_capacity(half);
    for step in 0..half {
        let upper = half - step;
        let gap = spec.energy(upper) - spec.energy(upper - 1);
        if gap <= 0.0 {
            return Err(Error::OrderingViolation(format!(
                "E_B({upper}) - E_B({}) = {gap:e} is not positive",
                upper - 1
            )));
        }
        let alpha = if upper == 1 {
            1.0 / (n * gap)
        } else {
            1.0 / (2.0 * n * gap)
        };
        alphas.push(alpha);
    }
    let mut coincident = Vec::new();
    for (i, w) in alphas.windows(2).enumerate() {
        if (w[1] - w[0]).abs() <= COINCIDENCE_TOLERANCE {
            coincident.push(i);
        } else if w[1] < w[0] {
            return Err(Error::OrderingViolation(format!(
                "alpha_{} = {} < alpha_{i} = {}",
                i + 1,
                w[1],
                w[0]
            )));
        }
    }
    Ok(PhaseDiagram {
        sites: spec.sites,
        alphas,
        coincident,
    })
}

/// `(E_+, E_-)` of the star multiplets built on ring spin `S > 0`.
pub fn multiplet_energies(
    spin: usize,
    m: HalfInt,
    cfg: &RingConfig,
    g: f64,
    spec: &RingSectorSpectrum,
) -> Result<(f64, f64)> {
    if spin == 0 {
        return Err(Error::Domain(
            "S = 0 carries the single level k E_B(0), not a pair of multiplets".into(),
        ));
    }
    if spin > spec.max_spin() || spec.sites != cfg.sites() {
        return Err(Error::Domain(format!(
            "S = {spin} is outside 1..={}",
            spec.max_spin()
        )));
    }
    if m.is_integer() || m.abs().twice() > 2 * spin as i32 + 1 {
        return Err(Error::Domain(format!(
            "M = {m} is not admissible for S = {spin}"
        )));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "star coupling g must be positive, got {g}"
        )));
    }
    let n = cfg.sites() as f64;
    let s = spin as f64;
    let ring = cfg.k() * spec.energy(spin);
    Ok((ring + g * s / (2.0 * n), ring - g * (s + 1.0) / (2.0 * n)))
}
