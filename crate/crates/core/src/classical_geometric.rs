//! Large-S behaviour of the parametric representation: the collapse of
//! `p(theta)` onto `vartheta_M`, the resulting classical qubit ensemble, and
//! the Pancharatnam phase of a qubit state carried around a latitude loop.
//!
//! Phase convention: for loop states `|n_1>, ..., |n_K>` the phase is
//! `gamma = -arg(<n_1|n_2> <n_2|n_3> ... <n_K|n_1>)` reduced to `[0, 2pi)`.
//! With `|n> = cos(Theta/2)|up> + sin(Theta/2) e^{i phi}|down>` a
//! counterclockwise loop (increasing `phi`) gives `pi(1 + cos Theta)` and a
//! clockwise one `pi(1 - cos Theta)`.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::parametric_rep::{p_distribution, uniform_grid, DEFAULT_GRID_POINTS};
use crate::star_model::{binary_entropy, eigenstate, entanglement, validate_sector, Branch};
use crate::{Error, HalfInt, Result};

/// Loop discretization used for reported phases.
pub const DEFAULT_LOOP_POINTS: usize = 4096;

/// Smallest admissible overlap modulus between consecutive loop states.
pub const MIN_OVERLAP: f64 = 1e-12;

/// Projection `M` closest to `ratio * S~` in the sector of ring spin `spin`.
///
/// The minus branch only exists for `|M| <= S - 1/2`, so the result is
/// clamped to that range there. Ties go to the smaller `|M|`.
pub fn resolve_m(spin: HalfInt, ratio: f64, branch: Branch) -> Result<HalfInt> {
    if spin.twice() <= 0 {
        return Err(Error::Domain(format!(
            "ring spin must be positive, got S = {spin}"
        )));
    }
    if !(-1.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!("M/S~ = {ratio} is outside [-1, 1]")));
    }
    let limit = match branch {
        Branch::Plus => spin.twice() + 1,
        Branch::Minus => spin.twice() - 1,
    };
    let target = ratio * f64::from(spin.twice() + 1);
    // admissible twice(M) have the parity of twice(S) + 1
    let parity = (spin.twice() + 1).rem_euclid(2);
    let mut best: Option<i32> = None;
    let mut t = -limit;
    while t <= limit {
        if t.rem_euclid(2) == parity {
            let better = match best {
                None => true,
                Some(b) => {
                    let (dt, db) = ((f64::from(t) - target).abs(), (f64::from(b) - target).abs());
                    dt < db || (dt == db && t.abs() < b.abs())
                }
            };
            if better {
                best = Some(t);
            }
        }
        t += 1;
    }
    best.map(HalfInt::from_twice).ok_or_else(|| {
        Error::Domain(format!(
            "no admissible M for S = {spin} on the {branch} branch"
        ))
    })
}

/// One row of [`CollapseTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseRow {
    pub spin: HalfInt,
    pub m: HalfInt,
    /// `M / S~` actually used.
    pub ratio: f64,
    pub vartheta: f64,
    pub mode: f64,
    pub std: f64,
    /// `|mode - vartheta_M|`.
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapseTable {
    pub target_ratio: f64,
    pub branch: Branch,
    pub rows: Vec<CollapseRow>,
}

impl CollapseTable {
    /// Both `std` and `shift` strictly decrease along the rows.
    pub fn is_collapsing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].std < w[0].std && w[1].shift < w[0].shift)
    }
}

/// Width and offset of `p(theta)` for a sequence of ring spins at fixed
/// `M / S~`, on a uniform grid of `grid_points` samples.
pub fn delta_collapse_diagnostics(
    spins: &[HalfInt],
    ratio: f64,
    branch: Branch,
    grid_points: usize,
) -> Result<CollapseTable> {
    let grid = uniform_grid(grid_points);
    let mut rows = Vec::with_capacity(spins.len());
    for &spin in spins {
        let m = resolve_m(spin, ratio, branch)?;
        let state = eigenstate(spin, m, branch)?;
        let dist = p_distribution(&state, &grid)?;
        rows.push(CollapseRow {
            spin,
            m,
            ratio: state.cos_vartheta(),
            vartheta: state.vartheta(),
            mode: dist.mode,
            std: dist.std,
            shift: dist.shift(),
        });
    }
    Ok(CollapseTable {
        target_ratio: ratio,
        branch,
        rows,
    })
}

/// Default-grid version of [`delta_collapse_diagnostics`].
pub fn collapse_table(spins: &[HalfInt], ratio: f64, branch: Branch) -> Result<CollapseTable> {
    delta_collapse_diagnostics(spins, ratio, branch, DEFAULT_GRID_POINTS)
}

fn bloch_of_density(rho: &Matrix2<Complex64>) -> [f64; 3] {
    [
        2.0 * rho[(1, 0)].re,
        2.0 * rho[(1, 0)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

/// Von Neumann entropy in bits of a qubit density matrix.
pub fn von_neumann_entropy(rho: &Matrix2<Complex64>) -> f64 {
    let n = bloch_of_density(rho);
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt().min(1.0);
    binary_entropy(0.5 * (1.0 - len))
}

/// Mixed qubit state with its average Bloch vector and entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitEnsembleState {
    pub rho: Matrix2<Complex64>,
    pub nbar: [f64; 3],
    pub entropy: f64,
}

impl QubitEnsembleState {
    pub fn from_density(rho: Matrix2<Complex64>) -> Result<Self> {
        let trace = rho[(0, 0)] + rho[(1, 1)];
        if (trace - 1.0).norm() > 1e-10 {
            return Err(Error::Domain(format!("density matrix has trace {trace}")));
        }
        if (rho[(0, 1)] - rho[(1, 0)].conj()).norm() > 1e-10 {
            return Err(Error::Domain("density matrix is not Hermitian".into()));
        }
        let nbar = bloch_of_density(&rho);
        if nbar.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-10 {
            return Err(Error::Domain("density matrix is not positive".into()));
        }
        Ok(QubitEnsembleState {
            rho,
            nbar,
            entropy: von_neumann_entropy(&rho),
        })
    }

    /// Uniform mixture of pure states given by their kets.
    pub fn mixture(kets: &[[Complex64; 2]]) -> Result<Self> {
        if kets.is_empty() {
            return Err(Error::Domain("empty ensemble".into()));
        }
        let mut rho = Matrix2::zeros();
        for k in kets {
            for i in 0..2 {
                for j in 0..2 {
                    rho[(i, j)] += k[i] * k[j].conj();
                }
            }
        }
        Self::from_density(rho / Complex64::new(kets.len() as f64, 0.0))
    }
}

/// The qubit ensemble obtained when `Theta` freezes at `vartheta_M` (plus)
/// or `pi - vartheta_M` (minus) and `phi` is averaged:
/// `rho = diag(cos^2(Theta/2), sin^2(Theta/2))`.
pub fn classical_ensemble(spin: HalfInt, m: HalfInt, branch: Branch) -> Result<QubitEnsembleState> {
    let state = eigenstate(spin, m, branch)?;
    let big_theta = match branch {
        Branch::Plus => state.vartheta(),
        Branch::Minus => PI - state.vartheta(),
    };
    let c2 = (0.5 * big_theta).cos().powi(2);
    let s2 = (0.5 * big_theta).sin().powi(2);
    let zero = Complex64::new(0.0, 0.0);
    let rho = Matrix2::new(Complex64::new(c2, 0.0), zero, zero, Complex64::new(s2, 0.0));
    Ok(QubitEnsembleState {
        rho,
        nbar: [0.0, 0.0, branch.sign() * state.cos_vartheta()],
        entropy: von_neumann_entropy(&rho),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `phi` decreasing, viewed from `+z`.
    Clockwise,
    /// `phi` increasing, viewed from `+z`.
    Counterclockwise,
}

impl Orientation {
    pub fn reversed(self) -> Self {
        match self {
            Orientation::Clockwise => Orientation::Counterclockwise,
            Orientation::Counterclockwise => Orientation::Clockwise,
        }
    }
}

/// Closed loop of `points` equally spaced qubit states on the latitude
/// `Theta = polar` of the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopSpec {
    polar: f64,
    orientation: Orientation,
    points: usize,
}

impl LoopSpec {
    pub fn new(polar: f64, orientation: Orientation, points: usize) -> Result<Self> {
        if !(polar > 0.0 && polar < PI) {
            return Err(Error::Domain(format!(
                "loop latitude {polar} must lie strictly inside (0, pi)"
            )));
        }
        if points < 3 {
            return Err(Error::Domain(format!(
                "a loop needs at least 3 points, got {points}"
            )));
        }
        Ok(LoopSpec {
            polar,
            orientation,
            points,
        })
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn azimuths(&self) -> Vec<f64> {
        let step = match self.orientation {
            Orientation::Counterclockwise => TAU / self.points as f64,
            Orientation::Clockwise => -TAU / self.points as f64,
        };
        (0..self.points).map(|j| step * j as f64).collect()
    }

    pub fn states(&self) -> Vec<[Complex64; 2]> {
        let (c, s) = ((0.5 * self.polar).cos(), (0.5 * self.polar).sin());
        self.azimuths()
            .into_iter()
            .map(|phi| [Complex64::new(c, 0.0), Complex64::from_polar(s, phi)])
            .collect()
    }

    /// `K -> infinity` value of [`pancharatnam_phase`].
    pub fn closed_form(&self) -> f64 {
        match self.orientation {
            Orientation::Counterclockwise => PI * (1.0 + self.polar.cos()),
            Orientation::Clockwise => PI * (1.0 - self.polar.cos()),
        }
    }
}

fn inner(a: &[Complex64; 2], b: &[Complex64; 2]) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

/// Pancharatnam phase of an arbitrary closed sequence of qubit states.
/// The closing link `<n_K|n_1>` is included.
pub fn pancharatnam_phase_of(states: &[[Complex64; 2]]) -> Result<f64> {
    if states.len() < 3 {
        return Err(Error::Domain(format!(
            "a loop needs at least 3 points, got {}",
            states.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..states.len() {
        let overlap = inner(&states[i], &states[(i + 1) % states.len()]);
        let modulus = overlap.norm();
        if modulus < MIN_OVERLAP {
            return Err(Error::VanishingOverlap { link: i, modulus });
        }
        total += overlap.arg();
    }
    let gamma = (-total).rem_euclid(TAU);
    Ok(if gamma >= TAU { 0.0 } else { gamma })
}

pub fn pancharatnam_phase(spec: &LoopSpec) -> Result<f64> {
    pancharatnam_phase_of(&spec.states())
}

/// Entanglement of `|Psi^±_M>` next to the binary entropies of the two
/// latitude phases at `vartheta_M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseIdentity {
    pub entanglement: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `max_± |E - h(gamma_±/2pi)|`.
    pub residual: f64,
    pub points: usize,
}

pub fn entanglement_phase_identity(
    spin: HalfInt,
    m: HalfInt,
    points: usize,
) -> Result<PhaseIdentity> {
    validate_sector(spin, m)?;
    let ent = entanglement(spin, m)?;
    let vartheta = (f64::from(m.twice()) / f64::from(spin.twice() + 1)).acos();
    let (gamma_plus, gamma_minus) = if m.abs().twice() == spin.twice() + 1 {
        // the loop shrinks to a pole
        if points < 3 {
            return Err(Error::Domain(format!(
                "a loop needs at least 3 points, got {points}"
            )));
        }
        (0.0, 0.0)
    } else {
        (
            pancharatnam_phase(&LoopSpec::new(
                vartheta,
                Orientation::Counterclockwise,
                points,
            )?)?,
            pancharatnam_phase(&LoopSpec::new(vartheta, Orientation::Clockwise, points)?)?,
        )
    };
    let residual = (ent - binary_entropy(gamma_plus / TAU))
        .abs()
        .max((ent - binary_entropy(gamma_minus / TAU)).abs());
    Ok(PhaseIdentity {
        entanglement: ent,
        gamma_plus,
        gamma_minus,
        residual,
        points,
    })
}
