//! Parametric representation of the qubit when the star is in `|Psi^±_M>`:
//!
//! `|Psi> = (S~/2pi) ∫ dOmega chi(Omega) |Omega> |phi(Omega)>`
//!
//! with `|chi|^2` the Husimi function of the ring and `|phi(Omega)>` a pure
//! qubit state parametrized by the angle `Theta(theta)` and `phi`.
//!
//! Phase convention: with `<Omega|m> = g_m e^{-i(S-m)phi}` the weight carries
//! `chi = |chi| e^{-i(S~-M)phi}`, which makes
//! `|phi> = ±cos(Theta/2)|up> + sin(Theta/2) e^{i phi}|down>` hold exactly.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::coherent_states::{g_or_zero, half_angles, SphereQuadrature};
use crate::star_model::{Branch, StarEigenstate};
use crate::{Error, Result};

/// Points of the default output grid on `[0, pi]`.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Largest accepted `|∫ p dtheta - 1|` on an output grid.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// What [`theta_map`] does at `theta = 0` and `theta = pi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoints {
    Reject,
    /// Continuous extension from the interior.
    Limit,
}

/// Uniform grid of `points` values from `0` to `pi` inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    PI
                } else {
                    PI * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiAmplitude {
    pub modulus: f64,
    pub phase: f64,
}

impl ChiAmplitude {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.phase)
    }
}

fn chi_components(state: &StarEigenstate, theta: f64) -> (f64, f64) {
    let spin = state.spin();
    (
        state.a() * g_or_zero(spin, state.ring_m_up(), theta),
        state.b() * g_or_zero(spin, state.ring_m_down(), theta),
    )
}

/// `|chi(theta)|^2`; independent of `phi`.
pub fn chi_modulus_sq(state: &StarEigenstate, theta: f64) -> f64 {
    let (up, down) = chi_components(state, theta);
    up * up + down * down
}

pub fn chi(state: &StarEigenstate, theta: f64, phi: f64) -> ChiAmplitude {
    ChiAmplitude {
        modulus: chi_modulus_sq(state, theta).sqrt(),
        phase: -(state.s_tilde() - state.m().value()) * phi,
    }
}

/// Polar angle `Theta` of the parametrized qubit state.
///
/// Minus branch: `Theta = pi - theta` for every `M`. Plus branch:
/// `tan(Theta/2) = tan^2(vartheta_M/2) cot(theta/2)`.
pub fn theta_map(state: &StarEigenstate, theta: f64, endpoints: Endpoints) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} is outside [0, pi]")));
    }
    if endpoints == Endpoints::Reject && (theta == 0.0 || theta == PI) {
        return Err(Error::Domain(format!(
            "theta = {theta} is an endpoint; use the limit mode"
        )));
    }
    Ok(match state.branch() {
        Branch::Minus => PI - theta,
        Branch::Plus => {
            // tan^2(vartheta/2) = (S~ - M) / (S~ + M)
            let s_tilde_twice = f64::from(state.spin().twice() + 1);
            let m_twice = f64::from(state.m().twice());
            let (c, s) = half_angles(theta);
            2.0 * ((s_tilde_twice - m_twice) * c).atan2((s_tilde_twice + m_twice) * s)
        }
    })
}

/// `|phi^±_M(Omega)> = ±cos(Theta/2)|up> + sin(Theta/2) e^{i phi}|down>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitParamState {
    pub big_theta: f64,
    pub phi: f64,
    pub branch: Branch,
}

impl QubitParamState {
    /// Components in the `{|up>, |down>}` basis.
    pub fn ket(&self) -> [Complex64; 2] {
        let half = 0.5 * self.big_theta;
        [
            Complex64::new(self.branch.sign() * half.cos(), 0.0),
            Complex64::from_polar(half.sin(), self.phi),
        ]
    }

    /// Bloch vector `<sigma>`: `n(Theta, phi)` on the plus branch and
    /// `n(Theta, phi + pi)` on the minus branch.
    pub fn bloch_vector(&self) -> [f64; 3] {
        bloch_vector(&self.ket())
    }
}

/// `<sigma>` of a normalized qubit ket.
pub fn bloch_vector(ket: &[Complex64; 2]) -> [f64; 3] {
    let cross = ket[0].conj() * ket[1];
    [
        2.0 * cross.re,
        2.0 * cross.im,
        ket[0].norm_sqr() - ket[1].norm_sqr(),
    ]
}

/// `n(Theta, phi) = (sin Theta cos phi, sin Theta sin phi, cos Theta)`.
pub fn unit_vector(big_theta: f64, phi: f64) -> [f64; 3] {
    [
        big_theta.sin() * phi.cos(),
        big_theta.sin() * phi.sin(),
        big_theta.cos(),
    ]
}

pub fn qubit_state(
    state: &StarEigenstate,
    theta: f64,
    phi: f64,
    endpoints: Endpoints,
) -> Result<QubitParamState> {
    Ok(QubitParamState {
        big_theta: theta_map(state, theta, endpoints)?,
        phi,
        branch: state.branch(),
    })
}

/// `p(theta) = S~ sin(theta) |chi|^2`.
pub fn p_density(state: &StarEigenstate, theta: f64) -> f64 {
    state.s_tilde() * theta.sin() * chi_modulus_sq(state, theta)
}

fn is_uniform(grid: &[f64]) -> bool {
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    grid.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

/// Integral of tabulated samples: composite Simpson on uniform grids (with a
/// 3/8 panel when the interval count is odd), trapezoid otherwise.
pub fn integrate_samples(grid: &[f64], values: &[f64]) -> f64 {
    assert_eq!(grid.len(), values.len());
    let n = grid.len();
    if n < 2 {
        return 0.0;
    }
    if n < 3 || !is_uniform(grid) {
        return grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum();
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        n - 1
    } else {
        n - 4
    };
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= simpson_end {
        total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        i += 2;
    }
    if !intervals.is_multiple_of(2) {
        let j = n - 4;
        total +=
            3.0 * h / 8.0 * (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
    }
    total
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Domain(format!(
            "theta grid needs at least 3 points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "theta grid must be strictly increasing".into(),
        ));
    }
    if grid[0] != 0.0 || (grid[grid.len() - 1] - PI).abs() > 1e-12 {
        return Err(Error::Domain("theta grid must span [0, pi]".into()));
    }
    Ok(())
}

/// `p(theta)` sampled on a grid, with summary statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDistribution {
    pub state: StarEigenstate,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `∫ p dtheta` on the grid.
    pub integral: f64,
    pub mean: f64,
    /// Location of the maximum, refined by a parabola through the three
    /// samples around the grid argmax.
    pub mode: f64,
    pub std: f64,
}

impl ThetaDistribution {
    /// `|mode - vartheta_M|`.
    pub fn shift(&self) -> f64 {
        (self.mode - self.state.vartheta()).abs()
    }
}

fn parabolic_mode(grid: &[f64], values: &[f64]) -> f64 {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 == values.len() {
        return grid[best];
    }
    let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature >= 0.0 {
        return grid[best];
    }
    let h = 0.5 * (grid[best + 1] - grid[best - 1]);
    grid[best] + h * 0.5 * (y0 - y2) / curvature
}

pub fn p_distribution(state: &StarEigenstate, grid: &[f64]) -> Result<ThetaDistribution> {
    check_grid(grid)?;
    let values: Vec<f64> = grid.iter().map(|&t| p_density(state, t)).collect();
    let integral = integrate_samples(grid, &values);
    if (integral - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization {
            integral,
            tol: NORMALIZATION_TOLERANCE,
        });
    }
    let weighted: Vec<f64> = grid.iter().zip(&values).map(|(t, p)| t * p).collect();
    let mean = integrate_samples(grid, &weighted) / integral;
    let spread: Vec<f64> = grid
        .iter()
        .zip(&values)
        .map(|(t, p)| (t - mean).powi(2) * p)
        .collect();
    let std = (integrate_samples(grid, &spread) / integral)
        .max(0.0)
        .sqrt();
    let mode = parabolic_mode(grid, &values);
    Ok(ThetaDistribution {
        state: *state,
        grid: grid.to_vec(),
        values,
        integral,
        mean,
        mode,
        std,
    })
}

/// `pi(Theta) = p(theta)` with `theta` the preimage of `Theta`. The map
/// `theta -> Theta` is an involution on both branches, so the preimage is
/// obtained by applying it again. No Jacobian is included.
pub fn bloch_distribution(state: &StarEigenstate, big_theta_grid: &[f64]) -> Result<Vec<f64>> {
    big_theta_grid
        .iter()
        .map(|&big| Ok(p_density(state, theta_map(state, big, Endpoints::Limit)?)))
        .collect()
}

/// Conditional distributions `y_up = p cos^2(Theta/2)` and
/// `y_down = p sin^2(Theta/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalDistribution {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

pub fn conditional_up(state: &StarEigenstate, grid: &[f64]) -> Result<ConditionalDistribution> {
    let mut up = Vec::with_capacity(grid.len());
    let mut down = Vec::with_capacity(grid.len());
    for &theta in grid {
        let p = p_density(state, theta);
        let half = 0.5 * theta_map(state, theta, Endpoints::Limit)?;
        up.push(p * half.cos().powi(2));
        down.push(p * half.sin().powi(2));
    }
    Ok(ConditionalDistribution { up, down })
}

fn hermitian2(o: &Matrix2<Complex64>) -> bool {
    (o[(0, 1)] - o[(1, 0)].conj()).norm() <= 1e-12
        && o[(0, 0)].im.abs() <= 1e-12
        && o[(1, 1)].im.abs() <= 1e-12
}

/// `<O> = (S~/2pi) ∫ dOmega |chi|^2 <phi(Omega)|O|phi(Omega)>` for a qubit
/// observable in the `{|up>, |down>}` basis.
pub fn expectation(
    state: &StarEigenstate,
    observable: &Matrix2<Complex64>,
    quad: &SphereQuadrature,
) -> Result<f64> {
    if !hermitian2(observable) {
        return Err(Error::Domain("observable is not Hermitian".into()));
    }
    if quad.spin() != state.spin() {
        return Err(Error::Domain(
            "quadrature spin differs from the state".into(),
        ));
    }
    let mut failure = None;
    let total =
        quad.integrate(
            |theta, phi| match qubit_state(state, theta, phi, Endpoints::Limit) {
                Ok(q) => {
                    let k = q.ket();
                    let ok = [
                        observable[(0, 0)] * k[0] + observable[(0, 1)] * k[1],
                        observable[(1, 0)] * k[0] + observable[(1, 1)] * k[1],
                    ];
                    (k[0].conj() * ok[0] + k[1].conj() * ok[1]) * chi_modulus_sq(state, theta)
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
        );
    match failure {
        Some(e) => Err(e),
        None => Ok(total.re),
    }
}

/// Coefficients `c[S-m][alpha]` of `|Psi>` over `|m> ⊗ |alpha>` recovered by
/// integrating `<m|Omega> chi(Omega) <alpha|phi(Omega)>` over the sphere.
pub fn reassemble(state: &StarEigenstate, quad: &SphereQuadrature) -> Result<Vec<[Complex64; 2]>> {
    if quad.spin() != state.spin() {
        return Err(Error::Domain(
            "quadrature spin differs from the state".into(),
        ));
    }
    let spin = state.spin();
    let mut out = Vec::new();
    for (steps, m) in spin.descending_projections().enumerate() {
        let mut coeff = [Complex64::new(0.0, 0.0); 2];
        for (alpha, slot) in coeff.iter_mut().enumerate() {
            *slot = quad.integrate(|theta, phi| {
                let bracket = Complex64::from_polar(g_or_zero(spin, m, theta), steps as f64 * phi);
                let weight = chi(state, theta, phi).value();
                let qubit = qubit_state(state, theta, phi, Endpoints::Limit)
                    .expect("quadrature nodes lie in [0, pi]");
                bracket * weight * qubit.ket()[alpha]
            });
        }
        out.push(coeff);
    }
    Ok(out)
}

/// Zeeman field `h = epsilon n` whose `h . sigma/2` has `|phi^±_M>` as an
/// eigenvector with eigenvalue `epsilon/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveField {
    pub epsilon: f64,
    pub direction: [f64; 3],
}

impl EffectiveField {
    pub fn field(&self) -> [f64; 3] {
        self.direction.map(|x| self.epsilon * x)
    }

    /// `h . sigma / 2`.
    pub fn zeeman(&self) -> Matrix2<Complex64> {
        let [hx, hy, hz] = self.field();
        Matrix2::new(
            Complex64::new(0.5 * hz, 0.0),
            Complex64::new(0.5 * hx, -0.5 * hy),
            Complex64::new(0.5 * hx, 0.5 * hy),
            Complex64::new(-0.5 * hz, 0.0),
        )
    }
}

/// `epsilon_± = ±(g/N)(S~ ∓ 1)`.
pub fn field_intensity(state: &StarEigenstate, g: f64, sites: usize) -> f64 {
    let sign = state.branch().sign();
    sign * (g / sites as f64) * (state.s_tilde() - sign)
}

pub fn effective_field(
    state: &StarEigenstate,
    g: f64,
    sites: usize,
    theta: f64,
    phi: f64,
) -> Result<EffectiveField> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "star coupling g must be positive, got {g}"
        )));
    }
    if sites == 0 || state.spin().twice() > sites as i32 {
        return Err(Error::Domain(format!(
            "S = {} exceeds N/2 for N = {sites}",
            state.spin()
        )));
    }
    let qubit = qubit_state(state, theta, phi, Endpoints::Limit)?;
    Ok(EffectiveField {
        epsilon: field_intensity(state, g, sites),
        direction: qubit.bloch_vector(),
    })
}
