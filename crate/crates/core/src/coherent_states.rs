//! Bloch (SU(2)) coherent states of a spin `S`,
//! `|Omega> = sum_m g_m(theta) e^{i(S-m)phi} |m>`, with
//! `g_m(theta) = sqrt(C(2S, S+m)) cos^{S+m}(theta/2) sin^{S-m}(theta/2)`.
//!
//! The amplitudes are evaluated in the log domain so that large spins do not
//! overflow the binomial. The resolution of the identity uses the measure
//! `(S~/2pi) sin(theta) dtheta dphi` with `S~ = S + 1/2`.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::{Error, HalfInt, Result};

/// Hermiticity tolerance for density matrices passed to [`husimi_q`].
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// A point `Omega = (theta, phi)` on the sphere of a spin-`S` environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentPoint {
    spin: HalfInt,
    theta: f64,
    phi: f64,
}

impl CoherentPoint {
    pub fn new(spin: HalfInt, theta: f64, phi: f64) -> Result<Self> {
        if spin.twice() < 0 {
            return Err(Error::Domain(format!(
                "spin must be non-negative, got {spin}"
            )));
        }
        check_theta(theta)?;
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::Domain(format!("phi = {phi} is outside [0, 2pi)")));
        }
        Ok(CoherentPoint { spin, theta, phi })
    }

    pub fn spin(&self) -> HalfInt {
        self.spin
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} is outside [0, pi]")));
    }
    Ok(())
}

/// `(cos(theta/2), sin(theta/2))`, exactly zero at the poles.
pub(crate) fn half_angles(theta: f64) -> (f64, f64) {
    let c = if theta == PI {
        0.0
    } else {
        (0.5 * theta).cos()
    };
    (c, (0.5 * theta).sin())
}

/// `n ln y` with `0 ln 0 = 0`.
fn xlny(n: i32, y: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        f64::from(n) * y.ln()
    }
}

/// `ln C(n, k)` through the log-gamma function.
pub fn ln_binomial(n: i32, k: i32) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(f64::from(n) + 1.0) - ln_gamma(f64::from(k) + 1.0) - ln_gamma(f64::from(n - k) + 1.0)
}

/// `ln g_m(theta)`; `-inf` where the amplitude vanishes. Assumes `|m| <= S`
/// with `S - m` integer.
pub fn ln_g(spin: HalfInt, m: HalfInt, theta: f64) -> f64 {
    let up = (spin.twice() + m.twice()) / 2;
    let down = (spin.twice() - m.twice()) / 2;
    let (c, s) = half_angles(theta);
    0.5 * ln_binomial(spin.twice(), up) + xlny(up, c) + xlny(down, s)
}

/// `g_m(theta)`, taken as zero for `|m| > S`.
pub(crate) fn g_or_zero(spin: HalfInt, m: HalfInt, theta: f64) -> f64 {
    if m.abs() > spin {
        0.0
    } else {
        ln_g(spin, m, theta).exp()
    }
}

fn check_projection(spin: HalfInt, m: HalfInt) -> Result<()> {
    if spin.twice() < 0 || (spin.twice() - m.twice()) % 2 != 0 || m.abs() > spin {
        return Err(Error::Domain(format!(
            "m = {m} is not a projection of spin {spin}"
        )));
    }
    Ok(())
}

/// Real amplitude `g_m(theta)` of the coherent state on `|m>`.
pub fn g_m(spin: HalfInt, m: HalfInt, theta: f64) -> Result<f64> {
    check_projection(spin, m)?;
    check_theta(theta)?;
    Ok(ln_g(spin, m, theta).exp())
}

/// The expansion of `|Omega>` over `|m>`, stored as `ln g_m` plus the angle `phi`.
#[derive(Clone, Debug)]
pub struct AmplitudeVector {
    spin: HalfInt,
    phi: f64,
    logg: Vec<f64>,
}

impl AmplitudeVector {
    pub fn new(point: &CoherentPoint) -> Self {
        let logg = point
            .spin
            .descending_projections()
            .map(|m| ln_g(point.spin, m, point.theta))
            .collect();
        AmplitudeVector {
            spin: point.spin,
            phi: point.phi,
            logg,
        }
    }

    pub fn spin(&self) -> HalfInt {
        self.spin
    }

    /// `ln g_m` for `m = S, S-1, ..., -S`.
    pub fn log_magnitudes(&self) -> &[f64] {
        &self.logg
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.logg.iter().map(|l| l.exp()).collect()
    }

    /// Components `<m|Omega> = g_m e^{i(S-m)phi}`, `m = S..=-S`.
    pub fn ket(&self) -> Vec<Complex64> {
        self.logg
            .iter()
            .enumerate()
            .map(|(i, l)| Complex64::from_polar(l.exp(), i as f64 * self.phi))
            .collect()
    }
}

/// `<Omega|m> = g_m(theta) e^{-i(S-m)phi}`.
pub fn overlap(point: &CoherentPoint, m: HalfInt) -> Result<Complex64> {
    check_projection(point.spin, m)?;
    let steps = f64::from(point.spin.twice() - m.twice()) / 2.0;
    Ok(Complex64::from_polar(
        ln_g(point.spin, m, point.theta).exp(),
        -steps * point.phi,
    ))
}

/// `<Omega|Omega'>` by summing over the `S^z` basis.
pub fn coherent_overlap(p: &CoherentPoint, q: &CoherentPoint) -> Result<Complex64> {
    if p.spin != q.spin {
        return Err(Error::Domain("coherent states of different spins".into()));
    }
    let a = AmplitudeVector::new(p).ket();
    let b = AmplitudeVector::new(q).ket();
    Ok(a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum())
}

/// Gauss-Legendre in `cos(theta)` times the trapezoid rule in `phi`, weighted
/// so that `integrate(|f|)` approximates `(S~/2pi) ∫ dOmega f(Omega)`.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    spin: HalfInt,
    theta_nodes: Vec<(f64, f64)>,
    n_phi: usize,
}

impl SphereQuadrature {
    pub fn new(spin: HalfInt, n_theta: usize, n_phi: usize) -> Result<Self> {
        let order = NonZeroUsize::new(n_theta).ok_or_else(|| {
            Error::InvalidConfig("quadrature needs at least one theta node".into())
        })?;
        if n_phi == 0 {
            return Err(Error::InvalidConfig(
                "quadrature needs at least one phi node".into(),
            ));
        }
        let mut theta_nodes: Vec<(f64, f64)> = GaussLegendre::new(order)
            .iter()
            .map(|&(x, w)| (x.clamp(-1.0, 1.0).acos(), w))
            .collect();
        theta_nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(SphereQuadrature {
            spin,
            theta_nodes,
            n_phi,
        })
    }

    /// `4S + 16` Gauss-Legendre nodes and `max(8, 4S + 4)` azimuthal nodes.
    pub fn default_orders(spin: HalfInt) -> (usize, usize) {
        let four_s = 2 * spin.twice().max(0) as usize;
        (four_s + 16, (four_s + 4).max(8))
    }

    pub fn for_spin(spin: HalfInt) -> Self {
        let (n_theta, n_phi) = Self::default_orders(spin);
        Self::new(spin, n_theta, n_phi).expect("default orders are positive")
    }

    pub fn spin(&self) -> HalfInt {
        self.spin
    }

    /// `(theta_i, w_i)` with `w_i` the Legendre weight in `cos(theta)`.
    pub fn theta_nodes(&self) -> &[(f64, f64)] {
        &self.theta_nodes
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn phi_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_phi).map(move |j| TAU * j as f64 / self.n_phi as f64)
    }

    fn s_tilde(&self) -> f64 {
        self.spin.value() + 0.5
    }

    /// `(S~/2pi) ∫ dOmega f(theta, phi)`.
    pub fn integrate<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let mut total = Complex64::new(0.0, 0.0);
        for &(theta, w) in &self.theta_nodes {
            let ring: Complex64 = self.phi_nodes().map(|phi| f(theta, phi)).sum();
            total += ring * w;
        }
        total * (self.s_tilde() / self.n_phi as f64)
    }

    /// Same measure for a `phi`-independent integrand; the azimuthal factor
    /// `2pi` is taken analytically.
    pub fn integrate_axial<F>(&self, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.s_tilde()
            * self
                .theta_nodes
                .iter()
                .map(|&(theta, w)| w * f(theta))
                .sum::<f64>()
    }

    /// The same rule with twice the nodes in each direction.
    pub fn refined(&self) -> Self {
        Self::new(self.spin, 2 * self.theta_nodes.len(), 2 * self.n_phi)
            .expect("doubling keeps orders positive")
    }

    /// [`integrate`](Self::integrate), rejecting the result if the refined rule
    /// differs by more than `tol`.
    pub fn integrate_converged<F>(&self, mut f: F, tol: f64) -> Result<Complex64>
    where
        F: FnMut(f64, f64) -> Complex64,
    {
        let coarse = self.integrate(&mut f);
        let fine = self.refined().integrate(&mut f);
        let delta = (fine - coarse).norm();
        if delta > tol {
            return Err(Error::Convergence { delta, tol });
        }
        Ok(coarse)
    }
}

/// Largest `|A_ij - conj(A_ji)|`.
pub fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Husimi Q-function `<Omega|rho|Omega>` of a spin-`S` density matrix given
/// in the `S^z` basis ordered `m = S, S-1, ..., -S`.
pub fn husimi_q(rho: &DMatrix<Complex64>, point: &CoherentPoint) -> Result<f64> {
    let dim = point.spin.twice() as usize + 1;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Domain(format!(
            "density matrix is {}x{}, spin {} needs {dim}x{dim}",
            rho.nrows(),
            rho.ncols(),
            point.spin
        )));
    }
    let defect = hermitian_defect(rho);
    if defect > HERMITICITY_TOLERANCE {
        return Err(Error::Domain(format!(
            "density matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let ket = AmplitudeVector::new(point).ket();
    let mut q = Complex64::new(0.0, 0.0);
    for (i, ki) in ket.iter().enumerate() {
        for (j, kj) in ket.iter().enumerate() {
            q += ki.conj() * rho[(i, j)] * kj;
        }
    }
    Ok(q.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn int(n: i32) -> HalfInt {
        HalfInt::from_int(n)
    }

    /// Plain evaluation with an exact binomial; overflows for large S.
    fn direct_g(spin: i32, m: i32, theta: f64) -> f64 {
        let (n, k) = (2 * spin, spin + m);
        let binom = (1..=k).fold(1.0f64, |acc, i| acc * f64::from(n - k + i) / f64::from(i));
        binom.sqrt() * (theta / 2.0).cos().powi(spin + m) * (theta / 2.0).sin().powi(spin - m)
    }

    fn norm_sq(spin: HalfInt, theta: f64) -> f64 {
        spin.descending_projections()
            .map(|m| g_m(spin, m, theta).unwrap().powi(2))
            .sum()
    }

    #[test]
    fn reference_state_at_north_pole() {
        assert_eq!(g_m(int(3), int(3), 0.0).unwrap(), 1.0);
        assert_eq!(g_m(int(3), int(2), 0.0).unwrap(), 0.0);
        assert_eq!(g_m(int(3), int(-3), 0.0).unwrap(), 0.0);
        assert_eq!(g_m(int(3), int(2), PI).unwrap(), 0.0);
        assert_eq!(g_m(int(3), int(-3), PI).unwrap(), 1.0);
    }

    #[test]
    fn spin_half_equator() {
        let half = HalfInt::HALF;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(g_m(half, half, PI / 2.0).unwrap(), r, epsilon = 1e-15);
        assert_abs_diff_eq!(g_m(half, -half, PI / 2.0).unwrap(), r, epsilon = 1e-15);
    }

    #[test]
    fn normalization() {
        assert_abs_diff_eq!(norm_sq(int(49), 1.3), 1.0, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in [5, 16, 27, 38, 49] {
            for _ in 0..20 {
                let theta = rng.random_range(0.0..=PI);
                assert_abs_diff_eq!(norm_sq(int(s), theta), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn large_spin_does_not_overflow() {
        for theta in [0.01, 0.7, 1.9, 3.1] {
            let total = norm_sq(int(500), theta);
            assert!(total.is_finite());
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn log_domain_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in 1..=25 {
            let theta = rng.random_range(0.05..PI - 0.05);
            for m in -s..=s {
                let direct = direct_g(s, m, theta);
                let logged = g_m(int(s), int(m), theta).unwrap();
                if direct > 1e-280 {
                    assert_relative_eq!(logged, direct, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn domain_checks() {
        assert!(g_m(int(2), int(3), 0.1).is_err());
        assert!(g_m(int(2), HalfInt::HALF, 0.1).is_err());
        assert!(g_m(int(2), int(1), -0.1).is_err());
        assert!(CoherentPoint::new(int(2), 0.1, TAU).is_err());
    }

    #[test]
    fn overlap_phase_convention() {
        let p = CoherentPoint::new(int(3), 0.8, 0.0).unwrap();
        let z = overlap(&p, int(1)).unwrap();
        assert_eq!(z.im, 0.0);
        assert_abs_diff_eq!(z.re, g_m(int(3), int(1), 0.8).unwrap(), epsilon = 1e-15);

        let q = CoherentPoint::new(int(3), 0.8, 1.1).unwrap();
        let z = overlap(&q, int(1)).unwrap();
        assert_abs_diff_eq!(z.arg(), -2.0 * 1.1, epsilon = 1e-14);

        let total: f64 = int(3)
            .descending_projections()
            .map(|m| overlap(&q, m).unwrap().norm_sqr())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn overlap_modulus_follows_the_geodesic_angle() {
        let spin = HalfInt::from_twice(7);
        let theta = 1.1;
        for (phi, phi2) in [(0.0, 1.0), (0.3, 2.9), (1.0, 5.5)] {
            let p = CoherentPoint::new(spin, theta, phi).unwrap();
            let q = CoherentPoint::new(spin, theta, phi2).unwrap();
            let cos_gamma = theta.cos().powi(2) + theta.sin().powi(2) * (phi - phi2).cos();
            let expected = (0.5 * (1.0 + cos_gamma)).sqrt().powi(spin.twice());
            assert_abs_diff_eq!(
                coherent_overlap(&p, &q).unwrap().norm(),
                expected,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn resolution_of_identity() {
        for twice in 1..=20 {
            let spin = HalfInt::from_twice(twice);
            let quad = SphereQuadrature::for_spin(spin);
            let ms: Vec<HalfInt> = spin.descending_projections().collect();
            for &m in &ms {
                for &m2 in &ms {
                    let elem = quad.integrate(|theta, phi| {
                        let p = CoherentPoint::new(spin, theta, phi).unwrap();
                        overlap(&p, m).unwrap().conj() * overlap(&p, m2).unwrap()
                    });
                    let expected = if m == m2 { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(elem.re, expected, epsilon = 1e-10);
                    assert_abs_diff_eq!(elem.im, 0.0, epsilon = 1e-10);
                }
            }
            let trace = quad.integrate(|_, _| Complex64::new(1.0, 0.0));
            assert_abs_diff_eq!(trace.re, f64::from(twice + 1), epsilon = 1e-11);
            assert_abs_diff_eq!(
                quad.integrate_axial(|_| 1.0),
                f64::from(twice + 1),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn unresolved_azimuthal_frequency_is_reported() {
        let quad = SphereQuadrature::new(int(1), 8, 8).unwrap();
        let f = |_: f64, phi: f64| Complex64::new((8.0 * phi).cos(), 0.0);
        assert!(matches!(
            quad.integrate_converged(f, 1e-10),
            Err(Error::Convergence { .. })
        ));
        let smooth = |theta: f64, _: f64| Complex64::new(theta.cos().powi(2), 0.0);
        assert!(quad.integrate_converged(smooth, 1e-10).is_ok());
    }

    #[test]
    fn husimi_examples() {
        let spin = int(2);
        let mut top = DMatrix::zeros(5, 5);
        top[(0, 0)] = Complex64::new(1.0, 0.0);
        let north = CoherentPoint::new(spin, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(husimi_q(&top, &north).unwrap(), 1.0, epsilon = 1e-15);

        let mixed = DMatrix::from_diagonal_element(5, 5, Complex64::new(0.2, 0.0));
        for (theta, phi) in [(0.0, 0.0), (0.4, 2.0), (2.9, 6.0)] {
            let p = CoherentPoint::new(spin, theta, phi).unwrap();
            assert_abs_diff_eq!(husimi_q(&mixed, &p).unwrap(), 0.2, epsilon = 1e-14);
        }

        let mut bad = mixed.clone();
        bad[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(husimi_q(&bad, &north), Err(Error::Domain(_))));
        assert!(husimi_q(&DMatrix::zeros(3, 3), &north).is_err());
    }

    #[test]
    fn husimi_is_a_normalized_density() {
        // a random pure state of spin 3
        let spin = int(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<Complex64> = (0..7)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let rho = DMatrix::from_fn(7, 7, |i, j| v[i] * v[j].conj() / (norm * norm));
        let quad = SphereQuadrature::for_spin(spin);
        let total = quad.integrate(|theta, phi| {
            let q = husimi_q(&rho, &CoherentPoint::new(spin, theta, phi).unwrap()).unwrap();
            assert!(q >= -1e-12);
            Complex64::new(q, 0.0)
        });
        assert_abs_diff_eq!(total.re, 1.0, epsilon = 1e-12);
    }
}
