//! Eigenvalues of the p-Laplace-Beltrami operator on circular arcs,
//! closed form and by ODE shooting, with the characteristic-number
//! inequality for complementary arcs and homogeneous cone functions.
//!
//! On the arc `S = (0, ω)` the eigenpair `(λ, φ)` solves
//!
//! ```text
//! -d/dθ [ (λ²φ² + φ_θ²)^{(p-2)/2} φ_θ ]
//!     = λ(λ(p-1)+2-p) (λ²φ² + φ_θ²)^{(p-2)/2} φ,    φ = 0 on ∂S,
//! ```
//!
//! with `λ > max{0, (p-2)/(p-1)}`, `φ > 0` inside, unique up to constant
//! multiples. The closed form is
//!
//! ```text
//! λ = s + √(s² + 1/ρ)   for ω ≤ π,
//! λ = s − √(s² + 1/ρ)   for π ≤ ω < 2π,
//! λ = (p-1)/p           at ω = 2π,
//! ρ = (ω/π − 1)² − 1,   s = (p − 2 + p t) / (2(p-1)),   t = −1/ρ.
//! ```
//!
//! For complementary arcs the eigenvalues of the two sides share ρ and s,
//! so `λ₁ + λ₂ = 2s` and `λ₁λ₂ = −1/ρ = t`. The characteristic numbers
//! `χᵢ = √(λᵢ(λᵢ(p-1)+2-p))` satisfy `χ₁ + χ₂ ≥ 2` with equality exactly
//! at ω = π, via the identity `χ₁² + χ₂² + 2χ₁χ₂ = 4t + p²t(t-1)/(p-1)`.
//! Over a cone pair `u_i = r^{λᵢ} φᵢ(θ)` this drives the radial growth of
//! `φ_p(R) = R⁻⁴ J₁(R) J₂(R)`, `J_i(R) = ∫_{B_R}|∇u_i|^p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField2D, Vec2};

use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Lower bound `max{0, (p-2)/(p-1)}` for admissible eigenvalues.
pub fn lambda_floor(p: f64) -> f64 {
    ((p - 2.0) / (p - 1.0)).max(0.0)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be > 1")));
    }
    Ok(())
}

/// Closed-form arc eigenvalue λ(ω, p) for ω ∈ (0, 2π].
///
/// For p = 2 this reduces to π/ω. The minus branch is evaluated in the
/// rationalized form `t / (s + √(s²+1/ρ))` to avoid cancellation near
/// ω = 2π, and the radicand is clamped at zero when rounding pushes it
/// within -1e-14 (which happens at ω = π).
pub fn closed_form_lambda(omega: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(omega > 0.0 && omega <= TWO_PI) {
        return Err(Error::InvalidParameter(format!("omega = {omega} not in (0, 2pi]")));
    }
    if omega == TWO_PI {
        return Ok((p - 1.0) / p);
    }
    let rho = (omega / PI - 1.0).powi(2) - 1.0;
    let t = -1.0 / rho;
    let s = (p - 2.0 + p * t) / (2.0 * (p - 1.0));
    let mut radicand = s * s - t;
    if radicand < 0.0 {
        if radicand < -1e-14 {
            return Err(Error::InvalidParameter(format!(
                "negative radicand {radicand} at omega = {omega}, p = {p}"
            )));
        }
        radicand = 0.0;
    }
    let root = radicand.sqrt();
    let lambda = if omega <= PI { s + root } else { t / (s + root) };
    debug_assert!(lambda > lambda_floor(p) - 1e-12);
    Ok(lambda)
}

/// Eigenvalue data for an arc and its complement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeSpectrum {
    pub omega: f64,
    pub p: f64,
    /// `ρ = (ω/π − 1)² − 1 ∈ [-1, 0)`.
    pub rho: f64,
    /// `s = (p − 2 + p t)/(2(p−1))`; equals `(λ₁ + λ₂)/2`.
    pub s: f64,
    /// `t = −1/ρ ≥ 1`; equals `λ₁ λ₂`.
    pub t: f64,
    /// Eigenvalue of the arc ω.
    pub lambda1: f64,
    /// Eigenvalue of the complementary arc 2π − ω.
    pub lambda2: f64,
    /// `√(λ₁(λ₁(p−1)+2−p))`.
    pub char1: f64,
    /// `√(λ₂(λ₂(p−1)+2−p))`.
    pub char2: f64,
    /// `char1 + char2 ≥ 2`, equality only at ω = π.
    pub char_sum: f64,
    /// `|I + 2√II − (4t + p² t(t−1)/(p−1))|` with I, II the symmetric
    /// functions of the squared characteristic numbers.
    pub identity_residual: f64,
}

/// Populates both complementary arcs and checks the characteristic-number
/// identity.
pub fn cone_spectrum(omega: f64, p: f64) -> Result<ConeSpectrum> {
    check_p(p)?;
    if !(omega > 0.0 && omega < TWO_PI) {
        return Err(Error::InvalidParameter(format!("omega = {omega} not in (0, 2pi)")));
    }
    let rho = (omega / PI - 1.0).powi(2) - 1.0;
    let t = -1.0 / rho;
    let s = (p - 2.0 + p * t) / (2.0 * (p - 1.0));
    let lambda1 = closed_form_lambda(omega, p)?;
    let lambda2 = closed_form_lambda(TWO_PI - omega, p)?;
    let kappa = |l: f64| l * (l * (p - 1.0) + 2.0 - p);
    let (k1, k2) = (kappa(lambda1), kappa(lambda2));
    let char1 = k1.sqrt();
    let char2 = k2.sqrt();
    let i = k1 + k2;
    let ii = k1 * k2;
    let identity_residual =
        (i + 2.0 * ii.sqrt() - (4.0 * t + p * p * t * (t - 1.0) / (p - 1.0))).abs();
    Ok(ConeSpectrum {
        omega,
        p,
        rho,
        s,
        t,
        lambda1,
        lambda2,
        char1,
        char2,
        char_sum: char1 + char2,
        identity_residual,
    })
}

/// Fixed RK4 step count for the shooting integrator.
const SHOOT_STEPS: usize = 10_000;
/// Scan nodes before bisection.
const SCAN_NODES: usize = 400;
/// Upper end of the eigenvalue scan window.
const SCAN_MAX: f64 = 8.0;

/// Output of [`shoot_eigen`]: the eigenvalue with the eigenfunction
/// samples of the accepted trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootingResult {
    pub omega: f64,
    pub p: f64,
    pub lambda: f64,
    /// θ samples on [0, ω].
    pub theta: Vec<f64>,
    /// φ samples (positive inside, zero at both ends up to `residual`).
    pub phi: Vec<f64>,
    /// φ_θ samples recovered from the conserved flux.
    pub phi_theta: Vec<f64>,
    /// Flux samples `q = (λ²φ² + φ_θ²)^{(p-2)/2} φ_θ`.
    pub q: Vec<f64>,
    /// |φ(ω)| at the accepted λ.
    pub residual: f64,
    pub bisection_iters: usize,
    pub steps: usize,
}

struct Trajectory {
    theta: Vec<f64>,
    phi: Vec<f64>,
    phi_theta: Vec<f64>,
    q: Vec<f64>,
}

impl Trajectory {
    fn phi_end(&self) -> f64 {
        *self.phi.last().unwrap()
    }

    /// Minimum of φ over the open interior.
    fn min_interior(&self) -> f64 {
        self.phi[1..self.phi.len() - 1]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves `(a + v²)^{(p-2)/2} v = q` for v; the map is strictly
/// increasing in v for p > 1 since its derivative is
/// `(a + v²)^{(p-4)/2} (a + (p-1) v²)`. Safeguarded Newton warm-started
/// from `guess`.
fn solve_flux_velocity(a: f64, q: f64, p: f64, guess: f64) -> Result<f64> {
    if p == 2.0 {
        return Ok(q);
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let sign = q.signum();
    let q = q.abs();
    let mut v = if guess * sign > 0.0 { guess.abs() } else { q.powf(1.0 / (p - 1.0)) };
    if !v.is_finite() || v == 0.0 {
        v = q.powf(1.0 / (p - 1.0)).max(1e-30);
    }
    for _ in 0..200 {
        let t = a + v * v;
        if t <= 0.0 {
            v = 1e-30;
            continue;
        }
        let w = t.powf(0.5 * (p - 2.0));
        let f = w * v - q;
        if f.abs() <= 1e-13 * (1.0 + q) {
            return Ok(sign * v);
        }
        let fp = w * (a + (p - 1.0) * v * v) / t;
        let mut v_new = v - f / fp;
        if !(v_new > 0.0) || !v_new.is_finite() {
            // overshoot: contract toward the origin-side bracket
            v_new = 0.5 * v;
        }
        v = v_new;
    }
    Err(Error::RootSolveFailure(format!("flux inversion stalled at a={a}, q={q}, p={p}")))
}

/// Integrates the first-order system in the conserved-flux variables
/// (φ, q) from φ(0) = 0, q(0) = q0 with classical RK4. φ_θ is recovered
/// per stage by the monotone scalar root solve, which avoids dividing by
/// the degenerate factor `(λ²φ² + φ_θ²)^{(p-2)/2}` near φ_θ = 0.
fn integrate(omega: f64, p: f64, lambda: f64, q0: f64, steps: usize) -> Result<Trajectory> {
    let kappa = lambda * (lambda * (p - 1.0) + 2.0 - p);
    let dtheta = omega / steps as f64;
    let mut phi = 0.0f64;
    let mut q = q0;

    let mut out = Trajectory {
        theta: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        phi_theta: Vec::with_capacity(steps + 1),
        q: Vec::with_capacity(steps + 1),
    };

    // (φ', q') at a state, also returning the recovered velocity
    let deriv = |phi: f64, q: f64, v_guess: f64| -> Result<(f64, f64, f64)> {
        let a = lambda * lambda * phi * phi;
        let v = solve_flux_velocity(a, q, p, v_guess)?;
        let t = a + v * v;
        let dq = if t == 0.0 {
            0.0
        } else if p == 2.0 {
            -kappa * phi
        } else {
            -kappa * t.powf(0.5 * (p - 2.0)) * phi
        };
        Ok((v, dq, v))
    };

    let (v0, _, _) = deriv(phi, q, 1.0)?;
    out.theta.push(0.0);
    out.phi.push(phi);
    out.phi_theta.push(v0);
    out.q.push(q);
    let mut v_guess = v0;

    for k in 0..steps {
        let (k1p, k1q, vg) = deriv(phi, q, v_guess)?;
        let (k2p, k2q, _) = deriv(phi + 0.5 * dtheta * k1p, q + 0.5 * dtheta * k1q, vg)?;
        let (k3p, k3q, _) = deriv(phi + 0.5 * dtheta * k2p, q + 0.5 * dtheta * k2q, vg)?;
        let (k4p, k4q, _) = deriv(phi + dtheta * k3p, q + dtheta * k3q, vg)?;
        phi += dtheta / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        q += dtheta / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        let (v, _, _) = deriv(phi, q, vg)?;
        v_guess = v;
        out.theta.push((k + 1) as f64 * dtheta);
        out.phi.push(phi);
        out.phi_theta.push(v);
        out.q.push(q);
    }
    Ok(out)
}

/// Shooting eigenvalue solver: scans λ upward from the admissibility
/// floor, brackets the first sign change of φ(ω), and bisects to `tol`.
/// The scale is fixed by q(0) = 1 (solutions are unique up to constant
/// multiples).
pub fn shoot_eigen(omega: f64, p: f64, tol: f64) -> Result<ShootingResult> {
    check_p(p)?;
    if !(p < 4.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (1, 4)")));
    }
    if !(omega > 0.0 && omega <= TWO_PI) {
        return Err(Error::InvalidParameter(format!("omega = {omega} not in (0, 2pi]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }

    let lo = lambda_floor(p) + 1e-6;
    let step = (SCAN_MAX - lo) / SCAN_NODES as f64;
    let mut prev_lambda = lo;
    let mut prev_end = integrate(omega, p, prev_lambda, 1.0, SHOOT_STEPS)?.phi_end();
    let mut bracket = None;
    for k in 1..=SCAN_NODES {
        let lambda = lo + k as f64 * step;
        let end = integrate(omega, p, lambda, 1.0, SHOOT_STEPS)?.phi_end();
        if prev_end > 0.0 && end <= 0.0 {
            bracket = Some((prev_lambda, lambda));
            break;
        }
        prev_lambda = lambda;
        prev_end = end;
    }
    let (mut a, mut b) = bracket.ok_or(Error::NoSignChange { lo, hi: SCAN_MAX })?;

    let mut bisection_iters = 0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let end = integrate(omega, p, mid, 1.0, SHOOT_STEPS)?.phi_end();
        if end > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        bisection_iters += 1;
        if bisection_iters > 200 {
            break;
        }
    }
    let lambda = 0.5 * (a + b);
    let traj = integrate(omega, p, lambda, 1.0, SHOOT_STEPS)?;
    let residual = traj.phi_end().abs();
    if traj.min_interior() <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "trajectory not positive inside (0, {omega}) at lambda = {lambda}"
        )));
    }
    Ok(ShootingResult {
        omega,
        p,
        lambda,
        theta: traj.theta,
        phi: traj.phi,
        phi_theta: traj.phi_theta,
        q: traj.q,
        residual,
        bisection_iters,
        steps: SHOOT_STEPS,
    })
}

/// The §-ratio `H = [∫_S |∇u|^{p-2} u_θ² / ∫_S |∇u|^{p-2} u²]^{1/2}` on
/// the unit circle, where `|∇u|² = λ²φ² + φ_θ²` at r = 1. For the
/// eigenfunction this equals the characteristic number
/// `√(λ(λ(p-1)+2-p))`.
pub fn eigenfunction_h(res: &ShootingResult) -> Result<f64> {
    let p = res.p;
    let lambda = res.lambda;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..res.theta.len() - 1 {
        let dt = res.theta[k + 1] - res.theta[k];
        let fn_num = |i: usize| {
            let t = lambda * lambda * res.phi[i] * res.phi[i] + res.phi_theta[i] * res.phi_theta[i];
            let w = if p == 2.0 { 1.0 } else { t.powf(0.5 * (p - 2.0)) };
            (w * res.phi_theta[i] * res.phi_theta[i], w * res.phi[i] * res.phi[i])
        };
        let (na, da) = fn_num(k);
        let (nb, db) = fn_num(k + 1);
        num += 0.5 * dt * (na + nb);
        den += 0.5 * dt * (da + db);
    }
    if den <= 0.0 {
        return Err(Error::DegenerateDenominator("∫ |∇u|^{p-2} u² = 0".into()));
    }
    Ok((num / den).sqrt())
}

/// Homogeneous function `u = scale · r^λ φ(θ - start_angle)` supported on
/// the cone over the arc `[start_angle, start_angle + ω]`, vanishing on
/// the boundary rays.
#[derive(Debug, Clone)]
pub struct ConeFunction {
    pub omega: f64,
    pub p: f64,
    pub lambda: f64,
    pub start_angle: f64,
    pub scale: f64,
    theta: Vec<f64>,
    phi: Vec<f64>,
    phi_theta: Vec<f64>,
}

impl ConeFunction {
    pub fn from_shooting(res: &ShootingResult, start_angle: f64, scale: f64) -> ConeFunction {
        ConeFunction {
            omega: res.omega,
            p: res.p,
            lambda: res.lambda,
            start_angle,
            scale,
            theta: res.theta.clone(),
            phi: res.phi.clone(),
            phi_theta: res.phi_theta.clone(),
        }
    }

    /// Linear interpolation of (φ, φ_θ) at an angle inside the arc.
    fn angular(&self, theta_rel: f64) -> (f64, f64) {
        let n = self.theta.len() - 1;
        let s = (theta_rel / self.omega * n as f64).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let f = s - k as f64;
        (
            self.phi[k] * (1.0 - f) + self.phi[k + 1] * f,
            self.phi_theta[k] * (1.0 - f) + self.phi_theta[k + 1] * f,
        )
    }

    /// Evaluates u at the point `x` relative to the cone apex.
    pub fn eval(&self, x: Vec2) -> f64 {
        let r = x.norm();
        if r == 0.0 {
            return 0.0;
        }
        let theta_rel = (x.y.atan2(x.x) - self.start_angle).rem_euclid(TWO_PI);
        if theta_rel > self.omega {
            return 0.0;
        }
        self.scale * r.powf(self.lambda) * self.angular(theta_rel).0
    }

    /// `∫_S (λ²φ² + φ_θ²)^{p/2} dθ` including the scale factor.
    pub fn angular_energy(&self) -> f64 {
        let l2 = self.lambda * self.lambda;
        let sp = self.scale.abs().powf(self.p);
        let mut total = 0.0;
        for k in 0..self.theta.len() - 1 {
            let dt = self.theta[k + 1] - self.theta[k];
            let f = |i: usize| {
                (l2 * self.phi[i] * self.phi[i] + self.phi_theta[i] * self.phi_theta[i])
                    .powf(0.5 * self.p)
            };
            total += 0.5 * dt * (f(k) + f(k + 1));
        }
        sp * total
    }
}

/// `J(R) = ∫_{B_R} |∇u|^p` for a cone function, in the closed polar form
/// `R^{pλ-p+2} / (pλ-p+2) · ∫_S (λ²φ² + φ_θ²)^{p/2} dθ`. The exponent is
/// positive because λ > (p-2)/(p-1).
pub fn cone_j(cf: &ConeFunction, radius: f64) -> f64 {
    let expo = cf.p * cf.lambda - cf.p + 2.0;
    debug_assert!(expo > 0.0);
    radius.powf(expo) / expo * cf.angular_energy()
}

/// `φ_p(R) = R⁻⁴ J₁(R) J₂(R)` for a complementary cone pair; grows like
/// `R^{p(λ₁+λ₂-2)}`, constant exactly when both functions are linear.
pub fn cone_phi_p(cf1: &ConeFunction, cf2: &ConeFunction, radius: f64, p: f64) -> Result<f64> {
    if cf1.p != p || cf2.p != p {
        return Err(Error::InvalidParameter(format!(
            "exponent mismatch: cone functions carry p = {}, {} but φ_{p} was requested",
            cf1.p, cf2.p
        )));
    }
    Ok(cone_j(cf1, radius) * cone_j(cf2, radius) / radius.powi(4))
}

/// Samples the two-phase cone pair `u = u₁ − u₂` on a grid centered at
/// the apex.
pub fn cone_pair_field(
    cf1: &ConeFunction,
    cf2: &ConeFunction,
    apex: Vec2,
    half_side: f64,
    n: usize,
) -> Result<ScalarField2D> {
    ScalarField2D::from_fn(
        apex - Vec2::new(half_side, half_side),
        2.0 * half_side / n as f64,
        n + 1,
        n + 1,
        |p| cf1.eval(p - apex) - cf2.eval(p - apex),
    )
}
