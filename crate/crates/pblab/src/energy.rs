//! The two-phase functional J, its one-phase reformulation, and the
//! smoothed surrogate used for descent.
//!
//! ```text
//! J(u)  = ∫ |∇u|^p + λ₊^p χ{u>0} + λ₋^p χ{u≤0}
//! J̃(u)  = ∫ |∇u|^p + Λ χ{u>0},            Λ = λ₊^p − λ₋^p > 0
//! J_εδ(u) = Σ h² [ (|∇u|² + ε²)^{p/2} + Λ H_δ(u_c) ]
//! ```
//!
//! with `H_δ(s) = (1 + tanh(s/δ)) / 2` and `u_c` the cell-center value.
//! J and J̃ differ by the constant λ₋^p |Ω|, so they have the same
//! minimizers. The surrogate's gradient returned by
//! [`energy_smoothed_gradient`] is the exact derivative of the discrete
//! J_εδ with respect to the node values (not a PDE discretization), so
//! finite-difference checks apply verbatim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Rect, ScalarField2D, Vec2};

/// The square domain Ω.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SquareDomain {
    pub center: Vec2,
    pub half_side: f64,
}

impl SquareDomain {
    pub fn rect(&self) -> Rect {
        Rect {
            lo: self.center - Vec2::new(self.half_side, self.half_side),
            hi: self.center + Vec2::new(self.half_side, self.half_side),
        }
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_side * self.half_side
    }

    /// Zero field on this domain with `n` cells per side.
    pub fn field(&self, n: usize) -> Result<ScalarField2D> {
        ScalarField2D::on_square(self.center, self.half_side, n)
    }
}

/// Named boundary-datum families. The problem statement leaves the datum
/// g free; these families are the experiment set, not canon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BoundaryDatum {
    /// `g = α d⁺ − β d⁻` with `d = (x − center)·ν(angle)`.
    TwoPlane { alpha: f64, beta: f64, angle: f64 },
    /// Trace of the harmonic complementary cone pair with positive arc
    /// `ω` opening from the positive x-axis at the domain center:
    /// `r^{π/ω} sin(πθ/ω)` on `0 < θ < ω`, minus
    /// `r^{π/(2π−ω)} sin(π(θ−ω)/(2π−ω))` on the complementary arc.
    ConeTrace { omega: f64 },
    /// Piecewise-linear profile in the x₁ coordinate: `(x₁, value)`
    /// breakpoints, constant extension outside the table range.
    Table { points: Vec<(f64, f64)> },
}

impl BoundaryDatum {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryDatum::TwoPlane { alpha, beta, .. } => {
                if *alpha <= 0.0 || *beta < 0.0 {
                    return Err(Error::InvalidParameter(
                        "two_plane needs alpha > 0, beta >= 0".into(),
                    ));
                }
            }
            BoundaryDatum::ConeTrace { omega } => {
                if !(*omega > 0.0 && *omega < 2.0 * std::f64::consts::PI) {
                    return Err(Error::InvalidParameter(format!(
                        "cone_trace omega = {omega} must lie in (0, 2pi)"
                    )));
                }
            }
            BoundaryDatum::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter("table needs >= 2 points".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidParameter(
                        "table abscissae must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, domain: &SquareDomain, p: Vec2) -> f64 {
        match self {
            BoundaryDatum::TwoPlane { alpha, beta, angle } => {
                let d = (p - domain.center).dot(Vec2::from_angle(*angle));
                alpha * d.max(0.0) - beta * (-d).max(0.0)
            }
            BoundaryDatum::ConeTrace { omega } => {
                let rel = p - domain.center;
                let r = rel.norm();
                if r == 0.0 {
                    return 0.0;
                }
                let theta = rel.y.atan2(rel.x).rem_euclid(2.0 * std::f64::consts::PI);
                let pi = std::f64::consts::PI;
                if theta <= *omega {
                    let l1 = pi / omega;
                    r.powf(l1) * (l1 * theta).sin()
                } else {
                    let w2 = 2.0 * pi - omega;
                    let l2 = pi / w2;
                    -(r.powf(l2) * (l2 * (theta - omega)).sin())
                }
            }
            BoundaryDatum::Table { points } => {
                let x = p.x;
                if x <= points[0].0 {
                    return points[0].1;
                }
                if x >= points[points.len() - 1].0 {
                    return points[points.len() - 1].1;
                }
                let k = points.partition_point(|&(t, _)| t <= x) - 1;
                let (x0, v0) = points[k];
                let (x1, v1) = points[k + 1];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Problem data: exponent, phase constants, domain, boundary datum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub domain: SquareDomain,
    pub datum: BoundaryDatum,
}

impl ProblemSpec {
    pub fn new(
        p: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        domain: SquareDomain,
        datum: BoundaryDatum,
    ) -> Result<Self> {
        if !(p > 1.0 && p < 4.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must lie in (1, 4)")));
        }
        if !(lambda_plus > 0.0 && lambda_minus > 0.0) {
            return Err(Error::InvalidParameter("phase constants must be > 0".into()));
        }
        let spec = ProblemSpec { p, lambda_plus, lambda_minus, domain, datum };
        if !(spec.big_lambda() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lambda = lambda_plus^p - lambda_minus^p = {} must be > 0",
                spec.big_lambda()
            )));
        }
        if !(domain.half_side > 0.0) {
            return Err(Error::InvalidParameter("domain half-side must be > 0".into()));
        }
        spec.datum.validate()?;
        Ok(spec)
    }

    /// The Bernoulli constant `Λ = λ₊^p − λ₋^p`.
    pub fn big_lambda(&self) -> f64 {
        self.lambda_plus.powf(self.p) - self.lambda_minus.powf(self.p)
    }
}

/// Regularization knobs for the descent surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Gradient regularization ε in `(|∇u|² + ε²)^{p/2}`.
    pub eps_reg: f64,
    /// Width δ of the smoothed Heaviside `H_δ`.
    pub delta_h: f64,
}

impl SmoothingConfig {
    pub fn new(eps_reg: f64, delta_h: f64) -> Result<Self> {
        if eps_reg < 0.0 || !(delta_h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need eps_reg >= 0 and delta_h > 0, got ({eps_reg}, {delta_h})"
            )));
        }
        Ok(SmoothingConfig { eps_reg, delta_h })
    }
}

#[inline]
fn heaviside_smooth(s: f64, delta: f64) -> f64 {
    0.5 * (1.0 + (s / delta).tanh())
}

#[inline]
fn heaviside_smooth_deriv(s: f64, delta: f64) -> f64 {
    let t = (s / delta).tanh();
    0.5 * (1.0 - t * t) / delta
}

/// Iterates cells of `u`, yielding `(gx, gy, cell-center value)`.
#[inline]
fn for_each_cell(u: &ScalarField2D, mut f: impl FnMut(usize, usize, f64, f64, f64)) {
    let (nx, ny, h) = (u.nx(), u.ny(), u.spacing());
    let inv2h = 1.0 / (2.0 * h);
    let vals = u.values();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = vals[j * nx + i];
            let v10 = vals[j * nx + i + 1];
            let v01 = vals[(j + 1) * nx + i];
            let v11 = vals[(j + 1) * nx + i + 1];
            let gx = (v10 + v11 - v00 - v01) * inv2h;
            let gy = (v01 + v11 - v00 - v10) * inv2h;
            let uc = 0.25 * (v00 + v10 + v01 + v11);
            f(i, j, gx, gy, uc);
        }
    }
}

/// The exact two-phase energy `Σ h² [|∇u|^p + λ₊^p χ{u_c>0} + λ₋^p χ{u_c≤0}]`.
///
/// The indicator is decided at cell centers, tying it to the same cells as
/// the gradient quadrature.
pub fn energy_exact(u: &ScalarField2D, spec: &ProblemSpec) -> f64 {
    let h2 = u.spacing() * u.spacing();
    let lp = spec.lambda_plus.powf(spec.p);
    let lm = spec.lambda_minus.powf(spec.p);
    let half_p = 0.5 * spec.p;
    let mut total = 0.0;
    for_each_cell(u, |_, _, gx, gy, uc| {
        let g2 = gx * gx + gy * gy;
        let w = if spec.p == 2.0 { g2 } else { g2.powf(half_p) };
        total += h2 * (w + if uc > 0.0 { lp } else { lm });
    });
    total
}

/// The one-phase reformulation `Σ h² [|∇u|^p + Λ χ{u_c>0}]`.
///
/// Differs from [`energy_exact`] by the constant `λ₋^p |Ω|`.
pub fn energy_one_phase(u: &ScalarField2D, spec: &ProblemSpec) -> f64 {
    let h2 = u.spacing() * u.spacing();
    let lambda = spec.big_lambda();
    let half_p = 0.5 * spec.p;
    let mut total = 0.0;
    for_each_cell(u, |_, _, gx, gy, uc| {
        let g2 = gx * gx + gy * gy;
        let w = if spec.p == 2.0 { g2 } else { g2.powf(half_p) };
        total += h2 * (w + if uc > 0.0 { lambda } else { 0.0 });
    });
    total
}

/// The smoothed surrogate `Σ h² [(|∇u|² + ε²)^{p/2} + Λ H_δ(u_c)]`.
pub fn energy_smoothed(u: &ScalarField2D, spec: &ProblemSpec, cfg: &SmoothingConfig) -> f64 {
    let h2 = u.spacing() * u.spacing();
    let lambda = spec.big_lambda();
    let eps2 = cfg.eps_reg * cfg.eps_reg;
    let half_p = 0.5 * spec.p;
    let mut total = 0.0;
    for_each_cell(u, |_, _, gx, gy, uc| {
        let g2 = gx * gx + gy * gy + eps2;
        let w = if spec.p == 2.0 { g2 } else { g2.powf(half_p) };
        total += h2 * (w + lambda * heaviside_smooth(uc, cfg.delta_h));
    });
    total
}

/// Exact derivative of [`energy_smoothed`] with respect to every node
/// value, returned as a node field on the same grid.
pub fn energy_smoothed_gradient(
    u: &ScalarField2D,
    spec: &ProblemSpec,
    cfg: &SmoothingConfig,
) -> ScalarField2D {
    let mut out = ScalarField2D::new(u.origin(), u.spacing(), u.nx(), u.ny())
        .expect("same geometry as input");
    energy_smoothed_gradient_into(u, spec, cfg, out.values_mut());
    out
}

/// In-place variant of [`energy_smoothed_gradient`] writing into a flat
/// node buffer (row-major, same layout as the field values).
pub fn energy_smoothed_gradient_into(
    u: &ScalarField2D,
    spec: &ProblemSpec,
    cfg: &SmoothingConfig,
    grad: &mut [f64],
) {
    let (nx, h) = (u.nx(), u.spacing());
    assert_eq!(grad.len(), u.values().len());
    grad.fill(0.0);
    let h2 = h * h;
    let inv2h = 1.0 / (2.0 * h);
    let lambda = spec.big_lambda();
    let eps2 = cfg.eps_reg * cfg.eps_reg;
    let p = spec.p;
    for_each_cell(u, |i, j, gx, gy, uc| {
        let g2 = gx * gx + gy * gy + eps2;
        // d/dg (g² + ε²)^{p/2} = p g (g² + ε²)^{p/2 - 1}
        let wp = if p == 2.0 { 1.0 } else { g2.powf(0.5 * p - 1.0) };
        let ax = h2 * p * wp * gx * inv2h;
        let ay = h2 * p * wp * gy * inv2h;
        let b = 0.25 * h2 * lambda * heaviside_smooth_deriv(uc, cfg.delta_h);
        let i00 = j * nx + i;
        let i10 = j * nx + i + 1;
        let i01 = (j + 1) * nx + i;
        let i11 = (j + 1) * nx + i + 1;
        grad[i00] += -ax - ay + b;
        grad[i10] += ax - ay + b;
        grad[i01] += -ax + ay + b;
        grad[i11] += ax + ay + b;
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField2D;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_domain() -> SquareDomain {
        SquareDomain { center: Vec2::new(0.5, 0.5), half_side: 0.5 }
    }

    fn spec_with(p: f64, lp: f64, lm: f64) -> ProblemSpec {
        ProblemSpec::new(
            p,
            lp,
            lm,
            unit_domain(),
            BoundaryDatum::TwoPlane { alpha: 1.0, beta: 1.0, angle: 0.0 },
        )
        .unwrap()
    }

    fn field_on_unit(n: usize, f: impl FnMut(Vec2) -> f64) -> ScalarField2D {
        ScalarField2D::from_fn(Vec2::ZERO, 1.0 / n as f64, n + 1, n + 1, f).unwrap()
    }

    #[test]
    fn lambda_must_be_positive() {
        let err = ProblemSpec::new(
            2.0,
            1.0,
            1.0,
            unit_domain(),
            BoundaryDatum::TwoPlane { alpha: 1.0, beta: 1.0, angle: 0.0 },
        );
        assert!(err.is_err());
    }

    #[test]
    fn constant_negative_field_counts_negative_phase_only() {
        let spec = spec_with(2.0, 2.0, 1.0);
        let u = field_on_unit(32, |_| -1.0);
        let e = energy_exact(&u, &spec);
        assert!((e - 1.0).abs() < 1e-12, "{e}");
        assert!(energy_one_phase(&u, &spec).abs() < 1e-12);
    }

    #[test]
    fn constant_positive_field() {
        let spec = spec_with(2.0, 2.0, 1.0);
        let u = field_on_unit(32, |_| 1.0);
        assert!((energy_exact(&u, &spec) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_field_splits_phases_evenly() {
        // u = x - 1/2 on [0,1]^2, p = 2, λ± chosen so Λ > 0 but both count:
        // shifted so {u>0} has measure 1/2 exactly (cell centers).
        let spec = spec_with(2.0, 2.0, 1.0);
        let u = field_on_unit(64, |p| p.x - 0.5);
        let e = energy_exact(&u, &spec);
        let exact = 1.0 + 4.0 * 0.5 + 1.0 * 0.5;
        assert!((e - exact).abs() / exact < 0.01, "{e} vs {exact}");
    }

    #[test]
    fn exact_minus_one_phase_is_negative_constant_volume() {
        let spec = spec_with(2.3, 1.7, 1.1);
        for shift in [-0.2, 0.3, 0.7] {
            let u = field_on_unit(48, |p| (p.x - shift) * (1.0 + 0.5 * p.y));
            let diff = energy_exact(&u, &spec) - energy_one_phase(&u, &spec);
            let cst = spec.lambda_minus.powf(spec.p) * spec.domain.area();
            assert!((diff - cst).abs() < 1e-10, "{diff} vs {cst}");
        }
    }

    #[test]
    fn energy_bounded_below_by_negative_phase_floor() {
        let spec = spec_with(2.5, 1.5, 1.0);
        let floor = spec.lambda_minus.powf(spec.p) * spec.domain.area();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = field_on_unit(16, |_| rng.gen_range(-1.0..1.0));
            assert!(energy_exact(&u, &spec) >= floor - 1e-12);
        }
    }

    #[test]
    fn smoothed_approaches_one_phase_for_small_delta() {
        let spec = spec_with(2.0, 2.0, 1.0);
        let u = field_on_unit(64, |p| p.x - 0.5);
        let cfg = SmoothingConfig::new(0.0, 1e-4).unwrap();
        let diff = (energy_smoothed(&u, &spec, &cfg) - energy_one_phase(&u, &spec)).abs();
        assert!(diff < 1e-3, "{diff}");
    }

    #[test]
    fn heaviside_force_positive_at_zero_field() {
        let spec = spec_with(2.0, 2.0, 1.0);
        let u = field_on_unit(16, |_| 0.0);
        let cfg = SmoothingConfig::new(1e-3, 0.05).unwrap();
        let g = energy_smoothed_gradient(&u, &spec, &cfg);
        let h2 = u.spacing() * u.spacing();
        let expected = spec.big_lambda() * 0.5 / cfg.delta_h * h2;
        // interior node touches 4 cells, each contributing Λ H'_δ(0) h²/4
        let gi = g.value(8, 8);
        assert!((gi - expected).abs() / expected < 1e-12, "{gi} vs {expected}");
        assert!(gi > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..20 {
            let p = rng.gen_range(1.5..3.5);
            let spec = ProblemSpec::new(
                p,
                rng.gen_range(1.2..2.0),
                1.0,
                unit_domain(),
                BoundaryDatum::TwoPlane { alpha: 1.0, beta: 1.0, angle: 0.0 },
            )
            .unwrap();
            let cfg = SmoothingConfig::new(rng.gen_range(1e-3..1e-1), rng.gen_range(0.02..0.2))
                .unwrap();
            let mut u = field_on_unit(12, |_| rng.gen_range(-1.0..1.0f64));
            let dir: Vec<f64> =
                (0..u.values().len()).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            let dir: Vec<f64> = dir.iter().map(|d| d / norm).collect();

            let g = energy_smoothed_gradient(&u, &spec, &cfg);
            let analytic: f64 =
                g.values().iter().zip(&dir).map(|(g, d)| g * d).sum();

            let t = 1e-6;
            let base: Vec<f64> = u.values().to_vec();
            for (v, d) in u.values_mut().iter_mut().zip(&dir) {
                *v += t * d;
            }
            let ep = energy_smoothed(&u, &spec, &cfg);
            for ((v, b), d) in u.values_mut().iter_mut().zip(&base).zip(&dir) {
                *v = b - t * d;
            }
            let em = energy_smoothed(&u, &spec, &cfg);
            let fd = (ep - em) / (2.0 * t);
            let rel = (analytic - fd).abs() / analytic.abs().max(1e-12);
            assert!(rel < 1e-5, "trial {trial}: analytic {analytic} vs fd {fd} (rel {rel})");
        }
    }

    #[test]
    fn smoothed_energy_invariant_under_grid_translation() {
        let spec = spec_with(2.2, 1.6, 1.0);
        let cfg = SmoothingConfig::new(1e-2, 0.05).unwrap();
        let f = |p: Vec2| (p.x - 0.4) * (p.y + 0.2);
        let n = 24;
        let u = ScalarField2D::from_fn(Vec2::ZERO, 1.0 / n as f64, n + 1, n + 1, f).unwrap();
        let shift = Vec2::new(3.25, -1.5);
        let v = ScalarField2D::from_fn(shift, 1.0 / n as f64, n + 1, n + 1, |p| f(p - shift))
            .unwrap();
        let eu = energy_smoothed(&u, &spec, &cfg);
        let ev = energy_smoothed(&v, &spec, &cfg);
        assert_eq!(eu, ev);
    }

    #[test]
    fn datum_table_interpolates() {
        let d = BoundaryDatum::Table { points: vec![(0.0, -1.0), (0.6, 0.0), (1.0, 1.0)] };
        d.validate().unwrap();
        let dom = unit_domain();
        assert!((d.eval(&dom, Vec2::new(0.3, 0.9)) + 0.5).abs() < 1e-12);
        assert!((d.eval(&dom, Vec2::new(0.8, 0.1)) - 0.5).abs() < 1e-12);
        assert_eq!(d.eval(&dom, Vec2::new(-2.0, 0.0)), -1.0);
    }

    #[test]
    fn cone_trace_vanishes_on_rays() {
        let d = BoundaryDatum::ConeTrace { omega: std::f64::consts::FRAC_PI_2 };
        let dom = SquareDomain { center: Vec2::ZERO, half_side: 0.5 };
        assert!(d.eval(&dom, Vec2::new(0.4, 0.0)).abs() < 1e-12);
        assert!(d.eval(&dom, Vec2::new(0.0, 0.4)).abs() < 1e-10);
        assert!(d.eval(&dom, Vec2::new(0.3, 0.3)) > 0.0);
        assert!(d.eval(&dom, Vec2::new(-0.3, -0.3)) < 0.0);
    }
}
