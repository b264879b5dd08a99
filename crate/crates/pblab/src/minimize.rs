//! Local minimization of J with Dirichlet data: descent with (ε, δ)
//! continuation, warm starts, Armijo backtracking and optional heavy-ball
//! momentum, plus the independent 1D strip oracle and a discrete
//! p-harmonic residual probe.
//!
//! The exact functional is discontinuous in u through χ{u>0}; each
//! continuation stage minimizes the smooth surrogate of
//! [`energy_smoothed`](crate::energy::energy_smoothed) instead, the δ
//! schedule ending at the grid spacing. The initial iterate is the
//! harmonic fill of the datum.

use serde::{Deserialize, Serialize};

use crate::energy::{
    energy_smoothed, energy_smoothed_gradient_into, BoundaryDatum, ProblemSpec, SmoothingConfig,
};
use crate::error::{Error, Result};
use crate::grid::{ScalarField2D, Vec2};

/// Descent configuration. The continuation schedule must be strictly
/// decreasing in ε and non-increasing in δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeConfig {
    /// Grid cells per side of the square domain.
    pub resolution: usize,
    /// Continuation schedule for (ε, δ).
    pub stages: Vec<SmoothingConfig>,
    /// Iteration cap per stage.
    pub max_iters: usize,
    /// Tolerance on `max |∂E/∂u| / h²` over interior nodes.
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Backtracking shrink factor.
    pub backtrack: f64,
    /// Heavy-ball momentum factor; `None` disables momentum.
    pub momentum: Option<f64>,
}

impl MinimizeConfig {
    /// Default configuration for an `n`-cell grid on a domain with the
    /// given half-side: ε from 1e-2 down to 1e-6, δ from 16h down to h.
    pub fn for_grid(n: usize, half_side: f64) -> Self {
        let h = 2.0 * half_side / n as f64;
        let stages = [(1e-2, 16.0), (1e-3, 8.0), (1e-4, 4.0), (1e-5, 2.0), (1e-6, 1.0)]
            .iter()
            .map(|&(eps, k)| SmoothingConfig { eps_reg: eps, delta_h: k * h })
            .collect();
        MinimizeConfig {
            resolution: n,
            stages,
            max_iters: 20_000,
            grad_tol: 1e-4,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            momentum: Some(0.9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidParameter("resolution must be >= 2".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::InvalidParameter("empty continuation schedule".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter("backtrack factor must lie in (0,1)".into()));
        }
        for w in self.stages.windows(2) {
            if !(w[1].eps_reg < w[0].eps_reg && w[1].delta_h <= w[0].delta_h) {
                return Err(Error::InvalidParameter(
                    "continuation schedule must decrease".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Output of [`minimize`].
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub u: ScalarField2D,
    /// Accepted energies per continuation stage (non-increasing within
    /// each stage by the Armijo guarantee).
    pub stage_energies: Vec<Vec<f64>>,
    /// `max |∂E/∂u| / h²` over interior nodes at the final stage.
    pub final_grad_norm: f64,
    pub converged: bool,
}

/// Computes a local minimizer of J for `spec` with the datum imposed
/// exactly on the boundary nodes. On nonconvergence the best iterate is
/// returned with `converged = false`.
pub fn minimize(spec: &ProblemSpec, cfg: &MinimizeConfig) -> Result<MinimizeResult> {
    cfg.validate()?;
    let n = cfg.resolution;
    let mut u = spec.domain.field(n)?;
    let (nx, ny) = (u.nx(), u.ny());

    // boundary nodes carry the datum exactly, and are never moved
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                let v = spec.datum.eval(&spec.domain, u.node_pos(i, j));
                u.set_value(i, j, v);
            }
        }
    }
    harmonic_fill(&mut u);

    let h2 = u.spacing() * u.spacing();
    let n_nodes = nx * ny;
    let interior = |idx: usize| {
        let (i, j) = (idx % nx, idx / nx);
        i > 0 && j > 0 && i + 1 < nx && j + 1 < ny
    };

    let mut grad = vec![0.0; n_nodes];
    let mut velocity = vec![0.0; n_nodes];
    let mut direction = vec![0.0; n_nodes];
    let mut trial = u.clone();

    let mut stage_energies = Vec::with_capacity(cfg.stages.len());
    let mut final_grad_norm = f64::INFINITY;
    let mut converged = false;

    for stage in &cfg.stages {
        let mut energies = Vec::new();
        let mut energy = energy_smoothed(&u, spec, stage);
        energies.push(energy);
        velocity.fill(0.0);
        let mut step = 1.0f64;
        converged = false;

        for _ in 0..cfg.max_iters {
            energy_smoothed_gradient_into(&u, spec, stage, &mut grad);
            for (idx, g) in grad.iter_mut().enumerate() {
                if !interior(idx) {
                    *g = 0.0;
                }
            }
            let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            final_grad_norm = gmax / h2;
            if final_grad_norm <= cfg.grad_tol {
                converged = true;
                break;
            }

            // heavy-ball direction, restarted whenever it stops descending
            let mu = cfg.momentum.unwrap_or(0.0);
            let mut slope = 0.0;
            for idx in 0..n_nodes {
                direction[idx] = -grad[idx] + mu * velocity[idx];
                slope += direction[idx] * grad[idx];
            }
            if slope >= 0.0 {
                velocity.fill(0.0);
                slope = 0.0;
                for idx in 0..n_nodes {
                    direction[idx] = -grad[idx];
                    slope -= grad[idx] * grad[idx];
                }
            }

            // Armijo backtracking, warm-started from the previous step
            step = (step * 2.0).min(1e6);
            let mut accepted = false;
            while step > 1e-18 {
                let tv = trial.values_mut();
                for idx in 0..n_nodes {
                    tv[idx] = u.values()[idx] + step * direction[idx];
                }
                let e_trial = energy_smoothed(&trial, spec, stage);
                if e_trial <= energy + cfg.armijo_c1 * step * slope {
                    accepted = true;
                    break;
                }
                step *= cfg.backtrack;
            }
            if !accepted {
                // descent stalled at floating-point resolution
                break;
            }
            for idx in 0..n_nodes {
                velocity[idx] = step * direction[idx];
            }
            std::mem::swap(&mut u, &mut trial);
            energy = energy_smoothed(&u, spec, stage);
            energies.push(energy);
        }
        stage_energies.push(energies);
    }

    Ok(MinimizeResult { u, stage_energies, final_grad_norm, converged })
}

/// Red-black SOR harmonic fill of the interior, keeping boundary nodes.
fn harmonic_fill(u: &mut ScalarField2D) {
    let (nx, ny) = (u.nx(), u.ny());
    let n = nx.max(ny) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / n).sin());
    // seed the interior with the row-wise datum blend to start close
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let t = i as f64 / (nx - 1) as f64;
            let v = (1.0 - t) * u.value(0, j) + t * u.value(nx - 1, j);
            u.set_value(i, j, v);
        }
    }
    let sweeps = 4 * nx.max(ny);
    for _ in 0..sweeps {
        let mut max_delta = 0.0f64;
        for color in 0..2 {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    if (i + j) % 2 != color {
                        continue;
                    }
                    let avg = 0.25
                        * (u.value(i - 1, j)
                            + u.value(i + 1, j)
                            + u.value(i, j - 1)
                            + u.value(i, j + 1));
                    let old = u.value(i, j);
                    let new = old + omega * (avg - old);
                    max_delta = max_delta.max((new - old).abs());
                    u.set_value(i, j, new);
                }
            }
        }
        if max_delta < 1e-12 {
            break;
        }
    }
}

/// Solution of the 1D strip problem: breakpoint and one-sided slopes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StripOracle {
    /// Minimizing breakpoint s* of `E(s) = b^p s^{1-p} + a^p (1-s)^{1-p} + Λ(1-s)`.
    pub s_star: f64,
    /// Positive-phase slope `α = a / (1 - s*)`.
    pub alpha: f64,
    /// Negative-phase slope `β = b / s*`.
    pub beta: f64,
}

/// Brute-force minimizer of the 1D strip energy over the breakpoint
/// `s ∈ (0, 1)`: grid scan refined by golden section. At the optimum
/// `(p-1)(α^p − β^p) = Λ` (the flux balance).
pub fn solve_1d_oracle(p: f64, a: f64, b: f64, lambda: f64, s_grid: usize) -> Result<StripOracle> {
    if !(a > 0.0 && b > 0.0 && lambda > 0.0 && p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need a, b, Lambda > 0 and p > 1, got ({a}, {b}, {lambda}, {p})"
        )));
    }
    let m = s_grid.max(16);
    let energy = |s: f64| {
        b.powf(p) * s.powf(1.0 - p) + a.powf(p) * (1.0 - s).powf(1.0 - p) + lambda * (1.0 - s)
    };
    let mut best_k = 1;
    let mut best_e = f64::INFINITY;
    for k in 1..m {
        let s = k as f64 / m as f64;
        let e = energy(s);
        if e < best_e {
            best_e = e;
            best_k = k;
        }
    }
    // golden-section polish on the bracketing interval (E is strictly convex)
    let mut lo = (best_k as f64 - 1.0) / m as f64;
    let mut hi = (best_k as f64 + 1.0) / m as f64;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (energy(x1), energy(x2));
    while hi - lo > 1e-13 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = energy(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = energy(x2);
        }
    }
    let s = 0.5 * (lo + hi);
    Ok(StripOracle { s_star: s, alpha: a / (1.0 - s), beta: b / s })
}

/// Strip datum: the two-slope 1D profile `-b` at `x₁ = x_lo`, `0` at the
/// oracle breakpoint, `+a` at `x₁ = x_hi`, constant in x₂.
pub fn strip_datum(p: f64, a: f64, b: f64, lambda: f64, x_lo: f64, x_hi: f64) -> Result<BoundaryDatum> {
    let oracle = solve_1d_oracle(p, a, b, lambda, 4096)?;
    let s_abs = x_lo + oracle.s_star * (x_hi - x_lo);
    Ok(BoundaryDatum::Table { points: vec![(x_lo, -b), (s_abs, 0.0), (x_hi, a)] })
}

/// Discrete weak p-Laplacian residual away from the free boundary:
/// `max` over interior nodes inside `mask` of
/// `|⟨|∇u|^{p-2}∇u, ∇hat⟩| / h²`, with the hat function supported on the
/// node's four cells. The mask should avoid a 2-cell collar of Γ.
pub fn p_harmonic_residual(
    u: &ScalarField2D,
    mask: impl Fn(Vec2) -> bool,
    p: f64,
) -> Result<f64> {
    let (nx, ny, h) = (u.nx(), u.ny(), u.spacing());
    let inv2h = 1.0 / (2.0 * h);
    let h2 = h * h;
    // per-cell flux |g|^{p-2} g
    let g = crate::grid::gradient_field(u);
    let flux = |i: usize, j: usize| -> (f64, f64) {
        let gx = g.gx[j * g.nx_cells + i];
        let gy = g.gy[j * g.nx_cells + i];
        let m2 = gx * gx + gy * gy;
        if m2 == 0.0 {
            (0.0, 0.0)
        } else {
            let w = m2.powf(0.5 * (p - 2.0));
            (w * gx, w * gy)
        }
    };
    let mut max_res: Option<f64> = None;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            // node and the full support of its hat function inside the mask
            let supported = (0..4).all(|k| {
                let (ci, cj) = (i - 1 + k % 2, j - 1 + k / 2);
                let rect = Vec2::new(
                    u.origin().x + ci as f64 * h + 0.5 * h,
                    u.origin().y + cj as f64 * h + 0.5 * h,
                );
                mask(rect)
            }) && mask(u.node_pos(i, j));
            if !supported {
                continue;
            }
            let mut r = 0.0;
            for k in 0..4 {
                let (ci, cj) = (i - 1 + k % 2, j - 1 + k / 2);
                let (fx, fy) = flux(ci, cj);
                let sx = if ci == i { -inv2h } else { inv2h };
                let sy = if cj == j { -inv2h } else { inv2h };
                r += h2 * (fx * sx + fy * sy);
            }
            let r = (r / h2).abs();
            max_res = Some(max_res.map_or(r, |m: f64| m.max(r)));
        }
    }
    max_res.ok_or(Error::EmptyMask("no interior node in residual mask".into()))
}
