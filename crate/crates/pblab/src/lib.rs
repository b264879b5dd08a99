//! Grid laboratory for the planar two-phase p-Bernoulli free boundary problem.
//!
//! The crate minimizes the functional
//!
//! ```text
//! J(u) = ∫_Ω |∇u|^p + λ₊^p χ{u>0} + λ₋^p χ{u≤0}
//! ```
//!
//! on uniform square grids, extracts and measures the free boundary
//! Γ = ∂{u>0}, evaluates the product monotonicity functional
//! φ_p(r) = r⁻⁴ ∫_{B_r}|∇u⁺|^p ∫_{B_r}|∇u⁻|^p together with its tripling
//! inequality, and independently computes the eigenvalues of the
//! p-Laplace-Beltrami operator on circular arcs (closed form and ODE
//! shooting) that control the monotonicity of φ_p.
//!
//! Module map:
//! - [`grid`]: scalar fields, cell gradients, quadrature over balls/squares.
//! - [`energy`]: the functional J, its one-phase form, and the smoothed
//!   descent surrogate with its exact discrete gradient.
//! - [`minimize`]: descent with (ε, δ) continuation, the 1D strip oracle,
//!   and the p-harmonic residual probe.
//! - [`freeboundary`]: Γ extraction, slab flatness h(x₀, r), point
//!   classification, flux balance G.
//! - [`acf`]: φ_p profiles, tripling checks, rescaled pairs, and the
//!   coherence / non-degeneracy / Caccioppoli / reverse-Hölder probes.
//! - [`eigen`]: arc eigenvalues λ(ω, p), characteristic numbers,
//!   shooting, and homogeneous cone functions.
//! - [`capacity`]: variational condenser ℓ-capacity with scaling and
//!   Poincaré probes.
//! - [`config`]: key-value problem configuration files.
//! - [`verify`]: the acceptance checks run by `pblab verify` and the
//!   `acceptance` test target.

pub mod acf;
pub mod capacity;
pub mod config;
pub mod energy;
pub mod eigen;
pub mod error;
pub mod freeboundary;
pub mod grid;
pub mod minimize;
pub mod verify;

pub use error::{Error, Result};
