//! Error type shared by all modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor argument violates a documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quadrature region (ball, square, annulus) leaves the grid.
    #[error("region outside grid: {0}")]
    RegionOutsideGrid(String),

    /// A sampling circle leaves the grid.
    #[error("circle of radius {r} centered at ({x}, {y}) outside grid")]
    CircleOutsideGrid { x: f64, y: f64, r: f64 },

    /// An interpolation point leaves the grid.
    #[error("point ({x}, {y}) outside grid")]
    PointOutsideGrid { x: f64, y: f64 },

    /// The free boundary does not meet the queried ball.
    #[error("free boundary does not intersect ball of radius {r} at ({x}, {y})")]
    EmptyIntersection { x: f64, y: f64, r: f64 },

    /// A probe needs a free boundary but the field has none.
    #[error("field has no free boundary")]
    NoFreeBoundary,

    /// One phase vanishes where both are required (e.g. S± = 0 in rescaling).
    #[error("phase {0} vanishes identically on the probed region")]
    PhaseEmpty(&'static str),

    /// A mask or constraint set is empty.
    #[error("empty mask: {0}")]
    EmptyMask(String),

    /// Quadrature or ratio with vanishing denominator.
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    /// Iterative solver failed to reach its tolerance.
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    /// Eigenvalue scan found no sign change in the window.
    #[error("no sign change in scan window ({lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// The monotone scalar root solve inside the ODE integrator failed.
    #[error("root solve failure: {0}")]
    RootSolveFailure(String),

    /// Flux stencils have no room on one side of the boundary.
    #[error("insufficient one-sided room for flux stencils")]
    InsufficientRoom,

    /// Malformed configuration file.
    #[error("config error: {0}")]
    Config(String),

    /// I/O error while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
