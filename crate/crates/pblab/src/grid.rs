//! Uniform-grid scalar fields, finite-difference gradients, and quadrature
//! over balls, circles, squares and annuli.
//!
//! Fields are node-sampled; gradients live on cells (the four corner nodes
//! of each cell are differenced, which is exact for affine fields). All
//! quadrature is cell-sum based; cells cut by a region boundary are refined
//! by 4×4 subsampling. Fields are immutable in spirit: no operation here
//! mutates its input.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subsamples per axis used on boundary-cut cells.
const CUT_CELL_SUBSAMPLES: usize = 4;

/// A point or direction in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Unit vector at angle `theta` from the x-axis.
    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle, used for region/grid intersection tests.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.contains(r.lo) && self.contains(r.hi)
    }
}

/// Node-sampled scalar field on a uniform square grid.
///
/// Node (i, j) sits at `origin + (i h, j h)` for `0 ≤ i < nx`, `0 ≤ j < ny`.
/// Values are stored row-major (`j * nx + i`).
#[derive(Debug, Clone)]
pub struct ScalarField2D {
    origin: Vec2,
    h: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

/// JSON header accompanying the flat CSV serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScalarField2D {
    /// Zero field. `nx`, `ny` are node counts (≥ 2); `h` is the spacing.
    pub fn new(origin: Vec2, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("spacing h = {h} must be > 0")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "node counts nx = {nx}, ny = {ny} must be >= 2"
            )));
        }
        Ok(ScalarField2D { origin, h, nx, ny, values: vec![0.0; nx * ny] })
    }

    /// Field sampled from a function of position.
    pub fn from_fn(
        origin: Vec2,
        h: f64,
        nx: usize,
        ny: usize,
        mut f: impl FnMut(Vec2) -> f64,
    ) -> Result<Self> {
        let mut field = ScalarField2D::new(origin, h, nx, ny)?;
        for j in 0..ny {
            for i in 0..nx {
                let v = f(field.node_pos(i, j));
                field.values[j * nx + i] = v;
            }
        }
        field.check_finite()?;
        Ok(field)
    }

    /// Field covering the square `[center ± half_side]²` with `n` cells per side.
    pub fn on_square(center: Vec2, half_side: f64, n: usize) -> Result<Self> {
        if !(half_side > 0.0) {
            return Err(Error::InvalidParameter(format!("half_side = {half_side} must be > 0")));
        }
        if n < 1 {
            return Err(Error::InvalidParameter("need at least one cell".into()));
        }
        let h = 2.0 * half_side / n as f64;
        ScalarField2D::new(center - Vec2::new(half_side, half_side), h, n + 1, n + 1)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_pos(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn set_value(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    /// Rectangle covered by the grid nodes.
    pub fn domain(&self) -> Rect {
        Rect {
            lo: self.origin,
            hi: Vec2::new(
                self.origin.x + (self.nx - 1) as f64 * self.h,
                self.origin.y + (self.ny - 1) as f64 * self.h,
            ),
        }
    }

    /// Bilinear interpolation at `p`. Errors if `p` leaves the grid
    /// (with a one-ulp-scale tolerance on the boundary).
    pub fn interp(&self, p: Vec2) -> Result<f64> {
        let sx = (p.x - self.origin.x) / self.h;
        let sy = (p.y - self.origin.y) / self.h;
        let eps = 1e-12 * (self.nx.max(self.ny) as f64);
        if sx < -eps || sy < -eps || sx > (self.nx - 1) as f64 + eps || sy > (self.ny - 1) as f64 + eps
        {
            return Err(Error::PointOutsideGrid { x: p.x, y: p.y });
        }
        let i = (sx.floor() as isize).clamp(0, self.nx as isize - 2) as usize;
        let j = (sy.floor() as isize).clamp(0, self.ny as isize - 2) as usize;
        let fx = (sx - i as f64).clamp(0.0, 1.0);
        let fy = (sy - j as f64).clamp(0.0, 1.0);
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        Ok(v00 * (1.0 - fx) * (1.0 - fy)
            + v10 * fx * (1.0 - fy)
            + v01 * (1.0 - fx) * fy
            + v11 * fx * fy)
    }

    /// Positive part `u⁺ = max(u, 0)` clamped at the nodes.
    pub fn positive_part(&self) -> ScalarField2D {
        let mut f = self.clone();
        for v in &mut f.values {
            *v = v.max(0.0);
        }
        f
    }

    /// Negative part `u⁻ = -min(u, 0)` clamped at the nodes (non-negative).
    pub fn negative_part(&self) -> ScalarField2D {
        let mut f = self.clone();
        for v in &mut f.values {
            *v = (-*v).max(0.0);
        }
        f
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            origin: [self.origin.x, self.origin.y],
            h: self.h,
            nx: self.nx,
            ny: self.ny,
        }
    }

    /// Flat CSV serialization: header row `x,y,value`, one node per line,
    /// row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.node_pos(i, j);
                writeln!(w, "{:.12e},{:.12e},{:.17e}", p.x, p.y, self.value(i, j))?;
            }
        }
        Ok(())
    }

    /// Reads a field written by [`write_csv`](Self::write_csv) given its
    /// JSON header.
    pub fn read_csv<R: BufRead>(header: &FieldHeader, r: R) -> Result<Self> {
        let mut field = ScalarField2D::new(
            Vec2::new(header.origin[0], header.origin[1]),
            header.h,
            header.nx,
            header.ny,
        )?;
        let mut idx = 0usize;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let mut parts = line.split(',');
            let (_, _, v) = (
                parts.next(),
                parts.next(),
                parts
                    .next()
                    .ok_or_else(|| Error::Config(format!("short CSV row {lineno}")))?,
            );
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("bad value on row {lineno}: {e}")))?;
            if idx >= field.values.len() {
                return Err(Error::Config("too many CSV rows for header".into()));
            }
            field.values[idx] = v;
            idx += 1;
        }
        if idx != field.values.len() {
            return Err(Error::Config(format!(
                "expected {} CSV rows, found {idx}",
                field.values.len()
            )));
        }
        field.check_finite()?;
        Ok(field)
    }
}

/// Scalar values attached to grid cells (one per cell).
///
/// Cell (i, j) covers `[origin + (i h, j h), origin + ((i+1) h, (j+1) h)]`.
#[derive(Debug, Clone)]
pub struct CellField {
    pub origin: Vec2,
    pub h: f64,
    pub nx_cells: usize,
    pub ny_cells: usize,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        let lo = Vec2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        );
        Rect { lo, hi: Vec2::new(lo.x + self.h, lo.y + self.h) }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx_cells + i]
    }

    /// Rectangle covered by all cells.
    pub fn domain(&self) -> Rect {
        Rect {
            lo: self.origin,
            hi: Vec2::new(
                self.origin.x + self.nx_cells as f64 * self.h,
                self.origin.y + self.ny_cells as f64 * self.h,
            ),
        }
    }

    /// Cell-center average of the four corner node values of `u`,
    /// mapped through `f`.
    pub fn from_node_centers(u: &ScalarField2D, f: impl Fn(f64) -> f64) -> CellField {
        let (nx, ny) = (u.nx(), u.ny());
        let mut values = Vec::with_capacity((nx - 1) * (ny - 1));
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let c = 0.25
                    * (u.value(i, j) + u.value(i + 1, j) + u.value(i, j + 1) + u.value(i + 1, j + 1));
                values.push(f(c));
            }
        }
        CellField {
            origin: u.origin(),
            h: u.spacing(),
            nx_cells: nx - 1,
            ny_cells: ny - 1,
            values,
        }
    }
}

/// Per-cell gradient vectors of a node field.
#[derive(Debug, Clone)]
pub struct CellVectorField {
    pub origin: Vec2,
    pub h: f64,
    pub nx_cells: usize,
    pub ny_cells: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl CellVectorField {
    /// Cell field of `|g|^p`.
    pub fn magnitude_pow(&self, p: f64) -> CellField {
        let values = if p == 2.0 {
            self.gx
                .iter()
                .zip(&self.gy)
                .map(|(&gx, &gy)| gx * gx + gy * gy)
                .collect()
        } else {
            self.gx
                .iter()
                .zip(&self.gy)
                .map(|(&gx, &gy)| (gx * gx + gy * gy).powf(0.5 * p))
                .collect()
        };
        CellField {
            origin: self.origin,
            h: self.h,
            nx_cells: self.nx_cells,
            ny_cells: self.ny_cells,
            values,
        }
    }
}

/// Per-cell gradient from the four corner nodes (bilinear-cell
/// differencing); exact for affine fields.
pub fn gradient_field(u: &ScalarField2D) -> CellVectorField {
    let (nx, ny, h) = (u.nx(), u.ny(), u.spacing());
    let n_cells = (nx - 1) * (ny - 1);
    let mut gx = Vec::with_capacity(n_cells);
    let mut gy = Vec::with_capacity(n_cells);
    let inv2h = 1.0 / (2.0 * h);
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = u.value(i, j);
            let v10 = u.value(i + 1, j);
            let v01 = u.value(i, j + 1);
            let v11 = u.value(i + 1, j + 1);
            gx.push((v10 + v11 - v00 - v01) * inv2h);
            gy.push((v01 + v11 - v00 - v10) * inv2h);
        }
    }
    CellVectorField { origin: u.origin(), h, nx_cells: nx - 1, ny_cells: ny - 1, gx, gy }
}

/// Quadrature region: ball, axis-aligned square, or annulus.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum Region {
    Ball { center: Vec2, r: f64 },
    Square { center: Vec2, half_side: f64 },
    Annulus { center: Vec2, r_in: f64, r_out: f64 },
}

/// Classification of a rectangle against a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RectClass {
    Inside,
    Outside,
    Cut,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Region::Ball { r, .. } => *r > 0.0,
            Region::Square { half_side, .. } => *half_side > 0.0,
            Region::Annulus { r_in, r_out, .. } => *r_in > 0.0 && r_in < r_out,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("degenerate region {self:?}")))
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Region::Ball { center, r } => (p - center).norm() <= r,
            Region::Square { center, half_side } => {
                (p.x - center.x).abs() <= half_side && (p.y - center.y).abs() <= half_side
            }
            Region::Annulus { center, r_in, r_out } => {
                let d = (p - center).norm();
                d >= r_in && d <= r_out
            }
        }
    }

    /// Bounding box of the region.
    pub fn bounding_rect(&self) -> Rect {
        let (c, e) = match *self {
            Region::Ball { center, r } => (center, r),
            Region::Square { center, half_side } => (center, half_side),
            Region::Annulus { center, r_out, .. } => (center, r_out),
        };
        Rect { lo: Vec2::new(c.x - e, c.y - e), hi: Vec2::new(c.x + e, c.y + e) }
    }

    fn classify_rect(&self, rect: &Rect) -> RectClass {
        match *self {
            Region::Ball { center, r } => ball_classify(center, r, rect),
            Region::Square { center, half_side } => {
                let inner = Rect {
                    lo: Vec2::new(center.x - half_side, center.y - half_side),
                    hi: Vec2::new(center.x + half_side, center.y + half_side),
                };
                if inner.contains_rect(rect) {
                    RectClass::Inside
                } else if rect.lo.x > inner.hi.x
                    || rect.hi.x < inner.lo.x
                    || rect.lo.y > inner.hi.y
                    || rect.hi.y < inner.lo.y
                {
                    RectClass::Outside
                } else {
                    RectClass::Cut
                }
            }
            Region::Annulus { center, r_in, r_out } => {
                let outer = ball_classify(center, r_out, rect);
                let inner = ball_classify(center, r_in, rect);
                match (outer, inner) {
                    // inside the outer ball and clear of the inner one
                    (RectClass::Inside, RectClass::Outside) => RectClass::Inside,
                    (RectClass::Outside, _) => RectClass::Outside,
                    (_, RectClass::Inside) => RectClass::Outside,
                    _ => RectClass::Cut,
                }
            }
        }
    }
}

/// Distance-based rectangle/ball classification (exact for convex balls).
fn ball_classify(center: Vec2, r: f64, rect: &Rect) -> RectClass {
    // closest point of rect to center
    let cx = center.x.clamp(rect.lo.x, rect.hi.x);
    let cy = center.y.clamp(rect.lo.y, rect.hi.y);
    let d_min = (Vec2::new(cx, cy) - center).norm();
    if d_min > r {
        return RectClass::Outside;
    }
    // farthest corner
    let fx = if center.x - rect.lo.x > rect.hi.x - center.x { rect.lo.x } else { rect.hi.x };
    let fy = if center.y - rect.lo.y > rect.hi.y - center.y { rect.lo.y } else { rect.hi.y };
    let d_max = (Vec2::new(fx, fy) - center).norm();
    if d_max <= r {
        RectClass::Inside
    } else {
        RectClass::Cut
    }
}

/// Cell-sum quadrature of a cellwise function over a region.
///
/// Cells cut by the region boundary are refined by 4×4 subsampling of
/// their area fraction. Relative error O(h) on smooth integrands.
pub fn region_integral(f: &CellField, region: &Region) -> Result<f64> {
    region.validate()?;
    let bbox = region.bounding_rect();
    let dom = f.domain();
    let tol = 1e-9 * f.h;
    let padded = Rect {
        lo: Vec2::new(dom.lo.x - tol, dom.lo.y - tol),
        hi: Vec2::new(dom.hi.x + tol, dom.hi.y + tol),
    };
    if !padded.contains_rect(&bbox) {
        return Err(Error::RegionOutsideGrid(format!("{region:?}")));
    }

    // restrict the loop to cells under the bounding box
    let i_lo = (((bbox.lo.x - f.origin.x) / f.h).floor().max(0.0)) as usize;
    let j_lo = (((bbox.lo.y - f.origin.y) / f.h).floor().max(0.0)) as usize;
    let i_hi = ((((bbox.hi.x - f.origin.x) / f.h).ceil()) as usize).min(f.nx_cells);
    let j_hi = ((((bbox.hi.y - f.origin.y) / f.h).ceil()) as usize).min(f.ny_cells);

    let cell_area = f.h * f.h;
    let m = CUT_CELL_SUBSAMPLES;
    let sub = 1.0 / m as f64;
    let mut total = 0.0;
    for j in j_lo..j_hi {
        for i in i_lo..i_hi {
            let rect = f.cell_rect(i, j);
            match region.classify_rect(&rect) {
                RectClass::Inside => total += f.value(i, j) * cell_area,
                RectClass::Outside => {}
                RectClass::Cut => {
                    let mut hits = 0usize;
                    for sj in 0..m {
                        for si in 0..m {
                            let p = Vec2::new(
                                rect.lo.x + (si as f64 + 0.5) * sub * f.h,
                                rect.lo.y + (sj as f64 + 0.5) * sub * f.h,
                            );
                            if region.contains(p) {
                                hits += 1;
                            }
                        }
                    }
                    total += f.value(i, j) * cell_area * hits as f64 / (m * m) as f64;
                }
            }
        }
    }
    Ok(total)
}

/// Average of `m` equally spaced samples of `u` on the circle
/// `∂B_r(x0)`, bilinearly interpolated. Error O(h²) + O(m⁻²) on smooth
/// fields.
pub fn sphere_average(u: &ScalarField2D, x0: Vec2, r: f64, m: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be > 0")));
    }
    if m < 64 {
        return Err(Error::InvalidParameter(format!("sample count {m} must be >= 64")));
    }
    let dom = u.domain();
    let pad = 1e-9 * u.spacing();
    if x0.x - r < dom.lo.x - pad
        || x0.x + r > dom.hi.x + pad
        || x0.y - r < dom.lo.y - pad
        || x0.y + r > dom.hi.y + pad
    {
        return Err(Error::CircleOutsideGrid { x: x0.x, y: x0.y, r });
    }
    let mut sum = 0.0;
    for k in 0..m {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let p = x0 + Vec2::from_angle(theta) * r;
        sum += u.interp(p)?;
    }
    Ok(sum / m as f64)
}
