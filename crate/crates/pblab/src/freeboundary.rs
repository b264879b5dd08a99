//! Free boundary extraction and geometry: Γ = ∂{u>0} as polylines, the
//! slab flatness h(x₀, r), flat/non-flat classification, and the flux
//! balance G across the interface.
//!
//! The slab of half-height h in direction ν centered at x₀ is
//! `{x : |（x − x₀)·ν| < h}`; `h_min(x₀, r, ν)` is the smallest half-height
//! containing Γ ∩ B_r(x₀) and `h(x₀, r) = inf_ν h_min` over unit
//! directions. `h(x₀, r)` is non-decreasing in r. A point is non-flat at
//! scale r when `h(x₀, r) ≥ h₀ r`.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::ProblemSpec;
use crate::error::{Error, Result};
use crate::grid::{ScalarField2D, Vec2};

/// Polyline representation of Γ = ∂{u>0}. Every vertex lies on a grid
/// cell edge where u changes sign across {u > 0}.
#[derive(Debug, Clone, Default)]
pub struct FreeBoundary {
    pub polylines: Vec<Vec<Vec2>>,
}

impl FreeBoundary {
    pub fn from_polylines(polylines: Vec<Vec<Vec2>>) -> Self {
        FreeBoundary { polylines }
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(|p| p.len() < 2)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.polylines.iter().flatten().copied()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.polylines
            .iter()
            .flat_map(|poly| poly.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn nearest_vertex(&self, p: Vec2) -> Option<Vec2> {
        self.vertices()
            .min_by(|a, b| (*a - p).norm().total_cmp(&(*b - p).norm()))
    }

    /// CSV export: `polyline,x,y` with one vertex per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "polyline,x,y")?;
        for (k, poly) in self.polylines.iter().enumerate() {
            for v in poly {
                writeln!(w, "{k},{:.12e},{:.12e}", v.x, v.y)?;
            }
        }
        Ok(())
    }
}

/// Edge identifier used to stitch marching-squares segments bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeId {
    H(usize, usize), // between nodes (i, j) and (i+1, j)
    V(usize, usize), // between nodes (i, j) and (i, j+1)
}

/// Marching-squares contour of {u > 0} with linear interpolation along
/// sign-change edges. Saddle cells are resolved by the cell-center
/// average. Empty output is allowed (single-signed fields).
pub fn extract_free_boundary(u: &ScalarField2D) -> FreeBoundary {
    let (nx, ny) = (u.nx(), u.ny());
    let inside = |i: usize, j: usize| u.value(i, j) > 0.0;
    let cross = |ua: f64, ub: f64| ua / (ua - ub);

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    let mut points: HashMap<EdgeId, Vec2> = HashMap::new();

    let mut point_on = |edge: EdgeId, u: &ScalarField2D| -> Vec2 {
        *points.entry(edge).or_insert_with(|| match edge {
            EdgeId::H(i, j) => {
                let t = cross(u.value(i, j), u.value(i + 1, j));
                let p = u.node_pos(i, j);
                Vec2::new(p.x + t * u.spacing(), p.y)
            }
            EdgeId::V(i, j) => {
                let t = cross(u.value(i, j), u.value(i, j + 1));
                let p = u.node_pos(i, j);
                Vec2::new(p.x, p.y + t * u.spacing())
            }
        })
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let mut case = 0u8;
            if inside(i, j) {
                case |= 1;
            }
            if inside(i + 1, j) {
                case |= 2;
            }
            if inside(i + 1, j + 1) {
                case |= 4;
            }
            if inside(i, j + 1) {
                case |= 8;
            }
            let bottom = EdgeId::H(i, j);
            let top = EdgeId::H(i, j + 1);
            let left = EdgeId::V(i, j);
            let right = EdgeId::V(i + 1, j);
            let mut emit = |a: EdgeId, b: EdgeId| segments.push((a, b));
            match case {
                0 | 15 => {}
                1 => emit(bottom, left),
                2 => emit(bottom, right),
                3 => emit(left, right),
                4 => emit(right, top),
                5 => {
                    let uc = 0.25
                        * (u.value(i, j)
                            + u.value(i + 1, j)
                            + u.value(i + 1, j + 1)
                            + u.value(i, j + 1));
                    if uc > 0.0 {
                        emit(bottom, right);
                        emit(top, left);
                    } else {
                        emit(bottom, left);
                        emit(right, top);
                    }
                }
                6 => emit(bottom, top),
                7 => emit(left, top),
                8 => emit(top, left),
                9 => emit(bottom, top),
                10 => {
                    let uc = 0.25
                        * (u.value(i, j)
                            + u.value(i + 1, j)
                            + u.value(i + 1, j + 1)
                            + u.value(i, j + 1));
                    if uc > 0.0 {
                        emit(bottom, left);
                        emit(right, top);
                    } else {
                        emit(bottom, right);
                        emit(top, left);
                    }
                }
                11 => emit(right, top),
                12 => emit(left, right),
                13 => emit(bottom, right),
                14 => emit(bottom, left),
                _ => unreachable!(),
            }
        }
    }

    // realize coordinates and drop degenerate segments
    let mut coords: Vec<(EdgeId, EdgeId, Vec2, Vec2)> = Vec::new();
    for (a, b) in segments {
        let pa = point_on(a, u);
        let pb = point_on(b, u);
        if (pa - pb).norm() > 0.0 {
            coords.push((a, b, pa, pb));
        }
    }
    FreeBoundary { polylines: chain_segments(coords) }
}

/// Joins segments sharing edge ids into ordered polylines.
fn chain_segments(segments: Vec<(EdgeId, EdgeId, Vec2, Vec2)>) -> Vec<Vec<Vec2>> {
    let mut adjacency: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, (a, b, _, _)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(k);
        adjacency.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    let next_unused =
        |node: EdgeId, used: &[bool], adjacency: &HashMap<EdgeId, Vec<usize>>| -> Option<usize> {
            adjacency.get(&node).and_then(|v| v.iter().copied().find(|&k| !used[k]))
        };

    // open chains first (endpoints of odd degree), then loops
    for start_pass in 0..2 {
        for k0 in 0..segments.len() {
            if used[k0] {
                continue;
            }
            let (a0, _, _, _) = segments[k0];
            if start_pass == 0 {
                let deg = adjacency[&a0].len();
                let other_deg = adjacency[&segments[k0].1].len();
                if deg != 1 && other_deg != 1 {
                    continue;
                }
            }
            // orient the first segment so the walk starts at a loose end
            let (mut node, mut pts) = if start_pass == 0 && adjacency[&segments[k0].1].len() == 1 {
                (segments[k0].0, vec![segments[k0].3, segments[k0].2])
            } else {
                (segments[k0].1, vec![segments[k0].2, segments[k0].3])
            };
            used[k0] = true;
            while let Some(k) = next_unused(node, &used, &adjacency) {
                used[k] = true;
                let (a, b, pa, pb) = segments[k];
                if a == node {
                    pts.push(pb);
                    node = b;
                } else {
                    pts.push(pa);
                    node = a;
                }
            }
            polylines.push(pts);
        }
    }
    polylines.sort_by(|a, b| {
        b.len().cmp(&a.len()).then_with(|| {
            (a[0].x, a[0].y)
                .partial_cmp(&(b[0].x, b[0].y))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    polylines
}

/// Exact supremum of `|(x − x₀)·ν|` over Γ ∩ B_r(x₀) for polyline Γ
/// (attained at segment endpoints or circle-clipping points).
pub fn slab_height(fb: &FreeBoundary, x0: Vec2, r: f64, nu: Vec2) -> Result<f64> {
    let n = nu.norm();
    if !((n - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidParameter(format!("direction norm {n} != 1")));
    }
    let mut sup: Option<f64> = None;
    for (a, b) in fb.segments() {
        if let Some((pa, pb)) = clip_segment_to_ball(a, b, x0, r) {
            let va = ((pa - x0).dot(nu)).abs();
            let vb = ((pb - x0).dot(nu)).abs();
            let m = va.max(vb);
            sup = Some(sup.map_or(m, |s: f64| s.max(m)));
        }
    }
    sup.ok_or(Error::EmptyIntersection { x: x0.x, y: x0.y, r })
}

/// Clips segment [a, b] to the closed ball B_r(x0); returns the clipped
/// endpoints, or None if the segment misses the ball.
fn clip_segment_to_ball(a: Vec2, b: Vec2, x0: Vec2, r: f64) -> Option<(Vec2, Vec2)> {
    let d = b - a;
    let f = a - x0;
    let qa = d.dot(d);
    if qa == 0.0 {
        return if f.norm() <= r { Some((a, b)) } else { None };
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t2 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t1 > t2 {
        return None;
    }
    Some((a + d * t1, a + d * t2))
}

/// Slab-flatness measurement at a point: the per-direction table, the
/// minimizing direction, and `h = inf_ν h_min`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlabFlatness {
    pub x0: Vec2,
    pub r: f64,
    /// Sampled directions and their slab heights.
    pub table: Vec<(Vec2, f64)>,
    /// Infimum over directions (after golden-section refinement).
    pub h: f64,
    pub best_nu: Vec2,
}

/// Minimizes `ν ↦ h_min(x₀, r, ν)` over `n_dirs` sampled directions in
/// the half-circle, then polishes around the best seed by golden
/// section. Accurate to about `1e-3 r` for polyline Γ.
pub fn flatness(fb: &FreeBoundary, x0: Vec2, r: f64, n_dirs: usize) -> Result<SlabFlatness> {
    if n_dirs < 64 {
        return Err(Error::InvalidParameter(format!("n_dirs = {n_dirs} must be >= 64")));
    }
    let eval = |theta: f64| -> Result<f64> { slab_height(fb, x0, r, Vec2::from_angle(theta)) };
    let mut table = Vec::with_capacity(n_dirs);
    let mut best_k = 0;
    let mut best_h = f64::INFINITY;
    for k in 0..n_dirs {
        // h_min(ν) = h_min(−ν): the half-circle suffices
        let theta = std::f64::consts::PI * k as f64 / n_dirs as f64;
        let h = eval(theta)?;
        table.push((Vec2::from_angle(theta), h));
        if h < best_h {
            best_h = h;
            best_k = k;
        }
    }
    let step = std::f64::consts::PI / n_dirs as f64;
    let mut lo = best_k as f64 * step - step;
    let mut hi = best_k as f64 * step + step;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2)?;
        }
    }
    let theta_best = 0.5 * (lo + hi);
    let h_refined = eval(theta_best)?;
    let (h, best_nu) = if h_refined < best_h {
        (h_refined, Vec2::from_angle(theta_best))
    } else {
        (best_h, table[best_k].0)
    };
    Ok(SlabFlatness { x0, r, table, h, best_nu })
}

/// Flat/non-flat dichotomy at scale r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Flat,
    NonFlat,
}

/// Non-flat iff `h(x₀, r) ≥ h₀ r`.
pub fn classify_point(fb: &FreeBoundary, x0: Vec2, r: f64, h0: f64) -> Result<PointClass> {
    if !(r > 0.0 && h0 > 0.0 && h0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need r > 0 and h0 in (0,1), got ({r}, {h0})"
        )));
    }
    let f = flatness(fb, x0, r, 64)?;
    Ok(if f.h >= h0 * r { PointClass::NonFlat } else { PointClass::Flat })
}

/// Flux balance at one sampled boundary point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FluxPoint {
    pub location: Vec2,
    /// Unit normal pointing into {u > 0}.
    pub normal: Vec2,
    /// Inward normal derivative of u⁺.
    pub alpha: f64,
    /// Inward normal derivative of u⁻.
    pub beta: f64,
    /// `G = α^p − β^p − Λ/(p−1)`.
    pub residual: f64,
}

/// Per-point flux residuals with summary quantiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxReport {
    pub points: Vec<FluxPoint>,
    pub median_residual: f64,
    pub median_abs_residual: f64,
    pub q10_residual: f64,
    pub q90_residual: f64,
}

/// Checks `G(u⁺_ν, u⁻_ν) = (u⁺_ν)^p − (u⁻_ν)^p − Λ/(p−1)` at sampled
/// boundary points. One-sided normal derivatives come from 3-point
/// offset stencils at distances {2h, 3h, 4h} along ±ν (starting at 2h to
/// avoid the interpolation kink at the interface). Corner points,
/// flagged by local flatness, are skipped.
pub fn flux_balance(
    u: &ScalarField2D,
    fb: &FreeBoundary,
    spec: &ProblemSpec,
) -> Result<FluxReport> {
    let h = u.spacing();
    let lambda = spec.big_lambda();
    let target = lambda / (spec.p - 1.0);
    let r_loc = 5.0 * h;

    let mut candidates: Vec<(Vec2, Vec2)> = Vec::new();
    for poly in &fb.polylines {
        for k in 1..poly.len().saturating_sub(1) {
            let tangent = poly[k + 1] - poly[k - 1];
            if tangent.norm() == 0.0 {
                continue;
            }
            candidates.push((poly[k], tangent.normalized().perp()));
        }
    }
    if candidates.is_empty() {
        return Err(Error::InsufficientRoom);
    }
    let stride = (candidates.len() / 256).max(1);

    let mut points = Vec::new();
    for (x0, mut nu) in candidates.into_iter().step_by(stride) {
        // skip corners: the local slab must be thin at stencil scale
        if let Ok(f) = flatness(fb, x0, r_loc, 64) {
            if f.h > 0.25 * r_loc {
                continue;
            }
        }
        // orient the normal into {u > 0}
        let probe = match u.interp(x0 + nu * (2.0 * h)) {
            Ok(v) => v,
            Err(_) => continue,
        };
        if probe < 0.0 {
            nu = nu * -1.0;
        }
        let sample = |side: f64, k: f64| u.interp(x0 + nu * (side * k * h));
        let (Ok(p2), Ok(p3), Ok(p4)) = (sample(1.0, 2.0), sample(1.0, 3.0), sample(1.0, 4.0))
        else {
            continue;
        };
        let (Ok(m2), Ok(m3), Ok(m4)) = (sample(-1.0, 2.0), sample(-1.0, 3.0), sample(-1.0, 4.0))
        else {
            continue;
        };
        let alpha = one_sided_slope(h, p2, p3, p4);
        let beta = one_sided_slope(h, -m2, -m3, -m4);
        if !(alpha > 0.0) || !(beta >= 0.0) {
            continue;
        }
        let residual = alpha.powf(spec.p) - beta.powf(spec.p) - target;
        points.push(FluxPoint { location: x0, normal: nu, alpha, beta, residual });
    }
    if points.is_empty() {
        return Err(Error::InsufficientRoom);
    }
    let quantile = |vals: &mut Vec<f64>, q: f64| -> f64 {
        vals.sort_by(f64::total_cmp);
        let idx = ((vals.len() - 1) as f64 * q).round() as usize;
        vals[idx]
    };
    let mut res: Vec<f64> = points.iter().map(|p| p.residual).collect();
    let mut abs: Vec<f64> = points.iter().map(|p| p.residual.abs()).collect();
    Ok(FluxReport {
        median_residual: quantile(&mut res.clone(), 0.5),
        median_abs_residual: quantile(&mut abs, 0.5),
        q10_residual: quantile(&mut res.clone(), 0.1),
        q90_residual: quantile(&mut res, 0.9),
        points,
    })
}

/// Derivative at t = 0 of the quadratic through (2h, y2), (3h, y3), (4h, y4).
fn one_sided_slope(h: f64, y2: f64, y3: f64, y4: f64) -> f64 {
    let a2 = (y4 - 2.0 * y3 + y2) / (2.0 * h * h);
    (y3 - y2) / h - 5.0 * h * a2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{BoundaryDatum, SquareDomain};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn field(n: usize, f: impl Fn(Vec2) -> f64) -> ScalarField2D {
        ScalarField2D::from_fn(Vec2::new(-1.0, -1.0), 2.0 / n as f64, n + 1, n + 1, f).unwrap()
    }

    #[test]
    fn vertical_line_contour() {
        let u = field(64, |p| p.x - 0.3);
        let fb = extract_free_boundary(&u);
        assert!(!fb.is_empty());
        let h = u.spacing();
        for v in fb.vertices() {
            assert!((v.x - 0.3).abs() <= h, "{v:?}");
        }
        // single chain spanning the domain
        assert_eq!(fb.polylines.len(), 1);
    }

    #[test]
    fn circle_contour() {
        let u = field(128, |p| p.x * p.x + p.y * p.y - 0.25);
        let fb = extract_free_boundary(&u);
        let h = u.spacing();
        let mut count = 0;
        for v in fb.vertices() {
            assert!((v.norm() - 0.5).abs() <= h, "{v:?}");
            count += 1;
        }
        assert!(count > 50);
    }

    #[test]
    fn negative_field_has_empty_boundary() {
        let u = field(32, |_| -1.0);
        let fb = extract_free_boundary(&u);
        assert!(fb.is_empty());
    }

    #[test]
    fn interior_positive_island_is_inside_contour() {
        // u > 0 exactly on a disk: the contour is the circle bounding {u>0}
        let u = field(96, |p| 0.09 - (p.x * p.x + p.y * p.y));
        let fb = extract_free_boundary(&u);
        assert!(!fb.is_empty());
        for v in fb.vertices() {
            assert!((v.norm() - 0.3).abs() <= u.spacing());
        }
    }

    fn line_through_origin(angle: f64) -> FreeBoundary {
        let d = Vec2::from_angle(angle);
        FreeBoundary::from_polylines(vec![vec![d * -2.0, d * -1.0, Vec2::ZERO, d * 1.0, d * 2.0]])
    }

    #[test]
    fn slab_height_of_aligned_line_is_zero() {
        let fb = line_through_origin(0.0);
        let h = slab_height(&fb, Vec2::ZERO, 1.0, Vec2::new(0.0, 1.0)).unwrap();
        assert!(h.abs() < 1e-14);
    }

    #[test]
    fn slab_height_of_rotated_direction() {
        let fb = line_through_origin(0.0);
        for theta in [0.2, 0.7, 1.3] {
            let nu = Vec2::from_angle(FRAC_PI_2 - theta);
            let h = slab_height(&fb, Vec2::ZERO, 1.0, nu).unwrap();
            let exact = theta.sin();
            assert!((h - exact).abs() < 1e-12, "theta={theta}: {h} vs {exact}");
        }
    }

    #[test]
    fn slab_height_sign_symmetric() {
        let fb = line_through_origin(0.4);
        let nu = Vec2::from_angle(1.1);
        let a = slab_height(&fb, Vec2::new(0.1, 0.05), 0.8, nu).unwrap();
        let b = slab_height(&fb, Vec2::new(0.1, 0.05), 0.8, nu * -1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slab_height_empty_intersection_errors() {
        let fb = line_through_origin(0.0);
        let err = slab_height(&fb, Vec2::new(0.0, 5.0), 0.5, Vec2::new(0.0, 1.0));
        assert!(matches!(err, Err(Error::EmptyIntersection { .. })));
    }

    fn wedge(corner: Vec2, a1: f64, a2: f64, len: f64) -> FreeBoundary {
        let r1 = Vec2::from_angle(a1);
        let r2 = Vec2::from_angle(a2);
        FreeBoundary::from_polylines(vec![vec![corner + r1 * len, corner, corner + r2 * len]])
    }

    #[test]
    fn wedge_slab_height_at_45_degrees() {
        // right-angle wedge with rays along ±45°, ν along the x-axis
        let fb = wedge(Vec2::ZERO, FRAC_PI_4, -FRAC_PI_4, 2.0);
        let r = 1.0;
        let h = slab_height(&fb, Vec2::ZERO, r, Vec2::new(1.0, 0.0)).unwrap();
        assert!((h - r / 2.0f64.sqrt()).abs() < 1e-12, "{h}");
    }

    #[test]
    fn flatness_of_straight_line() {
        let fb = line_through_origin(0.73);
        let f = flatness(&fb, Vec2::ZERO, 1.0, 64).unwrap();
        assert!(f.h < 1e-3, "{}", f.h);
        assert!(f.h <= f.table.iter().map(|t| t.1).fold(f64::INFINITY, f64::min) + 1e-15);
    }

    #[test]
    fn flatness_of_right_angle_wedge() {
        let fb = wedge(Vec2::ZERO, FRAC_PI_4, -FRAC_PI_4, 2.0);
        let r = 1.0;
        let f = flatness(&fb, Vec2::ZERO, r, 64).unwrap();
        let exact = r / 2.0f64.sqrt();
        assert!((f.h - exact).abs() < 1e-3 * r, "{} vs {exact}", f.h);
    }

    #[test]
    fn flatness_of_oscillating_graph() {
        // graph of 0.05 sin(20 x): slab height ≈ amplitude for r = 1
        let m = 400;
        let pts: Vec<Vec2> = (0..=m)
            .map(|k| {
                let x = -1.2 + 2.4 * k as f64 / m as f64;
                Vec2::new(x, 0.05 * (20.0 * x).sin())
            })
            .collect();
        let fb = FreeBoundary::from_polylines(vec![pts]);
        let f = flatness(&fb, Vec2::ZERO, 1.0, 64).unwrap();
        assert!((f.h - 0.05).abs() / 0.05 < 0.10, "{}", f.h);
    }

    #[test]
    fn flatness_rigid_motion_invariance() {
        let base = wedge(Vec2::ZERO, 0.3, -0.9, 1.5);
        let f0 = flatness(&base, Vec2::ZERO, 0.8, 64).unwrap();
        let angle = 0.6;
        let shift = Vec2::new(0.4, -0.7);
        let moved = FreeBoundary::from_polylines(
            base.polylines
                .iter()
                .map(|poly| poly.iter().map(|v| v.rotated(angle) + shift).collect())
                .collect(),
        );
        let f1 = flatness(&moved, shift, 0.8, 64).unwrap();
        assert!((f0.h - f1.h).abs() < 1e-6, "{} vs {}", f0.h, f1.h);
    }

    #[test]
    fn flatness_monotone_in_radius() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = 24;
            let pts: Vec<Vec2> = (0..=m)
                .map(|k| {
                    let x = -2.0 + 4.0 * k as f64 / m as f64;
                    Vec2::new(x, rng.gen_range(-0.5..0.5))
                })
                .collect();
            let mut fb = FreeBoundary::from_polylines(vec![pts]);
            // make sure the origin is on the polyline
            fb.polylines[0][m / 2] = Vec2::ZERO;
            let mut prev = 0.0;
            for r in [0.3, 0.6, 0.9, 1.2, 1.5] {
                let f = flatness(&fb, Vec2::ZERO, r, 64).unwrap();
                assert!(f.h >= prev - 1e-9, "h({r}) = {} < {prev}", f.h);
                assert!(f.h <= r + 1e-12);
                prev = f.h;
            }
        }
    }

    #[test]
    fn classify_line_and_wedge() {
        let line = line_through_origin(0.2);
        assert_eq!(classify_point(&line, Vec2::ZERO, 1.0, 0.5).unwrap(), PointClass::Flat);
        let w = wedge(Vec2::ZERO, FRAC_PI_4, -FRAC_PI_4, 2.0);
        assert_eq!(classify_point(&w, Vec2::ZERO, 1.0, 0.5).unwrap(), PointClass::NonFlat);
        assert_eq!(classify_point(&w, Vec2::ZERO, 1.0, 0.9).unwrap(), PointClass::Flat);
    }

    #[test]
    fn flux_balance_on_exact_two_plane() {
        // (p−1)(α^p − β^p) = Λ holds exactly for these slopes
        let p = 2.0;
        let (alpha, beta) = (2.0f64, 1.0f64);
        let lambda = (p - 1.0) * (alpha.powf(p) - beta.powf(p));
        let lp = (lambda + 1.0f64).powf(1.0 / p);
        let domain = SquareDomain { center: Vec2::ZERO, half_side: 1.0 };
        let spec = ProblemSpec::new(
            p,
            lp,
            1.0,
            domain,
            BoundaryDatum::TwoPlane { alpha, beta, angle: 0.0 },
        )
        .unwrap();
        let n = 128;
        let u = field(n, |q| alpha * q.x.max(0.0) - beta * (-q.x).max(0.0));
        let fb = extract_free_boundary(&u);
        let report = flux_balance(&u, &fb, &spec).unwrap();
        assert!(
            report.median_abs_residual < 1e-3,
            "median |G| = {}",
            report.median_abs_residual
        );

        // doubling Λ drives G negative everywhere
        let lambda2 = 2.0 * lambda;
        let spec2 = ProblemSpec::new(
            p,
            (lambda2 + 1.0f64).powf(1.0 / p),
            1.0,
            domain,
            BoundaryDatum::TwoPlane { alpha, beta, angle: 0.0 },
        )
        .unwrap();
        let report2 = flux_balance(&u, &fb, &spec2).unwrap();
        assert!(report2.points.iter().all(|pt| pt.residual < 0.0));
    }

    #[test]
    fn two_plane_with_oblique_normal() {
        let p = 2.2;
        let (alpha, beta) = (1.5f64, 0.7f64);
        let lambda = (p - 1.0) * (alpha.powf(p) - beta.powf(p));
        let angle = PI / 6.0;
        let nu = Vec2::from_angle(angle);
        let spec = ProblemSpec::new(
            p,
            (lambda + 1.0f64).powf(1.0 / p),
            1.0,
            SquareDomain { center: Vec2::ZERO, half_side: 1.0 },
            BoundaryDatum::TwoPlane { alpha, beta, angle },
        )
        .unwrap();
        let u = field(160, |q| {
            let d = q.dot(nu);
            alpha * d.max(0.0) - beta * (-d).max(0.0)
        });
        let fb = extract_free_boundary(&u);
        let report = flux_balance(&u, &fb, &spec).unwrap();
        assert!(
            report.median_abs_residual < 2e-2 * lambda,
            "median |G| = {}",
            report.median_abs_residual
        );
    }
}
