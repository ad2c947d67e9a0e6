//! Quadrature weights: `V` on the sampled manifold and `A` on its boundary.
//!
//! Mesh weights distribute each simplex's measure equally to its vertices.
//! Point-cloud weights use the Voronoi cell of each point among its
//! neighbours, projected onto a locally fitted tangent space.

mod polygon;

use faer::{Mat, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{degenerate_threshold, dot, sub, Point, SimplicialMesh};
use crate::spatial::GridIndex;

/// Mesh weights `(V, A)`: `V_i = Σ vol(c)/(k+1)` over cells containing `i`,
/// `A_j = Σ vol(f)/k` over boundary facets containing the `j`-th boundary
/// vertex (boundary vertices in ascending index order).
pub fn mesh_weights(mesh: &SimplicialMesh) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = mesh.intrinsic_dim;
    let mut volume = vec![0.0; mesh.vertices.len()];
    for (i, c) in mesh.cells().enumerate() {
        let m = mesh.simplex_measure(c);
        if !(m > degenerate_threshold(&mesh.vertices, c)) {
            return Err(Error::DegenerateCell { index: i, measure: m });
        }
        for &v in c {
            volume[v] += m / (k + 1) as f64;
        }
    }
    let boundary = mesh.boundary_vertices();
    let mut slot = vec![usize::MAX; mesh.vertices.len()];
    for (j, &v) in boundary.iter().enumerate() {
        slot[v] = j;
    }
    let mut area = vec![0.0; boundary.len()];
    for f in mesh.boundary_cells() {
        let m = mesh.simplex_measure(f);
        for &v in f {
            area[slot[v]] += m / k as f64;
        }
    }
    Ok((volume, area))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TangentFit {
    Uniform,
    /// Neighbour `q` of `p` weighted by `exp(-|p-q|² / (factor·δ)²)`.
    Gaussian {
        bandwidth_factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightEstimateConfig {
    /// Neighbours used for δ and for the Voronoi neighbourhood.
    pub nn_count: usize,
    /// Neighbour count when estimating `A` on the boundary sample.
    pub boundary_nn_count: usize,
    pub tangent_fit: TangentFit,
    /// Clip every cell to the convex hull of its projected neighbourhood
    /// (points within 2δ of the boundary are always clipped).
    pub boundary_clip: bool,
}

impl WeightEstimateConfig {
    pub fn for_dim(k: usize) -> Self {
        Self {
            nn_count: if k >= 3 { 15 } else { 10 },
            boundary_nn_count: 4,
            tangent_fit: TangentFit::Gaussian { bandwidth_factor: 1.0 },
            boundary_clip: false,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.nn_count < k + 1 {
            return Err(Error::Config(format!("nn_count must be at least k + 1 = {}", k + 1)));
        }
        if self.boundary_nn_count < 2 {
            return Err(Error::Config("boundary_nn_count must be at least 2".into()));
        }
        if let TangentFit::Gaussian { bandwidth_factor } = self.tangent_fit {
            if !(bandwidth_factor > 0.0 && bandwidth_factor.is_finite()) {
                return Err(Error::Config("tangent-fit bandwidth factor must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightEstimate {
    pub volume: Vec<f64>,
    pub boundary: Vec<f64>,
    /// Mean over points of the mean distance to the `nn_count` nearest neighbours.
    pub delta: f64,
}

fn grid_for(points: &[Point], k: usize, nn: usize) -> GridIndex {
    GridIndex::new(points, GridIndex::suggested_cell(points, k, nn as f64))
}

/// δ: mean over points of the mean distance to their `nn` nearest neighbours.
pub fn average_neighbor_distance(points: &[Point], k: usize, nn: usize) -> Result<f64> {
    if points.len() <= nn {
        return Err(Error::InvalidInput(format!(
            "need more than {nn} points to measure neighbour distances (got {})",
            points.len()
        )));
    }
    let grid = grid_for(points, k, nn);
    Ok(neighbor_means(points, &grid, nn).iter().sum::<f64>() / points.len() as f64)
}

fn neighbor_means(points: &[Point], grid: &GridIndex, nn: usize) -> Vec<f64> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let nb = grid.nearest(p, nn, Some(i));
            nb.iter().map(|e| e.1).sum::<f64>() / nb.len() as f64
        })
        .collect()
}

/// Estimates `V` (and `A` on the boundary sample) from raw points.
///
/// Supports curves (`k = 1`) and surfaces or planar regions (`k = 2`).
pub fn estimate_weights(
    points: &[Point],
    boundary: &[usize],
    k: usize,
    cfg: &WeightEstimateConfig,
) -> Result<WeightEstimate> {
    if !(1..=2).contains(&k) {
        return Err(Error::Unsupported(format!(
            "point-based weight estimation supports k = 1 or 2 (got k = {k}); use mesh weights"
        )));
    }
    cfg.validate(k)?;
    if points.len() <= cfg.nn_count {
        return Err(Error::InvalidInput(format!(
            "need at least {} points for nn_count = {} (got {})",
            cfg.nn_count + 1,
            cfg.nn_count,
            points.len()
        )));
    }
    let d = ambient_dim(points);
    let grid = grid_for(points, k, cfg.nn_count);
    let means = neighbor_means(points, &grid, cfg.nn_count);
    let delta = means.iter().sum::<f64>() / points.len() as f64;

    let boundary_pts: Vec<Point> = boundary.iter().map(|&i| points[i]).collect();
    let boundary_grid = (!boundary_pts.is_empty()).then(|| grid_for(&boundary_pts, k.saturating_sub(1).max(1), 4));

    let volume = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = &points[i];
            let near_boundary = boundary_grid
                .as_ref()
                .is_some_and(|g| g.nearest(p, 1, None).first().is_some_and(|e| e.1 <= 2.0 * delta));
            let mut nb = Vec::new();
            grid.within_radius(p, delta, &mut nb);
            nb.retain(|&j| j != i);
            if nb.len() < cfg.nn_count {
                nb = grid
                    .nearest(p, cfg.nn_count, Some(i))
                    .into_iter()
                    .map(|e| e.0)
                    .collect();
                nb.sort_unstable();
            }
            let offsets: Vec<Point> = nb.iter().map(|&j| sub(&points[j], p)).collect();
            let basis = tangent_basis(&offsets, d, k, delta, cfg.tangent_fit)
                .ok_or(Error::DegenerateTangentFit { point: i })?;
            let proj: Vec<[f64; 2]> = offsets
                .iter()
                .map(|q| [dot(q, &basis[0]), if k == 2 { dot(q, &basis[1]) } else { 0.0 }])
                .collect();
            let clip = cfg.boundary_clip || near_boundary;
            if k == 1 {
                Ok(cell_length(&proj, clip))
            } else {
                cell_area(&proj, clip).ok_or(Error::DegenerateTangentFit { point: i })
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let boundary_weights = match (k, boundary.len()) {
        (_, 0) => Vec::new(),
        (1, m) => vec![1.0; m],
        _ => {
            let sub_cfg = WeightEstimateConfig {
                nn_count: cfg.boundary_nn_count,
                ..cfg.clone()
            };
            estimate_weights(&boundary_pts, &[], k - 1, &sub_cfg)?.volume
        }
    };
    Ok(WeightEstimate {
        volume,
        boundary: boundary_weights,
        delta,
    })
}

fn ambient_dim(points: &[Point]) -> usize {
    if points.iter().any(|p| p[2] != 0.0) {
        3
    } else if points.iter().any(|p| p[1] != 0.0) {
        2
    } else {
        1
    }
}

/// Orthonormal tangent directions from the weighted second-moment matrix of
/// the neighbour offsets; `None` when the neighbourhood has rank below `k`.
fn tangent_basis(offsets: &[Point], d: usize, k: usize, delta: f64, fit: TangentFit) -> Option<Vec<Point>> {
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if k >= d {
        return Some(axes[..k].to_vec());
    }
    let weight = |q: &Point| match fit {
        TangentFit::Uniform => 1.0,
        TangentFit::Gaussian { bandwidth_factor } => {
            let h = bandwidth_factor * delta;
            (-dot(q, q) / (h * h)).exp()
        }
    };
    let m = Mat::<f64>::from_fn(d, d, |a, b| offsets.iter().map(|q| weight(q) * q[a] * q[b]).sum());
    let evd = m.self_adjoint_eigen(Side::Lower).ok()?;
    let s = evd.S().column_vector();
    let top = s[d - 1];
    if !(top > 0.0) || s[d - k] <= 1e-10 * top {
        return None;
    }
    let u = evd.U();
    Some(
        (0..k)
            .map(|c| {
                let col = d - 1 - c;
                let mut e = [0.0; 3];
                for (r, x) in e.iter_mut().enumerate().take(d) {
                    *x = u[(r, col)];
                }
                e
            })
            .collect(),
    )
}

/// Length of the 1-D Voronoi cell of the origin; a side without neighbours
/// contributes nothing (the cell is clipped to the neighbourhood hull).
fn cell_length(proj: &[[f64; 2]], clip: bool) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut min, mut max) = (0.0f64, 0.0f64);
    for q in proj {
        let s = q[0];
        if s < 0.0 {
            lo = lo.max(s / 2.0);
        } else if s > 0.0 {
            hi = hi.min(s / 2.0);
        }
        min = min.min(s);
        max = max.max(s);
    }
    if clip || lo.is_infinite() || hi.is_infinite() {
        lo = lo.max(min);
        hi = hi.min(max);
    }
    hi - lo
}

/// Area of the planar Voronoi cell of the origin among `proj`, intersected
/// with the neighbourhood's convex hull when clipping is requested or the
/// cell is unbounded.
fn cell_area(proj: &[[f64; 2]], clip: bool) -> Option<f64> {
    let reach = proj.iter().map(|q| q[0].abs().max(q[1].abs())).fold(0.0, f64::max);
    if !(reach > 0.0) {
        return None;
    }
    let big = 4.0 * reach;
    let mut cell = vec![[-big, -big], [big, -big], [big, big], [-big, big]];
    for q in proj {
        let r2 = q[0] * q[0] + q[1] * q[1];
        if r2 > 0.0 {
            cell = polygon::clip(&cell, *q, r2 / 2.0);
        }
    }
    let unbounded = cell.iter().any(|v| v[0].abs().max(v[1].abs()) >= big * (1.0 - 1e-9));
    if clip || unbounded {
        let mut pts = proj.to_vec();
        pts.push([0.0, 0.0]);
        let hull = polygon::convex_hull(&pts);
        if hull.len() < 3 || polygon::area(&hull) <= 0.0 {
            return None;
        }
        cell = polygon::intersect_convex(&cell, &hull);
    }
    Some(polygon::area(&cell).max(0.0))
}
