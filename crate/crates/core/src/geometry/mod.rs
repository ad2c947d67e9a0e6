//! Sampled domains: point clouds, simplicial meshes, built-in generators,
//! midpoint refinement and the ASCII file formats (OFF, TET, PTS).
//!
//! Coordinates are stored as `[f64; 3]` regardless of the ambient dimension;
//! unused trailing coordinates are zero so Euclidean distances are unaffected.

mod generate;
pub mod io;
mod subdivide;

use std::path::PathBuf;

use crate::error::{Error, Result};

pub use generate::{
    generate_ball_mesh, generate_ball_mesh_divisions, generate_circle_cloud, generate_disk_mesh, generate_two_hole_mesh,
};
pub use subdivide::subdivide_midpoint;

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

#[inline]
pub fn midpoint(a: &Point, b: &Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

/// A manifold sampled by points: `P` with boundary subset `S` (indices into
/// `P`), volume weights `V` on `P` and boundary weights `A` on `S`.
///
/// Weights are optional so that raw clouds can be loaded and estimated later.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    ambient_dim: usize,
    intrinsic_dim: usize,
    points: Vec<Point>,
    boundary: Vec<usize>,
    volume_weights: Option<Vec<f64>>,
    boundary_weights: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(ambient_dim: usize, intrinsic_dim: usize, points: Vec<Point>, boundary: Vec<usize>) -> Result<Self> {
        if !(1..=3).contains(&ambient_dim) || intrinsic_dim < 1 || intrinsic_dim > ambient_dim {
            return Err(Error::InvalidInput(format!(
                "dimensions must satisfy 1 <= k <= d <= 3 (d = {ambient_dim}, k = {intrinsic_dim})"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
            }
            if p[ambient_dim..].iter().any(|&c| c != 0.0) {
                return Err(Error::InvalidInput(format!(
                    "point {i} has coordinates beyond ambient dimension {ambient_dim}"
                )));
            }
        }
        let n = points.len();
        let mut seen = vec![false; n];
        for &b in &boundary {
            if b >= n {
                return Err(Error::InvalidInput(format!(
                    "boundary index {b} out of range (n = {n})"
                )));
            }
            if std::mem::replace(&mut seen[b], true) {
                return Err(Error::InvalidInput(format!("boundary index {b} repeated")));
            }
        }
        Ok(Self {
            ambient_dim,
            intrinsic_dim,
            points,
            boundary,
            volume_weights: None,
            boundary_weights: None,
        })
    }

    /// Attaches weights, validating lengths and signs.
    pub fn with_weights(mut self, volume: Vec<f64>, boundary: Vec<f64>) -> Result<Self> {
        self.set_weights(volume, boundary)?;
        Ok(self)
    }

    pub fn set_weights(&mut self, volume: Vec<f64>, boundary: Vec<f64>) -> Result<()> {
        if volume.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: volume.len(),
            });
        }
        if boundary.len() != self.boundary.len() {
            return Err(Error::DimensionMismatch {
                expected: self.boundary.len(),
                found: boundary.len(),
            });
        }
        if volume.iter().chain(&boundary).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        if !volume.is_empty() && volume.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("volume weights sum to zero".into()));
        }
        self.volume_weights = Some(volume);
        self.boundary_weights = Some(boundary);
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_len(&self) -> usize {
        self.boundary.len()
    }

    pub fn volume_weights(&self) -> Option<&[f64]> {
        self.volume_weights.as_deref()
    }

    pub fn boundary_weights(&self) -> Option<&[f64]> {
        self.boundary_weights.as_deref()
    }

    pub fn has_weights(&self) -> bool {
        self.volume_weights.is_some()
    }

    pub fn boundary_points(&self) -> Vec<Point> {
        self.boundary.iter().map(|&i| self.points[i]).collect()
    }

    /// Applies the same point permutation to coordinates, weights and
    /// boundary indices: new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            inverse[old] = new;
        }
        Ok(Self {
            ambient_dim: self.ambient_dim,
            intrinsic_dim: self.intrinsic_dim,
            points: perm.iter().map(|&o| self.points[o]).collect(),
            boundary: self.boundary.iter().map(|&b| inverse[b]).collect(),
            volume_weights: self
                .volume_weights
                .as_ref()
                .map(|v| perm.iter().map(|&o| v[o]).collect()),
            boundary_weights: self.boundary_weights.clone(),
        })
    }
}

/// Simplicial mesh with flat connectivity: `cells` holds `k + 1` vertex
/// indices per cell and `boundary_cells` holds `k` indices per facet.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    pub vertices: Vec<Point>,
    pub cells: Vec<usize>,
    pub boundary_cells: Vec<usize>,
}

impl SimplicialMesh {
    pub fn cell_count(&self) -> usize {
        self.cells.len() / (self.intrinsic_dim + 1)
    }

    pub fn boundary_cell_count(&self) -> usize {
        self.boundary_cells.len() / self.intrinsic_dim
    }

    pub fn cells(&self) -> std::slice::ChunksExact<'_, usize> {
        self.cells.chunks_exact(self.intrinsic_dim + 1)
    }

    pub fn boundary_cells(&self) -> std::slice::ChunksExact<'_, usize> {
        self.boundary_cells.chunks_exact(self.intrinsic_dim)
    }

    /// Unsigned measure (area or volume) of a simplex in ambient space.
    pub fn simplex_measure(&self, verts: &[usize]) -> f64 {
        simplex_measure(&self.vertices, verts)
    }

    pub fn total_measure(&self) -> f64 {
        self.cells().map(|c| self.simplex_measure(c)).sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary_cells().map(|c| self.simplex_measure(c)).sum()
    }

    /// Sorted list of vertices incident to a boundary facet.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.vertices.len()];
        for &v in &self.boundary_cells {
            on[v] = true;
        }
        (0..self.vertices.len()).filter(|&i| on[i]).collect()
    }

    /// Longest edge over all cells.
    pub fn max_edge_length(&self) -> f64 {
        let k = self.intrinsic_dim + 1;
        let mut h: f64 = 0.0;
        for c in self.cells() {
            for a in 0..k {
                for b in a + 1..k {
                    h = h.max(dist2(&self.vertices[c[a]], &self.vertices[c[b]]));
                }
            }
        }
        h.sqrt()
    }

    /// Checks index ranges, coordinate finiteness, positive cell measure and
    /// that every boundary facet is a facet of exactly one cell.
    pub fn validate(&self) -> Result<()> {
        let k = self.intrinsic_dim;
        if !(2..=3).contains(&k) || k > self.ambient_dim || self.ambient_dim > 3 {
            return Err(Error::InvalidInput(format!(
                "mesh dimensions unsupported (d = {}, k = {k})",
                self.ambient_dim
            )));
        }
        if self.cells.len() % (k + 1) != 0 || self.boundary_cells.len() % k != 0 {
            return Err(Error::InvalidInput(
                "connectivity length is not a multiple of the simplex size".into(),
            ));
        }
        let n = self.vertices.len();
        if let Some(i) = self.vertices.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidInput(format!("vertex {i} has a non-finite coordinate")));
        }
        if let Some(&bad) = self.cells.iter().chain(&self.boundary_cells).find(|&&v| v >= n) {
            return Err(Error::InvalidInput(format!(
                "vertex index {bad} out of range (n = {n})"
            )));
        }
        for (i, c) in self.cells().enumerate() {
            let m = self.simplex_measure(c);
            if !(m > degenerate_threshold(&self.vertices, c)) {
                return Err(Error::DegenerateCell { index: i, measure: m });
            }
        }
        let counts = facet_counts(self);
        for (j, f) in self.boundary_cells().enumerate() {
            let mut key = f.to_vec();
            key.sort_unstable();
            if counts.get(&key).copied().unwrap_or(0) != 1 {
                return Err(Error::InvalidInput(format!(
                    "boundary facet {j} is not a facet of exactly one cell"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn facet_counts(mesh: &SimplicialMesh) -> std::collections::HashMap<Vec<usize>, usize> {
    let k = mesh.intrinsic_dim;
    let mut counts = std::collections::HashMap::new();
    for c in mesh.cells() {
        for skip in 0..=k {
            let mut f: Vec<usize> = (0..=k).filter(|&a| a != skip).map(|a| c[a]).collect();
            f.sort_unstable();
            *counts.entry(f).or_insert(0) += 1;
        }
    }
    counts
}

/// Facets (as sorted index tuples, in first-seen order) incident to exactly one cell.
pub(crate) fn exterior_facets(mesh: &SimplicialMesh) -> Vec<usize> {
    let k = mesh.intrinsic_dim;
    let counts = facet_counts(mesh);
    let mut out = Vec::new();
    for c in mesh.cells() {
        for skip in 0..=k {
            // Triangles: cyclic order keeps boundary edges consistently oriented.
            let f: Vec<usize> = (1..=k).map(|a| c[(skip + a) % (k + 1)]).collect();
            let mut key = f.clone();
            key.sort_unstable();
            if counts[&key] == 1 {
                out.extend(f);
            }
        }
    }
    out
}

pub(crate) fn degenerate_threshold(vertices: &[Point], verts: &[usize]) -> f64 {
    let mut h2: f64 = 0.0;
    for a in 0..verts.len() {
        for b in a + 1..verts.len() {
            h2 = h2.max(dist2(&vertices[verts[a]], &vertices[verts[b]]));
        }
    }
    1e-14 * h2.powf((verts.len() - 1) as f64 / 2.0)
}

/// Unsigned measure of the simplex spanned by `verts` (1, 2 or 3 dimensional).
pub fn simplex_measure(vertices: &[Point], verts: &[usize]) -> f64 {
    let p0 = &vertices[verts[0]];
    match verts.len() {
        1 => 1.0,
        2 => norm(&sub(&vertices[verts[1]], p0)),
        3 => 0.5 * norm(&cross(&sub(&vertices[verts[1]], p0), &sub(&vertices[verts[2]], p0))),
        4 => {
            let a = sub(&vertices[verts[1]], p0);
            let b = sub(&vertices[verts[2]], p0);
            let c = sub(&vertices[verts[3]], p0);
            dot(&a, &cross(&b, &c)).abs() / 6.0
        }
        other => panic!("simplex with {other} vertices"),
    }
}

/// A circle `|x - center| = radius` in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    pub fn distance(&self, p: &Point) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        ((dx * dx + dy * dy).sqrt() - self.radius).abs()
    }

    pub fn project(&self, p: &Point) -> Point {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = (dx * dx + dy * dy).sqrt();
        [
            self.center[0] + self.radius * dx / r,
            self.center[1] + self.radius * dy / r,
            0.0,
        ]
    }

    pub fn contains(&self, p: &Point) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        dx * dx + dy * dy < self.radius * self.radius
    }
}

/// Planar disk with two circular holes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHoleSpec {
    pub outer_radius: f64,
    pub holes: [Circle; 2],
}

impl Default for TwoHoleSpec {
    fn default() -> Self {
        Self {
            outer_radius: 1.0,
            holes: [
                Circle {
                    center: [-0.4, 0.0],
                    radius: 0.2,
                },
                Circle {
                    center: [0.4, 0.0],
                    radius: 0.2,
                },
            ],
        }
    }
}

impl TwoHoleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_radius > 0.0) {
            return Err(Error::InvalidInput("outer radius must be positive".into()));
        }
        for (i, h) in self.holes.iter().enumerate() {
            if !(h.radius > 0.0) {
                return Err(Error::InvalidInput(format!("hole {i} radius must be positive")));
            }
            let c = (h.center[0].powi(2) + h.center[1].powi(2)).sqrt();
            if !(c + h.radius < self.outer_radius) {
                return Err(Error::InvalidInput(format!(
                    "hole {i} is not strictly inside the outer boundary"
                )));
            }
        }
        let [a, b] = &self.holes;
        let d = ((a.center[0] - b.center[0]).powi(2) + (a.center[1] - b.center[1]).powi(2)).sqrt();
        if !(d > a.radius + b.radius) {
            return Err(Error::InvalidInput("holes intersect".into()));
        }
        Ok(())
    }

    pub fn outer(&self) -> Circle {
        Circle {
            center: [0.0, 0.0],
            radius: self.outer_radius,
        }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * (self.outer_radius.powi(2) - self.holes[0].radius.powi(2) - self.holes[1].radius.powi(2))
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.outer().contains(p) && !self.holes.iter().any(|h| h.contains(p))
    }
}

/// Which analytic domain a mesh or cloud samples.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    UnitDisk,
    UnitBall,
    UnitCircleCurve,
    TwoHolePlanar(TwoHoleSpec),
    File(PathBuf),
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::TwoHolePlanar(s) => s.validate(),
            _ => Ok(()),
        }
    }

    /// Projects a point onto the analytic boundary nearest to it; `None` when
    /// the domain has no analytic boundary description.
    pub fn snap_to_boundary(&self, p: &Point) -> Option<Point> {
        match self {
            DomainSpec::UnitDisk | DomainSpec::UnitBall | DomainSpec::UnitCircleCurve => {
                let r = norm(p);
                Some([p[0] / r, p[1] / r, p[2] / r])
            }
            DomainSpec::TwoHolePlanar(s) => {
                let outer = s.outer();
                let best = [outer, s.holes[0], s.holes[1]]
                    .into_iter()
                    .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
                    .expect("three circles");
                Some(best.project(p))
            }
            DomainSpec::File(_) => None,
        }
    }

    /// Outward unit normal of the analytic boundary nearest to `p`.
    pub fn outward_normal(&self, p: &Point) -> Option<Point> {
        match self {
            DomainSpec::UnitDisk | DomainSpec::UnitBall => {
                let r = norm(p);
                Some([p[0] / r, p[1] / r, p[2] / r])
            }
            DomainSpec::TwoHolePlanar(s) => {
                let outer = s.outer();
                let (circle, sign) = [(outer, 1.0), (s.holes[0], -1.0), (s.holes[1], -1.0)]
                    .into_iter()
                    .min_by(|a, b| a.0.distance(p).total_cmp(&b.0.distance(p)))
                    .expect("three circles");
                let dx = p[0] - circle.center[0];
                let dy = p[1] - circle.center[1];
                let r = (dx * dx + dy * dy).sqrt();
                Some([sign * dx / r, sign * dy / r, 0.0])
            }
            DomainSpec::UnitCircleCurve | DomainSpec::File(_) => None,
        }
    }
}

/// Drops the mesh topology: vertices become the cloud, boundary-facet
/// vertices become `S`, and mesh weights fill `V` and `A`.
pub fn mesh_to_cloud(mesh: &SimplicialMesh) -> Result<PointCloud> {
    let boundary = mesh.boundary_vertices();
    let (v, a) = crate::weights::mesh_weights(mesh)?;
    PointCloud::new(mesh.ambient_dim, mesh.intrinsic_dim, mesh.vertices.clone(), boundary)?.with_weights(v, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_rejects_bad_boundary() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        assert!(PointCloud::new(2, 2, pts.clone(), vec![2]).is_err());
        assert!(PointCloud::new(2, 2, pts.clone(), vec![1, 1]).is_err());
        assert!(PointCloud::new(2, 3, pts.clone(), vec![]).is_err());
        assert!(PointCloud::new(2, 2, vec![[f64::NAN, 0.0, 0.0]], vec![]).is_err());
        assert!(PointCloud::new(2, 2, pts, vec![0]).is_ok());
    }

    #[test]
    fn weights_validated() {
        let c = PointCloud::new(2, 2, vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![0]).unwrap();
        assert!(c.clone().with_weights(vec![1.0], vec![1.0]).is_err());
        assert!(c.clone().with_weights(vec![1.0, -1.0], vec![1.0]).is_err());
        assert!(c.clone().with_weights(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(c.with_weights(vec![1.0, 1.0], vec![0.5]).is_ok());
    }

    #[test]
    fn two_hole_validation() {
        let mut s = TwoHoleSpec::default();
        assert!(s.validate().is_ok());
        s.holes[0].radius = 0.0;
        assert!(s.validate().is_err());
        let mut s = TwoHoleSpec::default();
        s.holes[1].center = [0.9, 0.0];
        assert!(s.validate().is_err());
        let mut s = TwoHoleSpec::default();
        s.holes[1].center = [-0.1, 0.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn permutation_moves_boundary_and_weights() {
        let c = PointCloud::new(1, 1, vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![2])
            .unwrap()
            .with_weights(vec![1.0, 2.0, 3.0], vec![1.0])
            .unwrap();
        let p = c.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.points()[0], [2.0, 0.0, 0.0]);
        assert_eq!(p.boundary(), &[0]);
        assert_eq!(p.volume_weights().unwrap(), &[3.0, 1.0, 2.0]);
    }
}
