//! Deterministic structured generators for the test domains.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{cross, dot, exterior_facets, norm, sub, Circle, DomainSpec, Point, PointCloud, SimplicialMesh};
use crate::error::{Error, Result};

/// Polar triangulation of the unit disk: ring `r` carries `6r` vertices at
/// radius `r / rings`, consecutive rings are zipped by angle.
pub fn generate_disk_mesh(rings: usize) -> Result<SimplicialMesh> {
    if rings == 0 {
        return Err(Error::InvalidInput("rings must be >= 1".into()));
    }
    let mut vertices: Vec<Point> = vec![[0.0; 3]];
    let mut ring_start = vec![0usize];
    for r in 1..=rings {
        ring_start.push(vertices.len());
        let count = 6 * r;
        let radius = r as f64 / rings as f64;
        for j in 0..count {
            let a = 2.0 * PI * j as f64 / count as f64;
            let p = [radius * a.cos(), radius * a.sin(), 0.0];
            vertices.push(if r == rings { exact_unit(p) } else { p });
        }
    }
    let ring = |r: usize, j: usize| -> usize {
        if r == 0 {
            0
        } else {
            ring_start[r] + j % (6 * r)
        }
    };

    let mut cells = Vec::with_capacity(18 * rings * rings);
    for j in 0..6 {
        cells.extend([0, ring(1, j), ring(1, j + 1)]);
    }
    for r in 2..=rings {
        let ni = 6 * (r - 1);
        let no = 6 * r;
        let (mut i, mut j) = (0, 0);
        while i < ni || j < no {
            // Advance whichever ring's next vertex comes first in angle
            // (exact rational comparison of (j+1)/no and (i+1)/ni).
            let take_outer = j < no && (i >= ni || (j + 1) * ni <= (i + 1) * no);
            if take_outer {
                cells.extend([ring(r - 1, i), ring(r, j), ring(r, j + 1)]);
                j += 1;
            } else {
                cells.extend([ring(r - 1, i), ring(r, j), ring(r - 1, i + 1)]);
                i += 1;
            }
        }
    }
    let boundary_cells = (0..6 * rings)
        .flat_map(|j| [ring(rings, j), ring(rings, j + 1)])
        .collect();

    Ok(SimplicialMesh {
        ambient_dim: 2,
        intrinsic_dim: 2,
        vertices,
        cells,
        boundary_cells,
    })
}

/// Nudges a near-unit vector by a few ulps so that its computed norm is
/// exactly 1 (falls back to the input when no nearby candidate qualifies).
fn exact_unit(p: Point) -> Point {
    let step = |x: f64, k: i64| {
        let bits = x.to_bits() as i64 + k;
        f64::from_bits(bits as u64)
    };
    for k in 0..=4i64 {
        for dx in -k..=k {
            for dy in -k..=k {
                let q = [step(p[0], dx), step(p[1], dy), p[2]];
                if norm(&q) == 1.0 {
                    return q;
                }
            }
        }
    }
    p
}

/// Tetrahedral mesh of the unit ball at dyadic `resolution`: the octahedron
/// lattice gets `2^(resolution-1)` divisions per edge, so resolution 1 is the
/// bare octahedron and each step halves the mesh size.
pub fn generate_ball_mesh(resolution: usize) -> Result<SimplicialMesh> {
    if resolution == 0 || resolution > 8 {
        return Err(Error::InvalidInput("ball resolution must be in 1..=8".into()));
    }
    generate_ball_mesh_divisions(1 << (resolution - 1))
}

/// Tetrahedral mesh of the unit ball: each octant of the octahedron
/// `|x|_1 <= 1` is split into `divisions^3` tetrahedra by edgewise
/// subdivision, then lattice points are pushed radially onto the ball.
pub fn generate_ball_mesh_divisions(divisions: usize) -> Result<SimplicialMesh> {
    if divisions == 0 {
        return Err(Error::InvalidInput("divisions must be >= 1".into()));
    }
    let r = divisions as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut lattice: Vec<[i64; 3]> = Vec::new();
    let mut vertex = |q: [i64; 3]| -> usize {
        *index.entry(q).or_insert_with(|| {
            lattice.push(q);
            lattice.len() - 1
        })
    };

    // Kuhn simplices of the unit cube, one per axis permutation.
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::new();
    for signs in 0..8u32 {
        let s = [
            if signs & 1 == 0 { 1 } else { -1 },
            if signs & 2 == 0 { 1 } else { -1 },
            if signs & 4 == 0 { 1 } else { -1 },
        ];
        // Path-simplex coordinates R >= a >= b >= c >= 0 map to the octant
        // corner simplex via (s0 (a - b), s1 (b - c), s2 c).
        let to_lattice = |p: [i64; 3]| [s[0] * (p[0] - p[1]), s[1] * (p[1] - p[2]), s[2] * p[2]];
        let inside = |p: &[i64; 3]| r >= p[0] && p[0] >= p[1] && p[1] >= p[2] && p[2] >= 0;
        for a in 0..r {
            for b in 0..r {
                for c in 0..r {
                    for perm in PERMS {
                        let mut p = [a, b, c];
                        let mut simplex = [[0i64; 3]; 4];
                        simplex[0] = p;
                        for (step, &axis) in perm.iter().enumerate() {
                            p[axis] += 1;
                            simplex[step + 1] = p;
                        }
                        if !simplex.iter().all(inside) {
                            continue;
                        }
                        let mut ids = simplex.map(|q| vertex(to_lattice(q)));
                        let lat: Vec<Point> = simplex.iter().map(|&q| to_lattice(q).map(|x| x as f64)).collect();
                        let vol = dot(
                            &sub(&lat[1], &lat[0]),
                            &cross(&sub(&lat[2], &lat[0]), &sub(&lat[3], &lat[0])),
                        );
                        if vol < 0.0 {
                            ids.swap(2, 3);
                        }
                        cells.extend(ids);
                    }
                }
            }
        }
    }

    let vertices: Vec<Point> = lattice
        .iter()
        .map(|q| {
            let l1 = (q[0].abs() + q[1].abs() + q[2].abs()) as f64;
            if l1 == 0.0 {
                return [0.0; 3];
            }
            let qf = q.map(|x| x as f64);
            let l2 = dot(&qf, &qf).sqrt();
            // Radial stretch |q|_1 / |q|_2; boundary points land on the sphere.
            let scale = if q[0].abs() + q[1].abs() + q[2].abs() == r {
                1.0 / l2
            } else {
                l1 / (r as f64 * l2)
            };
            qf.map(|x| x * scale)
        })
        .collect();

    let mut mesh = SimplicialMesh {
        ambient_dim: 3,
        intrinsic_dim: 3,
        vertices,
        cells,
        boundary_cells: Vec::new(),
    };
    mesh.boundary_cells = exterior_facets(&mesh);
    orient_boundary_outward(&mut mesh);
    Ok(mesh)
}

fn orient_boundary_outward(mesh: &mut SimplicialMesh) {
    for f in mesh.boundary_cells.chunks_exact_mut(3) {
        let [a, b, c] = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        let n = cross(&sub(&b, &a), &sub(&c, &a));
        let centroid = [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
            (a[2] + b[2] + c[2]) / 3.0,
        ];
        if dot(&n, &centroid) < 0.0 {
            f.swap(1, 2);
        }
    }
}

/// Triangle mesh of a disk with two circular holes: boundary circles are
/// sampled at spacing about `target_h`, the interior by a hexagonal lattice
/// kept at least `0.6 target_h` from every boundary circle, and the points
/// are Delaunay-triangulated.
pub fn generate_two_hole_mesh(spec: &DomainSpec, target_h: f64) -> Result<SimplicialMesh> {
    let DomainSpec::TwoHolePlanar(shape) = spec else {
        return Err(Error::InvalidInput(
            "two-hole generator needs a two_hole_planar domain".into(),
        ));
    };
    shape.validate()?;
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::InvalidInput("target_h must be positive".into()));
    }
    let circles: [Circle; 3] = [shape.outer(), shape.holes[0], shape.holes[1]];
    if let Some(small) = circles.iter().find(|c| c.radius < 1.5 * target_h) {
        return Err(Error::InvalidInput(format!(
            "target_h {target_h} too coarse for a circle of radius {}",
            small.radius
        )));
    }

    let mut points: Vec<Point> = Vec::new();
    for c in &circles {
        let count = ((2.0 * PI * c.radius / target_h).ceil() as usize).max(8);
        for j in 0..count {
            let a = 2.0 * PI * j as f64 / count as f64;
            points.push([c.center[0] + c.radius * a.cos(), c.center[1] + c.radius * a.sin(), 0.0]);
        }
    }
    let dy = target_h * 3f64.sqrt() / 2.0;
    let rows = (shape.outer_radius / dy).ceil() as i64;
    let cols = (shape.outer_radius / target_h).ceil() as i64 + 1;
    for jy in -rows..=rows {
        let shift = if jy.rem_euclid(2) == 1 { 0.5 * target_h } else { 0.0 };
        for ix in -cols..=cols {
            let p = [ix as f64 * target_h + shift, jy as f64 * dy, 0.0];
            if shape.contains(&p) && circles.iter().all(|c| c.distance(&p) >= 0.6 * target_h) {
                points.push(p);
            }
        }
    }

    let input: Vec<delaunator::Point> = points.iter().map(|p| delaunator::Point { x: p[0], y: p[1] }).collect();
    let tri = delaunator::triangulate(&input);
    let mut cells = Vec::with_capacity(tri.triangles.len());
    for t in tri.triangles.chunks_exact(3) {
        let [a, b, c] = [points[t[0]], points[t[1]], points[t[2]]];
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, 0.0];
        if !shape.contains(&centroid) {
            continue;
        }
        let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area2 > 0.0 {
            cells.extend([t[0], t[1], t[2]]);
        } else {
            cells.extend([t[0], t[2], t[1]]);
        }
    }

    // Drop any point no kept triangle references.
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    for v in cells.iter_mut() {
        if remap[*v] == usize::MAX {
            remap[*v] = vertices.len();
            vertices.push(points[*v]);
        }
        *v = remap[*v];
    }
    let mut mesh = SimplicialMesh {
        ambient_dim: 2,
        intrinsic_dim: 2,
        vertices,
        cells,
        boundary_cells: Vec::new(),
    };
    mesh.boundary_cells = exterior_facets(&mesh);
    Ok(mesh)
}

/// `n` equally spaced points on the unit circle (a closed curve, k = 1).
pub fn generate_circle_cloud(n: usize) -> Result<PointCloud> {
    if n < 3 {
        return Err(Error::InvalidInput("need at least 3 points on the circle".into()));
    }
    let points = (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            [a.cos(), a.sin(), 0.0]
        })
        .collect();
    PointCloud::new(2, 1, points, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{norm, TwoHoleSpec};

    #[test]
    fn disk_single_ring_is_hexagonal_fan() {
        let m = generate_disk_mesh(1).unwrap();
        assert_eq!(m.vertices.len(), 7);
        assert_eq!(m.cell_count(), 6);
        assert_eq!(m.boundary_cell_count(), 6);
        m.validate().unwrap();
    }

    #[test]
    fn disk_counts_and_boundary_radius() {
        let m = generate_disk_mesh(10).unwrap();
        assert_eq!(m.vertices.len(), 331);
        assert_eq!(m.cell_count(), 600);
        for v in m.boundary_vertices() {
            assert_eq!((norm(&m.vertices[v]) - 1.0).abs(), 0.0);
        }
        m.validate().unwrap();
    }

    #[test]
    fn disk_area_equals_inscribed_polygon() {
        let rings = 15;
        let m = generate_disk_mesh(rings).unwrap();
        assert_eq!(m.vertices.len(), 721);
        // Outer ring is a regular 6R-gon; interior rings only re-tile it.
        let n = 6.0 * rings as f64;
        let polygon = 0.5 * n * (2.0 * PI / n).sin();
        let a = PI / (6.0 * rings as f64);
        let alt = 6.0 * rings as f64 * a.sin() * a.cos();
        assert!((polygon - alt).abs() < 1e-12);
        let area = m.total_measure();
        assert!((area - polygon).abs() < 1e-12, "{area} vs {polygon}");
        assert!(area < PI);
    }

    #[test]
    fn disk_cells_positively_oriented() {
        let m = generate_disk_mesh(6).unwrap();
        for c in m.cells() {
            let [a, b, d] = [m.vertices[c[0]], m.vertices[c[1]], m.vertices[c[2]]];
            assert!(cross(&sub(&b, &a), &sub(&d, &a))[2] > 0.0);
        }
    }

    #[test]
    fn ball_resolution_one_is_octahedron() {
        let m = generate_ball_mesh(1).unwrap();
        assert_eq!(m.vertices.len(), 7);
        assert_eq!(m.cell_count(), 8);
        assert_eq!(m.boundary_cell_count(), 8);
        m.validate().unwrap();
    }

    #[test]
    fn ball_boundary_on_sphere_and_volume() {
        for res in [2, 3, 4, 6] {
            let m = generate_ball_mesh_divisions(res).unwrap();
            m.validate().unwrap();
            assert_eq!(m.cell_count(), 8 * res * res * res);
            for v in m.boundary_vertices() {
                assert!((norm(&m.vertices[v]) - 1.0).abs() < 1e-12);
            }
            let expected_vertices = (2 * res + 1) * (2 * res * res + 2 * res + 3) / 3;
            assert_eq!(m.vertices.len(), expected_vertices);
        }
        let m = generate_ball_mesh(4).unwrap();
        assert_eq!(m.cell_count(), 8 * 8 * 8 * 8);
        let vol = m.total_measure();
        let exact = 4.0 * PI / 3.0;
        assert!((vol - exact).abs() / exact < 0.05, "{vol}");
    }

    #[test]
    fn ball_cells_positively_oriented() {
        let m = generate_ball_mesh_divisions(5).unwrap();
        for c in m.cells() {
            let p: Vec<Point> = c.iter().map(|&i| m.vertices[i]).collect();
            let v = dot(&sub(&p[1], &p[0]), &cross(&sub(&p[2], &p[0]), &sub(&p[3], &p[0])));
            assert!(v > 0.0);
        }
    }

    #[test]
    fn two_hole_area_and_loops() {
        let spec = DomainSpec::TwoHolePlanar(TwoHoleSpec::default());
        let m = generate_two_hole_mesh(&spec, 0.05).unwrap();
        m.validate().unwrap();
        let exact = PI - 2.0 * PI * 0.04;
        assert!((m.total_measure() - exact).abs() / exact < 0.05);
        assert_eq!(boundary_loops(&m), 3);
        for v in m.boundary_vertices() {
            let p = &m.vertices[v];
            let d = spec_distance(&spec, p);
            assert!(d < 1e-12, "boundary vertex off its circle by {d}");
        }
    }

    #[test]
    fn two_hole_rejects_zero_radius() {
        let mut s = TwoHoleSpec::default();
        s.holes[0].radius = 0.0;
        assert!(generate_two_hole_mesh(&DomainSpec::TwoHolePlanar(s), 0.1).is_err());
        assert!(generate_two_hole_mesh(&DomainSpec::UnitDisk, 0.1).is_err());
    }

    fn spec_distance(spec: &DomainSpec, p: &Point) -> f64 {
        let q = spec.snap_to_boundary(p).unwrap();
        norm(&sub(p, &q))
    }

    pub(crate) fn boundary_loops(m: &SimplicialMesh) -> usize {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in m.boundary_cells() {
            assert!(next.insert(e[0], e[1]).is_none(), "vertex starts two boundary edges");
        }
        let mut seen = std::collections::HashSet::new();
        let mut loops = 0;
        for &start in next.keys() {
            if seen.contains(&start) {
                continue;
            }
            loops += 1;
            let mut v = start;
            loop {
                seen.insert(v);
                v = next[&v];
                if v == start {
                    break;
                }
            }
        }
        loops
    }
}
