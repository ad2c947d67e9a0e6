use std::collections::HashMap;

use super::{midpoint, DomainSpec, Point, SimplicialMesh};
use crate::error::{Error, Result};

/// Splits every triangle into four through its edge midpoints.
///
/// Midpoints of boundary edges are projected onto the analytic boundary of
/// `spec`; `DomainSpec::File` leaves them on the chord. New vertices are
/// appended after the old ones in order of first appearance.
pub fn subdivide_midpoint(mesh: &SimplicialMesh, spec: &DomainSpec) -> Result<SimplicialMesh> {
    if mesh.intrinsic_dim != 2 {
        return Err(Error::Unsupported(format!(
            "midpoint subdivision needs a triangle mesh (got k = {})",
            mesh.intrinsic_dim
        )));
    }
    let boundary: std::collections::HashSet<(usize, usize)> =
        mesh.boundary_cells().map(|e| edge_key(e[0], e[1])).collect();

    let mut vertices: Vec<Point> = mesh.vertices.clone();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * mesh.cell_count() / 2 + 1);
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        let key = edge_key(a, b);
        *mids.entry(key).or_insert_with(|| {
            let mut p = midpoint(&vertices[a], &vertices[b]);
            if boundary.contains(&key) {
                if let Some(q) = spec.snap_to_boundary(&p) {
                    p = q;
                }
            }
            vertices.push(p);
            vertices.len() - 1
        })
    };

    let mut cells = Vec::with_capacity(4 * mesh.cells.len());
    for c in mesh.cells() {
        let (a, b, d) = (c[0], c[1], c[2]);
        let ab = mid(a, b, &mut vertices);
        let bd = mid(b, d, &mut vertices);
        let da = mid(d, a, &mut vertices);
        cells.extend([a, ab, da, ab, b, bd, da, bd, d, ab, bd, da]);
    }
    let mut boundary_cells = Vec::with_capacity(2 * mesh.boundary_cells.len());
    for e in mesh.boundary_cells() {
        let m = mid(e[0], e[1], &mut vertices);
        boundary_cells.extend([e[0], m, m, e[1]]);
    }

    Ok(SimplicialMesh {
        ambient_dim: mesh.ambient_dim,
        intrinsic_dim: 2,
        vertices,
        cells,
        boundary_cells,
    })
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_ball_mesh, generate_disk_mesh, norm};
    use std::path::PathBuf;

    fn no_snap() -> DomainSpec {
        DomainSpec::File(PathBuf::new())
    }

    #[test]
    fn equilateral_triangle_splits_into_four_congruent() {
        let s3 = 3f64.sqrt();
        let mesh = SimplicialMesh {
            ambient_dim: 2,
            intrinsic_dim: 2,
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, s3 / 2.0, 0.0]],
            cells: vec![0, 1, 2],
            boundary_cells: vec![0, 1, 1, 2, 2, 0],
        };
        let fine = subdivide_midpoint(&mesh, &no_snap()).unwrap();
        assert_eq!(fine.vertices.len(), 6);
        assert_eq!(fine.cell_count(), 4);
        assert_eq!(fine.boundary_cell_count(), 6);
        let quarter = mesh.total_measure() / 4.0;
        for c in fine.cells() {
            assert!((fine.simplex_measure(c) - quarter).abs() < 1e-15);
        }
        fine.validate().unwrap();
    }

    #[test]
    fn unsnapped_subdivision_quarters_every_area() {
        let mesh = generate_disk_mesh(5).unwrap();
        let fine = subdivide_midpoint(&mesh, &no_snap()).unwrap();
        for (i, c) in mesh.cells().enumerate() {
            let parent = mesh.simplex_measure(c);
            for child in fine.cells().skip(4 * i).take(4) {
                let a = fine.simplex_measure(child);
                assert!((a - parent / 4.0).abs() <= 1e-12 * parent);
            }
        }
    }

    #[test]
    fn vertex_count_grows_by_edge_count() {
        let mesh = generate_disk_mesh(7).unwrap();
        // Euler characteristic of a disk: V - E + F = 1.
        let edges = mesh.vertices.len() + mesh.cell_count() - 1;
        let fine = subdivide_midpoint(&mesh, &DomainSpec::UnitDisk).unwrap();
        assert_eq!(fine.vertices.len(), mesh.vertices.len() + edges);
        fine.validate().unwrap();
    }

    #[test]
    fn snapped_boundary_stays_on_circle() {
        let mut mesh = generate_disk_mesh(4).unwrap();
        for _ in 0..3 {
            mesh = subdivide_midpoint(&mesh, &DomainSpec::UnitDisk).unwrap();
        }
        for v in mesh.boundary_vertices() {
            assert!((norm(&mesh.vertices[v]) - 1.0).abs() < 1e-12);
        }
        mesh.validate().unwrap();
    }

    #[test]
    fn nested_refinement_halves_max_edge() {
        let mut mesh = generate_disk_mesh(6).unwrap();
        let mut h = mesh.max_edge_length();
        for _ in 0..3 {
            mesh = subdivide_midpoint(&mesh, &DomainSpec::UnitDisk).unwrap();
            let h_new = mesh.max_edge_length();
            // Boundary snapping perturbs edges next to the circle by O(h^2).
            assert!((h_new - h / 2.0).abs() <= 0.02 * h, "{h_new} vs {}", h / 2.0);
            h = h_new;
        }
    }

    #[test]
    fn tetrahedral_mesh_rejected() {
        let ball = generate_ball_mesh(1).unwrap();
        assert!(matches!(
            subdivide_midpoint(&ball, &DomainSpec::UnitBall),
            Err(Error::Unsupported(_))
        ));
    }
}
