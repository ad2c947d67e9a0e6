//! Small convex-polygon toolkit for planar Voronoi cells.

pub type P2 = [f64; 2];

/// Keeps the part of a convex polygon with `n·x <= c`.
pub fn clip(poly: &[P2], n: P2, c: f64) -> Vec<P2> {
    let side = |p: &P2| n[0] * p[0] + n[1] * p[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(&a), side(&b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let s = sa / (sa - sb);
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

/// Shoelace area (positive for counter-clockwise input).
pub fn area(poly: &[P2]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

fn turn(o: &P2, a: &P2, b: &P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<P2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &P2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Intersection of two convex polygons; `hull` must be counter-clockwise.
pub fn intersect_convex(poly: &[P2], hull: &[P2]) -> Vec<P2> {
    let mut out = poly.to_vec();
    for i in 0..hull.len() {
        if out.is_empty() {
            break;
        }
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        // Interior is to the left of a→b: keep (b-a)×(x-a) >= 0.
        let n = [b[1] - a[1], a[0] - b[0]];
        out = clip(&out, n, n[0] * a[0] + n[1] * a[1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_clipped_in_half() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let half = clip(&sq, [1.0, 0.0], 0.5);
        assert!((area(&half) - 0.5).abs() < 1e-15);
        let diag = clip(&sq, [1.0, 1.0], 1.0);
        assert!((area(&diag) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, 1.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((area(&h) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn intersection_of_offset_squares() {
        let a = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        assert!((area(&intersect_convex(&a, &b)) - 1.0).abs() < 1e-15);
    }
}
