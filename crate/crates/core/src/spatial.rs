//! Uniform bucket grid for fixed-radius and k-nearest queries in d ≤ 3.

use std::collections::HashMap;

use crate::geometry::{dist2, Point};

type Key = [i64; 3];

#[derive(Debug, Clone)]
pub struct GridIndex {
    cell: f64,
    points: Vec<Point>,
    /// Point indices grouped by bucket, ascending within each bucket.
    order: Vec<usize>,
    buckets: HashMap<Key, (usize, usize)>,
    key_lo: Key,
    key_hi: Key,
}

impl GridIndex {
    /// Builds the grid with buckets of edge `cell` (must be positive).
    pub fn new(points: &[Point], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        let key = |p: &Point| -> Key { [0, 1, 2].map(|c| (p[c] / cell).floor() as i64) };
        let mut order: Vec<usize> = (0..points.len()).collect();
        let keys: Vec<Key> = points.iter().map(key).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
        let mut buckets = HashMap::new();
        let mut key_lo = [i64::MAX; 3];
        let mut key_hi = [i64::MIN; 3];
        for k in &keys {
            for c in 0..3 {
                key_lo[c] = key_lo[c].min(k[c]);
                key_hi[c] = key_hi[c].max(k[c]);
            }
        }
        let mut start = 0;
        while start < order.len() {
            let k = keys[order[start]];
            let mut end = start + 1;
            while end < order.len() && keys[order[end]] == k {
                end += 1;
            }
            buckets.insert(k, (start, end));
            start = end;
        }
        Self {
            cell,
            points: points.to_vec(),
            order,
            buckets,
            key_lo,
            key_hi,
        }
    }

    /// Cell size giving roughly `per_cell` points per bucket for a `k`-dimensional
    /// sampling of the bounding box of `points`.
    pub fn suggested_cell(points: &[Point], k: usize, per_cell: f64) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for c in 0..3 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let extent = (0..3).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
        if !(extent > 0.0) {
            return 1.0;
        }
        let n = points.len().max(1) as f64;
        extent * (per_cell / n).min(1.0).powf(1.0 / k.max(1) as f64)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn visit_cube(&self, q: &Point, reach: i64, mut f: impl FnMut(usize)) {
        let base: Key = [0, 1, 2].map(|c| (q[c] / self.cell).floor() as i64);
        let lo: Key = [0, 1, 2].map(|c| (base[c] - reach).max(self.key_lo[c]));
        let hi: Key = [0, 1, 2].map(|c| (base[c] + reach).min(self.key_hi[c]));
        if (0..3).any(|c| lo[c] > hi[c]) {
            return;
        }
        let cube: i64 = (0..3).map(|c| hi[c] - lo[c] + 1).product();
        if cube as usize > self.buckets.len() {
            // Cheaper to walk the occupied buckets than the empty cube.
            let mut hits: Vec<&(usize, usize)> = self
                .buckets
                .iter()
                .filter(|(k, _)| (0..3).all(|c| lo[c] <= k[c] && k[c] <= hi[c]))
                .map(|(_, r)| r)
                .collect();
            hits.sort_unstable();
            for &(s, e) in hits {
                self.order[s..e].iter().for_each(|&i| f(i));
            }
            return;
        }
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    if let Some(&(s, e)) = self.buckets.get(&[x, y, z]) {
                        self.order[s..e].iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }

    /// Indices with `|p - q| <= radius`, ascending.
    pub fn within_radius(&self, q: &Point, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        self.visit_cube(q, reach, |i| {
            if dist2(&self.points[i], q) <= r2 {
                out.push(i);
            }
        });
        out.sort_unstable();
    }

    /// The `k` nearest points to `q` (ties broken by index), nearest first,
    /// skipping `exclude`. Returns fewer when the index holds fewer points.
    pub fn nearest(&self, q: &Point, k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let available = self.points.len() - usize::from(exclude.is_some_and(|e| e < self.points.len()));
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let mut reach = 1i64;
        let mut found: Vec<(usize, f64)> = Vec::new();
        loop {
            found.clear();
            self.visit_cube(q, reach, |i| {
                if Some(i) != exclude {
                    found.push((i, dist2(&self.points[i], q)));
                }
            });
            // Everything within `reach * cell` of q lies in the scanned cube.
            let safe = (reach as f64 * self.cell).powi(2);
            let inside = found.iter().filter(|&&(_, d)| d <= safe).count();
            if inside >= k || found.len() == available {
                break;
            }
            reach *= 2;
        }
        found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        found.truncate(k);
        found.iter_mut().for_each(|e| e.1 = e.1.sqrt());
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_radius(points: &[Point], q: &Point, r: f64) -> Vec<usize> {
        (0..points.len()).filter(|&i| dist2(&points[i], q) <= r * r).collect()
    }

    proptest! {
        #[test]
        fn radius_query_matches_brute_force(
            coords in prop::collection::vec(-1.0f64..1.0, 3..300),
            r in 0.01f64..0.8,
            cell in 0.05f64..0.5,
        ) {
            let pts: Vec<Point> = coords.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            let grid = GridIndex::new(&pts, cell);
            let mut out = Vec::new();
            for q in pts.iter().take(10) {
                grid.within_radius(q, r, &mut out);
                prop_assert_eq!(&out, &brute_radius(&pts, q, r));
            }
        }

        #[test]
        fn nearest_matches_brute_force(
            coords in prop::collection::vec(-1.0f64..1.0, 6..200),
            k in 1usize..12,
        ) {
            let pts: Vec<Point> = coords.chunks_exact(2).map(|c| [c[0], c[1], 0.0]).collect();
            let grid = GridIndex::new(&pts, 0.1);
            for (qi, q) in pts.iter().enumerate().take(10) {
                let got = grid.nearest(q, k, Some(qi));
                let mut all: Vec<(usize, f64)> = (0..pts.len())
                    .filter(|&i| i != qi)
                    .map(|i| (i, dist2(&pts[i], q)))
                    .collect();
                all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                all.truncate(k);
                prop_assert_eq!(got.iter().map(|e| e.0).collect::<Vec<_>>(), all.iter().map(|e| e.0).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn nearest_with_tiny_cloud() {
        let pts = vec![[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]];
        let grid = GridIndex::new(&pts, 0.01);
        let got = grid.nearest(&pts[0], 4, Some(0));
        assert_eq!(got, vec![(1, 5.0)]);
    }
}
