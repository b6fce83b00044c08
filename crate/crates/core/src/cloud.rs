//! Nearest-neighbour queries and symmetric point-cloud distance.

use std::collections::HashMap;

/// Uniform-grid nearest-neighbour index over `D`-dimensional points.
pub struct NearestIndex<'a, const D: usize> {
    points: &'a [[f64; D]],
    cell: f64,
    buckets: HashMap<[i64; D], Vec<usize>>,
    lo: [i64; D],
    hi: [i64; D],
}

impl<'a, const D: usize> NearestIndex<'a, D> {
    pub fn new(points: &'a [[f64; D]]) -> Self {
        let mut min = [f64::INFINITY; D];
        let mut max = [f64::NEG_INFINITY; D];
        for p in points {
            for k in 0..D {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        let span = (0..D).map(|k| max[k] - min[k]).fold(0.0, f64::max).max(1e-12);
        let volume: f64 = (0..D).map(|k| (max[k] - min[k]).max(1e-3 * span)).product();
        let n = points.len().max(1) as f64;
        // about two points per occupied cell for uniformly spread data
        let mut cell = (2.0 * volume / n).powf(1.0 / D as f64);
        if !(cell.is_finite() && cell > 0.0) {
            cell = 1.0;
        }
        let mut buckets: HashMap<[i64; D], Vec<usize>> = HashMap::new();
        let mut lo = [i64::MAX; D];
        let mut hi = [i64::MIN; D];
        for (i, p) in points.iter().enumerate() {
            let key = Self::key_for(cell, p);
            for k in 0..D {
                lo[k] = lo[k].min(key[k]);
                hi[k] = hi[k].max(key[k]);
            }
            buckets.entry(key).or_default().push(i);
        }
        NearestIndex {
            points,
            cell,
            buckets,
            lo,
            hi,
        }
    }

    fn key_for(cell: f64, p: &[f64; D]) -> [i64; D] {
        let mut key = [0i64; D];
        for k in 0..D {
            key[k] = (p[k] / cell).floor() as i64;
        }
        key
    }

    /// Distance from `q` to its nearest indexed point (`inf` when empty).
    pub fn nearest_distance(&self, q: &[f64; D]) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let center = Self::key_for(self.cell, q);
        let mut best2 = f64::INFINITY;
        // rings beyond this radius cannot contain any bucket
        let mut max_ring = 0i64;
        for k in 0..D {
            max_ring = max_ring
                .max((center[k] - self.lo[k]).abs())
                .max((self.hi[k] - center[k]).abs());
        }
        for ring in 0..=max_ring {
            if (2 * ring + 1).pow(D as u32) as usize > 4 * self.points.len() {
                // wider shells cost more than a full scan
                for p in self.points {
                    let d2: f64 = (0..D).map(|k| (p[k] - q[k]).powi(2)).sum();
                    best2 = best2.min(d2);
                }
                break;
            }
            // any point in ring r is at least (r - 1) cells away
            let ring_lower = (ring - 1).max(0) as f64 * self.cell;
            if ring_lower * ring_lower > best2 {
                break;
            }
            self.visit_shell(&center, ring, &mut |idx| {
                let p = &self.points[idx];
                let d2: f64 = (0..D).map(|k| (p[k] - q[k]).powi(2)).sum();
                if d2 < best2 {
                    best2 = d2;
                }
            });
        }
        best2.sqrt()
    }

    fn visit_shell(&self, center: &[i64; D], ring: i64, f: &mut impl FnMut(usize)) {
        let mut offset = [-ring; D];
        loop {
            if offset.iter().any(|o| o.abs() == ring) {
                let mut key = *center;
                for k in 0..D {
                    key[k] += offset[k];
                }
                if let Some(ids) = self.buckets.get(&key) {
                    for &i in ids {
                        f(i);
                    }
                }
            }
            // odometer increment over [-ring, ring]^D
            let mut k = 0;
            loop {
                if k == D {
                    return;
                }
                offset[k] += 1;
                if offset[k] > ring {
                    offset[k] = -ring;
                    k += 1;
                } else {
                    break;
                }
            }
        }
    }
}

/// Mean distance from each point of `from` to its nearest neighbour in `to`.
pub fn mean_nearest_distance<const D: usize>(from: &[[f64; D]], to: &[[f64; D]]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    let index = NearestIndex::new(to);
    from.iter().map(|p| index.nearest_distance(p)).sum::<f64>() / from.len() as f64
}

/// Symmetric mean nearest-neighbour distance. Zero for identical clouds,
/// infinite when exactly one cloud is empty.
pub fn cloud_distance<const D: usize>(a: &[[f64; D]], b: &[[f64; D]]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => 0.5 * (mean_nearest_distance(a, b) + mean_nearest_distance(b, a)),
    }
}
