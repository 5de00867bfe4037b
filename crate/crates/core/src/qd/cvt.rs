//! Centroidal Voronoi tessellation of the unit square.
//!
//! Centroids come from Lloyd's k-means over a uniform point cloud with
//! k-means++ seeding. Nearest-centroid queries go through a uniform bucket
//! grid; ties are broken towards the lowest centroid index so cell
//! assignment is fully deterministic.

use rand::Rng;

use crate::{Behaviour, Error, Result, SplitRng};

/// Points per centroid in the k-means input cloud.
pub const CVT_SAMPLES_PER_CELL: usize = 50;
/// Upper limit on the k-means input cloud.
pub const CVT_MAX_SAMPLES: usize = 500_000;
pub const CVT_MAX_ITER: usize = 100;
pub const CVT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Centroids {
    points: Vec<[f64; 2]>,
    index: GridIndex,
}

impl Centroids {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("need at least one centroid".into()));
        }
        if points
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidArgument("centroids must lie in [0,1]^2".into()));
        }
        let index = GridIndex::build(&points);
        Ok(Self { points, index })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Cell whose centroid is nearest to `b` (lowest index on ties).
    pub fn nearest(&self, b: &Behaviour) -> usize {
        self.index.nearest(&self.points, b.values())
    }
}

pub fn nearest_centroid(b: &Behaviour, centroids: &Centroids) -> usize {
    centroids.nearest(b)
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Uniform bucket grid over the unit square.
#[derive(Clone, Debug, PartialEq)]
struct GridIndex {
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl GridIndex {
    fn build(points: &[[f64; 2]]) -> Self {
        let side = ((points.len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); side * side];
        for (i, p) in points.iter().enumerate() {
            let (cx, cy) = Self::cell_of(side, *p);
            buckets[cy * side + cx].push(i as u32);
        }
        Self { side, buckets }
    }

    fn cell_of(side: usize, p: [f64; 2]) -> (usize, usize) {
        let c = |v: f64| ((v.clamp(0.0, 1.0) * side as f64) as usize).min(side - 1);
        (c(p[0]), c(p[1]))
    }

    fn nearest(&self, points: &[[f64; 2]], q: [f64; 2]) -> usize {
        let side = self.side as isize;
        let cell = 1.0 / self.side as f64;
        let (cx, cy) = Self::cell_of(self.side, q);
        let (cx, cy) = (cx as isize, cy as isize);
        let mut best = (f64::INFINITY, usize::MAX);
        for r in 0..side {
            for y in (cy - r)..=(cy + r) {
                if y < 0 || y >= side {
                    continue;
                }
                let on_edge_row = y == cy - r || y == cy + r;
                let mut x = cx - r;
                while x <= cx + r {
                    if x >= 0 && x < side {
                        for &i in &self.buckets[(y * side + x) as usize] {
                            let cand = (dist2(points[i as usize], q), i as usize);
                            if cand < best {
                                best = cand;
                            }
                        }
                    }
                    // interior rows only contribute their two ring cells
                    x += if on_edge_row || r == 0 { 1 } else { 2 * r };
                }
            }
            let covers_all = cx - r <= 0 && cy - r <= 0 && cx + r >= side - 1 && cy + r >= side - 1;
            if covers_all {
                break;
            }
            if best.1 != usize::MAX {
                // distance from q to the outside of the searched block
                let mut gap = f64::INFINITY;
                if cx - r > 0 {
                    gap = gap.min(q[0] - (cx - r) as f64 * cell);
                }
                if cx + r < side - 1 {
                    gap = gap.min((cx + r + 1) as f64 * cell - q[0]);
                }
                if cy - r > 0 {
                    gap = gap.min(q[1] - (cy - r) as f64 * cell);
                }
                if cy + r < side - 1 {
                    gap = gap.min((cy + r + 1) as f64 * cell - q[1]);
                }
                let gap = gap - 1e-12;
                if gap > 0.0 && gap * gap > best.0 {
                    break;
                }
            }
        }
        best.1
    }
}

/// Centroids of `k` cells from k-means over `min(50 k, 500000)` uniform points.
pub fn compute_centroids(k: usize, rng: &mut SplitRng) -> Result<Centroids> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of cells must be at least 1".into()));
    }
    let n = (CVT_SAMPLES_PER_CELL * k).min(CVT_MAX_SAMPLES).max(k);
    let cloud: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
    let mut centers = kmeans_plus_plus(&cloud, k, rng);

    let mut prev_inertia = f64::INFINITY;
    for _ in 0..CVT_MAX_ITER {
        let index = GridIndex::build(&centers);
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        let mut inertia = 0.0;
        for p in &cloud {
            let j = index.nearest(&centers, *p);
            inertia += dist2(centers[j], *p);
            sums[j][0] += p[0];
            sums[j][1] += p[1];
            counts[j] += 1;
        }
        for j in 0..k {
            // empty clusters keep their previous position
            if counts[j] > 0 {
                centers[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
        let converged = prev_inertia.is_finite()
            && ((prev_inertia - inertia).abs() <= CVT_REL_TOL * prev_inertia.max(f64::MIN_POSITIVE));
        prev_inertia = inertia;
        if converged {
            break;
        }
    }
    Centroids::new(centers)
}

fn kmeans_plus_plus(cloud: &[[f64; 2]], k: usize, rng: &mut SplitRng) -> Vec<[f64; 2]> {
    let mut centers = Vec::with_capacity(k);
    centers.push(cloud[rng.random_range(0..cloud.len())]);
    let mut d2: Vec<f64> = cloud.iter().map(|p| dist2(*p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = cloud.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            while d2[chosen] == 0.0 {
                chosen -= 1;
            }
            chosen
        } else {
            rng.random_range(0..cloud.len())
        };
        let c = cloud[pick];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(cloud) {
            let nd = dist2(*p, c);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_nearest(points: &[[f64; 2]], q: [f64; 2]) -> usize {
        let mut best = 0;
        for i in 1..points.len() {
            if dist2(points[i], q) < dist2(points[best], q) {
                best = i;
            }
        }
        best
    }

    #[test]
    fn single_cell_sits_at_the_mean() {
        let c = compute_centroids(1, &mut SplitRng::new(3)).unwrap();
        let p = c.points()[0];
        // oracle: replay the point cloud, which is the first draw from the stream
        let mut rng = SplitRng::new(3);
        let n = CVT_SAMPLES_PER_CELL;
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            sx += rng.random::<f64>();
            sy += rng.random::<f64>();
        }
        let want = [sx / n as f64, sy / n as f64];
        assert!((p[0] - want[0]).abs() < 1e-12 && (p[1] - want[1]).abs() < 1e-12, "{p:?} vs {want:?}");
    }

    #[test]
    fn two_cells_are_symmetric() {
        let c = compute_centroids(2, &mut SplitRng::new(8)).unwrap();
        let [a, b] = [c.points()[0], c.points()[1]];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        assert!((mid[0] - 0.5).abs() < 0.05 && (mid[1] - 0.5).abs() < 0.05, "{mid:?}");
    }

    #[test]
    fn centroids_are_reproducible_and_distinct() {
        let a = compute_centroids(100, &mut SplitRng::new(17)).unwrap();
        let b = compute_centroids(100, &mut SplitRng::new(17)).unwrap();
        assert_eq!(a, b);
        let pts = a.points();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn exact_hit_and_tie_rule() {
        let c = compute_centroids(30, &mut SplitRng::new(1)).unwrap();
        for (j, p) in c.points().iter().enumerate() {
            assert_eq!(c.nearest(&Behaviour::new(p[0], p[1]).unwrap()), j);
        }
        let mut pts = vec![[0.9, 0.9]; 8];
        for (i, p) in pts.iter_mut().enumerate() {
            p[0] = 0.9 - 0.01 * i as f64;
        }
        pts[3] = [0.25, 0.5];
        pts[7] = [0.75, 0.5];
        let c = Centroids::new(pts).unwrap();
        assert_eq!(c.nearest(&Behaviour::new(0.5, 0.5).unwrap()), 3);
    }

    #[test]
    fn grid_matches_exhaustive_scan() {
        let mut rng = SplitRng::new(44);
        for k in [1, 2, 7, 50, 333] {
            let c = compute_centroids(k, &mut rng).unwrap();
            for _ in 0..2000 {
                let q = [rng.random::<f64>(), rng.random::<f64>()];
                let b = Behaviour::new(q[0], q[1]).unwrap();
                assert_eq!(c.nearest(&b), brute_nearest(c.points(), q));
            }
        }
        // clustered centroids leave most buckets empty
        let pts: Vec<[f64; 2]> = (0..40).map(|i| [0.01 * (i % 7) as f64, 0.02 * (i / 7) as f64]).collect();
        let c = Centroids::new(pts).unwrap();
        for _ in 0..2000 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(c.nearest(&Behaviour::new(q[0], q[1]).unwrap()), brute_nearest(c.points(), q));
        }
    }
}
