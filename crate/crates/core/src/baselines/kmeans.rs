//! Lloyd's algorithm with k-means++ seeding on raw scenario rows.

use rand::Rng;

use crate::rng::substream;

const MAX_ITERS: usize = 100;
const REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid, smallest index on ties.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = dist2(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut picked = vec![rng.gen_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[picked[0]])).collect();
    while picked.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut choice = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    choice = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            choice.expect("positive total implies a positive weight")
        } else {
            // Every point coincides with a seed; fall back to an unused index.
            let unused: Vec<usize> = (0..points.len()).filter(|i| !picked.contains(i)).collect();
            unused[rng.gen_range(0..unused.len())]
        };
        picked.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist2(p, &points[next]));
        }
    }
    picked.into_iter().map(|i| points[i].clone()).collect()
}

/// Clusters `points` into `k` groups (`1 <= k <= points.len()`).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> KmeansFit {
    assert!(k >= 1 && k <= points.len(), "k out of range");
    let mut rng = substream(seed, "kmeans");
    let mut centroids = seed_centroids(points, k, &mut rng);
    let dim = points[0].len();
    let mut assignment = vec![0; points.len()];
    let mut prev = f64::INFINITY;
    let mut inertia;
    let mut iterations = 0;
    loop {
        iterations += 1;
        inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignment[i] = c;
            inertia += d;
        }
        let converged = inertia == 0.0 || (prev.is_finite() && prev - inertia <= REL_TOL * prev);
        if converged || iterations == MAX_ITERS {
            break;
        }
        prev = inertia;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            // An empty cluster keeps its previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    KmeansFit {
        centroids,
        assignment,
        inertia,
        iterations,
    }
}

/// Maps each centroid to its nearest unused original row.
pub fn select_kmeans_rows(rows: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let fit = kmeans(rows, k, seed);
    let mut used = vec![false; rows.len()];
    let mut chosen = Vec::with_capacity(k);
    for centroid in &fit.centroids {
        let mut by_distance: Vec<(f64, usize)> = rows.iter().enumerate().map(|(i, r)| (dist2(r, centroid), i)).collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pick = by_distance
            .into_iter()
            .map(|(_, i)| i)
            .find(|&i| !used[i])
            .expect("k <= number of rows");
        used[pick] = true;
        chosen.push(pick);
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_points_split_into_pairs() {
        let rows = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        for seed in 0..200 {
            let fit = kmeans(&rows, 2, seed);
            assert!((fit.inertia - 1.0).abs() < 1e-12, "seed {seed}: {fit:?}");
            let mut set = select_kmeans_rows(&rows, 2, seed);
            set.sort_unstable();
            assert!(set[0] <= 1 && set[1] >= 2, "seed {seed}: {set:?}");
        }
    }

    #[test]
    fn separated_clusters_of_identical_points() {
        let mut rows = vec![vec![5.0, 5.0]; 4];
        rows.extend(vec![vec![90.0, 80.0]; 3]);
        for seed in 0..50 {
            let mut set = select_kmeans_rows(&rows, 2, seed);
            set.sort_unstable();
            assert!(set[0] < 4 && set[1] >= 4, "seed {seed}: {set:?}");
        }
    }

    #[test]
    fn duplicate_rows_still_yield_distinct_indices() {
        let rows = vec![vec![1.0, 1.0]; 6];
        for k in 1..=6 {
            let mut set = select_kmeans_rows(&rows, k, 4);
            set.sort_unstable();
            set.dedup();
            assert_eq!(set.len(), k);
        }
    }

    #[test]
    fn inertia_is_optimal_for_one_cluster() {
        let rows = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]];
        let fit = kmeans(&rows, 1, 0);
        assert_eq!(fit.centroids[0], vec![1.0, 1.0]);
        assert!((fit.inertia - 8.0).abs() < 1e-12);
    }
}
