//! Equally-sized k-means: k-means++ initialization, then per iteration the
//! points are assigned in order of how much they prefer their nearest
//! centroid over the second nearest, each to the closest centroid with
//! remaining capacity. Capacities guarantee cluster sizes differ by at
//! most one. Deterministic given the seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct BalancedKmeans {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Sum of squared distances to assigned centroids.
    pub objective: f64,
}

impl BalancedKmeans {
    pub fn sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0usize; k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

pub fn balanced_kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<BalancedKmeans> {
    let n = points.len();
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::Config(format!(
            "{n} points cannot fill {k} clusters"
        )));
    }
    let dim = points.first().map(Vec::len).unwrap_or(0);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Integrity("points must share one dimension".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let small = n / k;
    let r = n % k;

    let mut state: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    let mut iterations = 0usize;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let assignment = assign_balanced(points, &centroids, small, r);
        let next_centroids = recompute(points, &assignment, k, dim);
        let objective: f64 = points
            .iter()
            .zip(&assignment)
            .map(|(p, &c)| sq_dist(p, &next_centroids[c]))
            .sum();
        match &state {
            Some((prev_assignment, _, prev_objective)) => {
                if objective > *prev_objective + 1e-12 {
                    // A capacity-constrained pass can regress; keep the best
                    // state so the reported objective never increases.
                    iterations -= 1;
                    break;
                }
                let converged = *prev_assignment == assignment;
                state = Some((assignment, next_centroids.clone(), objective));
                if converged {
                    break;
                }
            }
            None => {
                state = Some((assignment, next_centroids.clone(), objective));
            }
        }
        centroids = next_centroids;
    }
    let (assignment, centroids, objective) = state.expect("at least one iteration");
    Ok(BalancedKmeans {
        assignment,
        centroids,
        iterations,
        objective,
    })
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
    let mut best_d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = best_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in best_d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // All remaining mass is zero (duplicate points): take the first
            // index not yet chosen.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (d, p) in best_d2.iter_mut().zip(points) {
            let cand = sq_dist(p, &points[next]);
            if cand < *d {
                *d = cand;
            }
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Assigns every point to its nearest centroid with remaining capacity.
/// Exactly `r` clusters may hold `small + 1` points; the rest hold at most
/// `small`. Points most certain about their nearest centroid go first.
fn assign_balanced(
    points: &[Vec<f64>],
    centroids: &[Vec<f64>],
    small: usize,
    r: usize,
) -> Vec<usize> {
    let k = centroids.len();
    let n = points.len();
    let dists: Vec<Vec<f64>> = points
        .iter()
        .map(|p| centroids.iter().map(|c| sq_dist(p, c)).collect())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let margin = |i: usize| -> f64 {
        let row = &dists[i];
        let mut d1 = f64::INFINITY;
        let mut d2 = f64::INFINITY;
        for &d in row {
            if d < d1 {
                d2 = d1;
                d1 = d;
            } else if d < d2 {
                d2 = d;
            }
        }
        if d2.is_finite() {
            d1 - d2
        } else {
            0.0
        }
    };
    order.sort_by(|&a, &b| margin(a).total_cmp(&margin(b)).then(a.cmp(&b)));

    let mut sizes = vec![0usize; k];
    let mut big_used = 0usize;
    let mut assignment = vec![0usize; n];
    for &i in &order {
        let mut best: Option<(f64, usize)> = None;
        for (c, &d) in dists[i].iter().enumerate() {
            let open = sizes[c] < small || (sizes[c] == small && big_used < r);
            if !open {
                continue;
            }
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        let (_, c) = best.expect("capacities cover all points");
        if sizes[c] == small {
            big_used += 1;
        }
        sizes[c] += 1;
        assignment[i] = c;
    }
    assignment
}

fn recompute(points: &[Vec<f64>], assignment: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        // Balanced capacities keep every cluster non-empty.
        for s in sum.iter_mut() {
            *s /= count as f64;
        }
    }
    sums
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
