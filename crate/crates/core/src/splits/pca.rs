//! Principal component analysis by iterated power method with deflation:
//! only the requested leading components are computed. Components are kept
//! orthonormal by re-orthogonalization against the ones already found.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

// Fixed internal seed: pca() takes no seed parameter and must be
// deterministic.
const POWER_SEED: u64 = 0x00c0_ffee_0517;
const MAX_ITERS: usize = 1000;
const REL_TOL: f64 = 1e-13;
const NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Pca {
    /// Orthonormal rows, `target_dims x d`, ordered by explained variance.
    pub components: Vec<Vec<f64>>,
    /// Centered data projected onto the components, `n x target_dims`.
    pub projected: Vec<Vec<f64>>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
}

pub fn pca(vectors: &[Vec<f64>], target_dims: usize) -> Result<Pca> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::Config("PCA needs at least 2 vectors".into()));
    }
    let d = vectors[0].len();
    if d < 1 || vectors.iter().any(|v| v.len() != d) {
        return Err(Error::Integrity(
            "input vectors must share one dimension".into(),
        ));
    }
    let cap = (n - 1).min(d);
    if target_dims < 1 || target_dims > cap {
        return Err(Error::Config(format!(
            "target_dims must lie in [1, {cap}], got {target_dims}"
        )));
    }

    let mut mean = vec![0.0f64; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x / n as f64;
        }
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    // Covariance, d x d.
    let mut cov = vec![vec![0.0f64; d]; d];
    for row in &centered {
        for i in 0..d {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            for (c, xj) in cov[i].iter_mut().zip(row) {
                *c += xi * xj;
            }
        }
    }
    let denom = (n - 1) as f64;
    for row in &mut cov {
        for c in row.iter_mut() {
            *c /= denom;
        }
    }
    let total_variance: f64 = (0..d).map(|i| cov[i][i]).sum();
    if total_variance <= f64::EPSILON * d as f64 {
        return Err(Error::Integrity("zero variance in input vectors".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(target_dims);
    let mut lambdas: Vec<f64> = Vec::with_capacity(target_dims);
    for _ in 0..target_dims {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        orthogonalize(&mut v, &components);
        if normalize(&mut v) < NULL_TOL {
            v = basis_completion(&components, d)?;
        }
        let mut prev_rayleigh = f64::INFINITY;
        for _ in 0..MAX_ITERS {
            let mut u = matvec(&cov, &v);
            let rayleigh = dot(&v, &u);
            orthogonalize(&mut u, &components);
            if normalize(&mut u) < NULL_TOL {
                // Remaining spectrum is numerically zero.
                break;
            }
            v = u;
            if (rayleigh - prev_rayleigh).abs() <= REL_TOL * rayleigh.abs().max(1.0) {
                break;
            }
            prev_rayleigh = rayleigh;
        }
        orthogonalize(&mut v, &components);
        if normalize(&mut v) < NULL_TOL {
            v = basis_completion(&components, d)?;
        }
        canonical_sign(&mut v);
        let lambda = dot(&v, &matvec(&cov, &v)).max(0.0);
        components.push(v);
        lambdas.push(lambda);
    }

    // Near-tied eigenvalues can come back slightly out of order; the
    // contract is non-increasing explained variance.
    let mut order: Vec<usize> = (0..target_dims).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));
    let components: Vec<Vec<f64>> = order.iter().map(|&i| components[i].clone()).collect();
    let explained_variance: Vec<f64> = order.iter().map(|&i| lambdas[i]).collect();

    let projected = centered
        .iter()
        .map(|row| components.iter().map(|c| dot(row, c)).collect())
        .collect();
    Ok(Pca {
        components,
        projected,
        explained_variance,
        mean,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let proj = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= proj * y;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Largest-magnitude entry positive, first such entry on ties.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut flip = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            flip = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    if flip < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Deterministic unit vector orthogonal to the found components, drawn
/// from the standard basis; completes the basis when the residual
/// spectrum is zero.
fn basis_completion(components: &[Vec<f64>], d: usize) -> Result<Vec<f64>> {
    for j in 0..d {
        let mut v = vec![0.0; d];
        v[j] = 1.0;
        orthogonalize(&mut v, components);
        if normalize(&mut v) > 1e-9 {
            return Ok(v);
        }
    }
    Err(Error::Integrity(
        "could not complete an orthonormal basis".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_give_diagonal_component() {
        let pts = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let p = pca(&pts, 2).unwrap();
        let c0 = &p.components[0];
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((c0[0].abs() - expected).abs() < 1e-9);
        assert!((c0[1].abs() - expected).abs() < 1e-9);
        assert!((c0[0] - c0[1]).abs() < 1e-9, "same sign on both axes");
        assert!(p.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn axis_aligned_variances_order_components() {
        // Centered data with a diagonal covariance, x variance > y variance.
        let pts = vec![
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let p = pca(&pts, 2).unwrap();
        assert!(p.components[0][0].abs() > 0.99, "{:?}", p.components);
        assert!(p.components[1][1].abs() > 0.99, "{:?}", p.components);
        assert!(p.explained_variance[0] >= p.explained_variance[1]);
    }

    #[test]
    fn full_dimension_preserves_pairwise_distances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let p = pca(&pts, 4).unwrap();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let orig: f64 = (0..4).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum();
                let proj: f64 = (0..4)
                    .map(|k| (p.projected[i][k] - p.projected[j][k]).powi(2))
                    .sum();
                assert!((orig.sqrt() - proj.sqrt()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn components_are_orthonormal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p = pca(&pts, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d = dot(&p.components[i], &p.components[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() <= 1e-8, "dot({i},{j}) = {d}");
            }
        }
        let total: f64 = {
            let n = pts.len() as f64;
            let mut mean = vec![0.0; 6];
            for v in &pts {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += x / n;
                }
            }
            pts.iter()
                .map(|v| {
                    v.iter()
                        .zip(&mean)
                        .map(|(x, m)| (x - m) * (x - m))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / (pts.len() - 1) as f64
        };
        let explained: f64 = p.explained_variance.iter().sum();
        assert!(explained <= total + 1e-9);
        for pair in p.explained_variance.windows(2) {
            assert!(pair[0] >= pair[1] - 1e-12);
        }
    }

    #[test]
    fn identical_vectors_are_zero_variance() {
        let pts = vec![vec![1.0, 2.0]; 5];
        let err = pca(&pts, 1).unwrap_err();
        assert!(err.to_string().contains("zero variance"));
    }

    #[test]
    fn target_dims_bounds_enforced() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        assert!(pca(&pts, 0).is_err());
        assert!(pca(&pts, 3).is_err()); // cap is min(n - 1, d) = 2
        assert!(pca(&pts[..1], 1).is_err());
    }
}
