//! Exact inference for the linear-chain model: Viterbi decoding, the
//! log-partition via the forward algorithm, and forward-backward marginals.
//! Everything runs in log space.

use crate::error::{Error, Result};

/// Transition scores over labels plus the synthetic begin and end states.
/// Indices `0..n_labels` are labels, `n_labels` is begin, `n_labels + 1`
/// is end. Disallowed transitions hold negative infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n_labels: usize,
    scores: Vec<f64>,
}

impl TransitionMatrix {
    pub fn zeros(n_labels: usize) -> Self {
        Self {
            n_labels,
            scores: vec![0.0; (n_labels + 2) * (n_labels + 2)],
        }
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn begin(&self) -> usize {
        self.n_labels
    }

    pub fn end(&self) -> usize {
        self.n_labels + 1
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.scores[from * (self.n_labels + 2) + to]
    }

    pub fn set(&mut self, from: usize, to: usize, score: f64) {
        self.scores[from * (self.n_labels + 2) + to] = score;
    }
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_shape(emissions: &[Vec<f64>], trans: &TransitionMatrix) -> Result<()> {
    if emissions.is_empty() {
        return Err(Error::Integrity("empty sequence".into()));
    }
    if emissions.iter().any(|row| row.len() != trans.n_labels) {
        return Err(Error::Integrity(format!(
            "emission rows must have {} labels",
            trans.n_labels
        )));
    }
    Ok(())
}

/// Highest-scoring label path, including begin/end transition scores.
/// Ties break toward the lower label index.
pub fn viterbi(emissions: &[Vec<f64>], trans: &TransitionMatrix) -> Result<(Vec<usize>, f64)> {
    check_shape(emissions, trans)?;
    let n = emissions.len();
    let labels = trans.n_labels;
    let mut delta: Vec<f64> = (0..labels)
        .map(|y| trans.get(trans.begin(), y) + emissions[0][y])
        .collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n.saturating_sub(1));
    for emission in emissions.iter().skip(1) {
        let mut next = vec![f64::NEG_INFINITY; labels];
        let mut ptr = vec![0usize; labels];
        for (y, next_score) in next.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0usize;
            for (a, &score) in delta.iter().enumerate() {
                let candidate = score + trans.get(a, y);
                if candidate > best {
                    best = candidate;
                    arg = a;
                }
            }
            *next_score = best + emission[y];
            ptr[y] = arg;
        }
        back.push(ptr);
        delta = next;
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0usize;
    for (y, &score) in delta.iter().enumerate() {
        let candidate = score + trans.get(y, trans.end());
        if candidate > best {
            best = candidate;
            last = y;
        }
    }
    let mut path = vec![last; n];
    for (i, ptr) in back.iter().enumerate().rev() {
        path[i] = ptr[path[i + 1]];
    }
    Ok((path, best))
}

/// `log sum over all paths of exp(path score)` by the forward recursion.
pub fn log_partition(emissions: &[Vec<f64>], trans: &TransitionMatrix) -> Result<f64> {
    check_shape(emissions, trans)?;
    let labels = trans.n_labels;
    let mut alpha: Vec<f64> = (0..labels)
        .map(|y| trans.get(trans.begin(), y) + emissions[0][y])
        .collect();
    let mut scratch = vec![f64::NEG_INFINITY; labels];
    for emission in emissions.iter().skip(1) {
        let mut next = vec![0.0f64; labels];
        for (y, next_score) in next.iter_mut().enumerate() {
            for (s, (a, &score)) in scratch.iter_mut().zip(alpha.iter().enumerate()) {
                *s = score + trans.get(a, y);
            }
            *next_score = logsumexp(&scratch) + emission[y];
        }
        alpha = next;
    }
    for (s, (y, &score)) in scratch.iter_mut().zip(alpha.iter().enumerate()) {
        *s = score + trans.get(y, trans.end());
    }
    Ok(logsumexp(&scratch))
}

/// Forward-backward quantities used by the gradient: the log-partition,
/// per-position label marginals and per-edge pair marginals.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_z: f64,
    /// `node[i][y]` = P(label at i is y).
    pub node: Vec<Vec<f64>>,
    /// `edge[i][a * n_labels + b]` = P(label a at i, label b at i + 1).
    pub edge: Vec<Vec<f64>>,
}

pub fn forward_backward(emissions: &[Vec<f64>], trans: &TransitionMatrix) -> Result<Marginals> {
    check_shape(emissions, trans)?;
    let n = emissions.len();
    let labels = trans.n_labels;

    let mut alpha = vec![vec![0.0f64; labels]; n];
    for y in 0..labels {
        alpha[0][y] = trans.get(trans.begin(), y) + emissions[0][y];
    }
    let mut scratch = vec![f64::NEG_INFINITY; labels];
    for i in 1..n {
        for y in 0..labels {
            for (s, a) in scratch.iter_mut().zip(0..labels) {
                *s = alpha[i - 1][a] + trans.get(a, y);
            }
            alpha[i][y] = logsumexp(&scratch) + emissions[i][y];
        }
    }
    for (s, y) in scratch.iter_mut().zip(0..labels) {
        *s = alpha[n - 1][y] + trans.get(y, trans.end());
    }
    let log_z = logsumexp(&scratch);
    if !log_z.is_finite() {
        return Err(Error::Train(
            "no admissible label path (over-constrained transitions)".into(),
        ));
    }

    let mut beta = vec![vec![0.0f64; labels]; n];
    for (y, b) in beta[n - 1].iter_mut().enumerate() {
        *b = trans.get(y, trans.end());
    }
    for i in (0..n - 1).rev() {
        for y in 0..labels {
            for (s, b) in scratch.iter_mut().zip(0..labels) {
                *s = trans.get(y, b) + emissions[i + 1][b] + beta[i + 1][b];
            }
            beta[i][y] = logsumexp(&scratch);
        }
    }

    let mut node = vec![vec![0.0f64; labels]; n];
    for i in 0..n {
        for y in 0..labels {
            node[i][y] = (alpha[i][y] + beta[i][y] - log_z).exp();
        }
    }
    let mut edge = vec![vec![0.0f64; labels * labels]; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        for a in 0..labels {
            for b in 0..labels {
                edge[i][a * labels + b] =
                    (alpha[i][a] + trans.get(a, b) + emissions[i + 1][b] + beta[i + 1][b] - log_z)
                        .exp();
            }
        }
    }
    Ok(Marginals { log_z, node, edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: enumerate all label paths.
    pub(crate) fn enumerate_paths(
        emissions: &[Vec<f64>],
        trans: &TransitionMatrix,
    ) -> Vec<(Vec<usize>, f64)> {
        let n = emissions.len();
        let labels = trans.n_labels();
        let mut paths = Vec::new();
        let total = (labels as u64).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut path = Vec::with_capacity(n);
            for _ in 0..n {
                path.push((c % labels as u64) as usize);
                c /= labels as u64;
            }
            let mut score = trans.get(trans.begin(), path[0]) + emissions[0][path[0]];
            for i in 1..n {
                score += trans.get(path[i - 1], path[i]) + emissions[i][path[i]];
            }
            score += trans.get(path[n - 1], trans.end());
            paths.push((path, score));
        }
        paths
    }

    /// Best score plus every path within `tol` of it; exact-path checks use
    /// membership so score ties (where any optimum is acceptable) stay robust.
    fn brute_force_best(
        emissions: &[Vec<f64>],
        trans: &TransitionMatrix,
        tol: f64,
    ) -> (f64, Vec<Vec<usize>>) {
        let paths = enumerate_paths(emissions, trans);
        let best = paths
            .iter()
            .map(|&(_, s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let optimal = paths
            .into_iter()
            .filter(|&(_, s)| s >= best - tol)
            .map(|(p, _)| p)
            .collect();
        (best, optimal)
    }

    fn brute_force_log_z(emissions: &[Vec<f64>], trans: &TransitionMatrix) -> f64 {
        let scores: Vec<f64> = enumerate_paths(emissions, trans)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        logsumexp(&scores)
    }

    #[test]
    fn single_position_selects_best_label() {
        let trans = TransitionMatrix::zeros(2);
        let (path, score) = viterbi(&[vec![0.0, 1.0]], &trans).unwrap();
        assert_eq!(path, vec![1]);
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_positions_no_transitions() {
        let trans = TransitionMatrix::zeros(2);
        let emissions = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (path, score) = viterbi(&emissions, &trans).unwrap();
        assert_eq!(path, vec![1, 0]);
        assert!((score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transition_penalty_changes_path() {
        let mut trans = TransitionMatrix::zeros(2);
        trans.set(1, 0, -10.0);
        let emissions = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (path, score) = viterbi(&emissions, &trans).unwrap();
        let (bf_score, optimal) = brute_force_best(&emissions, &trans, 1e-9);
        assert!((score - bf_score).abs() < 1e-12);
        assert!(optimal.contains(&path));
    }

    #[test]
    fn zero_weights_tie_break_to_label_zero() {
        let trans = TransitionMatrix::zeros(3);
        let emissions = vec![vec![0.0; 3]; 4];
        let (path, _) = viterbi(&emissions, &trans).unwrap();
        assert_eq!(path, vec![0; 4]);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let trans = TransitionMatrix::zeros(2);
        assert!(viterbi(&[], &trans).is_err());
        assert!(log_partition(&[], &trans).is_err());
    }

    #[test]
    fn log_partition_two_equal_paths() {
        let trans = TransitionMatrix::zeros(2);
        let z = log_partition(&[vec![0.0, 0.0]], &trans).unwrap();
        assert!((z - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn random_instances_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let labels = rng.random_range(1..=4);
            let n = rng.random_range(1..=4);
            let mut trans = TransitionMatrix::zeros(labels);
            for a in 0..labels + 2 {
                for b in 0..labels + 2 {
                    trans.set(a, b, rng.random_range(-2.0..2.0));
                }
            }
            let emissions: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..labels).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();

            let (path, score) = viterbi(&emissions, &trans).unwrap();
            let (bf_score, optimal) = brute_force_best(&emissions, &trans, 1e-9);
            assert!((score - bf_score).abs() < 1e-10);
            assert!(optimal.contains(&path), "path {path:?} not optimal");

            let z = log_partition(&emissions, &trans).unwrap();
            assert!((z - brute_force_log_z(&emissions, &trans)).abs() < 1e-10);
            assert!(z >= score - 1e-12, "logsumexp below max");
        }
    }

    #[test]
    fn marginals_sum_to_one_and_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let labels = rng.random_range(2..=4);
            let n = rng.random_range(1..=5);
            let mut trans = TransitionMatrix::zeros(labels);
            for a in 0..labels + 2 {
                for b in 0..labels + 2 {
                    trans.set(a, b, rng.random_range(-1.5..1.5));
                }
            }
            let emissions: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..labels).map(|_| rng.random_range(-1.5..1.5)).collect())
                .collect();
            let m = forward_backward(&emissions, &trans).unwrap();
            for row in &m.node {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "node sum {sum}");
                assert!(row.iter().all(|&p| p >= 0.0));
            }
            for row in &m.edge {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "edge sum {sum}");
            }
            // Edge marginals are consistent with node marginals.
            for (i, row) in m.edge.iter().enumerate() {
                for a in 0..labels {
                    let from_edges: f64 = (0..labels).map(|b| row[a * labels + b]).sum();
                    assert!((from_edges - m.node[i][a]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn masked_transitions_exclude_paths() {
        let mut trans = TransitionMatrix::zeros(2);
        trans.set(trans.begin(), 1, f64::NEG_INFINITY);
        let z = log_partition(&[vec![0.0, 0.0]], &trans).unwrap();
        // Only label 0 is reachable from begin.
        assert!((z - 0.0).abs() < 1e-12);
        let (path, _) = viterbi(&[vec![0.0, 5.0]], &trans).unwrap();
        assert_eq!(path, vec![0]);
    }
}
