//! Weighted p-median hub selection: greedy seeding followed by
//! vertex-substitution local search. The objective is
//! `sum_i w_i * min_{h in H} dist[i][h]`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PMedianError {
    #[error("p = {p} exceeds the number of nodes {n}")]
    TooManyMedians { p: usize, n: usize },
    #[error("negative weight at node {node}")]
    NegativeWeight { node: usize },
}

pub fn objective(dist: &[Vec<f64>], weights: &[f64], hubs: &[usize]) -> f64 {
    (0..dist.len())
        .map(|i| {
            let d = hubs.iter().map(|&h| dist[i][h]).fold(f64::INFINITY, f64::min);
            weights[i] * d
        })
        .sum()
}

/// Returns `p` node ids forming a single-swap local optimum of the weighted
/// p-median objective. Deterministic: greedy ties and swap ties go to the
/// lowest node id.
pub fn select_hubs(
    dist: &[Vec<f64>],
    weights: &[f64],
    p: usize,
) -> Result<Vec<usize>, PMedianError> {
    let n = dist.len();
    if p > n {
        return Err(PMedianError::TooManyMedians { p, n });
    }
    if let Some(i) = weights.iter().position(|&w| w < 0.0) {
        return Err(PMedianError::NegativeWeight { node: i });
    }
    let mut hubs: Vec<usize> = Vec::with_capacity(p);
    // Greedy seeding: repeatedly add the node that lowers the objective most.
    for _ in 0..p {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if hubs.contains(&cand) {
                continue;
            }
            hubs.push(cand);
            let obj = objective(dist, weights, &hubs);
            hubs.pop();
            if best.map_or(true, |(b, _)| obj < b - 1e-12) {
                best = Some((obj, cand));
            }
        }
        hubs.push(best.expect("p <= n leaves a candidate").1);
    }
    // Vertex substitution: apply the best strictly improving single swap
    // until none exists.
    let mut cur = objective(dist, weights, &hubs);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for pos in 0..hubs.len() {
            for cand in 0..n {
                if hubs.contains(&cand) {
                    continue;
                }
                let old = hubs[pos];
                hubs[pos] = cand;
                let obj = objective(dist, weights, &hubs);
                hubs[pos] = old;
                if obj < cur - 1e-12 && best.map_or(true, |(b, _, _)| obj < b - 1e-12) {
                    best = Some((obj, pos, cand));
                }
            }
        }
        match best {
            Some((obj, pos, cand)) => {
                hubs[pos] = cand;
                cur = obj;
            }
            None => break,
        }
    }
    hubs.sort_unstable();
    Ok(hubs)
}
