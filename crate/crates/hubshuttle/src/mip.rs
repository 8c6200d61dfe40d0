//! Branch and bound over binary variables, LP relaxations via the simplex.
//!
//! Best-bound node selection with FIFO tie-breaking and most-fractional
//! branching (ties to the lowest variable index), so the exploration order is
//! deterministic. Each node's relaxation is solved from scratch.

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

pub const INT_TOL: f64 = 1e-6;
pub const DEFAULT_GAP: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    /// Indices of variables constrained to {0, 1}.
    pub binaries: Vec<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MipError {
    #[error("binary index {0} out of range")]
    BinaryOutOfRange(usize),
    #[error("binary variable {0} has bounds outside [0, 1]")]
    BinaryBounds(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub node_count: usize,
    /// (node at which it was found, objective) for each incumbent improvement.
    pub incumbent_history: Vec<(usize, f64)>,
}

struct Node {
    /// Parent relaxation bound, in minimization orientation.
    bound: f64,
    seq: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert so the smallest bound pops first,
        // FIFO on ties.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn solve_mip(mip: &MixedIntegerProgram, gap: f64) -> Result<MipSolution, MipError> {
    let n = mip.lp.num_vars();
    for &j in &mip.binaries {
        if j >= n {
            return Err(MipError::BinaryOutOfRange(j));
        }
        let (l, u) = mip.lp.bounds(j);
        if l < -INT_TOL || u > 1.0 + INT_TOL {
            return Err(MipError::BinaryBounds(j));
        }
    }
    let maximize = mip.lp.sense == crate::lp::Sense::Maximize;
    // Work in minimization orientation for bounds and pruning.
    let to_min = |v: f64| if maximize { -v } else { v };

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { bound: f64::NEG_INFINITY, seq, fixings: Vec::new() });
    let mut node_count = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None; // (min-orient objective, values)
    let mut history = Vec::new();

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= *inc - gap * inc.abs().max(1.0) {
                continue; // proven no better than the incumbent
            }
        }
        node_count += 1;
        let mut lp = mip.lp.clone();
        for &(j, v) in &node.fixings {
            lp.set_bounds(j, v, v);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                // Binaries are boxed, so an unbounded relaxation means the
                // continuous part is unbounded in every node.
                return Ok(MipSolution {
                    status: MipStatus::Infeasible,
                    values: Vec::new(),
                    objective: 0.0,
                    node_count,
                    incumbent_history: history,
                });
            }
            LpStatus::Optimal => {}
        }
        let bound = to_min(sol.objective);
        if let Some((inc, _)) = &incumbent {
            if bound >= *inc - gap * inc.abs().max(1.0) {
                continue;
            }
        }
        // Most fractional binary: largest distance to the nearest integer.
        let mut branch: Option<(usize, f64)> = None;
        for &j in &mip.binaries {
            let v = sol.primal[j];
            let frac = (v - v.round()).abs();
            if frac > INT_TOL && branch.map_or(true, |(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                if incumbent.as_ref().map_or(true, |(inc, _)| bound < *inc) {
                    history.push((node_count, sol.objective));
                    incumbent = Some((bound, sol.primal));
                }
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    seq += 1;
                    heap.push(Node { bound, seq, fixings });
                }
            }
        }
    }

    match incumbent {
        None => Ok(MipSolution {
            status: MipStatus::Infeasible,
            values: Vec::new(),
            objective: 0.0,
            node_count,
            incumbent_history: history,
        }),
        Some((min_obj, values)) => Ok(MipSolution {
            status: MipStatus::Optimal,
            values,
            objective: if maximize { -min_obj } else { min_obj },
            node_count,
            incumbent_history: history,
        }),
    }
}
