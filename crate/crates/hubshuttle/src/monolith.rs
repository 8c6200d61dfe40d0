//! Whole-problem oracles: a monolithic MIP and a brute-force enumerator.
//!
//! Both operate on the unfiltered trip graphs, so they double as oracles for
//! the preprocessing stage. The MIP keeps only the leg-opening variables
//! binary; at a fixed network each trip's polytope is a shortest-path flow
//! polytope, so the routing variables come out integral on their own.

use crate::instance::{Instance, Legs};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::mip::{solve_mip, MipError, MipStatus, MixedIntegerProgram, INT_TOL};
use crate::preprocess::UsefulArcs;
use crate::subproblem::solve_trip;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonolithError {
    #[error("brute force is capped at 4 hubs, instance has {0}")]
    TooManyHubs(usize),
    #[error("monolithic model is infeasible; the empty network always routes every trip, so this is a solver defect")]
    Infeasible,
    #[error(transparent)]
    Mip(#[from] MipError),
}

#[derive(Debug, Clone)]
pub struct MonolithSolution {
    pub objective: f64,
    pub z: Vec<bool>,
    pub open_legs: Vec<(usize, usize)>,
    pub node_count: usize,
}

/// Column layout of the monolithic model: `legs` opening variables first,
/// then per trip a block of taxi-arc variables followed by leg variables.
pub struct MonolithLayout {
    pub num_vars: usize,
    pub num_rows: usize,
    /// Per trip: (first taxi column, taxi arcs as node pairs, first leg column).
    pub trips: Vec<(usize, Vec<(usize, usize)>, usize)>,
}

fn taxi_arcs_of(inst: &Instance, r: &crate::instance::Trip) -> Vec<(usize, usize)> {
    let full = UsefulArcs::full(inst, r);
    std::iter::once((r.origin, r.destination))
        .chain(full.origin_hubs.iter().map(|&h| (r.origin, h)))
        .chain(full.dest_hubs.iter().map(|&l| (l, r.destination)))
        .collect()
}

/// Builds the monolithic MIP over all trips and the unfiltered arc sets.
pub fn build_full_mip(inst: &Instance, legs: &Legs) -> (MixedIntegerProgram, MonolithLayout) {
    let nz = legs.len();
    let mut layout = Vec::with_capacity(inst.trips.len());
    let mut num_vars = nz;
    for r in &inst.trips {
        let taxi = taxi_arcs_of(inst, r);
        let x0 = num_vars;
        num_vars += taxi.len();
        let y0 = num_vars;
        num_vars += nz;
        layout.push((x0, taxi, y0));
    }

    let mut lp = LinearProgram::new(Sense::Minimize, num_vars);
    for (k, &(h, l)) in legs.pairs.iter().enumerate() {
        lp.set_objective(k, inst.bus_open(h, l));
        lp.set_bounds(k, 0.0, 1.0);
    }
    for (r, &(x0, ref taxi, y0)) in inst.trips.iter().zip(&layout) {
        for (a, &(i, j)) in taxi.iter().enumerate() {
            lp.set_objective(x0 + a, inst.trip_taxi_cost(r, i, j));
            lp.set_bounds(x0 + a, 0.0, 1.0);
        }
        for (k, &(h, l)) in legs.pairs.iter().enumerate() {
            lp.set_objective(y0 + k, inst.trip_bus_cost(r, h, l));
            lp.set_bounds(y0 + k, 0.0, 1.0);
        }
    }

    let mut num_rows = 0;
    for &h in &inst.hubs {
        let mut terms = Vec::new();
        for (k, &(a, b)) in legs.pairs.iter().enumerate() {
            if a == h {
                terms.push((k, 1.0));
            } else if b == h {
                terms.push((k, -1.0));
            }
        }
        lp.add_row(Relation::Eq, 0.0, &terms);
        num_rows += 1;
    }
    for (r, &(x0, ref taxi, y0)) in inst.trips.iter().zip(&layout) {
        let mut nodes: Vec<usize> = vec![r.origin, r.destination];
        nodes.extend(inst.hubs.iter().copied());
        nodes.sort_unstable();
        nodes.dedup();
        for &n in &nodes {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for (a, &(i, j)) in taxi.iter().enumerate() {
                if i == n {
                    terms.push((x0 + a, 1.0));
                }
                if j == n {
                    terms.push((x0 + a, -1.0));
                }
            }
            for (k, &(h, l)) in legs.pairs.iter().enumerate() {
                if h == n {
                    terms.push((y0 + k, 1.0));
                }
                if l == n {
                    terms.push((y0 + k, -1.0));
                }
            }
            let rhs = if n == r.origin {
                1.0
            } else if n == r.destination {
                -1.0
            } else {
                0.0
            };
            lp.add_row(Relation::Eq, rhs, &terms);
            num_rows += 1;
        }
        for k in 0..legs.len() {
            lp.add_row(Relation::Le, 0.0, &[(y0 + k, 1.0), (k, -1.0)]);
            num_rows += 1;
        }
    }

    (
        MixedIntegerProgram { lp, binaries: (0..nz).collect() },
        MonolithLayout { num_vars, num_rows, trips: layout },
    )
}

/// Solves the monolithic model to optimality.
pub fn solve_monolith(inst: &Instance, gap: f64) -> Result<MonolithSolution, MonolithError> {
    let legs = Legs::new(&inst.hubs);
    let (mip, layout) = build_full_mip(inst, &legs);
    let sol = solve_mip(&mip, gap)?;
    if sol.status != MipStatus::Optimal {
        return Err(MonolithError::Infeasible);
    }
    // Routing variables must come out integral at a 0/1 network.
    debug_assert!(layout.trips.iter().all(|&(x0, ref taxi, y0)| {
        (0..taxi.len()).all(|a| {
            let v = sol.values[x0 + a];
            (v - v.round()).abs() <= 10.0 * INT_TOL
        }) && (0..legs.len()).all(|k| {
            let v = sol.values[y0 + k];
            (v - v.round()).abs() <= 10.0 * INT_TOL
        })
    }));
    let z: Vec<bool> = (0..legs.len()).map(|k| sol.values[k] > 0.5).collect();
    let open_legs = legs
        .pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| z[k])
        .map(|(_, &p)| p)
        .collect();
    Ok(MonolithSolution { objective: sol.objective, z, open_legs, node_count: sol.node_count })
}

#[derive(Debug, Clone)]
pub struct BruteResult {
    pub objective: f64,
    pub z: Vec<bool>,
    pub open_legs: Vec<(usize, usize)>,
    /// Circulation-feasible networks evaluated.
    pub evaluated: usize,
}

/// Evaluates the network `z` exactly: optimal routing per trip over the
/// unfiltered arc sets plus opening costs.
pub fn evaluate_network(inst: &Instance, legs: &Legs, z: &[bool]) -> f64 {
    let routing: f64 = (0..inst.trips.len())
        .map(|t| {
            let full = UsefulArcs::full(inst, &inst.trips[t]);
            solve_trip(inst, t, &full, legs, z).sigma
        })
        .sum();
    let opening: f64 = legs
        .pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| z[k])
        .map(|(_, &(h, l))| inst.bus_open(h, l))
        .sum();
    routing + opening
}

/// Exhaustive search over every circulation-feasible leg subset. Ties go to
/// the first subset in mask order, which is the lexicographically smallest
/// 0/1 vector reading legs from the highest index down.
pub fn brute_force(inst: &Instance) -> Result<BruteResult, MonolithError> {
    if inst.hubs.len() > 4 {
        return Err(MonolithError::TooManyHubs(inst.hubs.len()));
    }
    let legs = Legs::new(&inst.hubs);
    let nz = legs.len();
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut evaluated = 0usize;
    for mask in 0u32..(1 << nz) {
        let z: Vec<bool> = (0..nz).map(|k| (mask >> k) & 1 == 1).collect();
        if !legs.circulation_feasible(inst, &z) {
            continue;
        }
        evaluated += 1;
        let cost = evaluate_network(inst, &legs, &z);
        if best.as_ref().map_or(true, |&(b, _)| cost < b - 1e-12) {
            best = Some((cost, z));
        }
    }
    let (objective, z) = best.expect("the empty network is always circulation feasible");
    let open_legs = legs
        .pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| z[k])
        .map(|(_, &p)| p)
        .collect();
    Ok(BruteResult { objective, z, open_legs, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GeneratorConfig};
    use crate::instance::CostParams;

    fn small(seed: u64, hubs: usize) -> Instance {
        generate(seed, 7, hubs, 10, CostParams::default(), GeneratorConfig::default()).unwrap()
    }

    #[test]
    fn layout_counts_match_formula() {
        let inst = small(1, 3);
        let legs = Legs::new(&inst.hubs);
        let (mip, layout) = build_full_mip(&inst, &legs);
        let nz = legs.len();
        let mut expect_vars = nz;
        let mut expect_rows = inst.hubs.len();
        for r in &inst.trips {
            let endpoints_on_hubs = [r.origin, r.destination]
                .iter()
                .filter(|&&e| inst.hubs.contains(&e))
                .count();
            let taxi = 1 + 2 * (inst.hubs.len() - endpoints_on_hubs);
            let graph_nodes = 2 + inst.hubs.len() - endpoints_on_hubs;
            expect_vars += taxi + nz;
            expect_rows += graph_nodes + nz;
        }
        assert_eq!(layout.num_vars, expect_vars);
        assert_eq!(layout.num_rows, expect_rows);
        assert_eq!(mip.lp.num_vars(), expect_vars);
        assert_eq!(mip.binaries.len(), nz);
    }

    #[test]
    fn brute_rejects_large_hub_sets() {
        let inst = small(1, 5);
        assert!(matches!(brute_force(&inst), Err(MonolithError::TooManyHubs(5))));
    }

    #[test]
    fn brute_result_is_circulation_feasible() {
        let inst = small(2, 3);
        let legs = Legs::new(&inst.hubs);
        let r = brute_force(&inst).unwrap();
        assert!(legs.circulation_feasible(&inst, &r.z));
        assert!((r.objective - evaluate_network(&inst, &legs, &r.z)).abs() < 1e-9);
    }

    #[test]
    fn monolith_matches_brute_force() {
        for (seed, hubs) in [(1, 2), (2, 2), (3, 3), (4, 3), (5, 3)] {
            let inst = small(seed, hubs);
            let legs = Legs::new(&inst.hubs);
            let mono = solve_monolith(&inst, crate::mip::DEFAULT_GAP).unwrap();
            let brute = brute_force(&inst).unwrap();
            assert!(
                (mono.objective - brute.objective).abs()
                    <= 1e-6 * brute.objective.abs().max(1.0),
                "seed {seed}: {} vs {}",
                mono.objective,
                brute.objective
            );
            assert!(legs.circulation_feasible(&inst, &mono.z));
            // The MIP's reported objective must re-evaluate to itself.
            assert!(
                (evaluate_network(&inst, &legs, &mono.z) - mono.objective).abs()
                    <= 1e-6 * mono.objective.abs().max(1.0)
            );
        }
    }
}
