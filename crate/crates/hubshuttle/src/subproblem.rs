//! Per-trip subproblems and their dual solutions.
//!
//! At a fixed network each trip's routing problem is a shortest path over its
//! useful taxi arcs plus the open bus legs. The dual potentials come from a
//! backward search from the destination; hub-pair penalties `v` take the
//! minimal feasible value. The Pareto variant re-optimizes the duals through
//! an auxiliary LP that maximizes the cut value at the core point subject to
//! staying optimal at the current network.

use crate::instance::{Instance, Legs, Trip};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::preprocess::UsefulArcs;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use thiserror::Error;

/// Clamp keeping core-point components strictly inside (0, 1).
pub const CORE_EPS: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SubproblemError {
    #[error("zeta = {0} is outside (0, 1)")]
    BadZeta(f64),
    #[error("Pareto LP for trip {trip} ended {status:?}; the sigma contract upstream is broken")]
    ParetoLpFailed { trip: usize, status: LpStatus },
    #[error("Pareto LP for trip {trip} failed: {source}")]
    ParetoLpError {
        trip: usize,
        #[source]
        source: crate::lp::LpError,
    },
}

/// Dual solution of one trip's subproblem at a fixed network.
#[derive(Debug, Clone)]
pub struct TripDuals {
    pub trip: usize,
    /// Potential per node of the trip graph (origin, destination, hubs).
    pub u: BTreeMap<usize, f64>,
    /// Penalty per bus leg, in `Legs` order.
    pub v: Vec<f64>,
    /// Optimal subproblem objective at the generating network.
    pub sigma: f64,
    /// An optimal route, origin first. Empty for Pareto duals.
    pub route: Vec<usize>,
}

impl TripDuals {
    /// Value of this dual solution's cut functional at a (possibly
    /// fractional) network `z`: `u_o - u_d - sum z_k v_k`.
    pub fn cut_value(&self, r: &Trip, z: &[f64]) -> f64 {
        let base = self.u[&r.origin] - self.u[&r.destination];
        base - z.iter().zip(&self.v).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    cost: f64,
    node: usize,
}
impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by cost, ties by lowest node index.
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Forward arcs of one trip's routing graph at a fixed network.
fn trip_arcs(
    inst: &Instance,
    r: &Trip,
    arcs: &UsefulArcs,
    legs: &Legs,
    open: &[bool],
) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(arcs.len() + legs.len());
    out.push((r.origin, r.destination, inst.trip_taxi_cost(r, r.origin, r.destination)));
    for &h in &arcs.origin_hubs {
        out.push((r.origin, h, inst.trip_taxi_cost(r, r.origin, h)));
    }
    for &l in &arcs.dest_hubs {
        out.push((l, r.destination, inst.trip_taxi_cost(r, l, r.destination)));
    }
    for (k, &(h, l)) in legs.pairs.iter().enumerate() {
        if open[k] {
            out.push((h, l, inst.trip_bus_cost(r, h, l)));
        }
    }
    out
}

/// Solves trip `trip`'s subproblem at the 0/1 network `open` and extracts
/// dual potentials and penalties.
pub fn solve_trip(
    inst: &Instance,
    trip: usize,
    arcs: &UsefulArcs,
    legs: &Legs,
    open: &[bool],
) -> TripDuals {
    let r = &inst.trips[trip];
    let fwd = trip_arcs(inst, r, arcs, legs, open);
    // Backward Dijkstra from the destination over reversed arcs.
    let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
    let mut next: BTreeMap<usize, usize> = BTreeMap::new(); // node -> successor on route
    let mut rev: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut nodes: Vec<usize> = vec![r.origin, r.destination];
    nodes.extend(inst.hubs.iter().copied());
    nodes.sort_unstable();
    nodes.dedup();
    for &n in &nodes {
        rev.entry(n).or_default();
    }
    for &(from, to, w) in &fwd {
        rev.entry(to).or_default().push((from, w));
    }
    let mut heap = BinaryHeap::new();
    dist.insert(r.destination, 0.0);
    heap.push(HeapEntry { cost: 0.0, node: r.destination });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[&node] + 1e-12 {
            continue;
        }
        for &(pred, w) in &rev[&node] {
            let cand = cost + w;
            if dist.get(&pred).map_or(true, |&cur| cand < cur - 1e-12) {
                dist.insert(pred, cand);
                next.insert(pred, node);
                heap.push(HeapEntry { cost: cand, node: pred });
            }
        }
    }
    let sigma = *dist.get(&r.origin).expect("direct arc keeps the destination reachable");

    // Potentials: distances where reachable; elsewhere the smallest value
    // keeping every taxi-arc and open-leg constraint feasible, so the duals
    // stay valid for any network.
    let mut u: BTreeMap<usize, f64> = BTreeMap::new();
    for &n in &nodes {
        u.insert(n, dist.get(&n).copied().unwrap_or(f64::NAN));
    }
    let unreachable: Vec<usize> =
        nodes.iter().copied().filter(|n| !dist.contains_key(n)).collect();
    if !unreachable.is_empty() {
        for &h in &unreachable {
            let mut floor = 0.0f64;
            if arcs.origin_hubs.contains(&h) {
                floor = floor.max(sigma - inst.trip_taxi_cost(r, r.origin, h));
            }
            for (k, &(g, hh)) in legs.pairs.iter().enumerate() {
                if hh == h && open[k] {
                    if let Some(&ug) = dist.get(&g) {
                        floor = floor.max(ug - inst.trip_bus_cost(r, g, h));
                    }
                }
            }
            u.insert(h, floor);
        }
        // Propagate along open legs inside the unreachable set: a potential
        // may drop by at most the leg cost across an open leg.
        for _ in 0..unreachable.len() {
            let mut changed = false;
            for (k, &(g, h)) in legs.pairs.iter().enumerate() {
                if open[k] && !dist.contains_key(&g) && !dist.contains_key(&h) {
                    let need = u[&g] - inst.trip_bus_cost(r, g, h);
                    if need > u[&h] + 1e-12 {
                        u.insert(h, need);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    let v: Vec<f64> = legs
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(h, l))| {
            if open[k] {
                0.0
            } else {
                (u[&h] - u[&l] - inst.trip_bus_cost(r, h, l)).max(0.0)
            }
        })
        .collect();
    debug_assert!(legs.pairs.iter().enumerate().all(|(k, &(h, l))| {
        !open[k] || u[&h] - u[&l] <= inst.trip_bus_cost(r, h, l) + 1e-7
    }));

    let mut route = vec![r.origin];
    let mut cur = r.origin;
    while cur != r.destination {
        cur = next[&cur];
        route.push(cur);
    }
    TripDuals { trip, u, v, sigma, route }
}

/// A point strictly inside the master's feasible hull, one value per leg.
#[derive(Debug, Clone, PartialEq)]
pub struct CorePoint {
    pub z: Vec<f64>,
}

pub fn init_core_point(legs: &Legs, zeta: f64) -> Result<CorePoint, SubproblemError> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(SubproblemError::BadZeta(zeta));
    }
    Ok(CorePoint { z: vec![zeta; legs.len()] })
}

/// Averages the core point with the latest network and clamps every
/// component back into the open interval.
pub fn update_core_point(core: &CorePoint, zbar: &[bool]) -> CorePoint {
    let z = core
        .z
        .iter()
        .zip(zbar)
        .map(|(&c, &b)| {
            let avg = (c + if b { 1.0 } else { 0.0 }) / 2.0;
            avg.clamp(CORE_EPS, 1.0 - CORE_EPS)
        })
        .collect();
    CorePoint { z }
}

/// Re-derives trip duals by the Magnanti-Wong auxiliary LP: maximize the cut
/// value at the core point subject to dual feasibility and optimality at the
/// generating network (`sigma` must come from `solve_trip` at the same
/// `open`).
pub fn pareto_duals(
    inst: &Instance,
    trip: usize,
    arcs: &UsefulArcs,
    legs: &Legs,
    open: &[bool],
    core: &CorePoint,
    sigma: f64,
) -> Result<TripDuals, SubproblemError> {
    let r = &inst.trips[trip];
    let mut nodes: Vec<usize> = vec![r.origin, r.destination];
    nodes.extend(inst.hubs.iter().copied());
    nodes.sort_unstable();
    nodes.dedup();
    let u_index = |n: usize| nodes.binary_search(&n).expect("trip graph node");
    let nu = nodes.len();
    let nv = legs.len();

    let mut lp = LinearProgram::new(Sense::Maximize, nu + nv);
    lp.set_objective(u_index(r.origin), 1.0);
    lp.set_objective(u_index(r.destination), -1.0);
    for k in 0..nv {
        lp.set_objective(nu + k, -core.z[k]);
    }
    let taxi_rows: Vec<(usize, usize)> = std::iter::once((r.origin, r.destination))
        .chain(arcs.origin_hubs.iter().map(|&h| (r.origin, h)))
        .chain(arcs.dest_hubs.iter().map(|&l| (l, r.destination)))
        .collect();
    for &(i, j) in &taxi_rows {
        lp.add_row(
            Relation::Le,
            inst.trip_taxi_cost(r, i, j),
            &[(u_index(i), 1.0), (u_index(j), -1.0)],
        );
    }
    for (k, &(h, l)) in legs.pairs.iter().enumerate() {
        lp.add_row(
            Relation::Le,
            inst.trip_bus_cost(r, h, l),
            &[(u_index(h), 1.0), (u_index(l), -1.0), (nu + k, -1.0)],
        );
    }
    let mut eq: Vec<(usize, f64)> =
        vec![(u_index(r.origin), 1.0), (u_index(r.destination), -1.0)];
    for k in 0..nv {
        if open[k] {
            eq.push((nu + k, -1.0));
        }
    }
    // Origin and destination coincide with a hub at most once each; merge
    // duplicate terms so the row stays well formed.
    let lp_row = merge_terms(eq);
    lp.add_row(Relation::Eq, sigma, &lp_row);

    let sol = solve_lp(&lp).map_err(|e| SubproblemError::ParetoLpError { trip, source: e })?;
    if sol.status != LpStatus::Optimal {
        return Err(SubproblemError::ParetoLpFailed { trip, status: sol.status });
    }
    let u = nodes.iter().map(|&n| (n, sol.primal[u_index(n)])).collect();
    let v = (0..nv).map(|k| sol.primal[nu + k].max(0.0)).collect();
    Ok(TripDuals { trip, u, v, sigma, route: Vec::new() })
}

fn merge_terms(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, c) in terms {
        *merged.entry(j).or_insert(0.0) += c;
    }
    merged.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GeneratorConfig};
    use crate::instance::CostParams;
    use crate::preprocess::{preprocess, useful_arcs};

    fn small(seed: u64) -> Instance {
        generate(seed, 8, 3, 15, CostParams::default(), GeneratorConfig::default()).unwrap()
    }

    #[test]
    fn all_closed_gives_direct_cost() {
        let inst = small(2);
        let legs = Legs::new(&inst.hubs);
        let closed = vec![false; legs.len()];
        for t in 0..inst.trips.len() {
            let arcs = useful_arcs(&inst, &inst.trips[t]);
            let duals = solve_trip(&inst, t, &arcs, &legs, &closed);
            let r = &inst.trips[t];
            let direct = inst.trip_taxi_cost(r, r.origin, r.destination);
            assert!((duals.sigma - direct).abs() < 1e-9);
            assert_eq!(duals.route, vec![r.origin, r.destination]);
        }
    }

    #[test]
    fn opening_best_pattern_leg_reaches_pattern_cost() {
        for seed in 0..6 {
            let inst = small(seed);
            let legs = Legs::new(&inst.hubs);
            let pre = preprocess(&inst);
            for kept in &pre.kept {
                let (h, l) = kept.pattern.bus_leg().unwrap();
                let mut open = vec![false; legs.len()];
                open[legs.index_of(h, l).unwrap()] = true;
                let duals = solve_trip(&inst, kept.trip, &kept.arcs, &legs, &open);
                assert!(
                    duals.sigma <= kept.pattern.cost + 1e-9,
                    "sigma {} vs pattern {}",
                    duals.sigma,
                    kept.pattern.cost
                );
            }
        }
    }

    /// Primal LP for one trip at a fixed network; the test-only oracle for
    /// the combinatorial dual extraction.
    fn trip_lp_optimum(
        inst: &Instance,
        trip: usize,
        arcs: &UsefulArcs,
        legs: &Legs,
        open: &[bool],
    ) -> f64 {
        let r = &inst.trips[trip];
        let taxi: Vec<(usize, usize)> = std::iter::once((r.origin, r.destination))
            .chain(arcs.origin_hubs.iter().map(|&h| (r.origin, h)))
            .chain(arcs.dest_hubs.iter().map(|&l| (l, r.destination)))
            .collect();
        let nx = taxi.len();
        let ny = legs.len();
        let mut lp = LinearProgram::new(Sense::Minimize, nx + ny);
        for (k, &(i, j)) in taxi.iter().enumerate() {
            lp.set_objective(k, inst.trip_taxi_cost(r, i, j));
            lp.set_bounds(k, 0.0, 1.0);
        }
        for (k, &(h, l)) in legs.pairs.iter().enumerate() {
            lp.set_objective(nx + k, inst.trip_bus_cost(r, h, l));
            lp.set_bounds(nx + k, 0.0, if open[k] { 1.0 } else { 0.0 });
        }
        let mut nodes: Vec<usize> = vec![r.origin, r.destination];
        nodes.extend(inst.hubs.iter().copied());
        nodes.sort_unstable();
        nodes.dedup();
        for &n in &nodes {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for (k, &(i, j)) in taxi.iter().enumerate() {
                if i == n {
                    terms.push((k, 1.0));
                }
                if j == n {
                    terms.push((k, -1.0));
                }
            }
            for (k, &(h, l)) in legs.pairs.iter().enumerate() {
                if h == n {
                    terms.push((nx + k, 1.0));
                }
                if l == n {
                    terms.push((nx + k, -1.0));
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
        }
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        sol.objective
    }

    #[test]
    fn sigma_matches_lp_oracle_over_networks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for seed in 0..4 {
            let inst = small(seed);
            let legs = Legs::new(&inst.hubs);
            let pre = preprocess(&inst);
            for _ in 0..5 {
                let open: Vec<bool> = (0..legs.len()).map(|_| rng.gen_bool(0.4)).collect();
                for kept in pre.kept.iter().take(4) {
                    let duals = solve_trip(&inst, kept.trip, &kept.arcs, &legs, &open);
                    let lp_opt = trip_lp_optimum(&inst, kept.trip, &kept.arcs, &legs, &open);
                    assert!(
                        (duals.sigma - lp_opt).abs() < 1e-7,
                        "sigma {} vs LP {}",
                        duals.sigma,
                        lp_opt
                    );
                    // Strong duality at the generating network.
                    let z: Vec<f64> =
                        open.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                    let r = &inst.trips[kept.trip];
                    assert!((duals.cut_value(r, &z) - duals.sigma).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn dual_feasibility_on_useful_arcs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..4 {
            let inst = small(seed);
            let legs = Legs::new(&inst.hubs);
            let pre = preprocess(&inst);
            for _ in 0..6 {
                let open: Vec<bool> = (0..legs.len()).map(|_| rng.gen_bool(0.3)).collect();
                for kept in &pre.kept {
                    let r = &inst.trips[kept.trip];
                    let duals = solve_trip(&inst, kept.trip, &kept.arcs, &legs, &open);
                    let check = |i: usize, j: usize| {
                        assert!(
                            duals.u[&i] - duals.u[&j]
                                <= inst.trip_taxi_cost(r, i, j) + 1e-7,
                            "taxi arc ({i},{j})"
                        );
                    };
                    check(r.origin, r.destination);
                    for &h in &kept.arcs.origin_hubs {
                        check(r.origin, h);
                    }
                    for &l in &kept.arcs.dest_hubs {
                        check(l, r.destination);
                    }
                    for (k, &(h, l)) in legs.pairs.iter().enumerate() {
                        assert!(
                            duals.u[&h] - duals.u[&l] - duals.v[k]
                                <= inst.trip_bus_cost(r, h, l) + 1e-7
                        );
                        if open[k] {
                            assert_eq!(duals.v[k], 0.0);
                        }
                        assert!(duals.v[k] >= 0.0);
                    }
                    assert!(duals.u.values().all(|&x| x >= 0.0));
                }
            }
        }
    }

    #[test]
    fn core_point_init_and_update() {
        let legs = Legs::new(&[0, 1, 2]);
        assert!(matches!(init_core_point(&legs, 0.0), Err(SubproblemError::BadZeta(_))));
        assert!(matches!(init_core_point(&legs, 1.0), Err(SubproblemError::BadZeta(_))));
        let core = init_core_point(&legs, 0.5).unwrap();
        assert!(core.z.iter().all(|&z| z == 0.5));

        let mut zbar = vec![false; legs.len()];
        zbar[2] = true;
        let next = update_core_point(&core, &zbar);
        for (k, &z) in next.z.iter().enumerate() {
            assert!((z - if k == 2 { 0.75 } else { 0.25 }).abs() < 1e-12);
        }

        // Repeated all-closed updates decay toward the clamp, never zero.
        let mut c = core;
        let closed = vec![false; legs.len()];
        for _ in 0..100 {
            c = update_core_point(&c, &closed);
        }
        assert!(c.z.iter().all(|&z| z == CORE_EPS));
    }

    #[test]
    fn pareto_dominates_standard_at_core() {
        let inst = small(9);
        let legs = Legs::new(&inst.hubs);
        let pre = preprocess(&inst);
        let core = init_core_point(&legs, 0.5).unwrap();
        let closed = vec![false; legs.len()];
        for kept in &pre.kept {
            let r = &inst.trips[kept.trip];
            let std = solve_trip(&inst, kept.trip, &kept.arcs, &legs, &closed);
            let par =
                pareto_duals(&inst, kept.trip, &kept.arcs, &legs, &closed, &core, std.sigma)
                    .unwrap();
            assert!(par.cut_value(r, &core.z) >= std.cut_value(r, &core.z) - 1e-9);
            // Optimality equality at the generating network.
            let z0 = vec![0.0; legs.len()];
            assert!((par.cut_value(r, &z0) - std.sigma).abs() < 1e-6);
        }
    }
}
