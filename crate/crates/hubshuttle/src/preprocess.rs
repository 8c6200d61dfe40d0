//! Trip filtering and link filtering.
//!
//! Trip filtering assumes every bus leg is open, finds each trip's least-cost
//! pattern, and drops trips whose optimum is a direct taxi ride: they cost the
//! same in every network and only add constants. Link filtering then prunes,
//! per surviving trip, the origin-to-hub and hub-to-destination taxi arcs that
//! can never take part in a pattern beating the direct ride. Both operate on
//! passenger-scaled costs; the scaling is uniform so decisions match the
//! unscaled comparison.

use crate::instance::{Instance, Trip};
use serde::Serialize;

/// Pruning tolerance: a pattern must beat the direct ride by more than this
/// to keep its arcs (ties go to the direct ride).
pub const FILTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    DirectTaxi,
    TaxiBusTaxi,
    TaxiBus,
    BusTaxi,
    BusOnly,
}

/// A least-cost routing shape for one trip when all bus legs are open.
/// Non-direct patterns carry exactly one bus leg `(first_hub, last_hub)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripPattern {
    pub kind: PatternKind,
    pub first_hub: Option<usize>,
    pub last_hub: Option<usize>,
    pub cost: f64,
}

impl TripPattern {
    pub fn bus_leg(&self) -> Option<(usize, usize)> {
        match (self.first_hub, self.last_hub) {
            (Some(h), Some(l)) => Some((h, l)),
            _ => None,
        }
    }
}

/// Taxi arcs surviving link filtering for one trip. The direct arc
/// `(origin, destination)` is always present and kept implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct UsefulArcs {
    /// Hubs `h` with a surviving origin-to-hub arc `(o, h)`.
    pub origin_hubs: Vec<usize>,
    /// Hubs `l` with a surviving hub-to-destination arc `(l, d)`.
    pub dest_hubs: Vec<usize>,
}

impl UsefulArcs {
    /// Every candidate arc, no pruning. Used as the unfiltered baseline.
    pub fn full(inst: &Instance, r: &Trip) -> Self {
        let origin_hubs = inst
            .hubs
            .iter()
            .copied()
            .filter(|&h| h != r.origin && h != r.destination)
            .collect();
        let dest_hubs = inst
            .hubs
            .iter()
            .copied()
            .filter(|&l| l != r.origin && l != r.destination)
            .collect();
        UsefulArcs { origin_hubs, dest_hubs }
    }

    /// Number of taxi arcs including the always-present direct arc.
    pub fn len(&self) -> usize {
        self.origin_hubs.len() + self.dest_hubs.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false // the direct arc is always present
    }
}

/// Cheapest routing of trip `r` assuming every bus leg is open, over the
/// direct ride and every ordered hub pair. Taxi terms vanish when the trip
/// endpoint coincides with the hub. Ties go to the direct ride, then to the
/// lexicographically smallest hub pair.
pub fn best_open_pattern(inst: &Instance, r: &Trip) -> TripPattern {
    let (o, d) = (r.origin, r.destination);
    let direct = inst.trip_taxi_cost(r, o, d);
    let mut best = TripPattern {
        kind: PatternKind::DirectTaxi,
        first_hub: None,
        last_hub: None,
        cost: direct,
    };
    let mut hubs = inst.hubs.clone();
    hubs.sort_unstable();
    for &h in &hubs {
        for &l in &hubs {
            if h == l {
                continue;
            }
            let mut cost = inst.trip_bus_cost(r, h, l);
            if o != h {
                cost += inst.trip_taxi_cost(r, o, h);
            }
            if l != d {
                cost += inst.trip_taxi_cost(r, l, d);
            }
            if cost < best.cost - FILTER_TOL {
                let kind = match (o == h, l == d) {
                    (false, false) => PatternKind::TaxiBusTaxi,
                    (false, true) => PatternKind::TaxiBus,
                    (true, false) => PatternKind::BusTaxi,
                    (true, true) => PatternKind::BusOnly,
                };
                best = TripPattern { kind, first_hub: Some(h), last_hub: Some(l), cost };
            }
        }
    }
    best
}

/// Link filtering for one trip. Arc `(o, h)` survives only if some all-open
/// pattern whose first hub is `h` strictly beats the direct ride; symmetric
/// rule for `(l, d)`. Evaluated across every pattern shape so one-sided and
/// bus-only patterns are never starved of arcs.
pub fn useful_arcs(inst: &Instance, r: &Trip) -> UsefulArcs {
    let (o, d) = (r.origin, r.destination);
    let direct = inst.trip_taxi_cost(r, o, d);
    let mut origin_hubs = Vec::new();
    let mut dest_hubs = Vec::new();
    for &h in &inst.hubs {
        if h != o && h != d {
            let best_through = inst
                .hubs
                .iter()
                .filter(|&&l| l != h)
                .map(|&l| {
                    inst.trip_taxi_cost(r, o, h)
                        + inst.trip_bus_cost(r, h, l)
                        + if l == d { 0.0 } else { inst.trip_taxi_cost(r, l, d) }
                })
                .fold(f64::INFINITY, f64::min);
            if best_through < direct - FILTER_TOL {
                origin_hubs.push(h);
            }
        }
    }
    for &l in &inst.hubs {
        if l != o && l != d {
            let best_through = inst
                .hubs
                .iter()
                .filter(|&&h| h != l)
                .map(|&h| {
                    (if h == o { 0.0 } else { inst.trip_taxi_cost(r, o, h) })
                        + inst.trip_bus_cost(r, h, l)
                        + inst.trip_taxi_cost(r, l, d)
                })
                .fold(f64::INFINITY, f64::min);
            if best_through < direct - FILTER_TOL {
                dest_hubs.push(l);
            }
        }
    }
    UsefulArcs { origin_hubs, dest_hubs }
}

/// One kept trip with its filtering artifacts.
#[derive(Debug, Clone)]
pub struct KeptTrip {
    /// Index into `Instance::trips`.
    pub trip: usize,
    pub pattern: TripPattern,
    pub arcs: UsefulArcs,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ReductionStats {
    pub trips_total: usize,
    pub trips_kept: usize,
    pub taxi_arcs_before: usize,
    pub taxi_arcs_after: usize,
}

impl ReductionStats {
    pub fn trip_reduction_pct(&self) -> f64 {
        if self.trips_total == 0 {
            0.0
        } else {
            100.0 * (self.trips_total - self.trips_kept) as f64 / self.trips_total as f64
        }
    }

    pub fn arc_reduction_pct(&self) -> f64 {
        if self.taxi_arcs_before == 0 {
            0.0
        } else {
            100.0 * (self.taxi_arcs_before - self.taxi_arcs_after) as f64
                / self.taxi_arcs_before as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub kept: Vec<KeptTrip>,
    /// Dropped trip indices with their fixed direct-ride cost; the summed
    /// constant is added to every reported objective.
    pub dropped: Vec<(usize, f64)>,
    pub dropped_cost: f64,
    pub stats: ReductionStats,
}

/// Runs trip filtering then link filtering over a validated instance.
pub fn preprocess(inst: &Instance) -> Preprocessed {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut arcs_before = 0;
    let mut arcs_after = 0;
    for (idx, trip) in inst.trips.iter().enumerate() {
        let pattern = best_open_pattern(inst, trip);
        if pattern.kind == PatternKind::DirectTaxi {
            dropped.push((idx, pattern.cost));
        } else {
            let arcs = useful_arcs(inst, trip);
            arcs_before += UsefulArcs::full(inst, trip).len();
            arcs_after += arcs.len();
            kept.push(KeptTrip { trip: idx, pattern, arcs });
        }
    }
    let dropped_cost = dropped.iter().map(|&(_, c)| c).sum();
    let stats = ReductionStats {
        trips_total: inst.trips.len(),
        trips_kept: kept.len(),
        taxi_arcs_before: arcs_before,
        taxi_arcs_after: arcs_after,
    };
    Preprocessed { kept, dropped, dropped_cost, stats }
}
