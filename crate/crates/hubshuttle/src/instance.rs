//! Problem data and cost model.
//!
//! Units are fixed throughout: distances in kilometers, times in seconds,
//! money in dollars. Matrices are dense, indexed `[from][to]`.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Tolerance used when checking the triangle inequality and other
/// data-level comparisons.
pub const DATA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trip {
    pub origin: usize,
    pub destination: usize,
    pub passengers: u32,
}

/// Cost model constants: `taxi_per_km` and `bus_per_km` are $/km,
/// `bus_wait` is the average wait for a bus in seconds, `buses_per_day`
/// the number of bus runs the fixed opening cost pays for, and `alpha`
/// the time-vs-money conversion factor in [0,1] (time is weighted by
/// `alpha`, money by `1 - alpha`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub taxi_per_km: f64,
    pub bus_per_km: f64,
    #[serde(rename = "bus_wait_s")]
    pub bus_wait: f64,
    pub buses_per_day: f64,
    pub alpha: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            taxi_per_km: 1.96,
            bus_per_km: 4.5,
            bus_wait: 30.0,
            buses_per_day: 32.0,
            alpha: 1e-3,
        }
    }
}

/// Taxi arc cost: `(1 - alpha) * c * d + alpha * t`.
pub fn taxi_cost(params: &CostParams, d: f64, t: f64) -> f64 {
    (1.0 - params.alpha) * params.taxi_per_km * d + params.alpha * t
}

/// Bus ride convenience cost: `alpha * (t + S)`.
pub fn bus_ride_cost(params: &CostParams, t: f64) -> f64 {
    params.alpha * (t + params.bus_wait)
}

/// Fixed cost of opening a bus leg: `(1 - alpha) * b * n * d`.
pub fn bus_open_cost(params: &CostParams, d: f64) -> f64 {
    (1.0 - params.alpha) * params.bus_per_km * params.buses_per_day * d
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub nodes: Vec<Node>,
    pub dist: Vec<Vec<f64>>,
    pub time: Vec<Vec<f64>>,
    pub hubs: Vec<usize>,
    pub trips: Vec<Trip>,
    pub params: CostParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NodeIdsNotDense,
    MatrixNotSquare { name: &'static str },
    NegativeEntry { name: &'static str, i: usize, j: usize },
    NonZeroDiagonal { name: &'static str, i: usize },
    NotFinite { name: &'static str, i: usize, j: usize },
    TriangleInequality { name: &'static str, i: usize, j: usize, k: usize },
    HubOutOfRange { hub: usize },
    DuplicateHub { hub: usize },
    TripEndpointOutOfRange { trip: usize },
    TripZeroPassengers { trip: usize },
    /// Warning-level: such trips are dropped before solving.
    TripSelfLoop { trip: usize },
    BadParams { what: &'static str },
}

impl Violation {
    /// Warnings do not make the instance unusable; the offending data is
    /// dropped instead.
    pub fn is_warning(&self) -> bool {
        matches!(self, Violation::TripSelfLoop { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NodeIdsNotDense => write!(f, "node ids are not 0..n-1"),
            MatrixNotSquare { name } => write!(f, "{name} matrix is not |N|x|N|"),
            NegativeEntry { name, i, j } => write!(f, "{name}[{i}][{j}] is negative"),
            NonZeroDiagonal { name, i } => write!(f, "{name}[{i}][{i}] is not zero"),
            NotFinite { name, i, j } => write!(f, "{name}[{i}][{j}] is not finite"),
            TriangleInequality { name, i, j, k } => {
                write!(f, "triangle inequality violated in {name} at ({i},{j},{k})")
            }
            HubOutOfRange { hub } => write!(f, "hub {hub} is not a node"),
            DuplicateHub { hub } => write!(f, "hub {hub} listed twice"),
            TripEndpointOutOfRange { trip } => write!(f, "trip {trip} references a missing node"),
            TripZeroPassengers { trip } => write!(f, "trip {trip} has zero passengers"),
            TripSelfLoop { trip } => write!(f, "trip {trip} has origin == destination (dropped)"),
            BadParams { what } => write!(f, "bad cost parameters: {what}"),
        }
    }
}

impl Instance {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Unit taxi cost from `i` to `j`.
    pub fn taxi(&self, i: usize, j: usize) -> f64 {
        taxi_cost(&self.params, self.dist[i][j], self.time[i][j])
    }

    /// Unit bus ride cost on leg `(h, l)`.
    pub fn bus_ride(&self, h: usize, l: usize) -> f64 {
        bus_ride_cost(&self.params, self.time[h][l])
    }

    /// Fixed opening cost of leg `(h, l)`.
    pub fn bus_open(&self, h: usize, l: usize) -> f64 {
        bus_open_cost(&self.params, self.dist[h][l])
    }

    /// Passenger-scaled taxi cost for trip `r` on arc `(i, j)`.
    pub fn trip_taxi_cost(&self, r: &Trip, i: usize, j: usize) -> f64 {
        r.passengers as f64 * self.taxi(i, j)
    }

    /// Passenger-scaled bus ride cost for trip `r` on leg `(h, l)`.
    pub fn trip_bus_cost(&self, r: &Trip, h: usize, l: usize) -> f64 {
        r.passengers as f64 * self.bus_ride(h, l)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                out.push(Violation::NodeIdsNotDense);
                break;
            }
        }
        for (name, m) in [("dist", &self.dist), ("time", &self.time)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                out.push(Violation::MatrixNotSquare { name });
                continue;
            }
            for i in 0..n {
                if m[i][i].abs() > DATA_TOL {
                    out.push(Violation::NonZeroDiagonal { name, i });
                }
                for j in 0..n {
                    if !m[i][j].is_finite() {
                        out.push(Violation::NotFinite { name, i, j });
                    } else if m[i][j] < 0.0 {
                        out.push(Violation::NegativeEntry { name, i, j });
                    }
                }
            }
            'tri: for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if m[i][k] > m[i][j] + m[j][k] + DATA_TOL {
                            out.push(Violation::TriangleInequality { name, i, j, k });
                            // one counterexample per matrix is enough to report
                            break 'tri;
                        }
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        for &h in &self.hubs {
            if h >= n {
                out.push(Violation::HubOutOfRange { hub: h });
            } else if seen[h] {
                out.push(Violation::DuplicateHub { hub: h });
            } else {
                seen[h] = true;
            }
        }
        for (r, trip) in self.trips.iter().enumerate() {
            if trip.origin >= n || trip.destination >= n {
                out.push(Violation::TripEndpointOutOfRange { trip: r });
            } else if trip.origin == trip.destination {
                out.push(Violation::TripSelfLoop { trip: r });
            }
            if trip.passengers == 0 {
                out.push(Violation::TripZeroPassengers { trip: r });
            }
        }
        let p = &self.params;
        if !(0.0..=1.0).contains(&p.alpha) {
            out.push(Violation::BadParams { what: "alpha outside [0,1]" });
        }
        for (what, v) in [
            ("taxi_per_km negative", p.taxi_per_km),
            ("bus_per_km negative", p.bus_per_km),
            ("bus_wait negative", p.bus_wait),
            ("buses_per_day negative", p.buses_per_day),
        ] {
            if !(v >= 0.0) {
                out.push(Violation::BadParams { what });
            }
        }
        out
    }

    /// Drops trips with origin == destination, returning them. Such trips
    /// have a zero-cost optimal routing and only add degenerate subproblems.
    pub fn drop_self_loop_trips(&mut self) -> Vec<Trip> {
        let (dropped, kept): (Vec<_>, Vec<_>) =
            self.trips.iter().partition(|t| t.origin == t.destination);
        self.trips = kept;
        dropped
    }
}

/// Fixed ordering of the directed bus legs of an instance: all ordered hub
/// pairs `(h, l)` with `h != l`, lexicographic in the hub list order.
/// Self-loop legs are never modelled.
#[derive(Debug, Clone)]
pub struct Legs {
    pub pairs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl Legs {
    pub fn new(hubs: &[usize]) -> Self {
        let mut pairs = Vec::new();
        for &h in hubs {
            for &l in hubs {
                if h != l {
                    pairs.push((h, l));
                }
            }
        }
        pairs.sort_unstable();
        let index = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Legs { pairs, index }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn index_of(&self, h: usize, l: usize) -> Option<usize> {
        self.index.get(&(h, l)).copied()
    }

    /// Opening cost of every leg, in leg order.
    pub fn open_costs(&self, inst: &Instance) -> Vec<f64> {
        self.pairs.iter().map(|&(h, l)| inst.bus_open(h, l)).collect()
    }

    /// True when the 0/1 vector `z` opens as many incoming as outgoing legs
    /// at every hub.
    pub fn circulation_feasible(&self, inst: &Instance, z: &[bool]) -> bool {
        let n = inst.n();
        let mut balance = vec![0i64; n];
        for (k, &(h, l)) in self.pairs.iter().enumerate() {
            if z[k] {
                balance[h] += 1;
                balance[l] -= 1;
            }
        }
        inst.hubs.iter().all(|&h| balance[h] == 0)
    }
}
