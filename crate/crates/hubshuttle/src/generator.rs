//! Synthetic instance generator.
//!
//! Nodes are drawn uniformly in a square; road distances are Euclidean
//! distances scaled by a constant road factor (which preserves the triangle
//! inequality) and travel times assume a constant speed. Trip endpoints are
//! sampled proportionally to per-node population weights, and hubs are
//! selected by the weighted p-median heuristic on the resulting demand.

use crate::instance::{CostParams, Instance, Node, Trip};
use crate::pmedian::select_hubs;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    /// Ratio of road distance to straight-line distance.
    pub road_factor: f64,
    /// Average travel speed in km/h.
    pub speed_kmh: f64,
    /// Side length of the square the nodes live in, km.
    pub square_km: f64,
    /// Maximum passengers per trip.
    pub max_passengers: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { road_factor: 1.3, speed_kmh: 50.0, square_km: 30.0, max_passengers: 4 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("n_hubs = {hubs} exceeds n_nodes = {nodes}")]
    TooManyHubs { hubs: usize, nodes: usize },
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("need at least 1 trip")]
    NoTrips,
    #[error("road_factor must be >= 1 and speed positive")]
    BadConfig,
}

/// Total passengers starting or ending at each node; the demand vector the
/// generator feeds to hub selection.
pub fn endpoint_demand(inst: &Instance) -> Vec<f64> {
    let mut w = vec![0.0; inst.n()];
    for t in &inst.trips {
        w[t.origin] += t.passengers as f64;
        w[t.destination] += t.passengers as f64;
    }
    w
}

pub fn generate(
    seed: u64,
    n_nodes: usize,
    n_hubs: usize,
    n_trips: usize,
    params: CostParams,
    config: GeneratorConfig,
) -> Result<Instance, GenerateError> {
    if n_nodes < 2 {
        return Err(GenerateError::TooFewNodes(n_nodes));
    }
    if n_hubs > n_nodes {
        return Err(GenerateError::TooManyHubs { hubs: n_hubs, nodes: n_nodes });
    }
    if n_trips == 0 {
        return Err(GenerateError::NoTrips);
    }
    if config.road_factor < 1.0 || config.speed_kmh <= 0.0 || config.square_km <= 0.0 {
        return Err(GenerateError::BadConfig);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let nodes: Vec<Node> = (0..n_nodes)
        .map(|id| Node {
            id,
            x: Some(rng.gen::<f64>() * config.square_km),
            y: Some(rng.gen::<f64>() * config.square_km),
        })
        .collect();

    let dist: Vec<Vec<f64>> = (0..n_nodes)
        .map(|i| {
            (0..n_nodes)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = nodes[i].x.unwrap() - nodes[j].x.unwrap();
                        let dy = nodes[i].y.unwrap() - nodes[j].y.unwrap();
                        config.road_factor * (dx * dx + dy * dy).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let secs_per_km = 3600.0 / config.speed_kmh;
    let time: Vec<Vec<f64>> =
        dist.iter().map(|row| row.iter().map(|d| d * secs_per_km).collect()).collect();

    // Population weights skewed so a few nodes dominate demand, the way a
    // handful of town centers would.
    let population: Vec<f64> = (0..n_nodes).map(|_| rng.gen::<f64>().powi(2) + 0.05).collect();
    let picker = WeightedIndex::new(&population).expect("positive weights");
    let trips: Vec<Trip> = (0..n_trips)
        .map(|_| {
            let origin = picker.sample(&mut rng);
            let destination = loop {
                let d = picker.sample(&mut rng);
                if d != origin {
                    break d;
                }
            };
            let passengers = rng.gen_range(1..=config.max_passengers.max(1));
            Trip { origin, destination, passengers }
        })
        .collect();

    let mut inst =
        Instance { nodes, dist, time, hubs: Vec::new(), trips, params };
    inst.hubs = select_hubs(&inst.dist, &endpoint_demand(&inst), n_hubs)
        .expect("n_hubs <= n_nodes checked above");
    debug_assert!(inst.validate().is_empty());
    Ok(inst)
}
