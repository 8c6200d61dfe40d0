//! Bundling of per-trip dual solutions into master cuts.
//!
//! A bundling scheme partitions the kept trips; each nonempty group
//! contributes one cut `sum(u_o - u_d) - sum_k z_k * (sum v_k) <= q_group`
//! per iteration. Summing the group cuts componentwise recovers the
//! single-cut scheme exactly.

use crate::instance::{Instance, Legs};
use crate::preprocess::Preprocessed;
use crate::subproblem::TripDuals;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BundlingScheme {
    /// One aggregated cut over all trips.
    One,
    /// One cut per trip.
    Multi,
    /// Grouped by the hub closest to the trip origin.
    Hubs,
    /// Grouped by trip origin node.
    Origin,
    /// Grouped by the bus leg of the trip's all-open best pattern.
    Legs,
}

impl BundlingScheme {
    pub const ALL: [BundlingScheme; 5] = [
        BundlingScheme::One,
        BundlingScheme::Multi,
        BundlingScheme::Hubs,
        BundlingScheme::Origin,
        BundlingScheme::Legs,
    ];
}

impl std::str::FromStr for BundlingScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(BundlingScheme::One),
            "multi" => Ok(BundlingScheme::Multi),
            "hubs" => Ok(BundlingScheme::Hubs),
            "origin" => Ok(BundlingScheme::Origin),
            "legs" => Ok(BundlingScheme::Legs),
            other => Err(format!("unknown bundling scheme '{other}'")),
        }
    }
}

/// Which endpoint the Hubs scheme measures hub closeness from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HubGrouping {
    #[default]
    ClosestToOrigin,
    ClosestToEither,
}

/// Scheme-dependent identity of one cut group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupKey {
    All,
    Trip(usize),
    Hub(usize),
    Origin(usize),
    Leg(usize, usize),
}

impl std::fmt::Display for GroupKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupKey::All => write!(f, "all"),
            GroupKey::Trip(r) => write!(f, "trip:{r}"),
            GroupKey::Hub(h) => write!(f, "hub:{h}"),
            GroupKey::Origin(o) => write!(f, "origin:{o}"),
            GroupKey::Leg(h, l) => write!(f, "leg:{h}-{l}"),
        }
    }
}

/// An affine lower bound on one group's surrogate variable:
/// `constant - sum_k coeffs_k * z_k <= q_group`.
#[derive(Debug, Clone)]
pub struct BendersCut {
    pub group: GroupKey,
    pub constant: f64,
    /// Sparse nonnegative coefficients, by leg index.
    pub coeffs: Vec<(usize, f64)>,
    pub iteration: usize,
}

impl BendersCut {
    pub fn value_at(&self, z: &[f64]) -> f64 {
        self.constant - self.coeffs.iter().map(|&(k, c)| c * z[k]).sum::<f64>()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CutError {
    #[error("grouping is not a partition: kept trip {0} appears {1} times")]
    NotAPartition(usize, usize),
    #[error("need one dual solution per kept trip: got {got}, expected {expected}")]
    DualCountMismatch { got: usize, expected: usize },
}

fn hub_key(inst: &Instance, origin: usize, destination: usize, rule: HubGrouping) -> usize {
    let closest_to = |node: usize| -> (f64, usize) {
        let mut hubs = inst.hubs.clone();
        hubs.sort_unstable();
        hubs.iter()
            .map(|&h| (inst.taxi(node, h), h))
            .fold((f64::INFINITY, usize::MAX), |acc, cand| {
                if cand.0 < acc.0 - 1e-12 {
                    cand
                } else {
                    acc
                }
            })
    };
    match rule {
        HubGrouping::ClosestToOrigin => closest_to(origin).1,
        HubGrouping::ClosestToEither => {
            let a = closest_to(origin);
            let b = closest_to(destination);
            if b.0 < a.0 - 1e-12 {
                b.1
            } else {
                a.1
            }
        }
    }
}

/// Partitions the kept trips under `scheme`. Returns `(key, kept-trip
/// positions)` pairs in key order; every kept trip lands in exactly one
/// group.
pub fn group_trips(
    inst: &Instance,
    scheme: BundlingScheme,
    pre: &Preprocessed,
    rule: HubGrouping,
) -> Vec<(GroupKey, Vec<usize>)> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (pos, kept) in pre.kept.iter().enumerate() {
        let trip = &inst.trips[kept.trip];
        let key = match scheme {
            BundlingScheme::One => GroupKey::All,
            BundlingScheme::Multi => GroupKey::Trip(kept.trip),
            BundlingScheme::Hubs => {
                GroupKey::Hub(hub_key(inst, trip.origin, trip.destination, rule))
            }
            BundlingScheme::Origin => GroupKey::Origin(trip.origin),
            BundlingScheme::Legs => {
                let (h, l) = kept
                    .pattern
                    .bus_leg()
                    .expect("kept trips always have a non-direct best pattern");
                GroupKey::Leg(h, l)
            }
        };
        groups.entry(key).or_default().push(pos);
    }
    groups.into_iter().collect()
}

/// Builds one cut per nonempty group from this iteration's dual solutions.
/// `duals` must hold one entry per kept trip, in kept order.
pub fn build_cuts(
    inst: &Instance,
    legs: &Legs,
    pre: &Preprocessed,
    duals: &[TripDuals],
    partition: &[(GroupKey, Vec<usize>)],
    iteration: usize,
) -> Result<Vec<BendersCut>, CutError> {
    if duals.len() != pre.kept.len() {
        return Err(CutError::DualCountMismatch { got: duals.len(), expected: pre.kept.len() });
    }
    let mut seen = vec![0usize; pre.kept.len()];
    for (_, members) in partition {
        for &pos in members {
            seen[pos] += 1;
        }
    }
    if let Some(pos) = seen.iter().position(|&c| c != 1) {
        return Err(CutError::NotAPartition(pos, seen[pos]));
    }
    let mut cuts = Vec::with_capacity(partition.len());
    for (key, members) in partition {
        let mut constant = 0.0;
        let mut dense = vec![0.0; legs.len()];
        for &pos in members {
            let d = &duals[pos];
            let r = &inst.trips[d.trip];
            constant += d.u[&r.origin] - d.u[&r.destination];
            for (k, &vk) in d.v.iter().enumerate() {
                dense[k] += vk;
            }
        }
        let coeffs = dense
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .collect();
        cuts.push(BendersCut { group: *key, constant, coeffs, iteration });
    }
    Ok(cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, GeneratorConfig};
    use crate::instance::CostParams;
    use crate::preprocess::preprocess;
    use crate::subproblem::solve_trip;

    fn setup(seed: u64) -> (Instance, Legs, Preprocessed, Vec<TripDuals>) {
        let inst =
            generate(seed, 9, 3, 14, CostParams::default(), GeneratorConfig::default()).unwrap();
        let legs = Legs::new(&inst.hubs);
        let pre = preprocess(&inst);
        let closed = vec![false; legs.len()];
        let duals: Vec<TripDuals> = pre
            .kept
            .iter()
            .map(|k| solve_trip(&inst, k.trip, &k.arcs, &legs, &closed))
            .collect();
        (inst, legs, pre, duals)
    }

    #[test]
    fn multi_is_all_singletons() {
        let (inst, _, pre, _) = setup(4);
        let groups = group_trips(&inst, BundlingScheme::Multi, &pre, HubGrouping::default());
        assert_eq!(groups.len(), pre.kept.len());
        assert!(groups.iter().all(|(_, m)| m.len() == 1));
    }

    #[test]
    fn group_counts_respect_scheme_caps() {
        let (inst, _, pre, _) = setup(4);
        let h = inst.hubs.len();
        for scheme in BundlingScheme::ALL {
            let groups = group_trips(&inst, scheme, &pre, HubGrouping::default());
            let total: usize = groups.iter().map(|(_, m)| m.len()).sum();
            assert_eq!(total, pre.kept.len(), "{scheme:?} must partition");
            match scheme {
                BundlingScheme::One => assert_eq!(groups.len(), 1),
                BundlingScheme::Multi => assert_eq!(groups.len(), pre.kept.len()),
                BundlingScheme::Hubs => assert!(groups.len() <= h),
                BundlingScheme::Origin => assert!(groups.len() <= inst.n()),
                BundlingScheme::Legs => {
                    assert!(groups.len() <= h * (h - 1));
                    for (key, _) in &groups {
                        assert!(matches!(key, GroupKey::Leg(a, b) if a != b));
                    }
                }
            }
        }
    }

    #[test]
    fn group_cuts_sum_to_one_cut() {
        let (inst, legs, pre, duals) = setup(6);
        let one = group_trips(&inst, BundlingScheme::One, &pre, HubGrouping::default());
        let one_cut =
            &build_cuts(&inst, &legs, &pre, &duals, &one, 0).unwrap()[0];
        for scheme in BundlingScheme::ALL {
            let part = group_trips(&inst, scheme, &pre, HubGrouping::default());
            let cuts = build_cuts(&inst, &legs, &pre, &duals, &part, 0).unwrap();
            let const_sum: f64 = cuts.iter().map(|c| c.constant).sum();
            assert!((const_sum - one_cut.constant).abs() < 1e-9, "{scheme:?}");
            let mut dense = vec![0.0; legs.len()];
            for cut in &cuts {
                for &(k, c) in &cut.coeffs {
                    dense[k] += c;
                }
            }
            for k in 0..legs.len() {
                let one_c = one_cut
                    .coeffs
                    .iter()
                    .find(|&&(j, _)| j == k)
                    .map_or(0.0, |&(_, c)| c);
                assert!((dense[k] - one_c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cuts_are_tight_at_generation() {
        let (inst, legs, pre, duals) = setup(8);
        let z0 = vec![0.0; legs.len()];
        for scheme in BundlingScheme::ALL {
            let part = group_trips(&inst, scheme, &pre, HubGrouping::default());
            let cuts = build_cuts(&inst, &legs, &pre, &duals, &part, 0).unwrap();
            for ((_, members), cut) in part.iter().zip(&cuts) {
                let sum_sigma: f64 = members.iter().map(|&pos| duals[pos].sigma).sum();
                assert!((cut.value_at(&z0) - sum_sigma).abs() < 1e-6);
                assert!(cut.coeffs.iter().all(|&(_, c)| c >= 0.0));
                assert!(cut.constant.is_finite());
            }
        }
    }

    #[test]
    fn rejects_non_partition() {
        let (inst, legs, pre, duals) = setup(4);
        let mut part = group_trips(&inst, BundlingScheme::Multi, &pre, HubGrouping::default());
        let dup = part.last().unwrap().1[0];
        part[0].1.push(dup);
        assert!(matches!(
            build_cuts(&inst, &legs, &pre, &duals, &part, 0),
            Err(CutError::NotAPartition(_, 2))
        ));
    }
}
