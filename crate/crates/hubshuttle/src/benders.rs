//! The Benders loop: master MIP over leg openings, per-trip subproblems,
//! cut generation, bounds and termination.
//!
//! The master chooses a circulation-feasible 0/1 leg vector plus one
//! surrogate variable per cut group. Every generated cut is tight at the
//! network it came from, so a network can repeat at most once before the
//! bounds close; the loop therefore terminates within finitely many
//! iterations even without the iteration cap.

use crate::cuts::{
    build_cuts, group_trips, BendersCut, BundlingScheme, CutError, GroupKey, HubGrouping,
};
use crate::instance::{Instance, Legs};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::mip::{solve_mip, MipError, MipStatus, MixedIntegerProgram, DEFAULT_GAP};
use crate::preprocess::{preprocess, Preprocessed, ReductionStats};
use crate::subproblem::{
    init_core_point, pareto_duals, solve_trip, update_core_point, SubproblemError, TripDuals,
};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct BendersConfig {
    pub scheme: BundlingScheme,
    pub pareto: bool,
    pub core_update: bool,
    /// Initial core-point value for every leg, strictly inside (0, 1).
    pub zeta: f64,
    pub max_iter: usize,
    /// Relative optimality gap on `upper - lower`.
    pub gap_tol: f64,
    pub hub_grouping: HubGrouping,
}

impl Default for BendersConfig {
    fn default() -> Self {
        BendersConfig {
            scheme: BundlingScheme::Multi,
            pareto: true,
            core_update: true,
            zeta: 0.5,
            max_iter: 100,
            gap_tol: 1e-6,
            hub_grouping: HubGrouping::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error("max_iter must be at least 1")]
    BadMaxIter,
    #[error("gap_tol must be positive, got {0}")]
    BadGapTol(f64),
    #[error("master problem reported infeasible; the circulation model admits the empty network, so this is a solver defect")]
    MasterInfeasible,
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Cut(#[from] CutError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BendersStatus {
    Optimal,
    IterationLimit,
}

/// Per-iteration trace entry. Bounds include the dropped-trip constant.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iter: usize,
    pub lower: f64,
    pub upper: f64,
    /// Cuts present in the master when it was solved this iteration.
    pub cuts: usize,
    pub master_ms: u128,
    pub sub_ms: u128,
    /// Smallest advantage of the Pareto cut over the standard cut at the
    /// core point, over this iteration's trips. Only when Pareto is on.
    pub pareto_min_margin: Option<f64>,
    /// Largest deviation of the Pareto cut value at the generating network
    /// from the subproblem optimum. Only when Pareto is on.
    pub pareto_max_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BendersRun {
    pub status: BendersStatus,
    /// Best objective found, including the dropped-trip constant.
    pub objective: f64,
    pub lower_bound: f64,
    /// Open legs of the best network, as hub pairs.
    pub open_legs: Vec<(usize, usize)>,
    /// Best network as a 0/1 vector in leg order.
    pub z: Vec<bool>,
    pub iterations: Vec<IterationRecord>,
    pub cuts_total: usize,
    pub reductions: ReductionStats,
    pub dropped_cost: f64,
}

/// Total cost of operating the network `open`: every kept trip's optimal
/// routing plus leg-opening costs plus the dropped-trip constant.
pub fn upper_bound(inst: &Instance, pre: &Preprocessed, legs: &Legs, open: &[bool]) -> f64 {
    let routing: f64 = pre
        .kept
        .par_iter()
        .map(|k| solve_trip(inst, k.trip, &k.arcs, legs, open).sigma)
        .sum();
    let opening: f64 = legs
        .pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| open[k])
        .map(|(_, &(h, l))| inst.bus_open(h, l))
        .sum();
    routing + opening + pre.dropped_cost
}

fn build_master(
    inst: &Instance,
    legs: &Legs,
    groups: &[GroupKey],
    cuts: &[BendersCut],
) -> MixedIntegerProgram {
    let nz = legs.len();
    let ng = groups.len();
    let mut lp = LinearProgram::new(Sense::Minimize, nz + ng);
    for (k, &(h, l)) in legs.pairs.iter().enumerate() {
        lp.set_objective(k, inst.bus_open(h, l));
        lp.set_bounds(k, 0.0, 1.0);
    }
    for g in 0..ng {
        lp.set_objective(nz + g, 1.0);
        lp.set_bounds(nz + g, 0.0, f64::INFINITY);
    }
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
    }
    for cut in cuts {
        let g = groups
            .iter()
            .position(|&key| key == cut.group)
            .expect("cut group comes from the fixed partition");
        let mut terms: Vec<(usize, f64)> = vec![(nz + g, 1.0)];
        terms.extend(cut.coeffs.iter().map(|&(k, c)| (k, c)));
        lp.add_row(Relation::Ge, cut.constant, &terms);
    }
    MixedIntegerProgram { lp, binaries: (0..nz).collect() }
}

pub fn solve_benders(inst: &Instance, config: &BendersConfig) -> Result<BendersRun, BendersError> {
    if config.max_iter == 0 {
        return Err(BendersError::BadMaxIter);
    }
    if !(config.gap_tol > 0.0) {
        return Err(BendersError::BadGapTol(config.gap_tol));
    }
    let legs = Legs::new(&inst.hubs);
    let pre = preprocess(inst);

    if pre.kept.is_empty() {
        // Every trip rides direct regardless of the network; the empty
        // network is optimal.
        return Ok(BendersRun {
            status: BendersStatus::Optimal,
            objective: pre.dropped_cost,
            lower_bound: pre.dropped_cost,
            open_legs: Vec::new(),
            z: vec![false; legs.len()],
            iterations: Vec::new(),
            cuts_total: 0,
            reductions: pre.stats,
            dropped_cost: pre.dropped_cost,
        });
    }

    let partition = group_trips(inst, config.scheme, &pre, config.hub_grouping);
    let groups: Vec<GroupKey> = partition.iter().map(|&(k, _)| k).collect();
    let mut core = if config.pareto {
        Some(init_core_point(&legs, config.zeta)?)
    } else {
        None
    };

    let mut cuts: Vec<BendersCut> = Vec::new();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut status = BendersStatus::IterationLimit;

    for iter in 1..=config.max_iter {
        let t0 = Instant::now();
        let master = build_master(inst, &legs, &groups, &cuts);
        let msol = solve_mip(&master, DEFAULT_GAP)?;
        let master_ms = t0.elapsed().as_millis();
        if msol.status != MipStatus::Optimal {
            return Err(BendersError::MasterInfeasible);
        }
        lower = lower.max(msol.objective + pre.dropped_cost);
        let zbar: Vec<bool> = (0..legs.len()).map(|k| msol.values[k] > 0.5).collect();

        let t1 = Instant::now();
        let std_duals: Vec<TripDuals> = pre
            .kept
            .par_iter()
            .map(|k| solve_trip(inst, k.trip, &k.arcs, &legs, &zbar))
            .collect();
        let routing: f64 = std_duals.iter().map(|d| d.sigma).sum();
        let opening: f64 = legs
            .pairs
            .iter()
            .enumerate()
            .filter(|&(k, _)| zbar[k])
            .map(|(_, &(h, l))| inst.bus_open(h, l))
            .sum();
        let upper = routing + opening + pre.dropped_cost;
        if best.as_ref().map_or(true, |&(b, _)| upper < b) {
            best = Some((upper, zbar.clone()));
        }
        let best_upper = best.as_ref().unwrap().0;

        let converged = best_upper - lower <= config.gap_tol * lower.abs().max(1.0);

        let mut pareto_min_margin = None;
        let mut pareto_max_residual = None;
        let cut_duals: Vec<TripDuals> = if !converged && config.pareto {
            let cp = core.as_ref().unwrap();
            let par: Vec<TripDuals> = pre
                .kept
                .par_iter()
                .zip(&std_duals)
                .map(|(k, std)| {
                    pareto_duals(inst, k.trip, &k.arcs, &legs, &zbar, cp, std.sigma)
                })
                .collect::<Result<_, _>>()?;
            let zf: Vec<f64> = zbar.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let mut margin = f64::INFINITY;
            let mut residual = 0.0f64;
            for (p, s) in par.iter().zip(&std_duals) {
                let r = &inst.trips[p.trip];
                margin = margin.min(p.cut_value(r, &cp.z) - s.cut_value(r, &cp.z));
                residual = residual.max((p.cut_value(r, &zf) - s.sigma).abs());
            }
            pareto_min_margin = Some(margin);
            pareto_max_residual = Some(residual);
            par
        } else {
            std_duals
        };
        let sub_ms = t1.elapsed().as_millis();

        records.push(IterationRecord {
            iter,
            lower,
            upper: best_upper,
            cuts: cuts.len(),
            master_ms,
            sub_ms,
            pareto_min_margin,
            pareto_max_residual,
        });

        if converged {
            status = BendersStatus::Optimal;
            break;
        }

        cuts.extend(build_cuts(inst, &legs, &pre, &cut_duals, &partition, iter)?);
        if config.pareto && config.core_update {
            core = Some(update_core_point(core.as_ref().unwrap(), &zbar));
        }
    }

    let (objective, z) = best.expect("at least one iteration ran");
    let open_legs = legs
        .pairs
        .iter()
        .enumerate()
        .filter(|&(k, _)| z[k])
        .map(|(_, &p)| p)
        .collect();
    Ok(BendersRun {
        status,
        objective,
        lower_bound: lower,
        open_legs,
        z,
        iterations: records,
        cuts_total: cuts.len(),
        reductions: pre.stats,
        dropped_cost: pre.dropped_cost,
    })
}
