//! Serialization of solver output: machine-readable report, per-iteration
//! trace CSV, and network drawings (DOT, GeoJSON).

use crate::benders::{BendersRun, BendersStatus, IterationRecord};
use crate::instance::Instance;
use crate::preprocess::ReductionStats;
use serde::Serialize;
use std::io::{self, Write};

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub trips_total: usize,
    pub trips_kept: usize,
    pub trip_reduction_pct: f64,
    pub taxi_arcs_before: usize,
    pub taxi_arcs_after: usize,
    pub arc_reduction_pct: f64,
}

impl From<&ReductionStats> for ReductionReport {
    fn from(s: &ReductionStats) -> Self {
        ReductionReport {
            trips_total: s.trips_total,
            trips_kept: s.trips_kept,
            trip_reduction_pct: s.trip_reduction_pct(),
            taxi_arcs_before: s.taxi_arcs_before,
            taxi_arcs_after: s.taxi_arcs_after,
            arc_reduction_pct: s.arc_reduction_pct(),
        }
    }
}

/// The solve result as written to stdout or a file.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: &'static str,
    pub objective: f64,
    pub lower_bound: f64,
    pub open_legs: Vec<(usize, usize)>,
    pub iterations: usize,
    pub cuts_total: usize,
    pub dropped_cost: f64,
    pub reductions: ReductionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

pub fn run_report(run: &BendersRun, trace_path: Option<String>) -> SolveReport {
    SolveReport {
        status: match run.status {
            BendersStatus::Optimal => "optimal",
            BendersStatus::IterationLimit => "iteration-limit",
        },
        objective: run.objective,
        lower_bound: run.lower_bound,
        open_legs: run.open_legs.clone(),
        iterations: run.iterations.len(),
        cuts_total: run.cuts_total,
        dropped_cost: run.dropped_cost,
        reductions: (&run.reductions).into(),
        trace_path,
    }
}

pub const TRACE_HEADER: &str = "iter,lower,upper,cuts,master_ms,sub_ms";

pub fn write_trace_csv<W: Write>(mut w: W, records: &[IterationRecord]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.iter, r.lower, r.upper, r.cuts, r.master_ms, r.sub_ms
        )?;
    }
    Ok(())
}

/// The open network as a Graphviz digraph: hubs as nodes, open legs as
/// edges labeled with their opening cost.
pub fn network_dot(inst: &Instance, open_legs: &[(usize, usize)]) -> String {
    let mut out = String::from("digraph network {\n");
    let mut hubs = inst.hubs.clone();
    hubs.sort_unstable();
    for h in hubs {
        out.push_str(&format!("  h{h} [label=\"hub {h}\"];\n"));
    }
    for &(h, l) in open_legs {
        out.push_str(&format!("  h{h} -> h{l} [label=\"{:.2}\"];\n", inst.bus_open(h, l)));
    }
    out.push_str("}\n");
    out
}

/// The open network as a GeoJSON FeatureCollection of LineStrings, or None
/// when any involved hub has no coordinates.
pub fn network_geojson(inst: &Instance, open_legs: &[(usize, usize)]) -> Option<serde_json::Value> {
    let coord = |n: usize| -> Option<[f64; 2]> {
        let node = &inst.nodes[n];
        Some([node.x?, node.y?])
    };
    let mut features = Vec::new();
    for &(h, l) in open_legs {
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [coord(h)?, coord(l)?],
            },
            "properties": {
                "from": h,
                "to": l,
                "open_cost": inst.bus_open(h, l),
            },
        }));
    }
    Some(serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benders::{solve_benders, BendersConfig};
    use crate::generator::{generate, GeneratorConfig};
    use crate::instance::CostParams;

    fn solved() -> (Instance, BendersRun) {
        let inst =
            generate(5, 8, 3, 12, CostParams::default(), GeneratorConfig::default()).unwrap();
        let run = solve_benders(&inst, &BendersConfig::default()).unwrap();
        (inst, run)
    }

    #[test]
    fn trace_csv_shape() {
        let (_, run) = solved();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &run.iterations).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let rest: Vec<&str> = lines.collect();
        assert_eq!(rest.len(), run.iterations.len());
        for (line, rec) in rest.iter().zip(&run.iterations) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 6);
            assert_eq!(fields[0].parse::<usize>().unwrap(), rec.iter);
            assert_eq!(fields[3].parse::<usize>().unwrap(), rec.cuts);
        }
    }

    #[test]
    fn report_serializes_with_expected_fields() {
        let (_, run) = solved();
        let report = run_report(&run, Some("trace.csv".into()));
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "status",
            "objective",
            "lower_bound",
            "open_legs",
            "iterations",
            "cuts_total",
            "dropped_cost",
            "reductions",
            "trace_path",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["status"], "optimal");
        assert_eq!(json["iterations"], run.iterations.len());
    }

    #[test]
    fn dot_lists_hubs_and_open_legs() {
        let (inst, run) = solved();
        let dot = network_dot(&inst, &run.open_legs);
        assert!(dot.starts_with("digraph network {"));
        for &h in &inst.hubs {
            assert!(dot.contains(&format!("h{h} [label=")));
        }
        for &(h, l) in &run.open_legs {
            assert!(dot.contains(&format!("h{h} -> h{l}")));
        }
    }

    #[test]
    fn geojson_requires_coordinates() {
        let (mut inst, run) = solved();
        let gj = network_geojson(&inst, &run.open_legs).unwrap();
        assert_eq!(gj["type"], "FeatureCollection");
        assert_eq!(gj["features"].as_array().unwrap().len(), run.open_legs.len());
        if let Some(&(h, _)) = run.open_legs.first() {
            inst.nodes[h].x = None;
            assert!(network_geojson(&inst, &run.open_legs).is_none());
        }
    }
}
