//! Small instances shared by formulation, solver and oracle unit tests.

use crate::scenario::{Scenario, ScenarioSet};
use crate::system::fixtures::*;
use crate::system::{PowerSystem, ResUnit};

/// Scenarios with the given probabilities and per-unit availability rows.
pub fn scenarios(probs: &[f64], units: &[&str], avail: &[&[&[f64]]]) -> ScenarioSet {
    ScenarioSet {
        scenarios: probs
            .iter()
            .enumerate()
            .map(|(s, &probability)| Scenario {
                id: format!("s{}", s + 1),
                probability,
                availability: units
                    .iter()
                    .enumerate()
                    .map(|(w, id)| (id.to_string(), avail[s][w].to_vec()))
                    .collect(),
            })
            .collect(),
    }
}

/// One certain scenario for systems without RES units.
pub fn single() -> ScenarioSet {
    scenarios(&[1.0], &[], &[&[]])
}

pub fn res(id: &str, bus: &str, penalty: f64) -> ResUnit {
    ResUnit {
        id: id.into(),
        bus_id: bus.into(),
        curtail_penalty: penalty,
    }
}

/// Triangle with a second generator at `b` and a wind unit at `b`, `horizon`
/// periods of 60 MW load at `c`.
pub fn wind_triangle(horizon: usize) -> PowerSystem {
    let load = vec![60.0; horizon];
    let mut sys = system(
        &["a", "b", "c"],
        vec![
            line("ab", "a", "b", 10.0, 100.0),
            line("bc", "b", "c", 10.0, 100.0),
            line("ca", "c", "a", 10.0, 100.0),
        ],
        vec![gen("g1", "a", 0.0, 200.0, 10.0), gen("g2", "b", 10.0, 80.0, 30.0)],
        &[("c", &load)],
    );
    sys.res_units.push(res("w1", "b", 100.0));
    sys.rebuild_adjacency();
    sys
}
