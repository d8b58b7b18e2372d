//! Post-solve analysis: curtailment, cost decomposition, emissions and
//! switching actions.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{FormulationConfig, ResUsage};
use crate::scenario::ScenarioSet;
use crate::solution::ScheduleSolution;
use crate::solver::SolveStatus;
use crate::system::PowerSystem;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("post-contingency curtailment needs at least one contingency")]
    NoContingencies,
    #[error("scenario `{0}` of the solution is missing from the scenario set")]
    UnknownScenario(String),
    #[error("RES unit `{unit}` has no availability in scenario `{scenario}`")]
    MissingAvailability { scenario: String, unit: String },
    #[error("generator `{0}` of the solution is missing from the system")]
    UnknownGenerator(String),
    #[error("RES unit `{0}` of the solution is missing from the system")]
    UnknownRes(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Probability and `[t][w]` availability per scenario, in solution order.
fn weighted_availability(sol: &ScheduleSolution, scen: &ScenarioSet) -> Result<Vec<(f64, Vec<Vec<f64>>)>, MetricsError> {
    let horizon = sol.horizon();
    sol.scenario_ids
        .iter()
        .map(|sid| {
            let s = scen
                .scenarios
                .iter()
                .find(|s| &s.id == sid)
                .ok_or_else(|| MetricsError::UnknownScenario(sid.clone()))?;
            let mut grid = vec![vec![0.0; sol.res_ids.len()]; horizon];
            for (w, wid) in sol.res_ids.iter().enumerate() {
                let profile = s.availability.get(wid).ok_or_else(|| MetricsError::MissingAvailability {
                    scenario: sid.clone(),
                    unit: wid.clone(),
                })?;
                for (t, row) in grid.iter_mut().enumerate() {
                    row[w] = profile.get(t).copied().unwrap_or(0.0);
                }
            }
            Ok((s.probability, grid))
        })
        .collect()
}

/// Expected base-case curtailment, MW summed over units and periods.
pub fn base_case_curtailment(sol: &ScheduleSolution, scen: &ScenarioSet) -> Result<f64, MetricsError> {
    let avail = weighted_availability(sol, scen)?;
    let mut total = 0.0;
    for (s, (pi, grid)) in avail.iter().enumerate() {
        for (t, row) in grid.iter().enumerate() {
            for (w, a) in row.iter().enumerate() {
                total += pi * (a - sol.pw[s][t][w]);
            }
        }
    }
    Ok(total)
}

/// Expected curtailment per contingency block, `[c]`, before averaging.
pub fn contingency_curtailments(sol: &ScheduleSolution, scen: &ScenarioSet) -> Result<Vec<f64>, MetricsError> {
    let avail = weighted_availability(sol, scen)?;
    Ok(sol
        .pw_c
        .iter()
        .map(|by_s| {
            let mut total = 0.0;
            for (s, (pi, grid)) in avail.iter().enumerate() {
                for (t, row) in grid.iter().enumerate() {
                    for (w, a) in row.iter().enumerate() {
                        total += pi * (a - by_s[s][t][w]);
                    }
                }
            }
            total
        })
        .collect())
}

/// Expected post-contingency curtailment averaged over `n_contingencies`.
pub fn post_contingency_curtailment(
    sol: &ScheduleSolution,
    scen: &ScenarioSet,
    n_contingencies: usize,
) -> Result<f64, MetricsError> {
    if n_contingencies == 0 {
        return Err(MetricsError::NoContingencies);
    }
    Ok(contingency_curtailments(sol, scen)?.iter().sum::<f64>() / n_contingencies as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub no_load: f64,
    pub startup: f64,
    pub energy: f64,
    pub penalty: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.no_load + self.startup + self.energy + self.penalty
    }

    /// Whether the components sum to `objective` within `rel` (relative to
    /// max(1, |objective|)).
    pub fn reconciles(&self, objective: f64, rel: f64) -> bool {
        (self.total() - objective).abs() <= rel * objective.abs().max(1.0)
    }
}

/// Objective terms recomputed from solution values.
pub fn cost_breakdown(
    sol: &ScheduleSolution,
    sys: &PowerSystem,
    scen: &ScenarioSet,
    cfg: &FormulationConfig,
) -> Result<CostBreakdown, MetricsError> {
    let gens = sol
        .generator_ids
        .iter()
        .map(|id| {
            sys.generators
                .iter()
                .find(|g| &g.id == id)
                .ok_or_else(|| MetricsError::UnknownGenerator(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let avail = weighted_availability(sol, scen)?;
    let mut out = CostBreakdown::default();
    for (g, gen) in gens.iter().enumerate() {
        for t in 0..sol.horizon() {
            out.no_load += gen.cost_no_load * sol.u[g][t];
            out.startup += gen.cost_startup * sol.v[g][t];
            for (s, (pi, _)) in avail.iter().enumerate() {
                out.energy += pi * gen.cost_linear * sol.pg[s][t][g];
            }
        }
    }
    if cfg.penalty_enabled {
        let penalties = sol
            .res_ids
            .iter()
            .map(|id| {
                sys.res_units
                    .iter()
                    .find(|w| &w.id == id)
                    .map(|w| w.curtail_penalty)
                    .ok_or_else(|| MetricsError::UnknownRes(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for by_s in &sol.pw_c {
            for (s, (pi, grid)) in avail.iter().enumerate() {
                for (t, row) in grid.iter().enumerate() {
                    for (w, a) in row.iter().enumerate() {
                        out.penalty += pi * penalties[w] * (a - by_s[s][t][w]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Expected base-case emissions, lbs.
pub fn carbon_emissions(sol: &ScheduleSolution, sys: &PowerSystem, scen: &ScenarioSet) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    for (s, sid) in sol.scenario_ids.iter().enumerate() {
        let pi = scen
            .scenarios
            .iter()
            .find(|x| &x.id == sid)
            .ok_or_else(|| MetricsError::UnknownScenario(sid.clone()))?
            .probability;
        for (g, gid) in sol.generator_ids.iter().enumerate() {
            let rate = sys
                .generators
                .iter()
                .find(|x| &x.id == gid)
                .ok_or_else(|| MetricsError::UnknownGenerator(gid.clone()))?
                .emission_rate;
            for t in 0..sol.horizon() {
                total += pi * rate * sol.pg[s][t][g];
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchAction {
    /// Outaged line id.
    pub contingency: String,
    /// 1-based.
    pub period: usize,
    pub scenario: String,
    pub opened_line: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchingReport {
    pub actions: Vec<SwitchAction>,
    /// Openings per line id.
    pub histogram: BTreeMap<String, usize>,
}

/// Lines opened in response to each contingency.
pub fn switching_report(sol: &ScheduleSolution) -> SwitchingReport {
    let mut report = SwitchingReport::default();
    for (c, by_s) in sol.z.iter().enumerate() {
        let outaged = &sol.contingency_ids[c];
        for (s, by_t) in by_s.iter().enumerate() {
            for (t, lines) in by_t.iter().enumerate() {
                for (k, z) in lines.iter().enumerate() {
                    let id = &sol.line_ids[k];
                    if id == outaged || *z >= 0.5 {
                        continue;
                    }
                    report.actions.push(SwitchAction {
                        contingency: outaged.clone(),
                        period: t + 1,
                        scenario: sol.scenario_ids[s].clone(),
                        opened_line: id.clone(),
                    });
                    *report.histogram.entry(id.clone()).or_default() += 1;
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model_kind: String,
    pub penalty_enabled: bool,
    pub res_usage: ResUsage,
    pub status: SolveStatus,
    /// Recomputed objective, $.
    pub total_cost: f64,
    pub solver_objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub bcc: f64,
    /// `None` without contingencies.
    pub pcc: Option<f64>,
    pub emissions: f64,
    pub costs: CostBreakdown,
    pub switching: SwitchingReport,
    pub n_contingencies: usize,
    /// Seconds; left out of serialized reports so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Curtailment cells read NA when the run could not curtail and had no
    /// incentive against it.
    fn curtailment_cell(&self, value: Option<f64>) -> String {
        if self.res_usage == ResUsage::Complete && !self.penalty_enabled {
            return "NA".into();
        }
        // Solver noise can leave values like -1e-9; print those as 0.00.
        value.map_or_else(|| "NA".into(), |v| format!("{:.2}", if v.abs() < 5e-3 { 0.0 } else { v }))
    }
}

/// Write a comparison table: one column per labelled run, rows total cost,
/// BCC and PCC.
pub fn write_table_csv<W: Write>(out: W, runs: &[(String, RunReport)]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["metric".to_string()];
    header.extend(runs.iter().map(|(label, _)| label.clone()));
    w.write_record(&header)?;
    let mut cost = vec!["Total cost ($)".to_string()];
    cost.extend(runs.iter().map(|(_, r)| format!("{:.2}", r.total_cost)));
    w.write_record(&cost)?;
    let mut bcc = vec!["BCC (MW)".to_string()];
    bcc.extend(runs.iter().map(|(_, r)| r.curtailment_cell(Some(r.bcc))));
    w.write_record(&bcc)?;
    let mut pcc = vec!["PCC (MW)".to_string()];
    pcc.extend(runs.iter().map(|(_, r)| r.curtailment_cell(r.pcc)));
    w.write_record(&pcc)?;
    w.flush()?;
    Ok(())
}
