//! Brute-force certificates for tiny instances.
//!
//! [`enumerate_commitments`] fixes every admissible binary assignment in the
//! assembled problem and solves the remaining LP; [`exhaustive_switch_check`]
//! builds its own post-contingency LP for each single-line opening of one
//! block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{assemble_with, FormulationConfig, FormulationError, ModelData, ModelKind, ResUsage, VarKey};
use crate::milp::{Column, MilpProblem, Sense, Tag, VarId, VarKind};
use crate::scenario::ScenarioSet;
use crate::solver::{HighsSolver, MilpSolver, SolveOptions, SolveStatus, SolverError};
use crate::system::{PowerSystem, SystemError, SystemIndex};
use crate::topology::Contingency;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{what} = {value} exceeds the oracle cap of {cap}")]
    CapExceeded { what: &'static str, value: u128, cap: u128 },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("contingency refers to unknown line `{0}`")]
    UnknownLine(String),
    #[error("block data does not match the system: {0}")]
    Block(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    /// Commitment binaries, |G|·T.
    pub max_commitment_bits: usize,
    /// Admissible joint switch assignments.
    pub max_switch_combinations: u128,
    /// LP solves in total.
    pub max_lp_solves: u128,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_commitment_bits: 12,
            max_switch_combinations: 4096,
            max_lp_solves: 1 << 18,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `u[g][t]`, 0 or 1, keyed by generator id.
    pub commitment: BTreeMap<String, Vec<u8>>,
    /// Opened lines per block, `"c,t,s" -> [line ids]`; closed-everywhere
    /// blocks are omitted.
    pub opened: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub assignment: Assignment,
    pub status: SolveStatus,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub model_kind: ModelKind,
    pub best_objective: Option<f64>,
    pub argmin: Option<Assignment>,
    pub assignments: usize,
    pub feasible: usize,
    /// Deriving v from u loses no optimum: every unit has hourly and
    /// shut-down ramps at least p_max and nonnegative start-up cost.
    pub v_derivation_exact: bool,
    pub records: Vec<AssignmentRecord>,
}

impl Certificate {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Admissible open-sets per switching block `(c, t, s)`.
struct SwitchBlock {
    c: usize,
    t: usize,
    s: usize,
    candidates: Vec<usize>,
    /// Each entry is a bitmask over `candidates` of opened lines.
    options: Vec<u64>,
}

fn open_sets(n: usize, limit: usize) -> Vec<u64> {
    (0..(1u64 << n)).filter(|m| (m.count_ones() as usize) <= limit).collect()
}

/// Minimum objective over all admissible binary assignments, each solved as
/// an LP with binaries fixed.
pub fn enumerate_commitments(
    sys: &PowerSystem,
    scen: &ScenarioSet,
    contingencies: &[Contingency],
    cfg: &FormulationConfig,
    caps: &OracleCaps,
) -> Result<Certificate, OracleError> {
    let data = ModelData::new(sys, scen, contingencies, cfg)?;
    let horizon = data.horizon();
    let n_gen = sys.generators.len();
    let bits = n_gen * horizon;
    if bits > caps.max_commitment_bits {
        return Err(OracleError::CapExceeded {
            what: "commitment bits",
            value: bits as u128,
            cap: caps.max_commitment_bits as u128,
        });
    }
    let mut blocks = Vec::new();
    if cfg.model_kind == ModelKind::SscucCnr {
        for (c, cont) in data.contingencies.iter().enumerate() {
            if cont.candidates.is_empty() {
                continue;
            }
            if cont.candidates.len() >= 64 {
                return Err(OracleError::CapExceeded {
                    what: "candidates per contingency",
                    value: cont.candidates.len() as u128,
                    cap: 63,
                });
            }
            let options = open_sets(cont.candidates.len(), cfg.switch_limit);
            for s in 0..data.n_scenarios() {
                for t in 0..horizon {
                    blocks.push(SwitchBlock {
                        c,
                        t,
                        s,
                        candidates: cont.candidates.clone(),
                        options: options.clone(),
                    });
                }
            }
        }
    }
    let mut combos: u128 = 1;
    for b in &blocks {
        combos = combos.saturating_mul(b.options.len() as u128);
        if combos > caps.max_switch_combinations {
            return Err(OracleError::CapExceeded {
                what: "switch combinations",
                value: combos,
                cap: caps.max_switch_combinations,
            });
        }
    }
    let total = combos << bits;
    if total > caps.max_lp_solves {
        return Err(OracleError::CapExceeded {
            what: "LP solves",
            value: total,
            cap: caps.max_lp_solves,
        });
    }

    let prob = assemble_with(&data, cfg)?;
    let u_ids: Vec<Vec<VarId>> = (0..n_gen)
        .map(|g| (0..horizon).map(|t| prob.var(&VarKey::U { g, t }).expect("u registered")).collect())
        .collect();
    let v_ids: Vec<Vec<VarId>> = (0..n_gen)
        .map(|g| (0..horizon).map(|t| prob.var(&VarKey::V { g, t }).expect("v registered")).collect())
        .collect();
    let lp_opts = SolveOptions::exact();

    let jobs: Vec<(u64, u128)> = (0..(1u64 << bits))
        .flat_map(|mask| (0..combos).map(move |z| (mask, z)))
        .collect();
    let evaluate = |&(mask, zi): &(u64, u128)| -> Result<AssignmentRecord, OracleError> {
        let mut fix = Vec::with_capacity(2 * bits);
        let mut commitment = BTreeMap::new();
        for (g, gen) in sys.generators.iter().enumerate() {
            let u0 = gen.initial().on;
            let mut row = Vec::with_capacity(horizon);
            let mut prev = u0;
            for t in 0..horizon {
                let on = mask >> (g * horizon + t) & 1 == 1;
                fix.push((u_ids[g][t], if on { 1.0 } else { 0.0 }));
                fix.push((v_ids[g][t], if on && !prev { 1.0 } else { 0.0 }));
                row.push(on as u8);
                prev = on;
            }
            commitment.insert(gen.id.clone(), row);
        }
        let mut opened = BTreeMap::new();
        let mut rest = zi;
        for b in &blocks {
            let n = b.options.len() as u128;
            let set = b.options[(rest % n) as usize];
            rest /= n;
            let mut names = Vec::new();
            for (j, &k) in b.candidates.iter().enumerate() {
                let open = set >> j & 1 == 1;
                let id = prob
                    .var(&VarKey::Z { c: b.c, k, t: b.t, s: b.s })
                    .expect("z registered");
                fix.push((id, if open { 0.0 } else { 1.0 }));
                if open {
                    names.push(sys.lines[k].id.clone());
                }
            }
            if !names.is_empty() {
                opened.insert(format!("{},{},{}", data.cont_id(b.c), b.t + 1, data.scen_id(b.s)), names);
            }
        }
        let lp = prob.with_fixed_binaries(&fix);
        let res = HighsSolver.solve(&lp, &lp_opts)?;
        Ok(AssignmentRecord {
            assignment: Assignment { commitment, opened },
            status: res.status,
            objective: res.has_solution().then_some(res.objective),
        })
    };

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let records: Vec<AssignmentRecord> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(evaluate).collect::<Result<Vec<_>, _>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("oracle worker panicked"))
            .collect::<Result<Vec<Vec<_>>, _>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let mut best: Option<&AssignmentRecord> = None;
    for r in &records {
        if let Some(obj) = r.objective {
            if best.is_none_or(|b| obj < b.objective.expect("best has objective")) {
                best = Some(r);
            }
        }
    }
    let v_derivation_exact = sys
        .generators
        .iter()
        .all(|g| g.ramp_hourly >= g.p_max && g.ramp_shutdown >= g.p_max && g.cost_startup >= 0.0);
    Ok(Certificate {
        model_kind: cfg.model_kind,
        best_objective: best.and_then(|b| b.objective),
        argmin: best.map(|b| b.assignment.clone()),
        assignments: records.len(),
        feasible: records.iter().filter(|r| r.objective.is_some()).count(),
        v_derivation_exact,
        records,
    })
}

/// Base-case state of one (period, scenario) block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDispatch {
    /// 0-based period, selects the demand column.
    pub period: usize,
    /// Commitment per generator, 0 or 1.
    pub commitment: Vec<f64>,
    /// Base-case output per generator, MW.
    pub dispatch: Vec<f64>,
    /// Available RES power per unit, MW.
    pub availability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEval {
    /// `None` for no action.
    pub opened_line: Option<String>,
    pub feasible: bool,
    pub curtailment: Option<f64>,
    /// Post-contingency generation cost at minimum curtailment.
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchCheck {
    /// Chosen opening; `None` means no action.
    pub best: Option<String>,
    pub best_curtailment: Option<f64>,
    pub evaluations: Vec<ActionEval>,
}

const TIE_TOL: f64 = 1e-6;

/// Evaluate no action and each single candidate opening for one block with
/// fixed base dispatch. Picks minimum curtailment, then minimum corrective
/// generation cost, then no action, then the lowest line index.
pub fn exhaustive_switch_check(
    sys: &PowerSystem,
    block: &BlockDispatch,
    contingency: &Contingency,
    cfg: &FormulationConfig,
) -> Result<SwitchCheck, OracleError> {
    let idx = SystemIndex::new(sys)?;
    if block.commitment.len() != sys.generators.len()
        || block.dispatch.len() != sys.generators.len()
        || block.availability.len() != sys.res_units.len()
    {
        return Err(OracleError::Block("generator or RES vector length mismatch".into()));
    }
    if block.period >= idx.horizon {
        return Err(OracleError::Block(format!("period {} beyond horizon {}", block.period + 1, idx.horizon)));
    }
    let outaged = sys
        .line_position(&contingency.outaged_line_id)
        .ok_or_else(|| OracleError::UnknownLine(contingency.outaged_line_id.clone()))?;
    let mut actions: Vec<Option<usize>> = vec![None];
    for id in &contingency.candidate_switch_ids {
        actions.push(Some(sys.line_position(id).ok_or_else(|| OracleError::UnknownLine(id.clone()))?));
    }

    let mut evaluations = Vec::with_capacity(actions.len());
    for &open in &actions {
        let eval = evaluate_action(sys, &idx, block, outaged, open, cfg)?;
        evaluations.push(ActionEval {
            opened_line: open.map(|k| sys.lines[k].id.clone()),
            feasible: eval.is_some(),
            curtailment: eval.map(|e| e.0),
            cost: eval.map(|e| e.1),
        });
    }

    let mut best: Option<(usize, f64, f64)> = None;
    for (i, e) in evaluations.iter().enumerate() {
        let (Some(cur), Some(cost)) = (e.curtailment, e.cost) else {
            continue;
        };
        // Actions are in order (no action, then line order), so strict
        // improvement keeps the earlier one on ties.
        let better = match best {
            None => true,
            Some((_, bc, bcost)) => {
                cur < bc - TIE_TOL || ((cur - bc).abs() <= TIE_TOL && cost < bcost - TIE_TOL * bcost.abs().max(1.0))
            }
        };
        if better {
            best = Some((i, cur, cost));
        }
    }
    Ok(SwitchCheck {
        best: best.and_then(|(i, _, _)| evaluations[i].opened_line.clone()),
        best_curtailment: best.map(|b| b.1),
        evaluations,
    })
}

fn continuous(prob: &mut MilpProblem, name: String, lower: f64, upper: f64) -> VarId {
    prob.add_column(
        VarKey::Named(name.clone()),
        Column {
            name,
            lower,
            upper,
            kind: VarKind::Continuous,
            cost: 0.0,
            bound_tag: None,
        },
    )
    .expect("unique names")
}

/// `(curtailment, cost)` for one topology, or `None` if infeasible.
fn evaluate_action(
    sys: &PowerSystem,
    idx: &SystemIndex,
    block: &BlockDispatch,
    outaged: usize,
    open: Option<usize>,
    cfg: &FormulationConfig,
) -> Result<Option<(f64, f64)>, OracleError> {
    // Corrective window around the base dispatch.
    let windows: Vec<(f64, f64)> = sys
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            let u = block.commitment[g];
            let p = block.dispatch[g];
            let lo = (gen.p_min * u).max(p - gen.ramp_10min * u).max(0.0);
            (lo, (gen.p_max * u).min(p + gen.ramp_10min * u))
        })
        .collect();
    if windows.iter().any(|(lo, hi)| lo > &(hi + 1e-9)) {
        return Ok(None);
    }
    let mut prob = MilpProblem::default();
    let gens: Vec<VarId> = windows
        .iter()
        .enumerate()
        .map(|(g, &(lo, hi))| continuous(&mut prob, format!("pg_{g}"), lo, hi.max(lo)))
        .collect();
    let res: Vec<VarId> = block
        .availability
        .iter()
        .enumerate()
        .map(|(w, &a)| match cfg.res_usage {
            ResUsage::Variable => continuous(&mut prob, format!("pw_{w}"), 0.0, a),
            ResUsage::Complete => continuous(&mut prob, format!("pw_{w}"), a, a),
        })
        .collect();
    let reference = match &cfg.reference_bus {
        Some(id) => sys.bus_position(id).ok_or_else(|| OracleError::Block(format!("unknown reference bus {id}")))?,
        None => 0,
    };
    let theta: Vec<VarId> = (0..sys.buses.len())
        .map(|n| {
            let a = if n == reference { 0.0 } else { cfg.angle_bound };
            continuous(&mut prob, format!("th_{n}"), -a, a)
        })
        .collect();
    let live: Vec<usize> = (0..sys.lines.len()).filter(|&k| k != outaged && Some(k) != open).collect();
    let mut flows = vec![None; sys.lines.len()];
    for &k in &live {
        let line = &sys.lines[k];
        let f = continuous(&mut prob, format!("pk_{k}"), -line.limit_emergency, line.limit_emergency);
        let (a, b) = idx.line_ends[k];
        let bb = sys.mva_base * line.susceptance;
        prob.add_row(Tag::Imported, format!("flow_{k}"), vec![(f, 1.0), (theta[a], -bb), (theta[b], bb)], Sense::Eq, 0.0);
        flows[k] = Some(f);
    }
    for n in 0..sys.buses.len() {
        let mut terms: Vec<(VarId, f64)> = idx.gens_at[n].iter().map(|&g| (gens[g], 1.0)).collect();
        terms.extend(idx.res_at[n].iter().map(|&w| (res[w], 1.0)));
        terms.extend(idx.lines_in[n].iter().filter_map(|&k| flows[k].map(|f| (f, 1.0))));
        terms.extend(idx.lines_out[n].iter().filter_map(|&k| flows[k].map(|f| (f, -1.0))));
        let d = idx.demand[n][block.period];
        if terms.is_empty() {
            if d.abs() > 1e-9 {
                return Ok(None);
            }
            continue;
        }
        prob.add_row(Tag::Imported, format!("bal_{n}"), terms, Sense::Eq, d);
    }

    // Stage 1: maximize delivered RES.
    let available: f64 = block.availability.iter().sum();
    for &w in &res {
        prob.columns[w.0].cost = -1.0;
    }
    prob.objective_offset = available;
    let opts = SolveOptions::exact();
    let first = HighsSolver.solve(&prob, &opts)?;
    if !first.has_solution() {
        return Ok(None);
    }
    let curtailment = first.objective.max(0.0);

    // Stage 2: cheapest corrective dispatch at that curtailment.
    if !res.is_empty() {
        prob.add_row(
            Tag::Imported,
            "curtailment".into(),
            res.iter().map(|&w| (w, 1.0)).collect(),
            Sense::Ge,
            available - curtailment - 1e-7,
        );
    }
    for &w in &res {
        prob.columns[w.0].cost = 0.0;
    }
    prob.objective_offset = 0.0;
    for (g, gen) in sys.generators.iter().enumerate() {
        prob.columns[gens[g].0].cost = gen.cost_linear;
    }
    let second = HighsSolver.solve(&prob, &opts)?;
    if !second.has_solution() {
        return Ok(Some((curtailment, f64::INFINITY)));
    }
    Ok(Some((curtailment, second.objective)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::test_cases::*;
    use crate::formulation::ReserveRule;
    use crate::system::fixtures::*;
    use crate::topology::build_contingency_set;

    fn no_reserve(kind: ModelKind) -> FormulationConfig {
        FormulationConfig {
            reserve_rule: ReserveRule::Off,
            ..FormulationConfig::with_kind(kind)
        }
    }

    #[test]
    fn single_unit_single_period() {
        let mut g = gen("g", "a", 5.0, 100.0, 20.0);
        g.cost_no_load = 10.0;
        g.cost_startup = 100.0;
        g.initial_status = Some(crate::system::InitialStatus {
            on: false,
            hours: 3,
            power: None,
        });
        let sys = system(&["a"], vec![], vec![g], &[("a", &[30.0])]);
        let cert = enumerate_commitments(&sys, &single(), &[], &no_reserve(ModelKind::Sscuc), &OracleCaps::default()).unwrap();
        assert_eq!(cert.assignments, 2);
        assert_eq!(cert.feasible, 1);
        assert!((cert.best_objective.unwrap() - 710.0).abs() < 1e-6);
        assert_eq!(cert.argmin.unwrap().commitment["g"], vec![1]);
        assert!(cert.v_derivation_exact);
    }

    #[test]
    fn zero_demand_all_off() {
        let mut sys = triangle();
        sys.demand.rows.iter_mut().for_each(|r| r.values = vec![0.0]);
        sys.generators[0].cost_no_load = 5.0;
        sys.generators[0].initial_status = Some(crate::system::InitialStatus {
            on: false,
            hours: 1,
            power: None,
        });
        let cfg = FormulationConfig {
            penalty_enabled: false,
            ..no_reserve(ModelKind::Sscuc)
        };
        let cert = enumerate_commitments(&sys, &single(), &[], &cfg, &OracleCaps::default()).unwrap();
        assert_eq!(cert.best_objective, Some(0.0));
        assert_eq!(cert.argmin.unwrap().commitment["g1"], vec![0]);
    }

    #[test]
    fn caps_are_enforced() {
        let gens = (0..7).map(|i| gen(&format!("g{i}"), "a", 0.0, 10.0, 1.0)).collect();
        let sys = system(&["a"], vec![], gens, &[("a", &[1.0, 1.0])]);
        let err = enumerate_commitments(&sys, &single(), &[], &no_reserve(ModelKind::Sscuc), &OracleCaps::default()).unwrap_err();
        assert!(matches!(err, OracleError::CapExceeded { what: "commitment bits", .. }));

        let sys = wind_triangle(2);
        let scen = scenarios(&[1.0], &["w1"], &[&[&[1.0, 1.0]]]);
        let conts = build_contingency_set(&sys, &Default::default()).unwrap();
        // 3 contingencies x 2 periods, 3 options each: 3^6 = 729 combos, 2^4 u masks.
        let caps = OracleCaps {
            max_lp_solves: 1000,
            ..Default::default()
        };
        let err = enumerate_commitments(&sys, &scen, &conts, &no_reserve(ModelKind::SscucCnr), &caps).unwrap_err();
        assert!(matches!(err, OracleError::CapExceeded { what: "LP solves", .. }));
    }

    /// Four buses; line 1-4 is the outage. With everything else in service
    /// line 1-2 would carry 62.5 MW against a 50 MW limit.
    fn four_bus() -> (PowerSystem, Contingency, BlockDispatch) {
        let mut sys = system(
            &["1", "2", "3", "4"],
            vec![
                line("12", "1", "2", 20.0, 50.0),
                line("24", "2", "4", 10.0, 100.0),
                line("13", "1", "3", 10.0, 100.0),
                line("34", "3", "4", 20.0, 50.0),
                line("23", "2", "3", 10.0, 100.0),
                line("14", "1", "4", 10.0, 100.0),
            ],
            vec![gen("g4", "4", 0.0, 300.0, 10.0)],
            &[("4", &[100.0])],
        );
        sys.generators[0].ramp_10min = 100.0;
        sys.res_units.push(res("w", "1", 100.0));
        sys.rebuild_adjacency();
        let cont = Contingency {
            outaged_line_id: "14".into(),
            candidate_switch_ids: ["12", "24", "13", "34", "23"].iter().map(|s| s.to_string()).collect(),
        };
        let block = BlockDispatch {
            period: 0,
            commitment: vec![1.0],
            dispatch: vec![0.0],
            availability: vec![100.0],
        };
        (sys, cont, block)
    }

    #[test]
    fn opening_the_right_line_removes_congestion() {
        let (sys, cont, block) = four_bus();
        let check = exhaustive_switch_check(&sys, &block, &cont, &FormulationConfig::default()).unwrap();
        let by_line: BTreeMap<_, _> = check
            .evaluations
            .iter()
            .map(|e| (e.opened_line.clone().unwrap_or_default(), e.curtailment.unwrap()))
            .collect();
        let expect = [("", 12.5), ("23", 0.0), ("12", 37.5), ("34", 37.5), ("13", 50.0), ("24", 50.0)];
        for (k, v) in expect {
            assert!((by_line[k] - v).abs() < 1e-6, "{k}: {}", by_line[k]);
        }
        assert_eq!(check.best.as_deref(), Some("23"));
    }

    #[test]
    fn uncongested_block_prefers_no_action() {
        let (mut sys, cont, mut block) = four_bus();
        sys.lines.iter_mut().for_each(|l| {
            l.limit_long_term = 500.0;
            l.limit_emergency = 500.0;
        });
        block.availability = vec![100.0];
        let check = exhaustive_switch_check(&sys, &block, &cont, &FormulationConfig::default()).unwrap();
        assert_eq!(check.best, None);
        assert_eq!(check.best_curtailment, Some(0.0));
    }

    #[test]
    fn islanding_actions_are_infeasible() {
        // Path a-b-c with a parallel a-b line; the load sits at c behind bc.
        let mut sys = system(
            &["a", "b", "c"],
            vec![
                line("ab", "a", "b", 10.0, 100.0),
                line("ab2", "a", "b", 10.0, 100.0),
                line("bc", "b", "c", 10.0, 100.0),
                line("bc2", "b", "c", 10.0, 100.0),
            ],
            vec![gen("g", "a", 0.0, 100.0, 1.0)],
            &[("c", &[40.0])],
        );
        sys.rebuild_adjacency();
        let cont = Contingency {
            outaged_line_id: "bc".into(),
            candidate_switch_ids: vec!["bc2".into()],
        };
        let block = BlockDispatch {
            period: 0,
            commitment: vec![1.0],
            dispatch: vec![40.0],
            availability: vec![],
        };
        let check = exhaustive_switch_check(&sys, &block, &cont, &FormulationConfig::default()).unwrap();
        assert_eq!(check.best, None);
        assert!(!check.evaluations[1].feasible);
    }

    #[test]
    fn oracle_matches_milp_on_cnr_instance() {
        let sys = wind_triangle(2);
        let scen = scenarios(&[1.0], &["w1"], &[&[&[30.0, 70.0]]]);
        let conts = vec![build_contingency_set(&sys, &Default::default()).unwrap().remove(0)];
        let cfg = no_reserve(ModelKind::SscucCnr);
        let cert = enumerate_commitments(&sys, &scen, &conts, &cfg, &OracleCaps::default()).unwrap();
        let prob = crate::formulation::assemble(&sys, &scen, &conts, &cfg).unwrap();
        let res = HighsSolver.solve(&prob, &SolveOptions::exact()).unwrap();
        let best = cert.best_objective.unwrap();
        assert!((best - res.objective).abs() <= 1e-6 * best.abs().max(1.0), "{best} vs {}", res.objective);
    }
}
