//! Post-contingency rows: corrective redispatch limits, balance and flows,
//! either on the fixed post-outage network or with switchable candidates.

use super::{compute_big_m, lookup, FormulationConfig, FormulationError, ModelData, VarKey};
use crate::milp::{MilpProblem, Sense, Tag};

/// Corrective ramp window around the base dispatch and on/off output limits
/// for every (contingency, period, scenario, unit).
pub fn add_contingency_generator_constraints(
    prob: &mut MilpProblem,
    data: &ModelData,
    _cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    for c in 0..data.contingencies.len() {
        let cid = data.cont_id(c);
        for s in 0..data.n_scenarios() {
            let sid = data.scen_id(s);
            for t in data.periods() {
                let tt = (t + 1).to_string();
                for (g, gen) in sys.generators.iter().enumerate() {
                    let parts = [cid.clone(), gen.id.clone(), tt.clone(), sid.clone()];
                    let u = lookup(prob, data, VarKey::U { g, t })?;
                    let p = lookup(prob, data, VarKey::Pg { g, t, s })?;
                    let pc = lookup(prob, data, VarKey::PgC { c, g, t, s })?;
                    let rows = [
                        (Tag::CorrectiveRampDown, vec![(p, 1.0), (pc, -1.0), (u, -gen.ramp_10min)], Sense::Le),
                        (Tag::CorrectiveRampUp, vec![(pc, 1.0), (p, -1.0), (u, -gen.ramp_10min)], Sense::Le),
                        (Tag::ContingencyMinOutput, vec![(pc, 1.0), (u, -gen.p_min)], Sense::Ge),
                        (Tag::ContingencyMaxOutput, vec![(pc, 1.0), (u, -gen.p_max)], Sense::Le),
                    ];
                    for (tag, terms, sense) in rows {
                        prob.add_row(tag, data.row_name(tag, &parts), terms, sense, 0.0);
                    }
                }
            }
        }
    }
    Ok(())
}

fn add_balance(prob: &mut MilpProblem, data: &ModelData, c: usize, t: usize, s: usize) -> Result<(), FormulationError> {
    let sys = data.sys;
    let idx = &data.index;
    let outaged = data.contingencies[c].outaged;
    let tag = Tag::ContingencyBalance;
    for (n, bus) in sys.buses.iter().enumerate() {
        let mut terms = Vec::new();
        for &g in &idx.gens_at[n] {
            terms.push((lookup(prob, data, VarKey::PgC { c, g, t, s })?, 1.0));
        }
        for &w in &idx.res_at[n] {
            terms.push((lookup(prob, data, VarKey::PwC { c, w, t, s })?, 1.0));
        }
        for &k in idx.lines_in[n].iter().filter(|&&k| k != outaged) {
            terms.push((lookup(prob, data, VarKey::PkC { c, k, t, s })?, 1.0));
        }
        for &k in idx.lines_out[n].iter().filter(|&&k| k != outaged) {
            terms.push((lookup(prob, data, VarKey::PkC { c, k, t, s })?, -1.0));
        }
        let name = data.row_name(tag, &[data.cont_id(c), bus.id.clone(), (t + 1).to_string(), data.scen_id(s)]);
        prob.add_row(tag, name, terms, Sense::Eq, idx.demand[n][t]);
    }
    Ok(())
}

/// `(flow, theta_from, theta_to, B)` for line `k` in block `(c, t, s)`.
fn flow_terms(
    prob: &MilpProblem,
    data: &ModelData,
    c: usize,
    k: usize,
    t: usize,
    s: usize,
) -> Result<[(crate::milp::VarId, f64); 3], FormulationError> {
    let (f, to) = data.index.line_ends[k];
    let bb = data.sys.mva_base * data.sys.lines[k].susceptance;
    Ok([
        (lookup(prob, data, VarKey::PkC { c, k, t, s })?, 1.0),
        (lookup(prob, data, VarKey::ThetaC { c, n: f, t, s })?, -bb),
        (lookup(prob, data, VarKey::ThetaC { c, n: to, t, s })?, bb),
    ])
}

fn add_fixed_flow(prob: &mut MilpProblem, data: &ModelData, c: usize, k: usize, t: usize, s: usize) -> Result<(), FormulationError> {
    let terms = flow_terms(prob, data, c, k, t, s)?.to_vec();
    let tag = Tag::ContingencyFlow;
    let name = data.row_name(
        tag,
        &[data.cont_id(c), data.sys.lines[k].id.clone(), (t + 1).to_string(), data.scen_id(s)],
    );
    prob.add_row(tag, name, terms, Sense::Eq, 0.0);
    Ok(())
}

/// Post-contingency network without switching: the outaged line carries no
/// flow and every other line keeps its flow definition.
pub fn add_contingency_network_fixed(
    prob: &mut MilpProblem,
    data: &ModelData,
    _cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    for (c, cont) in data.contingencies.iter().enumerate() {
        for s in 0..data.n_scenarios() {
            for t in data.periods() {
                add_balance(prob, data, c, t, s)?;
                for k in (0..data.sys.lines.len()).filter(|&k| k != cont.outaged) {
                    add_fixed_flow(prob, data, c, k, t, s)?;
                }
            }
        }
    }
    Ok(())
}

/// Post-contingency network with corrective switching: candidate lines get
/// big-M flow rows and switched limits, and at most `switch_limit` of them
/// may open per block.
pub fn add_contingency_network_cnr(
    prob: &mut MilpProblem,
    data: &ModelData,
    cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    for (c, cont) in data.contingencies.iter().enumerate() {
        let cid = data.cont_id(c);
        for s in 0..data.n_scenarios() {
            let sid = data.scen_id(s);
            for t in data.periods() {
                let tt = (t + 1).to_string();
                add_balance(prob, data, c, t, s)?;
                for k in 0..sys.lines.len() {
                    if k == cont.outaged {
                        continue;
                    }
                    if !cont.candidates.contains(&k) {
                        add_fixed_flow(prob, data, c, k, t, s)?;
                        continue;
                    }
                    let line = &sys.lines[k];
                    let parts = [cid.clone(), line.id.clone(), tt.clone(), sid.clone()];
                    let z = lookup(prob, data, VarKey::Z { c, k, t, s })?;
                    let flow = flow_terms(prob, data, c, k, t, s)?;
                    let pk = flow[0].0;
                    let m = compute_big_m(line, sys.mva_base, cfg);
                    let emax = line.limit_emergency;

                    let mut lower = flow.to_vec();
                    lower.push((z, -m));
                    prob.add_row(Tag::SwitchedFlowLower, data.row_name(Tag::SwitchedFlowLower, &parts), lower, Sense::Ge, -m);
                    let mut upper = flow.to_vec();
                    upper.push((z, m));
                    prob.add_row(Tag::SwitchedFlowUpper, data.row_name(Tag::SwitchedFlowUpper, &parts), upper, Sense::Le, m);

                    let mut hi = parts.to_vec();
                    hi.push("hi".into());
                    let mut lo = parts.to_vec();
                    lo.push("lo".into());
                    prob.add_row(Tag::SwitchedLimit, data.row_name(Tag::SwitchedLimit, &hi), vec![(pk, 1.0), (z, -emax)], Sense::Le, 0.0);
                    prob.add_row(Tag::SwitchedLimit, data.row_name(Tag::SwitchedLimit, &lo), vec![(pk, 1.0), (z, emax)], Sense::Ge, 0.0);
                }
                if !cont.candidates.is_empty() {
                    let terms = cont
                        .candidates
                        .iter()
                        .map(|&k| lookup(prob, data, VarKey::Z { c, k, t, s }).map(|z| (z, 1.0)))
                        .collect::<Result<Vec<_>, _>>()?;
                    let rhs = cont.candidates.len() as f64 - cfg.switch_limit as f64;
                    let name = data.row_name(Tag::SwitchBudget, &[cid.clone(), tt.clone(), sid.clone()]);
                    prob.add_row(Tag::SwitchBudget, name, terms, Sense::Ge, rhs);
                }
            }
        }
    }
    Ok(())
}
