//! Base-case (pre-contingency) rows.

use super::{lookup, FormulationConfig, FormulationError, ModelData, ReserveRule, VarKey};
use crate::milp::{MilpProblem, Sense, Tag, VarId};

/// Unit constraints: output limits with reserve, reserve caps, system
/// reserve, hourly ramping, minimum up/down times and start-up logic.
pub fn add_base_generator_constraints(
    prob: &mut MilpProblem,
    data: &ModelData,
    cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    let n_gen = sys.generators.len();
    let horizon = data.horizon();

    for s in 0..data.n_scenarios() {
        let sid = data.scen_id(s);
        for t in 0..horizon {
            let tt = (t + 1).to_string();
            let reserves = (0..n_gen)
                .map(|g| lookup(prob, data, VarKey::R { g, t, s }))
                .collect::<Result<Vec<_>, _>>()?;
            for (g, gen) in sys.generators.iter().enumerate() {
                let parts = [gen.id.clone(), tt.clone(), sid.clone()];
                let u = lookup(prob, data, VarKey::U { g, t })?;
                let v = lookup(prob, data, VarKey::V { g, t })?;
                let p = lookup(prob, data, VarKey::Pg { g, t, s })?;
                let r = reserves[g];

                prob.add_row(
                    Tag::MinOutput,
                    data.row_name(Tag::MinOutput, &parts),
                    vec![(u, gen.p_min), (p, -1.0)],
                    Sense::Le,
                    0.0,
                );
                prob.add_row(
                    Tag::MaxOutputWithReserve,
                    data.row_name(Tag::MaxOutputWithReserve, &parts),
                    vec![(p, 1.0), (r, 1.0), (u, -gen.p_max)],
                    Sense::Le,
                    0.0,
                );
                prob.add_row(
                    Tag::ReserveCap,
                    data.row_name(Tag::ReserveCap, &parts),
                    vec![(r, 1.0), (u, -gen.ramp_10min)],
                    Sense::Le,
                    0.0,
                );
                if cfg.reserve_rule != ReserveRule::Off {
                    // sum_q r_q >= P_g + r_g, with r_g cancelled for AsPrinted.
                    let mut terms: Vec<(VarId, f64)> = reserves
                        .iter()
                        .enumerate()
                        .filter(|(q, _)| *q != g)
                        .map(|(_, &rq)| (rq, 1.0))
                        .collect();
                    terms.push((p, -1.0));
                    if cfg.reserve_rule == ReserveRule::ExcludeSelf {
                        terms.push((r, -1.0));
                    }
                    prob.add_row(Tag::SystemReserve, data.row_name(Tag::SystemReserve, &parts), terms, Sense::Ge, 0.0);
                }

                // Ramping against the previous period, or the initial state.
                let (prev_p, prev_u, p0, u0) = if t == 0 {
                    let init = gen.initial();
                    (None, None, gen.initial_power(), if init.on { 1.0 } else { 0.0 })
                } else {
                    (
                        Some(lookup(prob, data, VarKey::Pg { g, t: t - 1, s })?),
                        Some(lookup(prob, data, VarKey::U { g, t: t - 1 })?),
                        0.0,
                        0.0,
                    )
                };
                let mut up = vec![(p, 1.0), (v, -gen.ramp_startup)];
                let mut up_rhs = 0.0;
                match (prev_p, prev_u) {
                    (Some(pp), Some(pu)) => {
                        up.push((pp, -1.0));
                        up.push((pu, -gen.ramp_hourly));
                    }
                    _ => up_rhs = p0 + gen.ramp_hourly * u0,
                }
                prob.add_row(Tag::RampUp, data.row_name(Tag::RampUp, &parts), up, Sense::Le, up_rhs);

                // P_{t-1} - P_t <= Rhr u_t + RSD (v_t - u_t + u_{t-1})
                let mut down = vec![
                    (p, -1.0),
                    (u, gen.ramp_shutdown - gen.ramp_hourly),
                    (v, -gen.ramp_shutdown),
                ];
                let mut down_rhs = 0.0;
                match (prev_p, prev_u) {
                    (Some(pp), Some(pu)) => {
                        down.push((pp, 1.0));
                        down.push((pu, -gen.ramp_shutdown));
                    }
                    _ => down_rhs = -p0 + gen.ramp_shutdown * u0,
                }
                prob.add_row(Tag::RampDown, data.row_name(Tag::RampDown, &parts), down, Sense::Le, down_rhs);
            }
        }
    }

    for (g, gen) in sys.generators.iter().enumerate() {
        let ut = gen.min_up as usize;
        let dt = gen.min_down as usize;
        let u0 = if gen.initial().on { 1.0 } else { 0.0 };
        for t in 0..horizon {
            let parts = [gen.id.clone(), (t + 1).to_string()];
            let u = lookup(prob, data, VarKey::U { g, t })?;
            let v = lookup(prob, data, VarKey::V { g, t })?;

            if ut >= 1 && t + 1 >= ut {
                let mut terms = ((t + 1 - ut)..=t)
                    .map(|q| lookup(prob, data, VarKey::V { g, t: q }).map(|id| (id, 1.0)))
                    .collect::<Result<Vec<_>, _>>()?;
                terms.push((u, -1.0));
                prob.add_row(Tag::MinUp, data.row_name(Tag::MinUp, &parts), terms, Sense::Le, 0.0);
            }
            if dt >= 1 && t + dt < horizon {
                let mut terms = ((t + 1)..=(t + dt))
                    .map(|q| lookup(prob, data, VarKey::V { g, t: q }).map(|id| (id, 1.0)))
                    .collect::<Result<Vec<_>, _>>()?;
                terms.push((u, 1.0));
                prob.add_row(Tag::MinDown, data.row_name(Tag::MinDown, &parts), terms, Sense::Le, 1.0);
            }

            let mut terms = vec![(v, 1.0), (u, -1.0)];
            let rhs = if t == 0 {
                -u0
            } else {
                terms.push((lookup(prob, data, VarKey::U { g, t: t - 1 })?, 1.0));
                0.0
            };
            prob.add_row(Tag::StartupLogic, data.row_name(Tag::StartupLogic, &parts), terms, Sense::Ge, rhs);
        }
    }
    Ok(())
}

/// DC flow definition and nodal balance for every (period, scenario).
pub fn add_base_network_constraints(
    prob: &mut MilpProblem,
    data: &ModelData,
    _cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    let idx = &data.index;
    for s in 0..data.n_scenarios() {
        let sid = data.scen_id(s);
        for t in data.periods() {
            let tt = (t + 1).to_string();
            for (k, line) in sys.lines.iter().enumerate() {
                let (f, to) = idx.line_ends[k];
                let bb = sys.mva_base * line.susceptance;
                let terms = vec![
                    (lookup(prob, data, VarKey::Pk { k, t, s })?, 1.0),
                    (lookup(prob, data, VarKey::Theta { n: f, t, s })?, -bb),
                    (lookup(prob, data, VarKey::Theta { n: to, t, s })?, bb),
                ];
                let name = data.row_name(Tag::FlowDefinition, &[line.id.clone(), tt.clone(), sid.clone()]);
                prob.add_row(Tag::FlowDefinition, name, terms, Sense::Eq, 0.0);
            }
            for (n, bus) in sys.buses.iter().enumerate() {
                let mut terms = Vec::new();
                for &g in &idx.gens_at[n] {
                    terms.push((lookup(prob, data, VarKey::Pg { g, t, s })?, 1.0));
                }
                for &w in &idx.res_at[n] {
                    terms.push((lookup(prob, data, VarKey::Pw { w, t, s })?, 1.0));
                }
                for &k in &idx.lines_in[n] {
                    terms.push((lookup(prob, data, VarKey::Pk { k, t, s })?, 1.0));
                }
                for &k in &idx.lines_out[n] {
                    terms.push((lookup(prob, data, VarKey::Pk { k, t, s })?, -1.0));
                }
                let name = data.row_name(Tag::NodalBalance, &[bus.id.clone(), tt.clone(), sid.clone()]);
                prob.add_row(Tag::NodalBalance, name, terms, Sense::Eq, idx.demand[n][t]);
            }
        }
    }
    Ok(())
}
