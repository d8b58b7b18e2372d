//! Feasibility check of a [`ScheduleSolution`] evaluated directly from the
//! grid data, without going through the assembled MILP rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formulation::{compute_big_m, FormulationConfig, ModelKind, ReserveRule, ResUsage};
use crate::scenario::ScenarioSet;
use crate::solution::ScheduleSolution;
use crate::system::{PowerSystem, SystemIndex};
use crate::topology::Contingency;

pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Equation number of the constraint family, when it has one.
    pub equation: Option<u8>,
    /// Family name, e.g. `thermal-limit`.
    pub constraint: String,
    /// Index tuple with element ids and 1-based periods.
    pub index: String,
    /// Violation amount scaled by max(1, |lhs|, |rhs|).
    pub residual: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.equation {
            Some(n) => write!(f, "({n}) {} [{}]: residual {:.3e}", self.constraint, self.index, self.residual),
            None => write!(f, "{} [{}]: residual {:.3e}", self.constraint, self.index, self.residual),
        }
    }
}

struct Checker {
    tol: f64,
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, eq: Option<u8>, name: &str, index: impl FnOnce() -> String, excess: f64, lhs: f64, rhs: f64) {
        let residual = excess / 1f64.max(lhs.abs()).max(rhs.abs());
        if residual > self.tol || residual.is_nan() {
            self.out.push(Violation {
                equation: eq,
                constraint: name.to_string(),
                index: index(),
                residual,
            });
        }
    }

    fn le(&mut self, eq: Option<u8>, name: &str, index: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        self.push(eq, name, index, lhs - rhs, lhs, rhs);
    }

    fn ge(&mut self, eq: Option<u8>, name: &str, index: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        self.push(eq, name, index, rhs - lhs, lhs, rhs);
    }

    fn eq(&mut self, eq: Option<u8>, name: &str, index: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        self.push(eq, name, index, (lhs - rhs).abs(), lhs, rhs);
    }

    fn binary(&mut self, eq: Option<u8>, name: &str, index: impl FnOnce() -> String, x: f64) {
        let d = x.abs().min((x - 1.0).abs());
        self.push(eq, name, index, d, 0.0, 0.0);
    }

    fn shape(&mut self, what: &str) {
        self.out.push(Violation {
            equation: None,
            constraint: "shape".into(),
            index: what.into(),
            residual: f64::INFINITY,
        });
    }
}

/// Every constraint violated by `sol` beyond `VERIFY_TOL`; empty iff feasible.
pub fn verify_solution(
    sol: &ScheduleSolution,
    sys: &PowerSystem,
    scen: &ScenarioSet,
    contingencies: &[Contingency],
    cfg: &FormulationConfig,
) -> Vec<Violation> {
    verify_with_tolerance(sol, sys, scen, contingencies, cfg, VERIFY_TOL)
}

pub fn verify_with_tolerance(
    sol: &ScheduleSolution,
    sys: &PowerSystem,
    scen: &ScenarioSet,
    contingencies: &[Contingency],
    cfg: &FormulationConfig,
    tol: f64,
) -> Vec<Violation> {
    let mut ck = Checker { tol, out: Vec::new() };
    let idx = match SystemIndex::new(sys) {
        Ok(i) => i,
        Err(e) => {
            ck.shape(&e.to_string());
            return ck.out;
        }
    };
    let avail = match scen.dense(sys) {
        Ok(a) => a,
        Err(e) => {
            ck.shape(&e.to_string());
            return ck.out;
        }
    };
    let (ng, nw, nk, nn) = (sys.generators.len(), sys.res_units.len(), sys.lines.len(), sys.buses.len());
    let horizon = idx.horizon;
    let ns = scen.len();
    let nc = contingencies.len();
    let dims_ok = sol.u.len() == ng
        && sol.u.iter().chain(&sol.v).all(|r| r.len() == horizon)
        && sol.v.len() == ng
        && [(&sol.pg, ng), (&sol.r, ng), (&sol.pw, nw), (&sol.pk, nk), (&sol.theta, nn)]
            .iter()
            .all(|(a, n)| a.len() == ns && a.iter().all(|b| b.len() == horizon && b.iter().all(|c| c.len() == *n)))
        && [(&sol.pg_c, ng), (&sol.pw_c, nw), (&sol.pk_c, nk), (&sol.theta_c, nn), (&sol.z, nk)]
            .iter()
            .all(|(a, n)| {
                a.len() == nc
                    && a.iter().all(|b| {
                        b.len() == ns && b.iter().all(|c| c.len() == horizon && c.iter().all(|d| d.len() == *n))
                    })
            });
    if !dims_ok {
        ck.shape("solution dimensions do not match the system, scenarios and contingencies");
        return ck.out;
    }
    let mut conts = Vec::with_capacity(nc);
    for c in contingencies {
        let Some(out) = sys.line_position(&c.outaged_line_id) else {
            ck.shape(&format!("unknown outaged line {}", c.outaged_line_id));
            return ck.out;
        };
        let mut cand = vec![false; nk];
        for id in &c.candidate_switch_ids {
            match sys.line_position(id) {
                Some(k) => cand[k] = true,
                None => {
                    ck.shape(&format!("unknown candidate line {id}"));
                    return ck.out;
                }
            }
        }
        conts.push((out, cand));
    }
    let ref_bus = match &cfg.reference_bus {
        None => 0,
        Some(id) => match sys.bus_position(id) {
            Some(n) => n,
            None => {
                ck.shape(&format!("unknown reference bus {id}"));
                return ck.out;
            }
        },
    };

    let gid = |g: usize| sys.generators[g].id.as_str();
    let kid = |k: usize| sys.lines[k].id.as_str();
    let nid = |n: usize| sys.buses[n].id.as_str();
    let wid = |w: usize| sys.res_units[w].id.as_str();
    let sid = |s: usize| scen.scenarios[s].id.as_str();

    // Commitment-level constraints.
    for (g, gen) in sys.generators.iter().enumerate() {
        let init = gen.initial();
        let u0 = if init.on { 1.0 } else { 0.0 };
        let (forced, value) = gen.carry_over();
        let ut = gen.min_up as usize;
        let dt = gen.min_down as usize;
        for t in 0..horizon {
            let at = || format!("{},{}", gid(g), t + 1);
            let u = sol.u[g][t];
            let v = sol.v[g][t];
            ck.binary(Some(11), "commitment-integrality", at, u);
            ck.binary(Some(12), "startup-integrality", at, v);
            if t < forced {
                ck.eq(None, "initial-commitment", at, u, if value { 1.0 } else { 0.0 });
            }
            if ut >= 1 && t + 1 >= ut {
                let starts: f64 = sol.v[g][t + 1 - ut..=t].iter().sum();
                ck.le(Some(8), "min-up", at, starts, u);
            }
            if dt >= 1 && t + dt < horizon {
                let starts: f64 = sol.v[g][t + 1..=t + dt].iter().sum();
                ck.le(Some(9), "min-down", at, starts + u, 1.0);
            }
            let prev = if t == 0 { u0 } else { sol.u[g][t - 1] };
            ck.ge(Some(10), "startup-logic", at, v, u - prev);
        }
    }

    for s in 0..ns {
        for t in 0..horizon {
            let total_r: f64 = sol.r[s][t].iter().sum();
            for (g, gen) in sys.generators.iter().enumerate() {
                let at = || format!("{},{},{}", gid(g), t + 1, sid(s));
                let u = sol.u[g][t];
                let p = sol.pg[s][t][g];
                let r = sol.r[s][t][g];
                ck.ge(Some(2), "min-output", at, p, gen.p_min * u);
                ck.le(Some(2), "max-output", at, p, gen.p_max * u);
                ck.ge(Some(2), "nonnegative-output", at, p, 0.0);
                ck.le(Some(3), "output-plus-reserve", at, p + r, gen.p_max * u);
                ck.le(Some(4), "reserve-cap", at, r, gen.ramp_10min * u);
                ck.ge(Some(4), "nonnegative-reserve", at, r, 0.0);
                match cfg.reserve_rule {
                    ReserveRule::AsPrinted => ck.ge(Some(5), "system-reserve", at, total_r, p + r),
                    ReserveRule::ExcludeSelf => ck.ge(Some(5), "system-reserve", at, total_r - r, p + r),
                    ReserveRule::Off => {}
                }
                let (p_prev, u_prev) = if t == 0 {
                    (gen.initial_power(), if gen.initial().on { 1.0 } else { 0.0 })
                } else {
                    (sol.pg[s][t - 1][g], sol.u[g][t - 1])
                };
                let v = sol.v[g][t];
                ck.le(Some(6), "ramp-up", at, p - p_prev, gen.ramp_hourly * u_prev + gen.ramp_startup * v);
                ck.le(
                    Some(7),
                    "ramp-down",
                    at,
                    p_prev - p,
                    gen.ramp_hourly * u + gen.ramp_shutdown * (v - u + u_prev),
                );
            }
            for w in 0..nw {
                let at = || format!("{},{},{}", wid(w), t + 1, sid(s));
                let a = avail[s][w][t];
                let x = sol.pw[s][t][w];
                match cfg.res_usage {
                    ResUsage::Variable => {
                        ck.ge(Some(13), "res-cap", at, x, 0.0);
                        ck.le(Some(13), "res-cap", at, x, a);
                    }
                    ResUsage::Complete => ck.eq(Some(13), "res-cap", at, x, a),
                }
            }
            check_angles(&mut ck, &sol.theta[s][t], ref_bus, cfg.angle_bound, &nid, &|| format!("{},{}", t + 1, sid(s)));
            for (k, line) in sys.lines.iter().enumerate() {
                let at = || format!("{},{},{}", kid(k), t + 1, sid(s));
                let (f, to) = idx.line_ends[k];
                let flow = sol.pk[s][t][k];
                let implied = sys.mva_base * line.susceptance * (sol.theta[s][t][f] - sol.theta[s][t][to]);
                ck.eq(Some(14), "flow-definition", at, flow, implied);
                ck.le(Some(15), "thermal-limit", at, flow.abs(), line.limit_long_term);
            }
            for n in 0..nn {
                let at = || format!("{},{},{}", nid(n), t + 1, sid(s));
                let inj: f64 = idx.gens_at[n].iter().map(|&g| sol.pg[s][t][g]).sum::<f64>()
                    + idx.res_at[n].iter().map(|&w| sol.pw[s][t][w]).sum::<f64>()
                    + idx.lines_in[n].iter().map(|&k| sol.pk[s][t][k]).sum::<f64>()
                    - idx.lines_out[n].iter().map(|&k| sol.pk[s][t][k]).sum::<f64>();
                ck.eq(Some(16), "nodal-balance", at, inj, idx.demand[n][t]);
            }
        }
    }

    let cnr = cfg.model_kind == ModelKind::SscucCnr;
    for (c, (outaged, cand)) in conts.iter().enumerate() {
        let cname = kid(*outaged);
        for s in 0..ns {
            for t in 0..horizon {
                let block = || format!("{cname},{},{}", t + 1, sid(s));
                for (g, gen) in sys.generators.iter().enumerate() {
                    let at = || format!("{cname},{},{},{}", gid(g), t + 1, sid(s));
                    let u = sol.u[g][t];
                    let pc = sol.pg_c[c][s][t][g];
                    let p = sol.pg[s][t][g];
                    ck.le(Some(17), "corrective-ramp-down", at, p - pc, gen.ramp_10min * u);
                    ck.le(Some(18), "corrective-ramp-up", at, pc - p, gen.ramp_10min * u);
                    ck.ge(Some(19), "contingency-min-output", at, pc, gen.p_min * u);
                    ck.le(Some(20), "contingency-max-output", at, pc, gen.p_max * u);
                    ck.ge(Some(20), "contingency-nonnegative-output", at, pc, 0.0);
                }
                for w in 0..nw {
                    let at = || format!("{cname},{},{},{}", wid(w), t + 1, sid(s));
                    let a = avail[s][w][t];
                    let x = sol.pw_c[c][s][t][w];
                    match cfg.res_usage {
                        ResUsage::Variable => {
                            ck.ge(Some(21), "contingency-res-cap", at, x, 0.0);
                            ck.le(Some(21), "contingency-res-cap", at, x, a);
                        }
                        ResUsage::Complete => ck.eq(Some(21), "contingency-res-cap", at, x, a),
                    }
                }
                let theta = &sol.theta_c[c][s][t];
                check_angles(&mut ck, theta, ref_bus, cfg.angle_bound, &nid, &block);
                let flows = &sol.pk_c[c][s][t];
                let z = &sol.z[c][s][t];
                let mut opened = 0.0;
                for (k, line) in sys.lines.iter().enumerate() {
                    let at = || format!("{cname},{},{},{}", kid(k), t + 1, sid(s));
                    let flow = flows[k];
                    if k == *outaged {
                        ck.eq(None, "outaged-line", at, flow, 0.0);
                        continue;
                    }
                    let (f, to) = idx.line_ends[k];
                    let implied = sys.mva_base * line.susceptance * (theta[f] - theta[to]);
                    if cnr && cand[k] {
                        let zk = z[k];
                        ck.binary(Some(28), "switch-integrality", at, zk);
                        opened += 1.0 - zk;
                        let m = compute_big_m(line, sys.mva_base, cfg);
                        ck.ge(Some(25), "switched-flow-lower", at, flow - implied, -m * (1.0 - zk));
                        ck.le(Some(26), "switched-flow-upper", at, flow - implied, m * (1.0 - zk));
                        ck.le(Some(27), "switched-limit", at, flow.abs(), line.limit_emergency * zk);
                    } else {
                        ck.eq(Some(23), "contingency-flow", at, flow, implied);
                        ck.le(Some(24), "emergency-limit", at, flow.abs(), line.limit_emergency);
                    }
                }
                if cnr && cand.iter().any(|&x| x) {
                    ck.le(Some(28), "switch-budget", block, opened, cfg.switch_limit as f64);
                }
                for n in 0..nn {
                    let at = || format!("{cname},{},{},{}", nid(n), t + 1, sid(s));
                    let inj: f64 = idx.gens_at[n].iter().map(|&g| sol.pg_c[c][s][t][g]).sum::<f64>()
                        + idx.res_at[n].iter().map(|&w| sol.pw_c[c][s][t][w]).sum::<f64>()
                        + idx.lines_in[n].iter().filter(|&&k| k != *outaged).map(|&k| flows[k]).sum::<f64>()
                        - idx.lines_out[n].iter().filter(|&&k| k != *outaged).map(|&k| flows[k]).sum::<f64>();
                    ck.eq(Some(22), "contingency-balance", at, inj, idx.demand[n][t]);
                }
            }
        }
    }
    ck.out
}

fn check_angles<'a>(
    ck: &mut Checker,
    theta: &[f64],
    ref_bus: usize,
    bound: f64,
    nid: &dyn Fn(usize) -> &'a str,
    block: &dyn Fn() -> String,
) {
    for (n, &th) in theta.iter().enumerate() {
        let at = || format!("{},{}", nid(n), block());
        if n == ref_bus {
            ck.eq(None, "reference-angle", at, th, 0.0);
        } else {
            ck.le(None, "angle-box", at, th.abs(), bound);
        }
    }
}
