//! Domain-shaped view of a solved (or candidate) schedule.

use serde::{Deserialize, Serialize};

use crate::formulation::{ModelData, ModelKind, VarKey};
use crate::milp::MilpProblem;

/// Solution values in domain shape. Index order: base-case arrays are
/// `[s][t][element]`, post-contingency arrays `[c][s][t][element]`,
/// commitment `[g][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub model_kind: ModelKind,
    pub generator_ids: Vec<String>,
    pub res_ids: Vec<String>,
    pub line_ids: Vec<String>,
    pub bus_ids: Vec<String>,
    pub scenario_ids: Vec<String>,
    /// Outaged line id per contingency.
    pub contingency_ids: Vec<String>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub pg: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<Vec<f64>>>,
    pub pw: Vec<Vec<Vec<f64>>>,
    pub pk: Vec<Vec<Vec<f64>>>,
    pub theta: Vec<Vec<Vec<f64>>>,
    pub pg_c: Vec<Vec<Vec<Vec<f64>>>>,
    pub pw_c: Vec<Vec<Vec<Vec<f64>>>>,
    pub pk_c: Vec<Vec<Vec<Vec<f64>>>>,
    pub theta_c: Vec<Vec<Vec<Vec<f64>>>>,
    /// Line status per block: 1 closed, 0 open. The outaged line reads 0 and
    /// lines without a switch column read 1.
    pub z: Vec<Vec<Vec<Vec<f64>>>>,
    pub objective: f64,
}

fn grid3(a: usize, b: usize, c: usize) -> Vec<Vec<Vec<f64>>> {
    vec![vec![vec![0.0; c]; b]; a]
}

fn grid4(a: usize, b: usize, c: usize, d: usize) -> Vec<Vec<Vec<Vec<f64>>>> {
    vec![grid3(b, c, d); a]
}

impl ScheduleSolution {
    /// Zero-valued solution shaped for `data` (all switches closed, outaged
    /// lines open).
    pub fn zeros(data: &ModelData, kind: ModelKind) -> Self {
        let sys = data.sys;
        let (ng, nw, nk, nn) = (sys.generators.len(), sys.res_units.len(), sys.lines.len(), sys.buses.len());
        let (t, s, c) = (data.horizon(), data.n_scenarios(), data.contingencies.len());
        let mut z = vec![vec![vec![vec![1.0; nk]; t]; s]; c];
        for (ci, cont) in data.contingencies.iter().enumerate() {
            for block in z[ci].iter_mut().flatten() {
                block[cont.outaged] = 0.0;
            }
        }
        ScheduleSolution {
            model_kind: kind,
            generator_ids: sys.generators.iter().map(|g| g.id.clone()).collect(),
            res_ids: sys.res_units.iter().map(|w| w.id.clone()).collect(),
            line_ids: sys.lines.iter().map(|l| l.id.clone()).collect(),
            bus_ids: sys.buses.iter().map(|b| b.id.clone()).collect(),
            scenario_ids: data.scen.scenarios.iter().map(|s| s.id.clone()).collect(),
            contingency_ids: (0..c).map(|ci| data.cont_id(ci)).collect(),
            u: vec![vec![0.0; t]; ng],
            v: vec![vec![0.0; t]; ng],
            pg: grid3(s, t, ng),
            r: grid3(s, t, ng),
            pw: grid3(s, t, nw),
            pk: grid3(s, t, nk),
            theta: grid3(s, t, nn),
            pg_c: grid4(c, s, t, ng),
            pw_c: grid4(c, s, t, nw),
            pk_c: grid4(c, s, t, nk),
            theta_c: grid4(c, s, t, nn),
            z,
            objective: 0.0,
        }
    }

    /// Read column values of `prob` (built from `data`) into domain shape.
    pub fn from_values(data: &ModelData, kind: ModelKind, prob: &MilpProblem, values: &[f64], objective: f64) -> Self {
        let mut sol = Self::zeros(data, kind);
        sol.objective = objective;
        for (id, key) in prob.registry.iter() {
            let x = values[id.0];
            if let Some(slot) = sol.slot_mut(key) {
                *slot = x;
            }
        }
        sol
    }

    /// Column vector for `prob` carrying this solution's values.
    pub fn to_values(&self, prob: &MilpProblem) -> Vec<f64> {
        let mut x = vec![0.0; prob.columns.len()];
        for (id, key) in prob.registry.iter() {
            if let Some(v) = self.slot(key) {
                x[id.0] = v;
            }
        }
        x
    }

    fn slot(&self, key: &VarKey) -> Option<f64> {
        Some(match *key {
            VarKey::U { g, t } => self.u[g][t],
            VarKey::V { g, t } => self.v[g][t],
            VarKey::Pg { g, t, s } => self.pg[s][t][g],
            VarKey::R { g, t, s } => self.r[s][t][g],
            VarKey::Pw { w, t, s } => self.pw[s][t][w],
            VarKey::Pk { k, t, s } => self.pk[s][t][k],
            VarKey::Theta { n, t, s } => self.theta[s][t][n],
            VarKey::PgC { c, g, t, s } => self.pg_c[c][s][t][g],
            VarKey::PwC { c, w, t, s } => self.pw_c[c][s][t][w],
            VarKey::PkC { c, k, t, s } => self.pk_c[c][s][t][k],
            VarKey::ThetaC { c, n, t, s } => self.theta_c[c][s][t][n],
            VarKey::Z { c, k, t, s } => self.z[c][s][t][k],
            VarKey::Named(_) => return None,
        })
    }

    fn slot_mut(&mut self, key: &VarKey) -> Option<&mut f64> {
        Some(match *key {
            VarKey::U { g, t } => &mut self.u[g][t],
            VarKey::V { g, t } => &mut self.v[g][t],
            VarKey::Pg { g, t, s } => &mut self.pg[s][t][g],
            VarKey::R { g, t, s } => &mut self.r[s][t][g],
            VarKey::Pw { w, t, s } => &mut self.pw[s][t][w],
            VarKey::Pk { k, t, s } => &mut self.pk[s][t][k],
            VarKey::Theta { n, t, s } => &mut self.theta[s][t][n],
            VarKey::PgC { c, g, t, s } => &mut self.pg_c[c][s][t][g],
            VarKey::PwC { c, w, t, s } => &mut self.pw_c[c][s][t][w],
            VarKey::PkC { c, k, t, s } => &mut self.pk_c[c][s][t][k],
            VarKey::ThetaC { c, n, t, s } => &mut self.theta_c[c][s][t][n],
            VarKey::Z { c, k, t, s } => &mut self.z[c][s][t][k],
            VarKey::Named(_) => return None,
        })
    }

    pub fn horizon(&self) -> usize {
        self.u.first().map_or_else(|| self.pg.first().map_or(0, |s| s.len()), |g| g.len())
    }

    pub fn n_contingencies(&self) -> usize {
        self.contingency_ids.len()
    }

    /// Every value finite and u, v binary.
    pub fn check_shape(&self) -> Result<(), String> {
        for (name, rows) in [("u", &self.u), ("v", &self.v)] {
            for (g, row) in rows.iter().enumerate() {
                for (t, x) in row.iter().enumerate() {
                    if *x != 0.0 && *x != 1.0 {
                        return Err(format!("{name}[{},{}] = {x} is not binary", self.generator_ids[g], t + 1));
                    }
                }
            }
        }
        let finite3 = |a: &Vec<Vec<Vec<f64>>>| a.iter().flatten().flatten().all(|x| x.is_finite());
        let finite4 = |a: &Vec<Vec<Vec<Vec<f64>>>>| a.iter().flatten().flatten().flatten().all(|x| x.is_finite());
        let ok = [&self.pg, &self.r, &self.pw, &self.pk, &self.theta].into_iter().all(finite3)
            && [&self.pg_c, &self.pw_c, &self.pk_c, &self.theta_c, &self.z].into_iter().all(finite4);
        if ok {
            Ok(())
        } else {
            Err("solution contains non-finite values".into())
        }
    }
}
