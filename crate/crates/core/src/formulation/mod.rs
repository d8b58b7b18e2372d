//! Translation of a grid, its scenarios and its contingency list into a
//! [`MilpProblem`] for the stochastic N-1 unit commitment, with or without
//! corrective line switching.
//!
//! Column naming scheme (periods are 1-based, other indices are element ids):
//!
//! | key | name |
//! |-----|------|
//! | commitment | `u[g,t]` |
//! | start-up | `v[g,t]` |
//! | thermal dispatch | `Pg[g,t,s]` |
//! | reserve | `r[g,t,s]` |
//! | RES output | `Pw[w,t,s]` |
//! | line flow | `Pk[k,t,s]` |
//! | bus angle | `theta[n,t,s]` |
//! | post-contingency copies | `Pgc[c,g,t,s]`, `Pwc[c,w,t,s]`, `Pkc[c,k,t,s]`, `thetac[c,n,t,s]` |
//! | switch status | `z[c,k,t,s]` |
//!
//! where `c` is the id of the outaged line.

mod base;
mod contingency;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use base::{add_base_generator_constraints, add_base_network_constraints};
pub use contingency::{
    add_contingency_generator_constraints, add_contingency_network_cnr, add_contingency_network_fixed,
};

use crate::milp::{Column, MilpProblem, ProblemError, Tag, VarId, VarKind};
use crate::scenario::{ScenarioError, ScenarioSet};
use crate::system::{PowerSystem, SystemError, SystemIndex, TransmissionLine};
use crate::topology::Contingency;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("reference bus `{0}` is not in the system")]
    UnknownReferenceBus(String),
    #[error("contingency references unknown line `{0}`")]
    UnknownLine(String),
    #[error("candidate `{0}` equals the outaged line")]
    CandidateIsOutage(String),
    #[error("column `{0}` must be registered before this builder runs")]
    Unregistered(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("system has no buses")]
    NoBuses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Static post-contingency network.
    #[serde(rename = "sscuc")]
    Sscuc,
    /// Post-contingency network with corrective line opening.
    #[serde(rename = "sscuc-cnr")]
    SscucCnr,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Sscuc => "sscuc",
            ModelKind::SscucCnr => "sscuc-cnr",
        }
    }
}

/// Form of the per-unit reserve requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReserveRule {
    /// `sum_q r_q >= P_g + r_g` with the sum over every unit, including g.
    AsPrinted,
    /// `sum_{q != g} r_q >= P_g + r_g`.
    ExcludeSelf,
    /// No system reserve rows.
    Off,
}

/// Whether renewable output may be curtailed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResUsage {
    /// Output anywhere in `[0, available]`.
    Variable,
    /// Output pinned to the available power.
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationConfig {
    pub model_kind: ModelKind,
    /// Lines that may be opened per (contingency, period, scenario).
    pub switch_limit: usize,
    pub big_m_margin: f64,
    /// Angle box half-width in radians.
    pub angle_bound: f64,
    /// Defaults to the first bus.
    pub reference_bus: Option<String>,
    pub penalty_enabled: bool,
    pub reserve_rule: ReserveRule,
    pub res_usage: ResUsage,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        FormulationConfig {
            model_kind: ModelKind::Sscuc,
            switch_limit: 1,
            big_m_margin: 0.0,
            angle_bound: 0.6,
            reference_bus: None,
            penalty_enabled: true,
            reserve_rule: ReserveRule::AsPrinted,
            res_usage: ResUsage::Variable,
        }
    }
}

impl FormulationConfig {
    pub fn with_kind(kind: ModelKind) -> Self {
        FormulationConfig {
            model_kind: kind,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<(), FormulationError> {
        if !(self.angle_bound.is_finite() && self.angle_bound > 0.0) {
            return Err(FormulationError::Config(format!("angle_bound must be positive, got {}", self.angle_bound)));
        }
        if !(self.big_m_margin.is_finite() && self.big_m_margin >= 0.0) {
            return Err(FormulationError::Config(format!("big_m_margin must be >= 0, got {}", self.big_m_margin)));
        }
        Ok(())
    }
}

/// Registry key: model symbol plus index tuple (positions into the system
/// tables, the scenario list and the contingency list).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    U { g: usize, t: usize },
    V { g: usize, t: usize },
    Pg { g: usize, t: usize, s: usize },
    R { g: usize, t: usize, s: usize },
    Pw { w: usize, t: usize, s: usize },
    Pk { k: usize, t: usize, s: usize },
    Theta { n: usize, t: usize, s: usize },
    PgC { c: usize, g: usize, t: usize, s: usize },
    PwC { c: usize, w: usize, t: usize, s: usize },
    PkC { c: usize, k: usize, t: usize, s: usize },
    ThetaC { c: usize, n: usize, t: usize, s: usize },
    Z { c: usize, k: usize, t: usize, s: usize },
    /// Columns of problems read from LP files.
    Named(String),
}

impl VarKey {
    pub fn is_scenario_indexed(&self) -> bool {
        !matches!(self, VarKey::U { .. } | VarKey::V { .. } | VarKey::Named(_))
    }
}

/// Contingency resolved to line positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyIndex {
    pub outaged: usize,
    pub candidates: Vec<usize>,
}

/// Everything the builders read, resolved to dense indices.
#[derive(Debug, Clone)]
pub struct ModelData<'a> {
    pub sys: &'a PowerSystem,
    pub scen: &'a ScenarioSet,
    pub index: SystemIndex,
    /// `avail[s][w][t]`, MW.
    pub avail: Vec<Vec<Vec<f64>>>,
    pub probability: Vec<f64>,
    pub contingencies: Vec<ContingencyIndex>,
    pub reference_bus: usize,
}

impl<'a> ModelData<'a> {
    pub fn new(
        sys: &'a PowerSystem,
        scen: &'a ScenarioSet,
        contingencies: &[Contingency],
        cfg: &FormulationConfig,
    ) -> Result<Self, FormulationError> {
        cfg.check()?;
        if sys.buses.is_empty() {
            return Err(FormulationError::NoBuses);
        }
        let index = SystemIndex::new(sys)?;
        let avail = scen.dense(sys)?;
        let reference_bus = match &cfg.reference_bus {
            None => 0,
            Some(id) => sys
                .bus_position(id)
                .ok_or_else(|| FormulationError::UnknownReferenceBus(id.clone()))?,
        };
        let line = |id: &str| sys.line_position(id).ok_or_else(|| FormulationError::UnknownLine(id.to_string()));
        let contingencies = contingencies
            .iter()
            .map(|c| {
                let outaged = line(&c.outaged_line_id)?;
                let candidates = c
                    .candidate_switch_ids
                    .iter()
                    .map(|id| {
                        let k = line(id)?;
                        if k == outaged {
                            Err(FormulationError::CandidateIsOutage(id.clone()))
                        } else {
                            Ok(k)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ContingencyIndex { outaged, candidates })
            })
            .collect::<Result<Vec<_>, FormulationError>>()?;
        Ok(ModelData {
            sys,
            scen,
            index,
            avail,
            probability: scen.probabilities(),
            contingencies,
            reference_bus,
        })
    }

    pub fn horizon(&self) -> usize {
        self.index.horizon
    }

    pub fn n_scenarios(&self) -> usize {
        self.probability.len()
    }

    pub fn periods(&self) -> std::ops::Range<usize> {
        0..self.index.horizon
    }

    /// Canonical column name for `key`.
    pub fn name(&self, key: &VarKey) -> String {
        let sys = self.sys;
        let g = |i: usize| sys.generators[i].id.as_str();
        let w = |i: usize| sys.res_units[i].id.as_str();
        let k = |i: usize| sys.lines[i].id.as_str();
        let n = |i: usize| sys.buses[i].id.as_str();
        let s = |i: usize| self.scen.scenarios[i].id.as_str();
        let c = |i: usize| sys.lines[self.contingencies[i].outaged].id.as_str();
        match *key {
            VarKey::U { g: gi, t } => format!("u[{},{}]", g(gi), t + 1),
            VarKey::V { g: gi, t } => format!("v[{},{}]", g(gi), t + 1),
            VarKey::Pg { g: gi, t, s: si } => format!("Pg[{},{},{}]", g(gi), t + 1, s(si)),
            VarKey::R { g: gi, t, s: si } => format!("r[{},{},{}]", g(gi), t + 1, s(si)),
            VarKey::Pw { w: wi, t, s: si } => format!("Pw[{},{},{}]", w(wi), t + 1, s(si)),
            VarKey::Pk { k: ki, t, s: si } => format!("Pk[{},{},{}]", k(ki), t + 1, s(si)),
            VarKey::Theta { n: ni, t, s: si } => format!("theta[{},{},{}]", n(ni), t + 1, s(si)),
            VarKey::PgC { c: ci, g: gi, t, s: si } => format!("Pgc[{},{},{},{}]", c(ci), g(gi), t + 1, s(si)),
            VarKey::PwC { c: ci, w: wi, t, s: si } => format!("Pwc[{},{},{},{}]", c(ci), w(wi), t + 1, s(si)),
            VarKey::PkC { c: ci, k: ki, t, s: si } => format!("Pkc[{},{},{},{}]", c(ci), k(ki), t + 1, s(si)),
            VarKey::ThetaC { c: ci, n: ni, t, s: si } => format!("thetac[{},{},{},{}]", c(ci), n(ni), t + 1, s(si)),
            VarKey::Z { c: ci, k: ki, t, s: si } => format!("z[{},{},{},{}]", c(ci), k(ki), t + 1, s(si)),
            VarKey::Named(ref name) => name.clone(),
        }
    }

    pub(crate) fn row_name(&self, tag: Tag, parts: &[String]) -> String {
        format!("{tag:?}[{}]", parts.join(","))
    }

    pub(crate) fn scen_id(&self, s: usize) -> String {
        self.scen.scenarios[s].id.clone()
    }

    pub(crate) fn cont_id(&self, c: usize) -> String {
        self.sys.lines[self.contingencies[c].outaged].id.clone()
    }
}

pub(crate) fn lookup(prob: &MilpProblem, data: &ModelData, key: VarKey) -> Result<VarId, FormulationError> {
    prob.var(&key).ok_or_else(|| FormulationError::Unregistered(data.name(&key)))
}

fn add_var(
    prob: &mut MilpProblem,
    data: &ModelData,
    key: VarKey,
    lower: f64,
    upper: f64,
    kind: VarKind,
    bound_tag: Option<Tag>,
) -> Result<VarId, FormulationError> {
    let name = data.name(&key);
    Ok(prob.add_column(
        key,
        Column {
            name,
            lower,
            upper,
            kind,
            cost: 0.0,
            bound_tag,
        },
    )?)
}

/// Angle bounds for bus `n`: the reference bus is pinned to zero.
fn angle_bounds(data: &ModelData, cfg: &FormulationConfig, n: usize) -> (f64, f64, Tag) {
    if n == data.reference_bus {
        (0.0, 0.0, Tag::ReferenceAngle)
    } else {
        (-cfg.angle_bound, cfg.angle_bound, Tag::AngleBox)
    }
}

fn res_bounds(avail: f64, cfg: &FormulationConfig) -> (f64, f64) {
    match cfg.res_usage {
        ResUsage::Variable => (0.0, avail),
        ResUsage::Complete => (avail, avail),
    }
}

/// Register commitment, start-up and base-case columns. Bound-type
/// constraints (RES cap, thermal limits, angle box, initial commitment
/// carry-over) are encoded here as tagged column bounds.
pub fn register_base_variables(
    prob: &mut MilpProblem,
    data: &ModelData,
    cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    for (g, gen) in sys.generators.iter().enumerate() {
        let (forced, value) = gen.carry_over();
        for t in data.periods() {
            let (lo, hi, tag) = if t < forced {
                let v = if value { 1.0 } else { 0.0 };
                (v, v, Some(Tag::InitialCommitment))
            } else {
                (0.0, 1.0, None)
            };
            add_var(prob, data, VarKey::U { g, t }, lo, hi, VarKind::Binary, tag)?;
        }
        for t in data.periods() {
            add_var(prob, data, VarKey::V { g, t }, 0.0, 1.0, VarKind::Binary, None)?;
        }
    }
    for s in 0..data.n_scenarios() {
        for t in data.periods() {
            for (g, gen) in sys.generators.iter().enumerate() {
                add_var(prob, data, VarKey::Pg { g, t, s }, 0.0, gen.p_max, VarKind::Continuous, None)?;
                add_var(prob, data, VarKey::R { g, t, s }, 0.0, gen.ramp_10min, VarKind::Continuous, None)?;
            }
            for w in 0..sys.res_units.len() {
                let (lo, hi) = res_bounds(data.avail[s][w][t], cfg);
                add_var(prob, data, VarKey::Pw { w, t, s }, lo, hi, VarKind::Continuous, Some(Tag::ResCap))?;
            }
            for (k, line) in sys.lines.iter().enumerate() {
                let lim = line.limit_long_term;
                add_var(prob, data, VarKey::Pk { k, t, s }, -lim, lim, VarKind::Continuous, Some(Tag::ThermalLimit))?;
            }
            for n in 0..sys.buses.len() {
                let (lo, hi, tag) = angle_bounds(data, cfg, n);
                add_var(prob, data, VarKey::Theta { n, t, s }, lo, hi, VarKind::Continuous, Some(tag))?;
            }
        }
    }
    Ok(())
}

/// Register post-contingency copies for every (contingency, period,
/// scenario), plus switch columns for candidate lines under CNR.
pub fn register_contingency_variables(
    prob: &mut MilpProblem,
    data: &ModelData,
    cfg: &FormulationConfig,
) -> Result<(), FormulationError> {
    let sys = data.sys;
    let cnr = cfg.model_kind == ModelKind::SscucCnr;
    for (c, cont) in data.contingencies.iter().enumerate() {
        for s in 0..data.n_scenarios() {
            for t in data.periods() {
                for (g, gen) in sys.generators.iter().enumerate() {
                    add_var(prob, data, VarKey::PgC { c, g, t, s }, 0.0, gen.p_max, VarKind::Continuous, None)?;
                }
                for w in 0..sys.res_units.len() {
                    let (lo, hi) = res_bounds(data.avail[s][w][t], cfg);
                    add_var(prob, data, VarKey::PwC { c, w, t, s }, lo, hi, VarKind::Continuous, Some(Tag::ContingencyResCap))?;
                }
                for (k, line) in sys.lines.iter().enumerate() {
                    let lim = line.limit_emergency;
                    let (lo, hi, tag) = if k == cont.outaged {
                        (0.0, 0.0, Some(Tag::OutagedLine))
                    } else if cnr && cont.candidates.contains(&k) {
                        // Switched limit rows bound these columns.
                        (-lim, lim, None)
                    } else {
                        (-lim, lim, Some(Tag::EmergencyLimit))
                    };
                    add_var(prob, data, VarKey::PkC { c, k, t, s }, lo, hi, VarKind::Continuous, tag)?;
                }
                for n in 0..sys.buses.len() {
                    let (lo, hi, tag) = angle_bounds(data, cfg, n);
                    add_var(prob, data, VarKey::ThetaC { c, n, t, s }, lo, hi, VarKind::Continuous, Some(tag))?;
                }
                if cnr {
                    for &k in &cont.candidates {
                        add_var(prob, data, VarKey::Z { c, k, t, s }, 0.0, 1.0, VarKind::Binary, None)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Big-M for the switched flow rows of `line`, MW: large enough that an
/// open switch never restricts angles inside the angle box.
pub fn compute_big_m(line: &TransmissionLine, mva_base: f64, cfg: &FormulationConfig) -> f64 {
    line.susceptance.abs() * 2.0 * cfg.angle_bound * mva_base + cfg.big_m_margin
}

/// Set objective costs and offset: no-load, start-up and expected energy
/// cost, plus (when enabled) the expected post-contingency curtailment
/// penalty including its constant part.
pub fn build_objective(prob: &mut MilpProblem, data: &ModelData, cfg: &FormulationConfig) -> Result<(), FormulationError> {
    let sys = data.sys;
    for col in &mut prob.columns {
        col.cost = 0.0;
    }
    prob.objective_offset = 0.0;
    for (g, gen) in sys.generators.iter().enumerate() {
        for t in data.periods() {
            let u = lookup(prob, data, VarKey::U { g, t })?;
            let v = lookup(prob, data, VarKey::V { g, t })?;
            prob.columns[u.0].cost += gen.cost_no_load;
            prob.columns[v.0].cost += gen.cost_startup;
            for (s, pi) in data.probability.iter().enumerate() {
                let p = lookup(prob, data, VarKey::Pg { g, t, s })?;
                prob.columns[p.0].cost += pi * gen.cost_linear;
            }
        }
    }
    if cfg.penalty_enabled {
        for c in 0..data.contingencies.len() {
            for (s, pi) in data.probability.iter().enumerate() {
                for t in data.periods() {
                    for (w, unit) in sys.res_units.iter().enumerate() {
                        let weight = pi * unit.curtail_penalty;
                        let p = lookup(prob, data, VarKey::PwC { c, w, t, s })?;
                        prob.columns[p.0].cost -= weight;
                        prob.objective_offset += weight * data.avail[s][w][t];
                    }
                }
            }
        }
    }
    Ok(())
}

/// Build the complete problem for `cfg.model_kind`.
pub fn assemble(
    sys: &PowerSystem,
    scen: &ScenarioSet,
    contingencies: &[Contingency],
    cfg: &FormulationConfig,
) -> Result<MilpProblem, FormulationError> {
    let data = ModelData::new(sys, scen, contingencies, cfg)?;
    assemble_with(&data, cfg)
}

pub fn assemble_with(data: &ModelData, cfg: &FormulationConfig) -> Result<MilpProblem, FormulationError> {
    let mut prob = MilpProblem::default();
    register_base_variables(&mut prob, data, cfg)?;
    register_contingency_variables(&mut prob, data, cfg)?;
    add_base_generator_constraints(&mut prob, data, cfg)?;
    add_base_network_constraints(&mut prob, data, cfg)?;
    add_contingency_generator_constraints(&mut prob, data, cfg)?;
    match cfg.model_kind {
        ModelKind::Sscuc => add_contingency_network_fixed(&mut prob, data, cfg)?,
        ModelKind::SscucCnr => add_contingency_network_cnr(&mut prob, data, cfg)?,
    }
    build_objective(&mut prob, data, cfg)?;
    prob.check_consistency()?;
    Ok(prob)
}

#[cfg(test)]
pub(crate) mod test_cases;
