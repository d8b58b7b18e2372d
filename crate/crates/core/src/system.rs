//! Static grid description: buses, thermal units, lines, renewable units and
//! nodal demand, plus structural validation of that data.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::ScenarioSet;

pub const DEFAULT_MVA_BASE: f64 = 100.0;
pub const DEFAULT_CURTAIL_PENALTY: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid system JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("system failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },
    #[error("peak system load is zero")]
    ZeroPeakLoad,
    #[error("demand horizon is empty")]
    EmptyHorizon,
    #[error("scenario set does not cover RES unit `{0}`")]
    MissingAvailability(String),
    #[error("scenario horizon {scenario} does not match demand horizon {demand}")]
    HorizonMismatch { scenario: usize, demand: usize },
}

impl From<serde_json::Error> for SystemError {
    fn from(err: serde_json::Error) -> Self {
        SystemError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    #[serde(default)]
    pub generator_ids: BTreeSet<String>,
    #[serde(default)]
    pub res_ids: BTreeSet<String>,
    /// Lines whose receiving end is this bus.
    #[serde(default)]
    pub inbound_line_ids: BTreeSet<String>,
    /// Lines whose sending end is this bus.
    #[serde(default)]
    pub outbound_line_ids: BTreeSet<String>,
}

impl Bus {
    pub fn new(id: impl Into<String>) -> Self {
        Bus {
            id: id.into(),
            ..Default::default()
        }
    }

    fn has_no_adjacency(&self) -> bool {
        self.generator_ids.is_empty()
            && self.res_ids.is_empty()
            && self.inbound_line_ids.is_empty()
            && self.outbound_line_ids.is_empty()
    }
}

/// Unit state before the first scheduled period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStatus {
    pub on: bool,
    /// Hours spent in the current state.
    pub hours: u32,
    /// Output at t = 0; defaults to `p_min` when on and 0 when off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus_id: String,
    pub p_min: f64,
    pub p_max: f64,
    pub cost_linear: f64,
    pub cost_no_load: f64,
    pub cost_startup: f64,
    pub ramp_hourly: f64,
    pub ramp_startup: f64,
    pub ramp_shutdown: f64,
    pub ramp_10min: f64,
    pub min_up: u32,
    pub min_down: u32,
    #[serde(default)]
    pub emission_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_status: Option<InitialStatus>,
}

impl Generator {
    /// Initial status with the "on long enough" default applied.
    pub fn initial(&self) -> InitialStatus {
        self.initial_status.unwrap_or(InitialStatus {
            on: true,
            hours: self.min_up.max(self.min_down),
            power: None,
        })
    }

    pub fn initial_power(&self) -> f64 {
        let init = self.initial();
        match init.power {
            Some(p) => p,
            None if init.on => self.p_min,
            None => 0.0,
        }
    }

    /// Periods (counted from t = 1) whose commitment is forced by the initial
    /// state, and the forced value.
    pub fn carry_over(&self) -> (usize, bool) {
        let init = self.initial();
        if init.on {
            (self.min_up.saturating_sub(init.hours) as usize, true)
        } else {
            (self.min_down.saturating_sub(init.hours) as usize, false)
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLine {
    pub id: String,
    /// Sending bus.
    pub from_bus: String,
    /// Receiving bus.
    pub to_bus: String,
    /// Per-unit on the system MVA base.
    pub susceptance: f64,
    pub limit_long_term: f64,
    pub limit_emergency: f64,
    #[serde(default = "default_true")]
    pub switchable: bool,
}

fn default_penalty() -> f64 {
    DEFAULT_CURTAIL_PENALTY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResUnit {
    pub id: String,
    pub bus_id: String,
    #[serde(default = "default_penalty")]
    pub curtail_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRow {
    pub bus_id: String,
    /// MW per period, t = 1..T.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandProfile {
    pub rows: Vec<DemandRow>,
}

impl DemandProfile {
    pub fn horizon(&self) -> usize {
        self.rows.first().map_or(0, |r| r.values.len())
    }

    pub fn row(&self, bus_id: &str) -> Option<&DemandRow> {
        self.rows.iter().find(|r| r.bus_id == bus_id)
    }

    /// Total system demand per period.
    pub fn system_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.horizon()];
        for row in &self.rows {
            for (acc, d) in totals.iter_mut().zip(&row.values) {
                *acc += d;
            }
        }
        totals
    }
}

fn default_mva_base() -> f64 {
    DEFAULT_MVA_BASE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSystem {
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<TransmissionLine>,
    #[serde(default)]
    pub res_units: Vec<ResUnit>,
    pub demand: DemandProfile,
    #[serde(default = "default_mva_base")]
    pub mva_base: f64,
}

impl PowerSystem {
    /// Parse a system document. Buses that list no adjacency at all get it
    /// derived from the line, generator and RES tables.
    pub fn from_json_str(text: &str) -> Result<Self, SystemError> {
        let mut sys: PowerSystem = serde_json::from_str(text)?;
        sys.fill_missing_adjacency();
        Ok(sys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SystemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn horizon(&self) -> usize {
        self.demand.horizon()
    }

    pub fn bus_position(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn line_position(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Copy restricted to periods `first..first + len` (0-based `first`).
    pub fn with_window(&self, first: usize, len: usize) -> Result<Self, SystemError> {
        if len == 0 {
            return Err(SystemError::EmptyHorizon);
        }
        if first + len > self.horizon() {
            return Err(SystemError::HorizonMismatch {
                scenario: first + len,
                demand: self.horizon(),
            });
        }
        let mut out = self.clone();
        for row in &mut out.demand.rows {
            row.values = row.values[first..first + len].to_vec();
        }
        Ok(out)
    }

    /// Recompute every bus adjacency set from the element tables.
    pub fn rebuild_adjacency(&mut self) {
        let derived = self.derived_adjacency();
        for bus in &mut self.buses {
            if let Some(adj) = derived.get(&bus.id) {
                bus.generator_ids = adj.generator_ids.clone();
                bus.res_ids = adj.res_ids.clone();
                bus.inbound_line_ids = adj.inbound_line_ids.clone();
                bus.outbound_line_ids = adj.outbound_line_ids.clone();
            }
        }
    }

    fn fill_missing_adjacency(&mut self) {
        let derived = self.derived_adjacency();
        for bus in &mut self.buses {
            if bus.has_no_adjacency() {
                if let Some(adj) = derived.get(&bus.id) {
                    bus.generator_ids = adj.generator_ids.clone();
                    bus.res_ids = adj.res_ids.clone();
                    bus.inbound_line_ids = adj.inbound_line_ids.clone();
                    bus.outbound_line_ids = adj.outbound_line_ids.clone();
                }
            }
        }
    }

    fn derived_adjacency(&self) -> HashMap<String, Bus> {
        let mut map: HashMap<String, Bus> = self
            .buses
            .iter()
            .map(|b| (b.id.clone(), Bus::new(b.id.clone())))
            .collect();
        for g in &self.generators {
            if let Some(b) = map.get_mut(&g.bus_id) {
                b.generator_ids.insert(g.id.clone());
            }
        }
        for w in &self.res_units {
            if let Some(b) = map.get_mut(&w.bus_id) {
                b.res_ids.insert(w.id.clone());
            }
        }
        for l in &self.lines {
            if let Some(b) = map.get_mut(&l.to_bus) {
                b.inbound_line_ids.insert(l.id.clone());
            }
            if let Some(b) = map.get_mut(&l.from_bus) {
                b.outbound_line_ids.insert(l.id.clone());
            }
        }
        map
    }

    /// Check every structural invariant and fail with the full report.
    pub fn validated(self) -> Result<Self, SystemError> {
        let report = validate_system(&self);
        if report.is_empty() {
            Ok(self)
        } else {
            Err(SystemError::Invalid(report))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Location of the offending field, e.g. `lines[2].limit_emergency`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

fn check_unique<'a>(
    report: &mut ValidationReport,
    table: &str,
    ids: impl Iterator<Item = &'a str>,
) {
    let mut seen = HashSet::new();
    for (i, id) in ids.enumerate() {
        if !seen.insert(id) {
            report.push(format!("{table}[{i}].id"), format!("duplicate id `{id}`"));
        }
    }
}

fn check_finite(report: &mut ValidationReport, path: String, value: f64) -> bool {
    if value.is_finite() {
        true
    } else {
        report.push(path, format!("non-finite value {value}"));
        false
    }
}

/// List every violated invariant of `sys`. Never fails; an empty report means
/// the system is well-formed.
pub fn validate_system(sys: &PowerSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let bus_ids: HashSet<&str> = sys.buses.iter().map(|b| b.id.as_str()).collect();

    if !(sys.mva_base.is_finite() && sys.mva_base > 0.0) {
        report.push("mva_base", format!("must be positive, got {}", sys.mva_base));
    }

    check_unique(&mut report, "buses", sys.buses.iter().map(|b| b.id.as_str()));
    check_unique(&mut report, "generators", sys.generators.iter().map(|g| g.id.as_str()));
    check_unique(&mut report, "lines", sys.lines.iter().map(|l| l.id.as_str()));
    check_unique(&mut report, "res_units", sys.res_units.iter().map(|w| w.id.as_str()));

    for (i, g) in sys.generators.iter().enumerate() {
        let p = |field: &str| format!("generators[{i}].{field}");
        if !bus_ids.contains(g.bus_id.as_str()) {
            report.push(p("bus_id"), format!("dangling reference to bus `{}`", g.bus_id));
        }
        let numeric = [
            ("p_min", g.p_min),
            ("p_max", g.p_max),
            ("cost_linear", g.cost_linear),
            ("cost_no_load", g.cost_no_load),
            ("cost_startup", g.cost_startup),
            ("ramp_hourly", g.ramp_hourly),
            ("ramp_startup", g.ramp_startup),
            ("ramp_shutdown", g.ramp_shutdown),
            ("ramp_10min", g.ramp_10min),
            ("emission_rate", g.emission_rate),
        ];
        let finite = numeric
            .iter()
            .fold(true, |ok, (name, v)| check_finite(&mut report, p(name), *v) && ok);
        if !finite {
            continue;
        }
        if g.p_min < 0.0 {
            report.push(p("p_min"), format!("must be >= 0, got {}", g.p_min));
        }
        if g.p_min > g.p_max {
            report.push(p("p_max"), format!("p_max {} below p_min {}", g.p_max, g.p_min));
        }
        for (name, v) in &numeric[5..9] {
            if *v < 0.0 {
                report.push(p(name), format!("ramp limit must be >= 0, got {v}"));
            }
        }
        if g.min_up < 1 {
            report.push(p("min_up"), "must be >= 1");
        }
        if g.min_down < 1 {
            report.push(p("min_down"), "must be >= 1");
        }
        if g.emission_rate < 0.0 {
            report.push(p("emission_rate"), format!("must be >= 0, got {}", g.emission_rate));
        }
        if let Some(InitialStatus { power: Some(pw), on, .. }) = g.initial_status {
            if !pw.is_finite() || pw < 0.0 || pw > g.p_max || (!on && pw != 0.0) {
                report.push(p("initial_status.power"), format!("inconsistent initial output {pw}"));
            }
        }
    }

    for (i, l) in sys.lines.iter().enumerate() {
        let p = |field: &str| format!("lines[{i}].{field}");
        for (field, bus) in [("from_bus", &l.from_bus), ("to_bus", &l.to_bus)] {
            if !bus_ids.contains(bus.as_str()) {
                report.push(p(field), format!("dangling reference to bus `{bus}`"));
            }
        }
        if l.from_bus == l.to_bus {
            report.push(p("to_bus"), format!("line `{}` is a self-loop", l.id));
        }
        if !l.susceptance.is_finite() || l.susceptance == 0.0 {
            report.push(p("susceptance"), format!("must be finite and nonzero, got {}", l.susceptance));
        }
        if !(l.limit_long_term.is_finite() && l.limit_long_term > 0.0) {
            report.push(p("limit_long_term"), format!("must be positive, got {}", l.limit_long_term));
        }
        if !l.limit_emergency.is_finite() || l.limit_emergency < l.limit_long_term {
            report.push(
                p("limit_emergency"),
                format!(
                    "line `{}`: emergency limit {} below long-term limit {}",
                    l.id, l.limit_emergency, l.limit_long_term
                ),
            );
        }
    }

    for (i, w) in sys.res_units.iter().enumerate() {
        if !bus_ids.contains(w.bus_id.as_str()) {
            report.push(
                format!("res_units[{i}].bus_id"),
                format!("dangling reference to bus `{}`", w.bus_id),
            );
        }
        if !(w.curtail_penalty.is_finite() && w.curtail_penalty >= 0.0) {
            report.push(
                format!("res_units[{i}].curtail_penalty"),
                format!("must be >= 0, got {}", w.curtail_penalty),
            );
        }
    }

    let horizon = sys.demand.horizon();
    if horizon == 0 {
        report.push("demand", "horizon must contain at least one period");
    }
    let mut demand_buses = HashSet::new();
    for (i, row) in sys.demand.rows.iter().enumerate() {
        if !bus_ids.contains(row.bus_id.as_str()) {
            report.push(format!("demand[{i}].bus_id"), format!("dangling reference to bus `{}`", row.bus_id));
        }
        if !demand_buses.insert(row.bus_id.as_str()) {
            report.push(format!("demand[{i}].bus_id"), format!("duplicate row for bus `{}`", row.bus_id));
        }
        if row.values.len() != horizon {
            report.push(
                format!("demand[{i}].values"),
                format!("has {} periods, expected {horizon}", row.values.len()),
            );
        }
        for (t, d) in row.values.iter().enumerate() {
            if !(d.is_finite() && *d >= 0.0) {
                report.push(format!("demand[{i}].values[{t}]"), format!("must be >= 0, got {d}"));
            }
        }
    }
    for (i, b) in sys.buses.iter().enumerate() {
        if !demand_buses.contains(b.id.as_str()) {
            report.push(format!("buses[{i}]"), format!("bus `{}` has no demand row", b.id));
        }
    }

    let derived = sys.derived_adjacency();
    for (i, b) in sys.buses.iter().enumerate() {
        let Some(expected) = derived.get(&b.id) else { continue };
        let sets = [
            ("generator_ids", &b.generator_ids, &expected.generator_ids),
            ("res_ids", &b.res_ids, &expected.res_ids),
            ("inbound_line_ids", &b.inbound_line_ids, &expected.inbound_line_ids),
            ("outbound_line_ids", &b.outbound_line_ids, &expected.outbound_line_ids),
        ];
        for (field, actual, expected) in sets {
            if actual != expected {
                report.push(
                    format!("buses[{i}].{field}"),
                    format!("inconsistent with element tables: listed {actual:?}, derived {expected:?}"),
                );
            }
        }
    }

    if !sys.buses.is_empty() {
        let islands = crate::topology::islands_after(sys, &BTreeSet::new());
        if islands.len() > 1 {
            report.push("lines", format!("network is not connected ({} islands)", islands.len()));
        }
    }

    report
}

/// Expected RES availability at the peak-load period over the peak load.
pub fn peak_penetration(sys: &PowerSystem, scen: &ScenarioSet) -> Result<f64, SystemError> {
    let totals = sys.demand.system_totals();
    if totals.is_empty() {
        return Err(SystemError::EmptyHorizon);
    }
    let (peak_t, peak) = totals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (t, d)| if d > best.1 { (t, d) } else { best });
    if peak <= 0.0 {
        return Err(SystemError::ZeroPeakLoad);
    }
    let mut expected = 0.0;
    for s in &scen.scenarios {
        let at_peak: f64 = s
            .availability
            .values()
            .map(|profile| profile.get(peak_t).copied().unwrap_or(0.0))
            .sum();
        expected += s.probability * at_peak;
    }
    Ok(expected / peak)
}

/// Dense, index-based view of a validated system used by the model builders.
#[derive(Debug, Clone)]
pub struct SystemIndex {
    pub horizon: usize,
    /// `(from, to)` bus positions per line.
    pub line_ends: Vec<(usize, usize)>,
    pub gen_bus: Vec<usize>,
    pub res_bus: Vec<usize>,
    /// `demand[n][t]`.
    pub demand: Vec<Vec<f64>>,
    pub gens_at: Vec<Vec<usize>>,
    pub res_at: Vec<Vec<usize>>,
    pub lines_in: Vec<Vec<usize>>,
    pub lines_out: Vec<Vec<usize>>,
}

impl SystemIndex {
    pub fn new(sys: &PowerSystem) -> Result<Self, SystemError> {
        let pos: BTreeMap<&str, usize> = sys
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect();
        let lookup = |id: &str| {
            pos.get(id).copied().ok_or_else(|| SystemError::UnknownId {
                kind: "bus",
                id: id.to_string(),
            })
        };
        let n_bus = sys.buses.len();
        let mut gens_at = vec![Vec::new(); n_bus];
        let mut res_at = vec![Vec::new(); n_bus];
        let mut lines_in = vec![Vec::new(); n_bus];
        let mut lines_out = vec![Vec::new(); n_bus];
        let mut gen_bus = Vec::with_capacity(sys.generators.len());
        for (g, gen) in sys.generators.iter().enumerate() {
            let b = lookup(&gen.bus_id)?;
            gens_at[b].push(g);
            gen_bus.push(b);
        }
        let mut res_bus = Vec::with_capacity(sys.res_units.len());
        for (w, unit) in sys.res_units.iter().enumerate() {
            let b = lookup(&unit.bus_id)?;
            res_at[b].push(w);
            res_bus.push(b);
        }
        let mut line_ends = Vec::with_capacity(sys.lines.len());
        for (k, line) in sys.lines.iter().enumerate() {
            let (f, t) = (lookup(&line.from_bus)?, lookup(&line.to_bus)?);
            lines_out[f].push(k);
            lines_in[t].push(k);
            line_ends.push((f, t));
        }
        let horizon = sys.horizon();
        let mut demand = vec![vec![0.0; horizon]; n_bus];
        for row in &sys.demand.rows {
            let b = lookup(&row.bus_id)?;
            for (t, d) in row.values.iter().take(horizon).enumerate() {
                demand[b][t] = *d;
            }
        }
        Ok(SystemIndex {
            horizon,
            line_ends,
            gen_bus,
            res_bus,
            demand,
            gens_at,
            res_at,
            lines_in,
            lines_out,
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn gen(id: &str, bus: &str, p_min: f64, p_max: f64, cost: f64) -> Generator {
        Generator {
            id: id.into(),
            bus_id: bus.into(),
            p_min,
            p_max,
            cost_linear: cost,
            cost_no_load: 0.0,
            cost_startup: 0.0,
            ramp_hourly: p_max,
            ramp_startup: p_max,
            ramp_shutdown: p_max,
            ramp_10min: p_max,
            min_up: 1,
            min_down: 1,
            emission_rate: 0.0,
            initial_status: None,
        }
    }

    pub fn line(id: &str, from: &str, to: &str, b: f64, limit: f64) -> TransmissionLine {
        TransmissionLine {
            id: id.into(),
            from_bus: from.into(),
            to_bus: to.into(),
            susceptance: b,
            limit_long_term: limit,
            limit_emergency: limit,
            switchable: true,
        }
    }

    pub fn system(buses: &[&str], lines: Vec<TransmissionLine>, gens: Vec<Generator>, demand: &[(&str, &[f64])]) -> PowerSystem {
        let horizon = demand.first().map_or(1, |d| d.1.len());
        let rows = buses
            .iter()
            .map(|b| DemandRow {
                bus_id: b.to_string(),
                values: demand
                    .iter()
                    .find(|d| d.0 == *b)
                    .map_or(vec![0.0; horizon], |d| d.1.to_vec()),
            })
            .collect();
        let mut sys = PowerSystem {
            buses: buses.iter().map(|b| Bus::new(*b)).collect(),
            generators: gens,
            lines,
            res_units: vec![],
            demand: DemandProfile { rows },
            mva_base: DEFAULT_MVA_BASE,
        };
        sys.rebuild_adjacency();
        sys
    }

    pub fn triangle() -> PowerSystem {
        system(
            &["a", "b", "c"],
            vec![
                line("ab", "a", "b", 10.0, 100.0),
                line("bc", "b", "c", 10.0, 100.0),
                line("ca", "c", "a", 10.0, 100.0),
            ],
            vec![gen("g1", "a", 0.0, 200.0, 10.0)],
            &[("c", &[50.0])],
        )
    }

    pub fn path3() -> PowerSystem {
        system(
            &["a", "b", "c"],
            vec![line("ab", "a", "b", 10.0, 100.0), line("bc", "b", "c", 10.0, 100.0)],
            vec![gen("g1", "a", 0.0, 200.0, 10.0)],
            &[("c", &[50.0])],
        )
    }
}
