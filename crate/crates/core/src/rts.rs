//! Converter from RTS-style CSV tables (bus, branch, generator, plus an hourly
//! load shape and an optional RES table) into a [`PowerSystem`].
//!
//! Column headers follow the RTS-GMLC naming where one exists. Cost and
//! emission columns are not part of the public RTS tables and must be
//! supplied by the user.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::system::{
    Bus, DemandProfile, DemandRow, Generator, InitialStatus, PowerSystem, ResUnit, SystemError, TransmissionLine,
    DEFAULT_CURTAIL_PENALTY, DEFAULT_MVA_BASE,
};

#[derive(Debug, Error)]
pub enum RtsError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{table} table, record {record}: {message}")]
    Record {
        table: &'static str,
        record: u64,
        message: String,
    },
    #[error("{table} table, record {record}: {message}")]
    Value {
        table: &'static str,
        record: usize,
        message: String,
    },
    #[error("load shape is empty")]
    EmptyLoadShape,
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Deserialize)]
struct BusRecord {
    #[serde(rename = "Bus ID")]
    id: String,
    #[serde(rename = "MW Load")]
    load: f64,
}

#[derive(Debug, Deserialize)]
struct BranchRecord {
    #[serde(rename = "UID")]
    id: String,
    #[serde(rename = "From Bus")]
    from: String,
    #[serde(rename = "To Bus")]
    to: String,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Cont Rating")]
    cont: f64,
    #[serde(rename = "STE Rating")]
    ste: f64,
    #[serde(rename = "Switchable", default)]
    switchable: Option<u8>,
}

#[derive(Debug, Deserialize)]
struct GenRecord {
    #[serde(rename = "GEN UID")]
    id: String,
    #[serde(rename = "Bus ID")]
    bus: String,
    #[serde(rename = "PMin MW")]
    p_min: f64,
    #[serde(rename = "PMax MW")]
    p_max: f64,
    #[serde(rename = "Ramp Rate MW/Min")]
    ramp_per_min: f64,
    #[serde(rename = "Min Up Time Hr")]
    min_up: u32,
    #[serde(rename = "Min Down Time Hr")]
    min_down: u32,
    #[serde(rename = "Cost $/MWh")]
    cost: f64,
    #[serde(rename = "No Load $/hr")]
    no_load: f64,
    #[serde(rename = "Start $")]
    startup: f64,
    #[serde(rename = "Emission lbs/MWh", default)]
    emission: Option<f64>,
    /// Positive: hours on; negative: hours off; empty: long-enough on.
    #[serde(rename = "Init Hr", default)]
    init_hours: Option<i64>,
    #[serde(rename = "Init MW", default)]
    init_power: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ShapeRecord {
    #[serde(rename = "Hour")]
    _hour: u32,
    #[serde(rename = "Fraction")]
    fraction: f64,
}

#[derive(Debug, Deserialize)]
struct ResRecord {
    #[serde(rename = "Unit ID")]
    id: String,
    #[serde(rename = "Bus ID")]
    bus: String,
    #[serde(rename = "Penalty $/MWh", default)]
    penalty: Option<f64>,
}

/// Raw CSV text of each input table.
#[derive(Debug, Clone, Default)]
pub struct RtsTables {
    pub bus: String,
    pub branch: String,
    pub gen: String,
    pub load_shape: String,
    pub res: Option<String>,
}

impl RtsTables {
    /// Read `bus.csv`, `branch.csv`, `gen.csv`, `load_shape.csv` and, when
    /// present, `res.csv` from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, RtsError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| RtsError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let res_path = dir.join("res.csv");
        Ok(RtsTables {
            bus: read("bus.csv")?,
            branch: read("branch.csv")?,
            gen: read("gen.csv")?,
            load_shape: read("load_shape.csv")?,
            res: if res_path.exists() { Some(read("res.csv")?) } else { None },
        })
    }
}

fn parse<T: for<'de> Deserialize<'de>>(table: &'static str, text: impl Read) -> Result<Vec<T>, RtsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text);
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| RtsError::Record {
                table,
                record: e.position().map_or(0, |p| p.record()),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Build a validated system. Bus demand is `MW Load` times the load-shape
/// fraction of each hour.
pub fn convert(tables: &RtsTables) -> Result<PowerSystem, RtsError> {
    let buses: Vec<BusRecord> = parse("bus", tables.bus.as_bytes())?;
    let branches: Vec<BranchRecord> = parse("branch", tables.branch.as_bytes())?;
    let gens: Vec<GenRecord> = parse("gen", tables.gen.as_bytes())?;
    let shape: Vec<f64> = parse::<ShapeRecord>("load_shape", tables.load_shape.as_bytes())?
        .into_iter()
        .map(|r| r.fraction)
        .collect();
    if shape.is_empty() {
        return Err(RtsError::EmptyLoadShape);
    }
    let res: Vec<ResRecord> = match &tables.res {
        Some(text) => parse("res", text.as_bytes())?,
        None => Vec::new(),
    };

    let lines = branches
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            if b.x == 0.0 || !b.x.is_finite() {
                return Err(RtsError::Value {
                    table: "branch",
                    record: i + 1,
                    message: format!("reactance of `{}` must be nonzero", b.id),
                });
            }
            Ok(TransmissionLine {
                id: b.id,
                from_bus: b.from,
                to_bus: b.to,
                susceptance: 1.0 / b.x,
                limit_long_term: b.cont,
                limit_emergency: b.ste,
                switchable: b.switchable.map_or(true, |s| s != 0),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let generators = gens
        .into_iter()
        .map(|g| {
            let hourly = g.ramp_per_min * 60.0;
            let edge = hourly.max(g.p_min);
            Generator {
                initial_status: g.init_hours.map(|h| InitialStatus {
                    on: h > 0,
                    hours: h.unsigned_abs() as u32,
                    power: g.init_power,
                }),
                id: g.id,
                bus_id: g.bus,
                p_min: g.p_min,
                p_max: g.p_max,
                cost_linear: g.cost,
                cost_no_load: g.no_load,
                cost_startup: g.startup,
                ramp_hourly: hourly,
                ramp_startup: edge,
                ramp_shutdown: edge,
                ramp_10min: g.ramp_per_min * 10.0,
                min_up: g.min_up,
                min_down: g.min_down,
                emission_rate: g.emission.unwrap_or(0.0),
            }
        })
        .collect();

    let demand = DemandProfile {
        rows: buses
            .iter()
            .map(|b| DemandRow {
                bus_id: b.id.clone(),
                values: shape.iter().map(|f| b.load * f).collect(),
            })
            .collect(),
    };

    let mut sys = PowerSystem {
        buses: buses.into_iter().map(|b| Bus::new(b.id)).collect(),
        generators,
        lines,
        res_units: res
            .into_iter()
            .map(|r| ResUnit {
                id: r.id,
                bus_id: r.bus,
                curtail_penalty: r.penalty.unwrap_or(DEFAULT_CURTAIL_PENALTY),
            })
            .collect(),
        demand,
        mva_base: DEFAULT_MVA_BASE,
    };
    sys.rebuild_adjacency();
    Ok(sys.validated()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables() -> RtsTables {
        RtsTables {
            bus: "Bus ID,MW Load\n1,0\n2,50\n3,30\n".into(),
            branch: "UID,From Bus,To Bus,R,X,B,Cont Rating,LTE Rating,STE Rating\n\
                     L1,1,2,0.01,0.1,0,100,110,120\n\
                     L2,2,3,0.01,0.2,0,100,110,120\n\
                     L3,1,3,0.01,0.25,0,80,90,95\n"
                .into(),
            gen: "GEN UID,Bus ID,PMin MW,PMax MW,Ramp Rate MW/Min,Min Up Time Hr,Min Down Time Hr,Cost $/MWh,No Load $/hr,Start $,Emission lbs/MWh,Init Hr\n\
                  G1,1,20,100,1,2,2,20,100,500,2000,-3\n\
                  G2,3,0,40,2,1,1,40,10,50,,\n"
                .into(),
            load_shape: "Hour,Fraction\n1,0.5\n2,1.0\n".into(),
            res: Some("Unit ID,Bus ID,Penalty $/MWh\nW1,2,\n".into()),
        }
    }

    #[test]
    fn converts_tables() {
        let sys = convert(&tables()).unwrap();
        assert_eq!(sys.buses.len(), 3);
        assert_eq!(sys.lines[1].susceptance, 5.0);
        assert_eq!(sys.lines[2].limit_emergency, 95.0);
        assert!(sys.lines.iter().all(|l| l.switchable));
        let g1 = &sys.generators[0];
        assert_eq!((g1.ramp_hourly, g1.ramp_startup, g1.ramp_10min), (60.0, 60.0, 10.0));
        assert_eq!(g1.initial(), InitialStatus { on: false, hours: 3, power: None });
        assert_eq!(sys.generators[1].emission_rate, 0.0);
        assert!(sys.generators[1].initial_status.is_none());
        assert_eq!(sys.demand.system_totals(), vec![40.0, 80.0]);
        assert_eq!(sys.demand.row("1").unwrap().values, vec![0.0, 0.0]);
        assert_eq!(sys.res_units[0].curtail_penalty, DEFAULT_CURTAIL_PENALTY);
        assert!(sys.buses[1].res_ids.contains("W1"));
    }

    #[test]
    fn missing_column_names_the_table() {
        let mut t = tables();
        t.branch = "UID,From Bus,To Bus\nL1,1,2\n".into();
        let err = convert(&t).unwrap_err().to_string();
        assert!(err.starts_with("branch table"), "{err}");
    }

    #[test]
    fn zero_reactance_is_rejected() {
        let mut t = tables();
        t.branch = t.branch.replace("0.01,0.2,", "0.01,0,");
        assert!(matches!(convert(&t), Err(RtsError::Value { record: 2, .. })));
    }
}
