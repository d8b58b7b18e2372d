#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridsched_core::formulation::{FormulationConfig, ModelKind, ReserveRule};
use gridsched_core::rts::{convert, RtsTables};
use gridsched_core::scenario::{build_scenario_set, synth_wind_profiles, Scenario, ScenarioSet, ShapeParams, WindSite};
use gridsched_core::solution::ScheduleSolution;
use gridsched_core::system::{
    Bus, DemandProfile, DemandRow, Generator, InitialStatus, PowerSystem, ResUnit, TransmissionLine,
};
use gridsched_core::topology::{build_contingency_set, Contingency, ContingencyOptions};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load_case(name: &str, block_len: usize) -> (PowerSystem, ScenarioSet) {
    let sys = PowerSystem::load(data_path(&format!("{name}.json")))
        .unwrap()
        .validated()
        .unwrap();
    let scen = ScenarioSet::load(data_path(&format!("{name}_scenarios.json")), block_len).unwrap();
    scen.check_against(&sys).unwrap();
    (sys, scen)
}

/// RTS-24 restricted to `hours` periods starting at hour `first` (1-based).
pub fn rts24(first: usize, hours: usize) -> PowerSystem {
    let tables = RtsTables::from_dir(data_path("rts24")).unwrap();
    convert(&tables).unwrap().with_window(first - 1, hours).unwrap()
}

pub fn synthetic_scenarios(sys: &PowerSystem, n: usize, seed: u64, capacity: f64, block_len: usize) -> ScenarioSet {
    let shape = ShapeParams {
        sites: sys
            .res_units
            .iter()
            .map(|w| WindSite {
                id: w.id.clone(),
                capacity,
            })
            .collect(),
        mean_fraction: 0.5,
        amplitude: 0.15,
    };
    let profiles = synth_wind_profiles(seed, n, sys.horizon(), &shape);
    build_scenario_set(profiles, &vec![1.0 / n as f64; n], block_len).unwrap()
}

pub fn contingencies(sys: &PowerSystem, whitelist: Option<&[&str]>) -> Vec<Contingency> {
    let opts = ContingencyOptions {
        whitelist: whitelist.map(|ids| ids.iter().map(|s| s.to_string()).collect()),
        strict: false,
    };
    build_contingency_set(sys, &opts).unwrap()
}

pub fn unit(id: &str, bus: &str, p_min: f64, p_max: f64, cost: f64) -> Generator {
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

pub fn branch(id: &str, from: &str, to: &str, b: f64, limit: f64, emergency: f64) -> TransmissionLine {
    TransmissionLine {
        id: id.into(),
        from_bus: from.into(),
        to_bus: to.into(),
        susceptance: b,
        limit_long_term: limit,
        limit_emergency: emergency,
        switchable: true,
    }
}

pub fn assemble_system(
    buses: &[String],
    lines: Vec<TransmissionLine>,
    generators: Vec<Generator>,
    res_units: Vec<ResUnit>,
    demand: BTreeMap<String, Vec<f64>>,
) -> PowerSystem {
    let horizon = demand.values().next().map_or(1, |v| v.len());
    let mut sys = PowerSystem {
        buses: buses.iter().map(|b| Bus::new(b.clone())).collect(),
        generators,
        lines,
        res_units,
        demand: DemandProfile {
            rows: buses
                .iter()
                .map(|b| DemandRow {
                    bus_id: b.clone(),
                    values: demand.get(b).cloned().unwrap_or_else(|| vec![0.0; horizon]),
                })
                .collect(),
        },
        mva_base: 100.0,
    };
    sys.rebuild_adjacency();
    sys.validated().unwrap()
}

/// A randomized oracle-sized instance.
pub struct TinyInstance {
    pub name: String,
    pub sys: PowerSystem,
    pub scen: ScenarioSet,
    pub contingencies: Vec<Contingency>,
}

impl TinyInstance {
    /// LP solves the brute-force oracle needs for `kind`.
    pub fn oracle_lps(&self, kind: ModelKind, switch_limit: usize) -> u128 {
        let bits = (self.sys.generators.len() * self.sys.horizon()) as u32;
        let mut combos: u128 = 1;
        if kind == ModelKind::SscucCnr {
            let blocks = (self.sys.horizon() * self.scen.len()) as u32;
            for c in &self.contingencies {
                let n = c.candidate_switch_ids.len();
                let options: u128 = (0..=switch_limit.min(n)).map(|k| binom(n, k)).sum();
                combos *= options.pow(blocks);
            }
        }
        (1u128 << bits) * combos
    }
}

fn binom(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Connected network on 3 to 5 buses with 2 to 3 units, T <= 3, S <= 2, at
/// most 2 contingencies with at most 2 switch candidates each. Every unit
/// ramps its full range within an hour, which keeps the oracle's start-up
/// derivation exact.
pub fn random_tiny(seed: u64, max_lps: u128) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst = draw_tiny(&mut rng, seed);
        if inst.oracle_lps(ModelKind::SscucCnr, 1) <= max_lps && !inst.contingencies.is_empty() {
            return inst;
        }
    }
}

fn draw_tiny(rng: &mut ChaCha8Rng, seed: u64) -> TinyInstance {
    let n_bus = rng.gen_range(3..=5);
    let horizon = rng.gen_range(1..=3);
    let n_scen = rng.gen_range(1..=2);
    let n_gen = rng.gen_range(2..=3);
    let buses: Vec<String> = (1..=n_bus).map(|b| format!("b{b}")).collect();

    // Ring keeps every line non-radial; an optional chord adds a parallel path.
    let mut lines = Vec::new();
    for i in 0..n_bus {
        let j = (i + 1) % n_bus;
        let limit = rng.gen_range(30.0..90.0_f64).round();
        lines.push(branch(&format!("l{}", i + 1), &buses[i], &buses[j], rng.gen_range(5.0..20.0_f64).round(), limit, (limit * rng.gen_range(1.0..1.5_f64)).round()));
    }
    if n_bus >= 4 && rng.gen_bool(0.5) {
        let limit = rng.gen_range(30.0..80.0_f64).round();
        lines.push(branch("l9", &buses[0], &buses[2], rng.gen_range(5.0..15.0_f64).round(), limit, limit + 10.0));
    }
    // Keep at most two switchable lines so each contingency has <= 2 candidates.
    let n_switch = rng.gen_range(1..=2);
    let mut order: Vec<usize> = (0..lines.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for (rank, &k) in order.iter().enumerate() {
        lines[k].switchable = rank < n_switch;
    }

    let mut generators = Vec::new();
    for g in 0..n_gen {
        let p_max = rng.gen_range(60.0..150.0_f64).round();
        let mut u = unit(&format!("g{}", g + 1), &buses[rng.gen_range(0..n_bus)], rng.gen_range(0.0..15.0_f64).round(), p_max, rng.gen_range(10.0..60.0_f64).round());
        u.cost_no_load = rng.gen_range(0.0..50.0_f64).round();
        u.cost_startup = rng.gen_range(0.0..200.0_f64).round();
        u.ramp_10min = (p_max * rng.gen_range(0.2..1.0)).round();
        u.min_up = rng.gen_range(1..=2);
        u.min_down = rng.gen_range(1..=2);
        u.emission_rate = rng.gen_range(0.0..2000.0_f64).round();
        if rng.gen_bool(0.5) {
            let on = rng.gen_bool(0.5);
            u.initial_status = Some(InitialStatus {
                on,
                hours: rng.gen_range(1..=3),
                power: None,
            });
        }
        generators.push(u);
    }

    let res_bus = buses[rng.gen_range(0..n_bus)].clone();
    let res_units = vec![ResUnit {
        id: "w1".into(),
        bus_id: res_bus,
        curtail_penalty: rng.gen_range(10.0..200.0_f64).round(),
    }];

    let capacity: f64 = generators.iter().map(|g| g.p_max).sum();
    let mut demand = BTreeMap::new();
    for b in buses.iter().skip(1) {
        if rng.gen_bool(0.7) {
            let base = rng.gen_range(10.0..(capacity * 0.25 / (n_bus - 1) as f64).max(11.0));
            demand.insert(b.clone(), (0..horizon).map(|_| (base * rng.gen_range(0.8..1.2)).round()).collect());
        }
    }
    if demand.is_empty() {
        demand.insert(buses[1].clone(), vec![30.0; horizon]);
    }
    let sys = assemble_system(&buses, lines, generators, res_units, demand);

    let probs: Vec<f64> = (0..n_scen).map(|_| rng.gen_range(0.2..1.0)).collect();
    let mass: f64 = probs.iter().sum();
    let scen = ScenarioSet {
        scenarios: probs
            .iter()
            .enumerate()
            .map(|(i, p)| Scenario {
                id: format!("s{}", i + 1),
                probability: p / mass,
                availability: [("w1".to_string(), (0..horizon).map(|_| rng.gen_range(0.0..60.0_f64).round()).collect())]
                    .into_iter()
                    .collect(),
            })
            .collect(),
    };

    let all = contingencies(&sys, None);
    let n_c = rng.gen_range(1..=2).min(all.len());
    let contingencies = all.into_iter().take(n_c).collect();
    TinyInstance {
        name: format!("tiny-{seed}"),
        sys,
        scen,
        contingencies,
    }
}

pub fn exact_config(kind: ModelKind) -> FormulationConfig {
    FormulationConfig {
        reserve_rule: ReserveRule::AsPrinted,
        ..FormulationConfig::with_kind(kind)
    }
}

/// Residual checks on post-contingency flows computed directly from the
/// solution arrays: the outaged line carries nothing and every closed line
/// obeys the DC flow equation.
pub fn flow_collapse_residuals(sol: &ScheduleSolution, sys: &PowerSystem) -> Vec<String> {
    let ends: Vec<(usize, usize)> = sys
        .lines
        .iter()
        .map(|l| (sys.bus_position(&l.from_bus).unwrap(), sys.bus_position(&l.to_bus).unwrap()))
        .collect();
    let mut bad = Vec::new();
    for (c, outaged) in sol.contingency_ids.iter().enumerate() {
        let ko = sys.line_position(outaged).unwrap();
        for s in 0..sol.scenario_ids.len() {
            for t in 0..sol.horizon() {
                let flows = &sol.pk_c[c][s][t];
                let theta = &sol.theta_c[c][s][t];
                if flows[ko].abs() > 1e-6 {
                    bad.push(format!("outaged {outaged} carries {} at t{} {}", flows[ko], t + 1, sol.scenario_ids[s]));
                }
                for (k, line) in sys.lines.iter().enumerate() {
                    if k == ko || sol.z[c][s][t][k] < 0.5 {
                        continue;
                    }
                    let (f, to) = ends[k];
                    let expected = sys.mva_base * line.susceptance * (theta[f] - theta[to]);
                    let scale = 1f64.max(flows[k].abs()).max(expected.abs());
                    if (flows[k] - expected).abs() > 1e-6 * scale {
                        bad.push(format!("{} flow {} vs {} under contingency {outaged}", line.id, flows[k], expected));
                    }
                }
            }
        }
    }
    bad
}

/// Largest number of lines opened (beyond the outage) in any block.
pub fn max_openings(sol: &ScheduleSolution) -> usize {
    let mut worst = 0;
    for (c, outaged) in sol.contingency_ids.iter().enumerate() {
        let ko = sol.line_ids.iter().position(|l| l == outaged).unwrap();
        for by_t in &sol.z[c] {
            for block in by_t {
                let opened = block.iter().enumerate().filter(|&(k, z)| k != ko && *z < 0.5).count();
                worst = worst.max(opened);
            }
        }
    }
    worst
}
