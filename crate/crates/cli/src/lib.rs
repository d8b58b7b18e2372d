//! `gridsched` command-line driver: load, formulate, solve, verify, report.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gridsched_core::formulation::{
    assemble_with, FormulationConfig, ModelKind, ReserveRule, ResUsage,
};
use gridsched_core::metrics::{write_table_csv, RunReport};
use gridsched_core::oracle::{enumerate_commitments, OracleCaps, OracleError};
use gridsched_core::pipeline::{run_case, run_case_with, run_pair, Builder, Case, RunOutcome};
use gridsched_core::rts::{convert, RtsTables};
use gridsched_core::scenario::{build_scenario_set, scale_penetration, synth_wind_profiles, ScenarioSet, ShapeParams, WindSite};
use gridsched_core::solver::{HighsSolver, SolveOptions, SolveStatus};
use gridsched_core::system::PowerSystem;
use gridsched_core::topology::{build_contingency_set, load_whitelist, Contingency, ContingencyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LIMITS: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// Relative tolerance for solver/oracle objective agreement.
const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "gridsched", version, about = "Stochastic N-1 unit commitment with corrective line switching")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model and write its report.
    Run(RunArgs),
    /// Solve both models over RES scaling factors and penalty settings.
    Sweep(SweepArgs),
    /// Cross-check the MILP optimum against brute-force enumeration.
    Verify(RunArgs),
    /// Solve the complete/variable RES usage by penalty off/on comparison.
    Table(RunArgs),
    /// Convert RTS-style CSV tables into a system JSON document.
    Convert(ConvertArgs),
    /// Write synthetic wind scenarios for a system.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Sscuc,
    SscucCnr,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Sscuc => ModelKind::Sscuc,
            ModelArg::SscucCnr => ModelKind::SscucCnr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReserveArg {
    AsPrinted,
    ExcludeSelf,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UsageArg {
    Variable,
    Complete,
}

/// `off` or a curtailment penalty in $/MWh applied to every RES unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Off,
    Value(f64),
}

fn parse_penalty(s: &str) -> Result<Penalty, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Penalty::Off);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Penalty::Value(v)),
        _ => Err(format!("expected `off` or a nonnegative number, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    /// System JSON document.
    pub case: PathBuf,
    /// Scenario JSON document.
    pub scenarios: PathBuf,
    /// Periods per constant-RES block.
    #[arg(long, default_value_t = 3)]
    pub block_len: usize,
    /// JSON array of line ids to use as contingencies.
    #[arg(long)]
    pub contingencies: Option<PathBuf>,
    /// Drop switch candidates that would island a bus.
    #[arg(long)]
    pub strict_candidates: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "sscuc")]
    pub model: ModelArg,
    /// Post-contingency curtailment penalty: `off` or $/MWh for every unit.
    #[arg(long, value_parser = parse_penalty)]
    pub penalty: Option<Penalty>,
    #[arg(long, value_enum, default_value = "variable")]
    pub res_usage: UsageArg,
    /// Lines that may be opened per contingency, period and scenario.
    #[arg(long, default_value_t = 1)]
    pub switch_limit: usize,
    #[arg(long, value_enum, default_value = "as-printed")]
    pub reserve_rule: ReserveArg,
    /// Slack added to every switching big-M, MW.
    #[arg(long, default_value_t = 0.0)]
    pub big_m_margin: f64,
    /// Bus angle box half-width, radians. Also sizes the switching big-M.
    #[arg(long, default_value_t = 0.6)]
    pub angle_bound: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.01)]
    pub mip_gap: f64,
    /// Seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Solver random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u32,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated RES scaling factors.
    #[arg(long, value_delimiter = ',', required = true)]
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// Directory holding bus.csv, branch.csv, gen.csv, load_shape.csv and optionally res.csv.
    pub dir: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// First hour to keep (1-based).
    #[arg(long, default_value_t = 1)]
    pub first_hour: usize,
    /// Number of hours to keep; all remaining hours by default.
    #[arg(long)]
    pub hours: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// System JSON document whose RES units and horizon are used.
    pub case: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Installed capacity of every RES unit, MW.
    #[arg(long, default_value_t = 100.0)]
    pub capacity: f64,
    #[arg(long, default_value_t = 0.4)]
    pub mean_fraction: f64,
    #[arg(long, default_value_t = 0.15)]
    pub amplitude: f64,
    /// Comma-separated scenario probabilities; uniform by default.
    #[arg(long, value_delimiter = ',')]
    pub probabilities: Option<Vec<f64>>,
}

/// Error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure::new(EXIT_INPUT, error)
}

type CmdResult = Result<i32, Failure>;

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    main_with_builder(args, assemble_with)
}

/// As [`main_with`], with the MILP builder used by `run` and `verify`
/// replaced.
pub fn main_with_builder<I, T>(args: I, builder: Builder) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(cli.command, builder) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

pub fn execute(command: Command, builder: Builder) -> CmdResult {
    match command {
        Command::Run(args) => cmd_run(&args, builder),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => cmd_verify(&args, builder),
        Command::Table(args) => cmd_table(&args),
        Command::Convert(args) => cmd_convert(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

struct Loaded {
    sys: PowerSystem,
    scen: ScenarioSet,
    contingencies: Vec<Contingency>,
}

impl Loaded {
    fn case(&self) -> Case<'_> {
        self.with_scenarios(&self.scen)
    }

    fn with_scenarios<'a>(&'a self, scen: &'a ScenarioSet) -> Case<'a> {
        Case {
            sys: &self.sys,
            scen,
            contingencies: &self.contingencies,
        }
    }
}

fn load(args: &CaseArgs, penalty: Option<Penalty>) -> Result<Loaded, Failure> {
    let mut sys = PowerSystem::load(&args.case)
        .and_then(PowerSystem::validated)
        .with_context(|| format!("loading system {}", args.case.display()))
        .map_err(input)?;
    if let Some(Penalty::Value(v)) = penalty {
        for w in &mut sys.res_units {
            w.curtail_penalty = v;
        }
    }
    let scen = ScenarioSet::load(&args.scenarios, args.block_len)
        .with_context(|| format!("loading scenarios {}", args.scenarios.display()))
        .map_err(input)?;
    scen.check_against(&sys)
        .with_context(|| format!("checking scenarios {}", args.scenarios.display()))
        .map_err(input)?;
    let whitelist = match &args.contingencies {
        Some(path) => Some(load_whitelist(path).map_err(input)?),
        None => None,
    };
    let opts = ContingencyOptions {
        whitelist,
        strict: args.strict_candidates,
    };
    let contingencies = build_contingency_set(&sys, &opts).map_err(input)?;
    Ok(Loaded { sys, scen, contingencies })
}

fn formulation(model: &ModelArgs) -> FormulationConfig {
    FormulationConfig {
        model_kind: model.model.into(),
        switch_limit: model.switch_limit,
        big_m_margin: model.big_m_margin,
        angle_bound: model.angle_bound,
        penalty_enabled: model.penalty != Some(Penalty::Off),
        reserve_rule: match model.reserve_rule {
            ReserveArg::AsPrinted => ReserveRule::AsPrinted,
            ReserveArg::ExcludeSelf => ReserveRule::ExcludeSelf,
            ReserveArg::Off => ReserveRule::Off,
        },
        res_usage: match model.res_usage {
            UsageArg::Variable => ResUsage::Variable,
            UsageArg::Complete => ResUsage::Complete,
        },
        ..Default::default()
    }
}

fn solve_options(s: &SolverArgs) -> SolveOptions {
    SolveOptions {
        mip_gap: s.mip_gap,
        time_limit: s.time_limit,
        threads: Some(s.threads),
        seed: Some(s.seed),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(input)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)
}

fn table_bytes(runs: &[(String, RunReport)]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_table_csv(&mut buf, runs).map_err(input)?;
    Ok(buf)
}

/// Exit code for a finished run; prints violations when there are any.
fn outcome_code(outcome: &RunOutcome) -> i32 {
    match outcome.result.status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => return EXIT_INFEASIBLE,
        SolveStatus::TimeLimit if outcome.solution.is_none() => return EXIT_LIMITS,
        _ => {}
    }
    if !outcome.violations.is_empty() {
        eprintln!("verification found {} violation(s):", outcome.violations.len());
        for v in outcome.violations.iter().take(20) {
            eprintln!("  {v}");
        }
        return EXIT_MISMATCH;
    }
    match &outcome.report {
        Some(r) if !r.costs.reconciles(r.total_cost, AGREEMENT_TOL) => EXIT_MISMATCH,
        Some(r) if !r.costs.reconciles(r.solver_objective, AGREEMENT_TOL) => {
            eprintln!(
                "cost breakdown {} does not reconcile with solver objective {}",
                r.costs.total(),
                r.solver_objective
            );
            EXIT_MISMATCH
        }
        _ => EXIT_OK,
    }
}

fn cmd_run(args: &RunArgs, builder: Builder) -> CmdResult {
    let loaded = load(&args.case, args.model.penalty)?;
    let cfg = formulation(&args.model);
    let opts = solve_options(&args.solver);
    let outcome = run_case_with(loaded.case(), &cfg, &opts, &HighsSolver, None, builder).map_err(input)?;
    let label = cfg.model_kind.label();
    log::info!("{label}: solved in {:.2}s", outcome.result.wall_time);
    if let (Some(report), Some(sol)) = (&outcome.report, &outcome.solution) {
        write_file(&args.out_dir.join(format!("{label}_report.json")), report.to_json_pretty().as_bytes())?;
        let table = table_bytes(&[(label.to_string(), report.clone())])?;
        write_file(&args.out_dir.join(format!("{label}_report.csv")), &table)?;
        let sol_json = serde_json::to_string_pretty(sol).map_err(input)?;
        write_file(&args.out_dir.join(format!("{label}_solution.json")), sol_json.as_bytes())?;
        println!(
            "{label}: status {:?}, total cost {:.2}, BCC {:.2} MW, PCC {} MW, switching actions {}",
            report.status,
            report.total_cost,
            report.bcc,
            report.pcc.map_or("NA".into(), |p| format!("{p:.2}")),
            report.switching.actions.len()
        );
    } else {
        println!("{label}: status {:?}, no solution", outcome.result.status);
    }
    Ok(outcome_code(&outcome))
}

#[derive(Debug, Serialize)]
struct SweepRow {
    factor: f64,
    model: String,
    penalty: String,
    total_cost: Option<f64>,
    bcc: Option<f64>,
    pcc: Option<f64>,
    emissions: Option<f64>,
    status: String,
    error: String,
}

impl SweepRow {
    fn from_outcome(factor: f64, penalty: &str, outcome: &RunOutcome) -> Self {
        let report = outcome.report.as_ref();
        let mut error = String::new();
        if !outcome.violations.is_empty() {
            error = format!("{} violation(s), first: {}", outcome.violations.len(), outcome.violations[0]);
        }
        SweepRow {
            factor,
            model: outcome.config.model_kind.label().into(),
            penalty: penalty.into(),
            total_cost: report.map(|r| r.total_cost),
            bcc: report.map(|r| r.bcc),
            pcc: report.and_then(|r| r.pcc),
            emissions: report.map(|r| r.emissions),
            status: format!("{:?}", outcome.result.status),
            error,
        }
    }

    fn failed(factor: f64, model: &str, penalty: &str, err: impl std::fmt::Display) -> Self {
        SweepRow {
            factor,
            model: model.into(),
            penalty: penalty.into(),
            total_cost: None,
            bcc: None,
            pcc: None,
            emissions: None,
            status: "Error".into(),
            error: err.to_string(),
        }
    }
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    if let Some(f) = args.factors.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(input(anyhow!("scaling factors must be nonnegative, got {f}")));
    }
    let loaded = load(&args.run.case, args.run.model.penalty)?;
    let opts = solve_options(&args.run.solver);
    let mut rows = Vec::new();
    let penalties: Vec<(&str, bool)> = match args.run.model.penalty {
        Some(Penalty::Off) => vec![("off", false)],
        _ => vec![("off", false), ("on", true)],
    };
    for &factor in &args.factors {
        let scen = scale_penetration(&loaded.scen, factor).map_err(input)?;
        for &(name, enabled) in &penalties {
            let cfg = FormulationConfig {
                penalty_enabled: enabled,
                ..formulation(&args.run.model)
            };
            match run_pair(loaded.with_scenarios(&scen), &cfg, &opts, &HighsSolver) {
                Ok((a, b)) => {
                    rows.push(SweepRow::from_outcome(factor, name, &a));
                    rows.push(SweepRow::from_outcome(factor, name, &b));
                }
                Err(e) => {
                    log::warn!("factor {factor}, penalty {name}: {e}");
                    rows.push(SweepRow::failed(factor, "sscuc", name, &e));
                    rows.push(SweepRow::failed(factor, "sscuc-cnr", name, &e));
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).map_err(input)?;
    }
    let bytes = w.into_inner().map_err(|e| input(anyhow!("{e}")))?;
    write_file(&args.run.out_dir.join("sweep.csv"), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(EXIT_OK)
}

fn cmd_verify(args: &RunArgs, builder: Builder) -> CmdResult {
    let loaded = load(&args.case, args.model.penalty)?;
    let cfg = formulation(&args.model);
    let opts = SolveOptions {
        mip_gap: 0.0,
        ..solve_options(&args.solver)
    };
    let caps = OracleCaps::default();
    let cert = match enumerate_commitments(&loaded.sys, &loaded.scen, &loaded.contingencies, &cfg, &caps) {
        Ok(cert) => cert,
        Err(e @ OracleError::CapExceeded { .. }) => return Err(Failure::new(EXIT_LIMITS, e)),
        Err(e) => return Err(input(e)),
    };
    write_file(&args.out_dir.join("certificate.json"), cert.to_json_pretty().as_bytes())?;
    if !cert.v_derivation_exact {
        log::warn!("start-up indicators are derived from commitment; the oracle optimum may be an upper bound");
    }
    let outcome = run_case_with(loaded.case(), &cfg, &opts, &HighsSolver, None, builder).map_err(input)?;
    let milp = outcome.solution.as_ref().map(|_| outcome.result.objective);
    println!(
        "milp objective {}, oracle objective {} over {} assignments ({} feasible)",
        milp.map_or("none".into(), |v| format!("{v:.6}")),
        cert.best_objective.map_or("none".into(), |v| format!("{v:.6}")),
        cert.assignments,
        cert.feasible
    );
    match (milp, cert.best_objective) {
        (None, None) => Ok(EXIT_INFEASIBLE),
        (Some(a), Some(b)) if (a - b).abs() <= AGREEMENT_TOL * b.abs().max(1.0) => Ok(outcome_code(&outcome)),
        _ => {
            eprintln!("objectives disagree");
            Ok(EXIT_MISMATCH)
        }
    }
}

/// Column labels of the comparison table, in output order.
pub const TABLE_COLUMNS: [(&str, ResUsage, bool); 4] = [
    ("No PCC penalty / CWOU", ResUsage::Complete, false),
    ("No PCC penalty / VWOU", ResUsage::Variable, false),
    ("With PCC penalty / CWOU", ResUsage::Complete, true),
    ("With PCC penalty / VWOU", ResUsage::Variable, true),
];

fn cmd_table(args: &RunArgs) -> CmdResult {
    let loaded = load(&args.case, args.model.penalty)?;
    let opts = solve_options(&args.solver);
    let base = formulation(&args.model);
    let mut runs = Vec::new();
    let mut code = EXIT_OK;
    for (label, usage, penalty) in TABLE_COLUMNS {
        let cfg = FormulationConfig {
            res_usage: usage,
            penalty_enabled: penalty,
            ..base.clone()
        };
        let outcome = run_case(loaded.case(), &cfg, &opts, &HighsSolver, None).map_err(input)?;
        let c = outcome_code(&outcome);
        if c != EXIT_OK {
            eprintln!("{label}: status {:?}", outcome.result.status);
            code = code.max(c);
        }
        if let Some(report) = outcome.report {
            runs.push((label.to_string(), report));
        }
    }
    let bytes = table_bytes(&runs)?;
    write_file(&args.out_dir.join(format!("{}_table.csv", base.model_kind.label())), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(code)
}

fn cmd_convert(args: &ConvertArgs) -> CmdResult {
    let tables = RtsTables::from_dir(&args.dir).map_err(input)?;
    let sys = convert(&tables).map_err(input)?;
    if args.first_hour == 0 {
        return Err(input(anyhow!("--first-hour is 1-based")));
    }
    let first = args.first_hour - 1;
    let len = args.hours.unwrap_or_else(|| sys.horizon().saturating_sub(first));
    let sys = sys.with_window(first, len).map_err(input)?;
    write_file(&args.out, sys.to_json_pretty().as_bytes())?;
    println!(
        "{}: {} buses, {} lines, {} generators, {} RES units, {} periods",
        args.out.display(),
        sys.buses.len(),
        sys.lines.len(),
        sys.generators.len(),
        sys.res_units.len(),
        sys.horizon()
    );
    Ok(EXIT_OK)
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let sys = PowerSystem::load(&args.case).map_err(input)?;
    if sys.res_units.is_empty() {
        return Err(input(anyhow!("system has no RES units")));
    }
    let shape = ShapeParams {
        sites: sys
            .res_units
            .iter()
            .map(|w| WindSite {
                id: w.id.clone(),
                capacity: args.capacity,
            })
            .collect(),
        mean_fraction: args.mean_fraction,
        amplitude: args.amplitude,
    };
    let profiles = synth_wind_profiles(args.seed, args.scenarios, sys.horizon(), &shape);
    let probabilities = args
        .probabilities
        .clone()
        .unwrap_or_else(|| vec![1.0 / profiles.len() as f64; profiles.len()]);
    let set = build_scenario_set(profiles, &probabilities, 1).map_err(input)?;
    write_file(&args.out, set.to_json_pretty().as_bytes())?;
    println!("{}: {} scenarios over {} periods", args.out.display(), set.len(), set.horizon());
    Ok(EXIT_OK)
}
