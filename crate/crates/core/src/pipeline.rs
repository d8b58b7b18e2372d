//! End-to-end driver: formulate, solve, extract, verify and report.

use thiserror::Error;

use crate::formulation::{assemble_with, FormulationConfig, FormulationError, ModelData, ModelKind};
use crate::metrics::{
    base_case_curtailment, carbon_emissions, cost_breakdown, post_contingency_curtailment, switching_report,
    MetricsError, RunReport,
};
use crate::milp::MilpProblem;
use crate::scenario::ScenarioSet;
use crate::solution::ScheduleSolution;
use crate::solver::{MilpSolver, SolveOptions, SolveResult, SolverError};
use crate::system::PowerSystem;
use crate::topology::Contingency;
use crate::verify::{verify_solution, Violation};

/// Problem builder used by [`run_case_with`]; [`assemble_with`] in normal use.
pub type Builder = fn(&ModelData, &FormulationConfig) -> Result<MilpProblem, FormulationError>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy)]
pub struct Case<'a> {
    pub sys: &'a PowerSystem,
    pub scen: &'a ScenarioSet,
    pub contingencies: &'a [Contingency],
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: FormulationConfig,
    pub problem: MilpProblem,
    pub result: SolveResult,
    /// Present when the solver returned a solution.
    pub solution: Option<ScheduleSolution>,
    pub report: Option<RunReport>,
    pub violations: Vec<Violation>,
}

impl RunOutcome {
    /// Solution present, verification clean and costs reconciled.
    pub fn is_clean(&self) -> bool {
        self.solution.is_some()
            && self.violations.is_empty()
            && self
                .report
                .as_ref()
                .is_some_and(|r| r.costs.reconciles(r.total_cost, 1e-6))
    }
}

pub fn run_case(
    case: Case<'_>,
    cfg: &FormulationConfig,
    opts: &SolveOptions,
    solver: &dyn MilpSolver,
    start: Option<&ScheduleSolution>,
) -> Result<RunOutcome, PipelineError> {
    run_case_with(case, cfg, opts, solver, start, assemble_with)
}

pub fn run_case_with(
    case: Case<'_>,
    cfg: &FormulationConfig,
    opts: &SolveOptions,
    solver: &dyn MilpSolver,
    start: Option<&ScheduleSolution>,
    builder: Builder,
) -> Result<RunOutcome, PipelineError> {
    let data = ModelData::new(case.sys, case.scen, case.contingencies, cfg)?;
    let problem = builder(&data, cfg)?;
    let start_values = start.map(|s| s.to_values(&problem));
    let result = solver.solve_from(&problem, opts, start_values.as_deref())?;
    if !result.has_solution() {
        return Ok(RunOutcome {
            config: cfg.clone(),
            problem,
            result,
            solution: None,
            report: None,
            violations: Vec::new(),
        });
    }
    let solution = ScheduleSolution::from_values(&data, cfg.model_kind, &problem, &result.values, result.objective);
    let violations = verify_solution(&solution, case.sys, case.scen, case.contingencies, cfg);
    let n_c = case.contingencies.len();
    let report = RunReport {
        model_kind: cfg.model_kind.label().to_string(),
        penalty_enabled: cfg.penalty_enabled,
        res_usage: cfg.res_usage,
        status: result.status,
        total_cost: cost_breakdown(&solution, case.sys, case.scen, cfg)?.total(),
        solver_objective: result.objective,
        best_bound: result.best_bound,
        gap: result.gap(),
        bcc: base_case_curtailment(&solution, case.scen)?,
        pcc: if n_c > 0 {
            Some(post_contingency_curtailment(&solution, case.scen, n_c)?)
        } else {
            None
        },
        emissions: carbon_emissions(&solution, case.sys, case.scen)?,
        costs: cost_breakdown(&solution, case.sys, case.scen, cfg)?,
        switching: switching_report(&solution),
        n_contingencies: n_c,
        wall_time: result.wall_time,
    };
    Ok(RunOutcome {
        config: cfg.clone(),
        problem,
        result,
        solution: Some(solution),
        report: Some(report),
        violations,
    })
}

/// Solve SSCUC, then SSCUC-CNR started from the SSCUC schedule with every
/// switch closed, so the CNR incumbent is never worse than the SSCUC one.
pub fn run_pair(
    case: Case<'_>,
    base: &FormulationConfig,
    opts: &SolveOptions,
    solver: &dyn MilpSolver,
) -> Result<(RunOutcome, RunOutcome), PipelineError> {
    let fixed_cfg = FormulationConfig {
        model_kind: ModelKind::Sscuc,
        ..base.clone()
    };
    let cnr_cfg = FormulationConfig {
        model_kind: ModelKind::SscucCnr,
        ..base.clone()
    };
    let fixed = run_case(case, &fixed_cfg, opts, solver, None)?;
    let cnr = run_case(case, &cnr_cfg, opts, solver, fixed.solution.as_ref())?;
    Ok((fixed, cnr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::test_cases::*;
    use crate::formulation::ReserveRule;
    use crate::solver::HighsSolver;
    use crate::topology::build_contingency_set;

    #[test]
    fn pair_runs_are_clean_and_ordered() {
        let sys = wind_triangle(3);
        let scen = scenarios(&[0.5, 0.5], &["w1"], &[&[&[10.0, 40.0, 80.0]], &[&[0.0, 60.0, 20.0]]]);
        let conts = build_contingency_set(&sys, &Default::default()).unwrap();
        let cfg = FormulationConfig {
            reserve_rule: ReserveRule::Off,
            ..Default::default()
        };
        let case = Case {
            sys: &sys,
            scen: &scen,
            contingencies: &conts,
        };
        let (a, b) = run_pair(case, &cfg, &SolveOptions::default(), &HighsSolver).unwrap();
        assert!(a.is_clean() && b.is_clean(), "{:?} {:?}", a.violations.first(), b.violations.first());
        assert!(b.result.objective <= a.result.objective + 1e-6 * a.result.objective.abs());
    }
}
