//! Solver contract and the HiGHS binding.
//!
//! The engine is chosen with the `GRIDSCHED_SOLVER` environment variable;
//! `highs` (the default) is the only engine compiled in.

use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpProblem, ProblemError, Sense, VarKind};

pub const SOLVER_ENV: &str = "GRIDSCHED_SOLVER";

/// Binary columns must come back this close to 0 or 1.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver engine `{0}` is not available (known: highs)")]
    Unavailable(String),
    #[error("malformed problem: {0}")]
    Malformed(#[from] ProblemError),
    #[error("invalid solve options: {0}")]
    Options(String),
    #[error("binary column `{name}` returned {value}, outside integrality tolerance")]
    Integrality { name: String, value: f64 },
    #[error("engine failure: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative MIP gap.
    pub mip_gap: f64,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u32>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mip_gap: 0.01,
            time_limit: None,
            threads: None,
            seed: Some(0),
        }
    }
}

impl SolveOptions {
    /// Zero gap, for comparisons that only hold at exact optima.
    pub fn exact() -> Self {
        SolveOptions {
            mip_gap: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    FeasibleWithinGap,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective re-evaluated on `values`, offset included. NaN without a
    /// solution.
    pub objective: f64,
    pub best_bound: f64,
    /// One value per column; empty when no solution was found.
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveResult {
    pub fn has_solution(&self) -> bool {
        !self.values.is_empty()
    }

    /// Relative gap between objective and bound.
    pub fn gap(&self) -> f64 {
        if !self.has_solution() {
            return f64::INFINITY;
        }
        let diff = (self.objective - self.best_bound).max(0.0);
        if diff == 0.0 {
            0.0
        } else {
            diff / self.objective.abs().max(1e-10)
        }
    }

    fn without_solution(status: SolveStatus, wall_time: f64) -> Self {
        SolveResult {
            status,
            objective: f64::NAN,
            best_bound: f64::NAN,
            values: Vec::new(),
            wall_time,
        }
    }
}

pub trait MilpSolver {
    fn name(&self) -> &'static str;

    fn solve(&self, prob: &MilpProblem, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
        self.solve_from(prob, opts, None)
    }

    /// Solve with an optional feasible starting point (one value per column).
    fn solve_from(&self, prob: &MilpProblem, opts: &SolveOptions, start: Option<&[f64]>) -> Result<SolveResult, SolverError>;
}

/// Engine named by `GRIDSCHED_SOLVER`, defaulting to HiGHS.
pub fn solver_from_env() -> Result<Box<dyn MilpSolver>, SolverError> {
    match std::env::var(SOLVER_ENV) {
        Err(_) => Ok(Box::new(HighsSolver)),
        Ok(name) => solver_by_name(&name),
    }
}

pub fn solver_by_name(name: &str) -> Result<Box<dyn MilpSolver>, SolverError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "highs" => Ok(Box::new(HighsSolver)),
        other => Err(SolverError::Unavailable(other.to_string())),
    }
}

/// Solve with the engine from the environment.
pub fn solve(prob: &MilpProblem, opts: &SolveOptions) -> Result<SolveResult, SolverError> {
    solver_from_env()?.solve(prob, opts)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsSolver;

impl HighsSolver {
    fn run(prob: &MilpProblem, opts: &SolveOptions, presolve: bool, start: Option<&[f64]>) -> highs::SolvedModel {
        let mut rp = RowProblem::default();
        let cols: Vec<_> = prob
            .columns
            .iter()
            .map(|c| rp.add_column_with_integrality(c.cost, c.lower..=c.upper, c.kind == VarKind::Binary))
            .collect();
        // A fixed column carries the constant so HiGHS measures its gap on the true objective.
        rp.add_column(prob.objective_offset, 1.0..=1.0);
        for row in &prob.rows {
            let terms: Vec<_> = row.terms.iter().map(|(v, a)| (cols[v.0], *a)).collect();
            match row.sense {
                Sense::Le => rp.add_row(..=row.rhs, terms),
                Sense::Ge => rp.add_row(row.rhs.., terms),
                Sense::Eq => rp.add_row(row.rhs..=row.rhs, terms),
            }
        }
        let mut model = rp.optimise(highs::Sense::Minimise);
        model.set_option("output_flag", false);
        model.set_option("mip_rel_gap", opts.mip_gap);
        if opts.mip_gap == 0.0 {
            model.set_option("mip_abs_gap", 0.0);
        }
        if let Some(limit) = opts.time_limit {
            model.set_option("time_limit", limit);
        }
        if let Some(threads) = opts.threads {
            model.set_option("threads", threads as i32);
        }
        if let Some(seed) = opts.seed {
            model.set_option("random_seed", seed as i32);
        }
        if !presolve {
            model.set_option("presolve", "off");
        }
        if let Some(x) = start {
            let x: Vec<f64> = x.iter().copied().chain([1.0]).collect();
            if model.try_set_solution(Some(&x), None, None, None).is_err() {
                log::warn!("starting point rejected by HiGHS");
            }
        }
        model.solve()
    }
}

impl MilpSolver for HighsSolver {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve_from(&self, prob: &MilpProblem, opts: &SolveOptions, start: Option<&[f64]>) -> Result<SolveResult, SolverError> {
        if start.is_some_and(|x| x.len() != prob.columns.len()) {
            return Err(SolverError::Options("starting point length differs from column count".into()));
        }
        if !(opts.mip_gap >= 0.0) {
            return Err(SolverError::Options(format!("mip_gap must be >= 0, got {}", opts.mip_gap)));
        }
        if opts.time_limit.is_some_and(|t| !(t > 0.0)) {
            return Err(SolverError::Options("time_limit must be positive".into()));
        }
        prob.check_consistency()?;
        let clock = Instant::now();
        if prob.columns.is_empty() {
            let feasible = prob.rows.iter().all(|r| r.scaled_residual(&[]) <= 1e-9);
            let elapsed = clock.elapsed().as_secs_f64();
            if !feasible {
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, elapsed));
            }
            return Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: prob.objective_offset,
                best_bound: prob.objective_offset,
                values: Vec::new(),
                wall_time: elapsed,
            });
        }

        let mut solved = Self::run(prob, opts, true, start);
        if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
            let bounded = prob.columns.iter().all(|c| c.lower.is_finite() && c.upper.is_finite());
            if bounded {
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, clock.elapsed().as_secs_f64()));
            }
            solved = Self::run(prob, opts, false, start);
        }
        let elapsed = || clock.elapsed().as_secs_f64();
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => return Ok(SolveResult::without_solution(SolveStatus::Infeasible, elapsed())),
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                return Ok(SolveResult::without_solution(SolveStatus::Unbounded, elapsed()))
            }
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
            other => return Err(SolverError::Backend(format!("{other:?}"))),
        };
        if solved.primal_solution_status() != HighsSolutionStatus::Feasible {
            return Ok(SolveResult::without_solution(status, elapsed()));
        }

        let mut values = solved.get_solution().columns().to_vec();
        values.truncate(prob.columns.len());
        for (x, col) in values.iter_mut().zip(&prob.columns) {
            if col.kind == VarKind::Binary {
                let rounded = if *x >= 0.5 { 1.0 } else { 0.0 };
                if (*x - rounded).abs() > INTEGRALITY_TOL {
                    return Err(SolverError::Integrality {
                        name: col.name.clone(),
                        value: *x,
                    });
                }
                *x = rounded;
            }
        }
        let objective = prob.objective_value(&values);
        let engine_objective = solved.objective_value();
        if (objective - engine_objective).abs() > 1e-6 * objective.abs().max(1.0) {
            log::warn!("re-evaluated objective {objective} differs from engine value {engine_objective}");
        }

        let has_integers = prob.num_binaries() > 0;
        let best_bound = if has_integers {
            solved
                .double_info_value(c"mip_dual_bound")
                .unwrap_or(f64::NAN)
        } else {
            objective
        };
        let status = match status {
            SolveStatus::Optimal if has_integers => {
                let gap = (objective - best_bound).max(0.0);
                if gap <= 1e-9 * objective.abs().max(1.0) {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::FeasibleWithinGap
                }
            }
            s => s,
        };
        Ok(SolveResult {
            status,
            objective,
            best_bound: if best_bound.is_finite() { best_bound.min(objective) } else { best_bound },
            values,
            wall_time: elapsed(),
        })
    }
}
