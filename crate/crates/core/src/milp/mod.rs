//! Backend-agnostic mixed-integer linear program container.
//!
//! Columns carry bounds, integrality and objective cost; rows are sparse
//! linear constraints with a sense and right-hand side. Every column is
//! registered under exactly one [`VarKey`], and every row and every
//! modeling bound carries a [`Tag`] naming the constraint family it comes
//! from so that counts and violations can be reported per equation.

pub mod lp_format;

use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::formulation::VarKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Constraint family of a row or modeling bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    MinOutput,
    MaxOutputWithReserve,
    ReserveCap,
    SystemReserve,
    RampUp,
    RampDown,
    MinUp,
    MinDown,
    StartupLogic,
    ResCap,
    FlowDefinition,
    ThermalLimit,
    NodalBalance,
    CorrectiveRampDown,
    CorrectiveRampUp,
    ContingencyMinOutput,
    ContingencyMaxOutput,
    ContingencyResCap,
    ContingencyBalance,
    ContingencyFlow,
    EmergencyLimit,
    SwitchedFlowLower,
    SwitchedFlowUpper,
    SwitchedLimit,
    SwitchBudget,
    ReferenceAngle,
    AngleBox,
    InitialCommitment,
    OutagedLine,
    Imported,
}

impl Tag {
    /// Equation number in the published model, when the family has one.
    pub fn equation(self) -> Option<u8> {
        use Tag::*;
        Some(match self {
            MinOutput => 2,
            MaxOutputWithReserve => 3,
            ReserveCap => 4,
            SystemReserve => 5,
            RampUp => 6,
            RampDown => 7,
            MinUp => 8,
            MinDown => 9,
            StartupLogic => 10,
            ResCap => 13,
            FlowDefinition => 14,
            ThermalLimit => 15,
            NodalBalance => 16,
            CorrectiveRampDown => 17,
            CorrectiveRampUp => 18,
            ContingencyMinOutput => 19,
            ContingencyMaxOutput => 20,
            ContingencyResCap => 21,
            ContingencyBalance => 22,
            ContingencyFlow => 23,
            EmergencyLimit => 24,
            SwitchedFlowLower => 25,
            SwitchedFlowUpper => 26,
            SwitchedLimit => 27,
            SwitchBudget => 28,
            ReferenceAngle | AngleBox | InitialCommitment | OutagedLine | Imported => return None,
        })
    }

    pub fn label(self) -> String {
        match self.equation() {
            Some(n) => format!("({n})"),
            None => format!("{self:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub cost: f64,
    /// Family whose constraint these bounds encode, if any.
    pub bound_tag: Option<Tag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub tag: Tag,
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(v, a)| a * x[v.0]).sum()
    }

    /// Violation scaled by the largest term magnitude (at least 1).
    pub fn scaled_residual(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        let raw = match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        };
        let scale = self
            .terms
            .iter()
            .map(|(v, a)| (a * x[v.0]).abs())
            .fold(self.rhs.abs().max(1.0), f64::max);
        raw / scale
    }
}

/// Column handles in registration order, each with a unique key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableRegistry {
    keys: IndexSet<VarKey>,
}

impl VariableRegistry {
    pub fn get(&self, key: &VarKey) -> Option<VarId> {
        self.keys.get_index_of(key).map(VarId)
    }

    pub fn key(&self, id: VarId) -> &VarKey {
        &self.keys[id.0]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarKey)> {
        self.keys.iter().enumerate().map(|(i, k)| (VarId(i), k))
    }

    fn insert(&mut self, key: VarKey) -> Option<VarId> {
        let (idx, fresh) = self.keys.insert_full(key);
        fresh.then_some(VarId(idx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Issue {
    Row { row: usize, residual: f64 },
    Bound { var: VarId, residual: f64 },
    Integrality { var: VarId, residual: f64 },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProblemError {
    #[error("row `{row}` references unregistered column {var}")]
    DanglingColumn { row: String, var: usize },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("column `{0}` has lower bound above upper bound")]
    CrossedBounds(String),
    #[error("duplicate registry key for column `{0}`")]
    DuplicateKey(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpProblem {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Constant added to the linear objective.
    pub objective_offset: f64,
    pub registry: VariableRegistry,
}

impl MilpProblem {
    pub fn add_column(&mut self, key: VarKey, column: Column) -> Result<VarId, ProblemError> {
        let name = column.name.clone();
        let id = self.registry.insert(key).ok_or(ProblemError::DuplicateKey(name))?;
        self.columns.push(column);
        debug_assert_eq!(id.0 + 1, self.columns.len());
        Ok(id)
    }

    pub fn add_row(&mut self, tag: Tag, name: String, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) {
        let terms = merge_terms(terms);
        self.rows.push(Row { tag, name, terms, sense, rhs });
    }

    pub fn var(&self, key: &VarKey) -> Option<VarId> {
        self.registry.get(key)
    }

    pub fn num_binaries(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == VarKind::Binary).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>()
    }

    /// Rows per tag plus columns whose bounds carry the tag.
    pub fn count(&self, tag: Tag) -> usize {
        self.rows.iter().filter(|r| r.tag == tag).count()
            + self.columns.iter().filter(|c| c.bound_tag == Some(tag)).count()
    }

    pub fn count_rows(&self, tag: Tag) -> usize {
        self.rows.iter().filter(|r| r.tag == tag).count()
    }

    pub fn check_consistency(&self) -> Result<(), ProblemError> {
        if self.registry.len() != self.columns.len() {
            return Err(ProblemError::DuplicateKey("registry/column length mismatch".into()));
        }
        if !self.objective_offset.is_finite() {
            return Err(ProblemError::NonFinite("objective offset".into()));
        }
        for c in &self.columns {
            if !c.cost.is_finite() || c.lower.is_nan() || c.upper.is_nan() {
                return Err(ProblemError::NonFinite(c.name.clone()));
            }
            if c.lower > c.upper {
                return Err(ProblemError::CrossedBounds(c.name.clone()));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ProblemError::NonFinite(r.name.clone()));
            }
            for (v, a) in &r.terms {
                if v.0 >= self.columns.len() {
                    return Err(ProblemError::DanglingColumn { row: r.name.clone(), var: v.0 });
                }
                if !a.is_finite() {
                    return Err(ProblemError::NonFinite(r.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Every row, bound and integrality requirement violated by `x` beyond
    /// `tol` (rows use [`Row::scaled_residual`]).
    pub fn evaluate(&self, x: &[f64], tol: f64) -> Vec<Issue> {
        let mut issues = Vec::new();
        for (i, c) in self.columns.iter().enumerate() {
            let v = x[i];
            let scale = v.abs().max(1.0);
            let residual = ((c.lower - v).max(0.0) + (v - c.upper).max(0.0)) / scale;
            if residual > tol {
                issues.push(Issue::Bound { var: VarId(i), residual });
            }
            if c.kind == VarKind::Binary {
                let frac = (v - v.round()).abs();
                if frac > tol {
                    issues.push(Issue::Integrality { var: VarId(i), residual: frac });
                }
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let residual = r.scaled_residual(x);
            if residual > tol {
                issues.push(Issue::Row { row: i, residual });
            }
        }
        issues
    }

    /// Copy with every binary fixed to the given 0/1 values and relaxed to
    /// continuous: the residual LP of a binary assignment.
    pub fn with_fixed_binaries(&self, fix: &[(VarId, f64)]) -> MilpProblem {
        let mut out = self.clone();
        for &(v, val) in fix {
            let col = &mut out.columns[v.0];
            col.lower = val;
            col.upper = val;
        }
        for col in &mut out.columns {
            col.kind = VarKind::Continuous;
        }
        out
    }

    pub fn summary(&self) -> ProblemSummary {
        ProblemSummary {
            columns: self.columns.len(),
            binaries: self.num_binaries(),
            rows: self.rows.len(),
            nonzeros: self.rows.iter().map(|r| r.terms.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProblemSummary {
    pub columns: usize,
    pub binaries: usize,
    pub rows: usize,
    pub nonzeros: usize,
}

impl fmt::Display for ProblemSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} columns ({} binary), {} rows, {} nonzeros",
            self.columns, self.binaries, self.rows, self.nonzeros
        )
    }
}

/// Sum duplicate columns and drop exact zeros, keeping first-seen order.
fn merge_terms(terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for (v, a) in terms {
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 += a,
            None => out.push((v, a)),
        }
    }
    out.retain(|(_, a)| *a != 0.0);
    out
}
