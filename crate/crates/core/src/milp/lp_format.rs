//! LP-format (CPLEX-style text) export and import.
//!
//! The writer emits `Minimize`, `Subject To`, `Bounds`, `Binaries` and `End`
//! sections. Canonical names such as `u[g1,3]` are written as `u(g1,3)`
//! because square brackets, `-`, `:` and the arithmetic operators are
//! reserved tokens in the format; any other reserved character becomes `_`.
//! The reader accepts that subset plus `Maximize` (costs are negated),
//! `Generals` (read as binaries when bounded to `[0, 1]`), `free` bounds and
//! one-sided bound lines. It maps `(`/`)` back to `[`/`]`, and row names
//! whose prefix is a [`Tag`] name get that tag back.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Column, MilpProblem, Sense, Tag, VarId, VarKind};
use crate::formulation::VarKey;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("general integer column `{0}` is not supported (only binaries)")]
    GeneralInteger(String),
}

const TERMS_PER_LINE: usize = 8;

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

struct Names {
    used: HashSet<String>,
}

impl Names {
    fn file_name(&mut self, canonical: &str) -> String {
        let mut s: String = canonical
            .chars()
            .map(|ch| match ch {
                '[' => '(',
                ']' => ')',
                '+' | '-' | '*' | '/' | '^' | '<' | '>' | '=' | ':' | ' ' | '\t' | ';' | '\\' => '_',
                c => c,
            })
            .collect();
        if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            s.insert(0, '_');
        }
        let base = s.clone();
        let mut n = 1;
        while !self.used.insert(s.clone()) {
            s = format!("{base}~{n}");
            n += 1;
        }
        s
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    for (i, (a, name)) in terms.enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", fmt_num(a.abs()));
    }
}

/// Render `prob` as LP text.
pub fn write_lp(prob: &MilpProblem) -> String {
    let mut names = Names { used: HashSet::new() };
    let col_names: Vec<String> = prob.columns.iter().map(|c| names.file_name(&c.name)).collect();
    let mut out = String::from("\\ generated by gridsched\nMinimize\n obj:");
    let costs = prob
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.cost != 0.0)
        .map(|(i, c)| (c.cost, col_names[i].clone()));
    write_terms(&mut out, costs);
    if prob.objective_offset != 0.0 {
        let sign = if prob.objective_offset < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", fmt_num(prob.objective_offset.abs()));
    }
    out.push_str("\nSubject To\n");
    for row in &prob.rows {
        let _ = write!(out, " {}:", names.file_name(&row.name));
        if row.terms.is_empty() {
            // An empty row still needs a left-hand side.
            let _ = write!(out, " 0 {}", col_names.first().map_or("_", String::as_str));
        }
        write_terms(&mut out, row.terms.iter().map(|(v, a)| (*a, col_names[v.0].clone())));
        let _ = writeln!(out, " {} {}", row.sense.symbol(), fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for (c, name) in prob.columns.iter().zip(&col_names) {
        match (c.lower, c.upper) {
            (l, u) if l == u => {
                let _ = writeln!(out, " {name} = {}", fmt_num(l));
            }
            (l, u) if l == f64::NEG_INFINITY && u == f64::INFINITY => {
                let _ = writeln!(out, " {name} free");
            }
            (l, u) => {
                let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(l), fmt_num(u));
            }
        }
    }
    let binaries: Vec<&String> = prob
        .columns
        .iter()
        .zip(&col_names)
        .filter(|(c, _)| c.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Op(char),
    Cmp(Sense),
    Colon,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>, LpError> {
    let line = line.split('\\').next().unwrap_or("");
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' | '-' => {
                toks.push(Tok::Op(c));
                i += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                if j < chars.len() && chars[j] == '=' {
                    j += 1;
                }
                let sense = match c {
                    '<' => Sense::Le,
                    '>' => Sense::Ge,
                    _ => {
                        // `=<` and `=>` spellings
                        if j < chars.len() && (chars[j] == '<' || chars[j] == '>') {
                            let s = if chars[j] == '<' { Sense::Le } else { Sense::Ge };
                            j += 1;
                            s
                        } else {
                            Sense::Eq
                        }
                    }
                };
                toks.push(Tok::Cmp(sense));
                i = j;
            }
            _ => {
                let start = i;
                while i < chars.len() && !matches!(chars[i], ' ' | '\t' | '\r' | '+' | '-' | ':' | '<' | '>' | '=') {
                    // allow exponent signs inside numbers
                    i += 1;
                    if i < chars.len()
                        && matches!(chars[i], '+' | '-')
                        && matches!(chars[i - 1], 'e' | 'E')
                        && chars[start].is_ascii_digit() | (chars[start] == '.')
                    {
                        i += 1;
                    }
                }
                let word: String = chars[start..i].iter().collect();
                let lower = word.to_ascii_lowercase();
                if lower == "inf" || lower == "infinity" {
                    toks.push(Tok::Num(f64::INFINITY));
                } else if word.starts_with(|ch: char| ch.is_ascii_digit() || ch == '.') {
                    let v = word.parse::<f64>().map_err(|_| LpError::Syntax {
                        line: lineno,
                        message: format!("bad number `{word}`"),
                    })?;
                    toks.push(Tok::Num(v));
                } else {
                    toks.push(Tok::Word(word));
                }
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    End,
}

fn section_header(line: &str) -> Option<(Section, bool)> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => (Section::Objective, false),
        "maximize" | "maximise" | "maximum" | "max" => (Section::Objective, true),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, false),
        "bounds" | "bound" => (Section::Bounds, false),
        "binaries" | "binary" | "bin" => (Section::Binaries, false),
        "generals" | "general" | "gen" => (Section::Generals, false),
        "end" => (Section::End, false),
        _ => return None,
    })
}

fn canonical(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '(' => '[',
            ')' => ']',
            c => c,
        })
        .collect()
}

fn tag_from_name(name: &str) -> Tag {
    use Tag::*;
    const ALL: [Tag; 29] = [
        MinOutput, MaxOutputWithReserve, ReserveCap, SystemReserve, RampUp, RampDown, MinUp, MinDown,
        StartupLogic, ResCap, FlowDefinition, ThermalLimit, NodalBalance, CorrectiveRampDown,
        CorrectiveRampUp, ContingencyMinOutput, ContingencyMaxOutput, ContingencyResCap,
        ContingencyBalance, ContingencyFlow, EmergencyLimit, SwitchedFlowLower, SwitchedFlowUpper,
        SwitchedLimit, SwitchBudget, ReferenceAngle, AngleBox, InitialCommitment, OutagedLine,
    ];
    let prefix = name.split('[').next().unwrap_or("");
    ALL.into_iter().find(|t| format!("{t:?}") == prefix).unwrap_or(Imported)
}

struct Builder {
    prob: MilpProblem,
    index: HashMap<String, VarId>,
    generals: Vec<VarId>,
}

impl Builder {
    fn col(&mut self, file_name: &str) -> VarId {
        if let Some(&v) = self.index.get(file_name) {
            return v;
        }
        let name = canonical(file_name);
        let id = self
            .prob
            .add_column(
                VarKey::Named(name.clone()),
                Column {
                    name,
                    lower: 0.0,
                    upper: f64::INFINITY,
                    kind: VarKind::Continuous,
                    cost: 0.0,
                    bound_tag: None,
                },
            )
            .expect("fresh name");
        self.index.insert(file_name.to_string(), id);
        id
    }
}

/// Parse signed linear terms; returns terms and a trailing constant.
fn parse_linear(
    toks: &[Tok],
    b: &mut Builder,
    lineno: usize,
) -> Result<(Vec<(VarId, f64)>, f64), LpError> {
    let err = |m: &str| LpError::Syntax { line: lineno, message: m.to_string() };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in toks {
        match tok {
            Tok::Op('+') => {}
            Tok::Op('-') => sign = -sign,
            Tok::Num(v) => {
                if let Some(c) = coef.take() {
                    // number after number: previous one was a constant
                    constant += c;
                }
                coef = Some(sign * v);
                sign = 1.0;
            }
            Tok::Word(w) => {
                let a = coef.take().unwrap_or(sign);
                terms.push((b.col(w), a));
                sign = 1.0;
            }
            _ => return Err(err("unexpected token in linear expression")),
        }
    }
    if let Some(c) = coef {
        constant += c;
    }
    Ok((terms, constant))
}

/// Parse LP text produced by [`write_lp`] (or a compatible subset).
pub fn read_lp(text: &str) -> Result<MilpProblem, LpError> {
    let mut b = Builder {
        prob: MilpProblem::default(),
        index: HashMap::new(),
        generals: Vec::new(),
    };
    let mut section = Section::None;
    let mut maximize = false;
    // Statements may span lines; accumulate until the next one starts.
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;

    fn statement_starts(toks: &[Tok], section: Section) -> bool {
        match section {
            Section::Constraints => matches!(toks, [Tok::Word(_), Tok::Colon, ..]),
            Section::Objective => matches!(toks, [Tok::Word(_), Tok::Colon, ..]),
            _ => true,
        }
    }

    let flush = |b: &mut Builder, section: Section, toks: &mut Vec<Tok>, lineno: usize| -> Result<(), LpError> {
        if toks.is_empty() {
            return Ok(());
        }
        let stmt = std::mem::take(toks);
        let err = |m: String| LpError::Syntax { line: lineno, message: m };
        match section {
            Section::Objective => {
                let body = match stmt.as_slice() {
                    [Tok::Word(_), Tok::Colon, rest @ ..] => rest,
                    all => all,
                };
                let (terms, constant) = parse_linear(body, b, lineno)?;
                for (v, a) in terms {
                    b.prob.columns[v.0].cost += a;
                }
                b.prob.objective_offset += constant;
            }
            Section::Constraints => {
                let (name, body) = match stmt.as_slice() {
                    [Tok::Word(n), Tok::Colon, rest @ ..] => (canonical(n), rest),
                    all => (format!("R{}", b.prob.rows.len() + 1), all),
                };
                let pos = body
                    .iter()
                    .position(|t| matches!(t, Tok::Cmp(_)))
                    .ok_or_else(|| err(format!("constraint `{name}` has no comparison")))?;
                let Tok::Cmp(sense) = body[pos] else { unreachable!() };
                let (terms, lhs_const) = parse_linear(&body[..pos], b, lineno)?;
                let (rhs_terms, rhs) = parse_linear(&body[pos + 1..], b, lineno)?;
                if !rhs_terms.is_empty() {
                    return Err(err(format!("constraint `{name}` has variables on the right")));
                }
                let tag = tag_from_name(&name);
                b.prob.rows.push(super::Row {
                    tag,
                    name,
                    terms,
                    sense,
                    rhs: rhs - lhs_const,
                });
            }
            Section::Bounds => apply_bound(&stmt, b).map_err(err)?,
            Section::Binaries | Section::Generals => {
                for t in &stmt {
                    let Tok::Word(w) = t else {
                        return Err(err("expected column names".into()));
                    };
                    let v = b.col(w);
                    if section == Section::Binaries {
                        let c = &mut b.prob.columns[v.0];
                        c.kind = VarKind::Binary;
                        c.lower = c.lower.max(0.0);
                        c.upper = c.upper.min(1.0);
                    } else {
                        b.generals.push(v);
                    }
                }
            }
            Section::None | Section::End => return Err(err("content outside any section".into())),
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some((next, is_max)) = section_header(raw.split('\\').next().unwrap_or("")) {
            flush(&mut b, section, &mut pending, pending_line)?;
            section = next;
            if next == Section::Objective {
                maximize = is_max;
            }
            continue;
        }
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let line_based = matches!(section, Section::Bounds | Section::Binaries | Section::Generals);
        if line_based || (statement_starts(&toks, section) && !pending.is_empty()) {
            flush(&mut b, section, &mut pending, pending_line)?;
        }
        if pending.is_empty() {
            pending_line = lineno;
        }
        pending.extend(toks);
        if line_based {
            flush(&mut b, section, &mut pending, pending_line)?;
        }
    }
    flush(&mut b, section, &mut pending, pending_line)?;

    for v in b.generals.clone() {
        let c = &mut b.prob.columns[v.0];
        if c.lower >= 0.0 && c.upper <= 1.0 {
            c.kind = VarKind::Binary;
        } else {
            return Err(LpError::GeneralInteger(c.name.clone()));
        }
    }
    if maximize {
        for c in &mut b.prob.columns {
            c.cost = -c.cost;
        }
        b.prob.objective_offset = -b.prob.objective_offset;
    }
    Ok(b.prob)
}

fn apply_bound(stmt: &[Tok], b: &mut Builder) -> Result<(), String> {
    // Fold leading signs into numbers.
    let mut toks: Vec<Tok> = Vec::new();
    let mut neg = false;
    for t in stmt {
        match t {
            Tok::Op('-') => neg = !neg,
            Tok::Op('+') => {}
            Tok::Num(v) => {
                toks.push(Tok::Num(if neg { -v } else { *v }));
                neg = false;
            }
            other => toks.push(other.clone()),
        }
    }
    match toks.as_slice() {
        [Tok::Word(w), Tok::Word(f)] if f.eq_ignore_ascii_case("free") => {
            let v = b.col(w);
            b.prob.columns[v.0].lower = f64::NEG_INFINITY;
            b.prob.columns[v.0].upper = f64::INFINITY;
        }
        [Tok::Num(l), Tok::Cmp(Sense::Le), Tok::Word(w), Tok::Cmp(Sense::Le), Tok::Num(u)] => {
            let v = b.col(w);
            b.prob.columns[v.0].lower = *l;
            b.prob.columns[v.0].upper = *u;
        }
        [Tok::Word(w), Tok::Cmp(s), Tok::Num(x)] => {
            let v = b.col(w);
            let c = &mut b.prob.columns[v.0];
            match s {
                Sense::Le => c.upper = *x,
                Sense::Ge => c.lower = *x,
                Sense::Eq => {
                    c.lower = *x;
                    c.upper = *x;
                }
            }
        }
        [Tok::Num(x), Tok::Cmp(s), Tok::Word(w)] => {
            let v = b.col(w);
            let c = &mut b.prob.columns[v.0];
            match s {
                Sense::Le => c.lower = *x,
                Sense::Ge => c.upper = *x,
                Sense::Eq => {
                    c.lower = *x;
                    c.upper = *x;
                }
            }
        }
        _ => return Err(format!("unsupported bound statement {stmt:?}")),
    }
    Ok(())
}
