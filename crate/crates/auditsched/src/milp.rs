//! Solver-neutral binary program: variables, linear rows, minimization
//! objective, plus the LP text dump external backends consume.

use std::fmt::Write as _;
use std::io::{self, BufRead};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn lp_symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One linear row over binary variables, with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(u32, i64)>,
    pub relation: Relation,
    pub rhs: i64,
}

/// A pure binary program with a minimization objective in scaled-integer
/// units.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MilpProblem {
    pub num_vars: u32,
    pub objective: Vec<i64>,
    pub rows: Vec<Row>,
    pub var_names: Vec<String>,
}

impl MilpProblem {
    pub fn new() -> MilpProblem {
        MilpProblem::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, objective: i64) -> u32 {
        let id = self.num_vars;
        self.num_vars += 1;
        self.objective.push(objective);
        self.var_names.push(name.into());
        id
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(u32, i64)>,
        relation: Relation,
        rhs: i64,
    ) {
        debug_assert!(coeffs.iter().all(|(v, _)| *v < self.num_vars));
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective_of(&self, assignment: &[u8]) -> i64 {
        self.objective
            .iter()
            .zip(assignment)
            .map(|(c, x)| c * *x as i64)
            .sum()
    }
}

/// (variables, rows, nonzeros) of a built problem.
pub fn model_stats(problem: &MilpProblem) -> (usize, usize, usize) {
    (
        problem.num_vars as usize,
        problem.rows.len(),
        problem.num_nonzeros(),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("assignment length {got} does not match variable count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("assignment entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("solution file: {0}")]
    SolutionFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Indices of all rows the assignment violates; empty means feasible.
/// Exact integer arithmetic throughout.
pub fn check_feasible(problem: &MilpProblem, assignment: &[u8]) -> Result<Vec<usize>, MilpError> {
    if assignment.len() != problem.num_vars as usize {
        return Err(MilpError::LengthMismatch {
            got: assignment.len(),
            expected: problem.num_vars as usize,
        });
    }
    if let Some((index, &value)) = assignment.iter().enumerate().find(|(_, v)| **v > 1) {
        return Err(MilpError::NotBinary { index, value });
    }
    let mut violated = Vec::new();
    for (idx, row) in problem.rows.iter().enumerate() {
        let lhs: i64 = row
            .coeffs
            .iter()
            .map(|(v, c)| c * assignment[*v as usize] as i64)
            .sum();
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs,
            Relation::Eq => lhs == row.rhs,
            Relation::Ge => lhs >= row.rhs,
        };
        if !ok {
            violated.push(idx);
        }
    }
    Ok(violated)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Deterministic CPLEX-LP-format dump. Identical problems serialize to
/// byte-identical text.
pub fn write_lp(problem: &MilpProblem) -> String {
    let mut out = String::new();
    out.push_str("\\ auditsched binary program\n");
    out.push_str("Minimize\n obj:");
    if problem.num_vars == 0 {
        out.push_str(" 0 x_dummy");
    }
    for (v, c) in problem.objective.iter().enumerate() {
        let _ = write!(out, " {} {} {}", if *c < 0 { '-' } else { '+' }, c.abs(), var_lp_name(problem, v as u32));
    }
    out.push_str("\nSubject To\n");
    for (idx, row) in problem.rows.iter().enumerate() {
        let _ = write!(out, " r{}_{}:", idx, sanitize(&row.name));
        if row.coeffs.is_empty() {
            out.push_str(" 0 x_dummy");
        }
        for (v, c) in &row.coeffs {
            let _ = write!(out, " {} {} {}", if *c < 0 { '-' } else { '+' }, c.abs(), var_lp_name(problem, *v));
        }
        let _ = writeln!(out, " {} {}", row.relation.lp_symbol(), row.rhs);
    }
    out.push_str("Binary\n");
    for v in 0..problem.num_vars {
        let _ = writeln!(out, " {}", var_lp_name(problem, v));
    }
    if problem.num_vars == 0 || problem.rows.iter().any(|r| r.coeffs.is_empty()) {
        out.push_str(" x_dummy\n");
    }
    out.push_str("End\n");
    out
}

fn var_lp_name(problem: &MilpProblem, v: u32) -> String {
    format!("v{}_{}", v, sanitize(&problem.var_names[v as usize]))
}

/// Parse a backend solution file.
///
/// Format: first line `status optimal|feasible|infeasible|limit`, then one
/// `<lp-var-name> <0|1>` line per nonzero (missing variables default to 0).
pub fn parse_solution_file(
    problem: &MilpProblem,
    reader: impl io::Read,
) -> Result<(String, Vec<u8>), MilpError> {
    let reader = io::BufReader::new(reader);
    let mut lines = reader.lines();
    let status_line = lines
        .next()
        .ok_or_else(|| MilpError::SolutionFormat("empty solution file".to_string()))??;
    let status = status_line
        .strip_prefix("status ")
        .ok_or_else(|| {
            MilpError::SolutionFormat(format!("expected 'status <s>' first line, got '{status_line}'"))
        })?
        .trim()
        .to_string();
    let mut by_name = std::collections::HashMap::new();
    for v in 0..problem.num_vars {
        by_name.insert(var_lp_name(problem, v), v);
    }
    let mut assignment = vec![0u8; problem.num_vars as usize];
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("objective") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (name, value) = match (parts.next(), parts.next()) {
            (Some(n), Some(v)) => (n, v),
            _ => return Err(MilpError::SolutionFormat(format!("bad line '{line}'"))),
        };
        if name == "x_dummy" {
            continue;
        }
        let var = *by_name
            .get(name)
            .ok_or_else(|| MilpError::SolutionFormat(format!("unknown variable '{name}'")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| MilpError::SolutionFormat(format!("bad value in '{line}'")))?;
        assignment[var as usize] = if value > 0.5 { 1 } else { 0 };
    }
    Ok((status, assignment))
}
