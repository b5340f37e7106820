//! Exact solving: an exhaustive oracle for tiny problems, a deterministic
//! depth-first branch-and-bound with constraint propagation, and a pluggable
//! external-backend contract speaking the LP dump format.

use crate::milp::{check_feasible, parse_solution_file, write_lp, MilpError, MilpProblem, Relation};
use std::collections::VecDeque;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

/// Hard cap on oracle enumeration; 2^24 assignments.
pub const DEFAULT_ORACLE_CAP: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Limit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Limit => "limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub nodes: u64,
    pub wall: Duration,
    /// Time at which the first incumbent was found (warm starts count as
    /// time zero).
    pub first_incumbent: Option<Duration>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub assignment: Option<Vec<u8>>,
    /// Scaled-integer objective of `assignment`.
    pub objective: Option<i64>,
    /// Proven absolute optimality gap; 0 when optimal.
    pub gap: Option<i64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Absolute gap tolerance in scaled objective units.
    pub abs_gap: i64,
}

impl Default for SolveLimits {
    fn default() -> SolveLimits {
        SolveLimits {
            time_limit: None,
            node_limit: None,
            abs_gap: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("problem has {vars} variables, oracle cap is {cap}")]
    OracleCapExceeded { vars: u32, cap: u32 },
    #[error("warm start violates rows {0:?}")]
    InvalidWarmStart(Vec<usize>),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("solver backend '{0}' is not available: {1}")]
    BackendUnavailable(String, String),
    #[error("solver backend '{0}' failed: {1}")]
    BackendFailed(String, String),
    #[error("solver backend '{0}' returned an invalid solution: {1}")]
    BackendInvalid(String, String),
}

/// Exhaustive enumeration of all 2^n assignments. Ground truth for the
/// acceptance suite; refuses problems over the cap. Ties are broken towards
/// the lexicographically smallest assignment vector.
pub fn brute_force_oracle(
    problem: &MilpProblem,
    limits: &SolveLimits,
) -> Result<Solution, SolverError> {
    brute_force_oracle_with_cap(problem, limits, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_oracle_with_cap(
    problem: &MilpProblem,
    limits: &SolveLimits,
    cap: u32,
) -> Result<Solution, SolverError> {
    if problem.num_vars > cap {
        return Err(SolverError::OracleCapExceeded {
            vars: problem.num_vars,
            cap,
        });
    }
    let started = Instant::now();
    let n = problem.num_vars;
    let mut best: Option<(i64, Vec<u8>)> = None;
    let mut assignment = vec![0u8; n as usize];
    let mut hit_limit = false;
    'masks: for mask in 0u64..(1u64 << n) {
        if mask % 65_536 == 0 {
            if let Some(limit) = limits.time_limit {
                if started.elapsed() > limit {
                    hit_limit = true;
                    break 'masks;
                }
            }
        }
        for (j, slot) in assignment.iter_mut().enumerate() {
            *slot = ((mask >> j) & 1) as u8;
        }
        let mut feasible = true;
        for row in &problem.rows {
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
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let objective = problem.objective_of(&assignment);
        let better = match &best {
            None => true,
            Some((b, vec)) => objective < *b || (objective == *b && assignment < *vec),
        };
        if better {
            best = Some((objective, assignment.clone()));
        }
    }
    let wall = started.elapsed();
    Ok(match best {
        Some((objective, assignment)) => Solution {
            status: if hit_limit {
                SolveStatus::Limit
            } else {
                SolveStatus::Optimal
            },
            assignment: Some(assignment),
            objective: Some(objective),
            gap: if hit_limit { None } else { Some(0) },
            stats: SolveStats {
                nodes: 1u64 << n,
                wall,
                first_incumbent: None,
            },
        },
        None => Solution {
            status: if hit_limit {
                SolveStatus::Limit
            } else {
                SolveStatus::Infeasible
            },
            assignment: None,
            objective: None,
            gap: None,
            stats: SolveStats {
                nodes: 1u64 << n,
                wall,
                first_incumbent: None,
            },
        },
    })
}

const FREE: i8 = -1;

struct Frame {
    var: u32,
    values: [u8; 2],
    next: u8,
    trail_mark: usize,
    bound: i64,
}

struct Search<'a> {
    p: &'a MilpProblem,
    /// var -> (row index, coefficient) incidence.
    var_rows: Vec<Vec<(u32, i64)>>,
    /// Attainable activity bounds per row under the current fixings.
    lo: Vec<i64>,
    hi: Vec<i64>,
    value: Vec<i8>,
    trail: Vec<u32>,
    fixed_obj: i64,
    /// Row indices of a var-disjoint family of "sum = 1, all +1" rows,
    /// used to tighten the admissible bound.
    is_cover: Vec<bool>,
    /// Activator variable of conditional coverage rows `sum(+1 members) -
    /// activator = 0`: once the activator is fixed to 1 the row behaves
    /// like a coverage row over its +1 members. -1 when not one.
    cond_activator: Vec<i32>,
    /// Inverse of `cond_activator`: the row a variable activates, or -1.
    var_activates: Vec<i32>,
    /// Covering row of each var, or -1.
    var_cover: Vec<i32>,
    /// Per row: count of member vars currently fixed at 1 (coverage rows).
    ones: Vec<i64>,
    /// var -> vars forced to 1 whenever it is 1, from `a - b <= 0` rows.
    implies: Vec<Vec<u32>>,
    /// Deduplication stamps for implied-cost accounting in [`Search::bound`].
    implied_mark: Vec<u64>,
    stamp: u64,
    queue: VecDeque<u32>,
    queued: Vec<bool>,
}

impl<'a> Search<'a> {
    fn new(p: &'a MilpProblem) -> Search<'a> {
        let n = p.num_vars as usize;
        let mut var_rows = vec![Vec::new(); n];
        let mut lo = Vec::with_capacity(p.rows.len());
        let mut hi = Vec::with_capacity(p.rows.len());
        for (r, row) in p.rows.iter().enumerate() {
            let mut row_lo = 0;
            let mut row_hi = 0;
            for (v, c) in &row.coeffs {
                var_rows[*v as usize].push((r as u32, *c));
                row_lo += (*c).min(0);
                row_hi += (*c).max(0);
            }
            lo.push(row_lo);
            hi.push(row_hi);
        }
        // Implication arcs from two-term rows `a - b <= 0` (a=1 forces b=1),
        // the shape of the mock-hire and warm-up linking rows.
        let mut implies = vec![Vec::new(); n];
        for row in &p.rows {
            if row.relation != Relation::Le || row.rhs != 0 || row.coeffs.len() != 2 {
                continue;
            }
            let (a, b) = (row.coeffs[0], row.coeffs[1]);
            match (a.1, b.1) {
                (1, -1) => implies[a.0 as usize].push(b.0),
                (-1, 1) => implies[b.0 as usize].push(a.0),
                _ => {}
            }
        }
        // Greedy var-disjoint selection of coverage rows in row order,
        // then of conditional coverage rows over the leftover vars.
        let mut is_cover = vec![false; p.rows.len()];
        let mut cond_activator = vec![-1i32; p.rows.len()];
        let mut var_cover = vec![-1i32; n];
        for (r, row) in p.rows.iter().enumerate() {
            let is_candidate = row.relation == Relation::Eq
                && row.rhs == 1
                && !row.coeffs.is_empty()
                && row.coeffs.iter().all(|(_, c)| *c == 1)
                && row.coeffs.iter().all(|(v, _)| var_cover[*v as usize] < 0);
            if is_candidate {
                is_cover[r] = true;
                for (v, _) in &row.coeffs {
                    var_cover[*v as usize] = r as i32;
                }
            }
        }
        for (r, row) in p.rows.iter().enumerate() {
            if is_cover[r] || row.relation != Relation::Eq || row.rhs != 0 {
                continue;
            }
            let minus: Vec<u32> = row
                .coeffs
                .iter()
                .filter(|(_, c)| *c == -1)
                .map(|(v, _)| *v)
                .collect();
            let members: Vec<u32> = row
                .coeffs
                .iter()
                .filter(|(_, c)| *c == 1)
                .map(|(v, _)| *v)
                .collect();
            let is_candidate = minus.len() == 1
                && members.len() + 1 == row.coeffs.len()
                && !members.is_empty()
                && members.iter().all(|v| var_cover[*v as usize] < 0);
            if is_candidate {
                cond_activator[r] = minus[0] as i32;
                for v in &members {
                    var_cover[*v as usize] = r as i32;
                }
            }
        }
        let mut var_activates = vec![-1i32; n];
        for (r, a) in cond_activator.iter().enumerate() {
            if *a >= 0 && var_activates[*a as usize] < 0 {
                var_activates[*a as usize] = r as i32;
            }
        }
        Search {
            p,
            var_rows,
            lo,
            hi,
            value: vec![FREE; n],
            trail: Vec::new(),
            fixed_obj: 0,
            is_cover,
            var_cover,
            ones: vec![0; p.rows.len()],
            cond_activator,
            var_activates,
            implies,
            implied_mark: vec![0; n],
            stamp: 0,
            queue: VecDeque::new(),
            queued: vec![false; p.rows.len()],
        }
    }

    fn enqueue(&mut self, row: u32) {
        if !self.queued[row as usize] {
            self.queued[row as usize] = true;
            self.queue.push_back(row);
        }
    }

    /// Fix a variable; returns false on an immediate contradiction.
    fn fix(&mut self, var: u32, val: u8) -> bool {
        match self.value[var as usize] {
            v if v == val as i8 => return true,
            FREE => {}
            _ => return false,
        }
        self.value[var as usize] = val as i8;
        self.trail.push(var);
        if val == 1 {
            self.fixed_obj += self.p.objective[var as usize];
        }
        for i in 0..self.var_rows[var as usize].len() {
            let (r, c) = self.var_rows[var as usize][i];
            if val == 1 {
                if c > 0 {
                    self.lo[r as usize] += c;
                } else {
                    self.hi[r as usize] += c;
                }
                if c > 0
                    && (self.is_cover[r as usize] || self.cond_activator[r as usize] >= 0)
                {
                    self.ones[r as usize] += 1;
                }
            } else if c > 0 {
                self.hi[r as usize] -= c;
            } else {
                self.lo[r as usize] -= c;
            }
            self.enqueue(r);
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            let val = self.value[var as usize];
            self.value[var as usize] = FREE;
            if val == 1 {
                self.fixed_obj -= self.p.objective[var as usize];
            }
            for i in 0..self.var_rows[var as usize].len() {
                let (r, c) = self.var_rows[var as usize][i];
                if val == 1 {
                    if c > 0 {
                        self.lo[r as usize] -= c;
                    } else {
                        self.hi[r as usize] -= c;
                    }
                    if c > 0
                        && (self.is_cover[r as usize] || self.cond_activator[r as usize] >= 0)
                    {
                        self.ones[r as usize] -= 1;
                    }
                } else if c > 0 {
                    self.hi[r as usize] += c;
                } else {
                    self.lo[r as usize] += c;
                }
            }
        }
        self.queue.clear();
        self.queued.iter_mut().for_each(|q| *q = false);
    }

    /// Process the propagation queue to fixpoint; returns false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop_front() {
            self.queued[r as usize] = false;
            let row = &self.p.rows[r as usize];
            let (relation, rhs) = (row.relation, row.rhs);
            let lo = self.lo[r as usize];
            let hi = self.hi[r as usize];
            let check_le = relation == Relation::Le || relation == Relation::Eq;
            let check_ge = relation == Relation::Ge || relation == Relation::Eq;
            if (check_le && lo > rhs) || (check_ge && hi < rhs) {
                return false;
            }
            for i in 0..self.p.rows[r as usize].coeffs.len() {
                let (v, c) = self.p.rows[r as usize].coeffs[i];
                if self.value[v as usize] != FREE {
                    continue;
                }
                let lo = self.lo[r as usize];
                let hi = self.hi[r as usize];
                let forced = if check_le && c > 0 && lo + c > rhs {
                    Some(0)
                } else if check_le && c < 0 && lo - c > rhs {
                    Some(1)
                } else if check_ge && c > 0 && hi - c < rhs {
                    Some(1)
                } else if check_ge && c < 0 && hi + c < rhs {
                    Some(0)
                } else {
                    None
                };
                if let Some(val) = forced {
                    if !self.fix(v, val) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether a conditional coverage row currently behaves like a
    /// coverage row (its activator is fixed to 1).
    fn cond_active(&self, r: usize) -> bool {
        let a = self.cond_activator[r];
        a >= 0 && self.value[a as usize] == 1
    }

    /// Cost of setting `v` to 1 plus the cheapest member of the still-open
    /// conditional coverage row `v` would activate, if any. `None` when
    /// activation is impossible (the conditional row has no free member).
    fn chained_cost(&self, v: u32) -> Option<i64> {
        let mut cost = self.p.objective[v as usize];
        let r = self.var_activates[v as usize];
        if r >= 0 && self.ones[r as usize] == 0 {
            let min = self.p.rows[r as usize]
                .coeffs
                .iter()
                .filter(|(m, c)| *c == 1 && self.value[*m as usize] == FREE)
                .map(|(m, _)| self.p.objective[*m as usize])
                .min()?;
            cost += min;
        }
        Some(cost)
    }

    /// Admissible lower bound on any completion of the current partial
    /// assignment: fixed objective, plus min(0, c) for unconstrained free
    /// vars, plus the cheapest member of every still-open coverage row, plus
    /// the cost of every free linking slack (mock hire, warm-up) implied by
    /// all remaining members of some open coverage row. Each slack is
    /// charged at most once.
    fn bound(&mut self) -> i64 {
        let mut bound = self.fixed_obj;
        for v in 0..self.p.num_vars as usize {
            if self.value[v] != FREE {
                continue;
            }
            let r = self.var_cover[v];
            // Vars in coverage rows (or in an activated conditional one)
            // are accounted for by the per-row minimum below instead.
            if r < 0 || !(self.is_cover[r as usize] || self.cond_active(r as usize)) {
                bound += self.p.objective[v].min(0);
            }
        }
        self.stamp += 1;
        for (r, row) in self.p.rows.iter().enumerate() {
            if self.ones[r] > 0 || !(self.is_cover[r] || self.cond_active(r)) {
                continue;
            }
            let mut min_cost: Option<i64> = None;
            let mut first_free: Option<u32> = None;
            let mut free_members = 0usize;
            for (v, c) in &row.coeffs {
                if *c != 1 || self.value[*v as usize] != FREE {
                    continue;
                }
                // Members whose chained conditional row is unsatisfiable
                // cannot cover this row at all.
                let Some(c) = self.chained_cost(*v) else {
                    continue;
                };
                free_members += 1;
                if first_free.is_none() {
                    first_free = Some(*v);
                }
                min_cost = Some(min_cost.map_or(c, |m| m.min(c)));
            }
            let Some(min_cost) = min_cost else {
                return i64::MAX; // row cannot be satisfied
            };
            bound += min_cost;
            // Slacks implied by every free member are forced regardless of
            // which member ends up covering the row.
            let first = first_free.expect("open row has a free member") as usize;
            'slack: for i in 0..self.implies[first].len() {
                let s = self.implies[first][i];
                if self.value[s as usize] != FREE
                    || self.p.objective[s as usize] <= 0
                    || self.implied_mark[s as usize] == self.stamp
                {
                    continue;
                }
                if free_members > 1 {
                    for (v, c) in &row.coeffs {
                        if *c == 1
                            && self.value[*v as usize] == FREE
                            && !self.implies[*v as usize].contains(&s)
                        {
                            continue 'slack;
                        }
                    }
                }
                self.implied_mark[s as usize] = self.stamp;
                bound += self.p.objective[s as usize];
            }
            // Union rule: if every free member still implies at least one
            // uncharged slack, some slack payment is unavoidable no matter
            // which member covers the row. Charge the cheapest such slack
            // and mark the whole union so no later row charges it again.
            let mut row_min: Option<i64> = None;
            let mut all_have_slack = true;
            for (v, c) in &row.coeffs {
                if *c != 1 || self.value[*v as usize] != FREE {
                    continue;
                }
                let member_min = self.implies[*v as usize]
                    .iter()
                    .filter(|s| {
                        self.value[**s as usize] == FREE
                            && self.p.objective[**s as usize] > 0
                            && self.implied_mark[**s as usize] != self.stamp
                    })
                    .map(|s| self.p.objective[*s as usize])
                    .min();
                match member_min {
                    Some(m) => row_min = Some(row_min.map_or(m, |r| r.min(m))),
                    None => {
                        all_have_slack = false;
                        break;
                    }
                }
            }
            if all_have_slack {
                if let Some(m) = row_min {
                    bound += m;
                    for (v, c) in &row.coeffs {
                        if *c != 1 || self.value[*v as usize] != FREE {
                            continue;
                        }
                        for s in &self.implies[*v as usize] {
                            self.implied_mark[*s as usize] = self.stamp;
                        }
                    }
                }
            }
        }
        bound
    }

    /// Pick the next branching variable and its value order.
    ///
    /// Structure-guided: take the open coverage row with the fewest free
    /// members and try its cheapest member at 1 first, so the first dive
    /// mimics a greedy assignment and reaches an incumbent quickly. With no
    /// open coverage row left, fall back to the free variable of largest
    /// absolute cost, cheaper value first.
    fn select_branch_var(&self) -> Option<(u32, [u8; 2])> {
        let mut best_row: Option<(usize, usize)> = None; // (free members, row)
        for (r, row) in self.p.rows.iter().enumerate() {
            if self.ones[r] > 0 || !(self.is_cover[r] || self.cond_active(r)) {
                continue;
            }
            let free = row
                .coeffs
                .iter()
                .filter(|(v, c)| *c == 1 && self.value[*v as usize] == FREE)
                .count();
            if free == 0 {
                continue;
            }
            match best_row {
                Some((f, _)) if f <= free => {}
                _ => best_row = Some((free, r)),
            }
        }
        if let Some((_, r)) = best_row {
            // Rank members by their true marginal cost: edge cost plus any
            // still-unpaid linking slacks (mock hire, warm-up) the pick
            // would force to 1.
            let var = self.p.rows[r]
                .coeffs
                .iter()
                .filter(|(v, c)| *c == 1 && self.value[*v as usize] == FREE)
                .min_by_key(|(v, _)| {
                    let implied: i64 = self.implies[*v as usize]
                        .iter()
                        .filter(|s| self.value[**s as usize] == FREE)
                        .map(|s| self.p.objective[*s as usize].max(0))
                        .sum();
                    let chained = self.chained_cost(*v).unwrap_or(i64::MAX / 2);
                    (chained + implied, *v)
                })
                .map(|(v, _)| *v)
                .expect("row has a free member");
            return Some((var, [1, 0]));
        }
        let mut best: Option<(i64, u32)> = None;
        for v in 0..self.p.num_vars {
            if self.value[v as usize] != FREE {
                continue;
            }
            let weight = self.p.objective[v as usize].abs();
            match best {
                Some((w, _)) if w >= weight => {}
                _ => best = Some((weight, v)),
            }
        }
        best.map(|(_, v)| {
            let values = if self.p.objective[v as usize] < 0 {
                [1, 0]
            } else {
                [0, 1]
            };
            (v, values)
        })
    }
}

/// Deterministic depth-first branch-and-bound over the binary variables.
/// `warm_start` installs an initial incumbent (it must be feasible).
pub fn solve_exact(
    problem: &MilpProblem,
    limits: &SolveLimits,
    warm_start: Option<&[u8]>,
) -> Result<Solution, SolverError> {
    let started = Instant::now();
    let mut incumbent: Option<(i64, Vec<u8>)> = None;
    let mut first_incumbent = None;
    if let Some(warm) = warm_start {
        let violated = check_feasible(problem, warm)?;
        if !violated.is_empty() {
            return Err(SolverError::InvalidWarmStart(violated));
        }
        incumbent = Some((problem.objective_of(warm), warm.to_vec()));
        first_incumbent = Some(Duration::ZERO);
    }

    let mut search = Search::new(problem);
    let mut nodes: u64 = 0;
    let mut pruned_lb = i64::MAX;
    let mut stack: Vec<Frame> = Vec::new();
    let mut aborted = false;

    // Root propagation.
    for r in 0..problem.rows.len() as u32 {
        search.enqueue(r);
    }
    let root_ok = search.propagate();

    if root_ok {
        'search: loop {
            nodes += 1;
            if let Some(node_limit) = limits.node_limit {
                if nodes > node_limit {
                    aborted = true;
                    break 'search;
                }
            }
            if nodes % 256 == 0 || limits.time_limit == Some(Duration::ZERO) {
                if let Some(time_limit) = limits.time_limit {
                    if started.elapsed() >= time_limit {
                        aborted = true;
                        break 'search;
                    }
                }
            }

            let bound = search.bound();
            let prune = match (&incumbent, bound) {
                (_, i64::MAX) => true,
                (Some((inc, _)), b) => b >= *inc - limits.abs_gap,
                (None, _) => false,
            };
            let mut descend: Option<(u32, [u8; 2])> = None;
            if prune {
                pruned_lb = pruned_lb.min(bound);
            } else {
                match search.select_branch_var() {
                    Some(choice) => descend = Some(choice),
                    None => {
                        // Leaf: every row is fully fixed and conflict-free.
                        let objective = search.fixed_obj;
                        let better = match &incumbent {
                            None => true,
                            Some((inc, _)) => objective < *inc,
                        };
                        if better {
                            let assignment: Vec<u8> =
                                search.value.iter().map(|v| *v as u8).collect();
                            incumbent = Some((objective, assignment));
                            if first_incumbent.is_none() {
                                first_incumbent = Some(started.elapsed());
                            }
                        }
                    }
                }
            }
            if let Some((var, values)) = descend {
                stack.push(Frame {
                    var,
                    values,
                    next: 0,
                    trail_mark: search.trail.len(),
                    bound,
                });
            }
            // Advance to the next unexplored child anywhere on the stack.
            loop {
                let Some(frame) = stack.last_mut() else {
                    break 'search;
                };
                if frame.next >= 2 {
                    stack.pop();
                    continue;
                }
                let val = frame.values[frame.next as usize];
                frame.next += 1;
                let (var, mark) = (frame.var, frame.trail_mark);
                search.undo_to(mark);
                if search.fix(var, val) && search.propagate() {
                    continue 'search;
                }
            }
        }
    }

    let wall = started.elapsed();
    let stats = SolveStats {
        nodes,
        wall,
        first_incumbent,
    };
    let solution = match incumbent {
        Some((objective, assignment)) => {
            if aborted {
                let open_lb = stack
                    .iter()
                    .filter(|f| f.next < 2)
                    .map(|f| f.bound)
                    .min()
                    .unwrap_or(i64::MAX)
                    .min(pruned_lb)
                    .min(objective);
                Solution {
                    status: SolveStatus::Limit,
                    gap: Some(objective - open_lb),
                    assignment: Some(assignment),
                    objective: Some(objective),
                    stats,
                }
            } else {
                let lb = pruned_lb.min(objective);
                let gap = objective - lb;
                Solution {
                    status: if gap == 0 {
                        SolveStatus::Optimal
                    } else {
                        SolveStatus::Feasible
                    },
                    gap: Some(gap.max(0)),
                    assignment: Some(assignment),
                    objective: Some(objective),
                    stats,
                }
            }
        }
        None => Solution {
            status: if aborted {
                SolveStatus::Limit
            } else {
                SolveStatus::Infeasible
            },
            assignment: None,
            objective: None,
            gap: None,
            stats,
        },
    };
    Ok(solution)
}

/// Which solver implementation `solve_with_backend` dispatches to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendConfig {
    /// The built-in branch-and-bound.
    Builtin,
    /// An external executable speaking the LP-dump protocol:
    /// `<command> <problem.lp> <solution.out> [time_limit_secs] [warm.sol]`.
    External { command: PathBuf },
}

impl BackendConfig {
    /// Parse a backend name: "builtin" or a path to an executable.
    pub fn parse(name: &str) -> BackendConfig {
        if name == "builtin" {
            BackendConfig::Builtin
        } else {
            BackendConfig::External {
                command: PathBuf::from(name),
            }
        }
    }
}

/// Solve via the configured backend. Same contract as [`solve_exact`];
/// external results are re-checked and the objective recomputed, never
/// trusted.
pub fn solve_with_backend(
    problem: &MilpProblem,
    backend: &BackendConfig,
    limits: &SolveLimits,
    warm_start: Option<&[u8]>,
) -> Result<Solution, SolverError> {
    let command = match backend {
        BackendConfig::Builtin => return solve_exact(problem, limits, warm_start),
        BackendConfig::External { command } => command,
    };
    let name = command.display().to_string();
    let started = Instant::now();
    let dir = tempdir_in_std(&name)?;
    let lp_path = dir.join("problem.lp");
    let sol_path = dir.join("solution.out");
    std::fs::write(&lp_path, write_lp(problem)).map_err(MilpError::Io)?;
    let mut cmd = Command::new(command);
    cmd.arg(&lp_path).arg(&sol_path);
    let secs = limits
        .time_limit
        .map(|d| d.as_secs_f64().to_string())
        .unwrap_or_else(|| "none".to_string());
    cmd.arg(secs);
    if let Some(warm) = warm_start {
        let violated = check_feasible(problem, warm)?;
        if !violated.is_empty() {
            return Err(SolverError::InvalidWarmStart(violated));
        }
        let warm_path = dir.join("warm.sol");
        // Warm-start lines reuse the LP variable names.
        let mut text = String::from("status feasible\n");
        for (v, x) in warm.iter().enumerate() {
            if *x == 1 {
                use std::fmt::Write as _;
                let _ = writeln!(text, "{} 1", lp_var_name(problem, v as u32));
            }
        }
        std::fs::write(&warm_path, text).map_err(MilpError::Io)?;
        cmd.arg(&warm_path);
    }
    let output = match cmd.output() {
        Ok(output) => output,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SolverError::BackendUnavailable(name, e.to_string()))
        }
        Err(e) => return Err(SolverError::BackendFailed(name, e.to_string())),
    };
    if !output.status.success() {
        return Err(SolverError::BackendFailed(
            name,
            format!(
                "exit {:?}: {}",
                output.status.code(),
                String::from_utf8_lossy(&output.stderr)
            ),
        ));
    }
    let file = std::fs::File::open(&sol_path)
        .map_err(|e| SolverError::BackendFailed(name.clone(), format!("no solution file: {e}")))?;
    let (status, assignment) = parse_solution_file(problem, file)
        .map_err(|e| SolverError::BackendInvalid(name.clone(), e.to_string()))?;
    let wall = started.elapsed();
    let stats = SolveStats {
        nodes: 0,
        wall,
        first_incumbent: None,
    };
    match status.as_str() {
        "infeasible" => Ok(Solution {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            gap: None,
            stats,
        }),
        "optimal" | "feasible" | "limit" => {
            let violated = check_feasible(problem, &assignment)?;
            if !violated.is_empty() {
                return Err(SolverError::BackendInvalid(
                    name,
                    format!("claimed-feasible solution violates rows {violated:?}"),
                ));
            }
            let objective = problem.objective_of(&assignment);
            let status = match status.as_str() {
                "optimal" => SolveStatus::Optimal,
                "feasible" => SolveStatus::Feasible,
                _ => SolveStatus::Limit,
            };
            Ok(Solution {
                status,
                gap: if status == SolveStatus::Optimal { Some(0) } else { None },
                assignment: Some(assignment),
                objective: Some(objective),
                stats,
            })
        }
        other => Err(SolverError::BackendInvalid(
            name,
            format!("unknown status '{other}'"),
        )),
    }
}

fn lp_var_name(problem: &MilpProblem, v: u32) -> String {
    let raw = &problem.var_names[v as usize];
    let clean: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    format!("v{}_{}", v, clean)
}

fn tempdir_in_std(tag: &str) -> Result<PathBuf, MilpError> {
    let mut dir = std::env::temp_dir();
    let nonce = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let clean: String = tag
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    dir.push(format!("auditsched-{clean}-{}-{nonce}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
