//! The two-dimensional multi-commodity-flow binary program: one x variable
//! per candidate edge, mock-hire slack y per mock auditor, warm-up slack z
//! per (auditor, engagement) pair.

use crate::candidates::{CandidateSet, Occupancy};
use crate::domain::*;
use crate::milp::{MilpProblem, Relation};
use crate::scaled::Cost;
use crate::solver::Solution;
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Variable handles of the built flow model.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    /// edge id -> x variable.
    pub x: Vec<u32>,
    /// mock auditor -> y variable (only mocks with candidate edges).
    pub y: BTreeMap<AuditorId, u32>,
    /// (auditor, engagement) -> z variable (only pairs with candidate edges).
    pub z: BTreeMap<(AuditorId, EngagementId), u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScheduleObjective {
    pub edge_cost: Cost,
    pub mock_cost: Cost,
    pub warmup_cost: Cost,
}

impl ScheduleObjective {
    pub fn total(&self) -> Cost {
        self.edge_cost + self.mock_cost + self.warmup_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub auditor: AuditorId,
    pub task: TaskKey,
    pub start_day: DayIndex,
    pub occupancy: Occupancy,
}

/// A complete schedule: one assignment per task plus the slack bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Sorted by task key.
    pub assignments: Vec<Assignment>,
    pub hired_mocks: BTreeSet<AuditorId>,
    pub warmup_pairs: BTreeSet<(AuditorId, EngagementId)>,
    pub objective: ScheduleObjective,
}

impl Schedule {
    pub fn empty() -> Schedule {
        Schedule {
            assignments: Vec::new(),
            hired_mocks: BTreeSet::new(),
            warmup_pairs: BTreeSet::new(),
            objective: ScheduleObjective::default(),
        }
    }

    pub fn assignee(&self, task: &TaskKey) -> Option<&AuditorId> {
        self.assignments
            .iter()
            .find(|a| &a.task == task)
            .map(|a| &a.auditor)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("enforced pair ({auditor}, {task}) has no candidate edges")]
    EnforcedPairUnsatisfiable { auditor: AuditorId, task: TaskKey },
    #[error("edge {0} has not been priced")]
    UnpricedEdge(u32),
}

/// Tasks with no candidate edge at all; any model containing them is
/// infeasible and these names make the diagnostic actionable.
pub fn uncoverable_tasks(candidates: &CandidateSet) -> Vec<TaskKey> {
    candidates
        .task_keys
        .iter()
        .zip(&candidates.by_task)
        .filter(|(_, edges)| edges.is_empty())
        .map(|(key, _)| key.clone())
        .collect()
}

/// Build the flow binary program. Every edge must already carry its cost.
pub fn build_flow_model(
    instance: &Instance,
    candidates: &CandidateSet,
) -> Result<(MilpProblem, VarMap), BuildError> {
    let mut problem = MilpProblem::new();
    let mut varmap = VarMap::default();

    // x variables, one per edge, in canonical edge order.
    for edge in &candidates.edges {
        let var = problem.add_var(
            format!(
                "x_{}_{}_d{}",
                candidates.auditor_id(edge),
                candidates.task_key(edge),
                edge.start_day
            ),
            edge.cost.as_scaled(),
        );
        varmap.x.push(var);
    }

    // y variables per mock auditor with at least one edge.
    let mut mock_edges: BTreeMap<AuditorId, Vec<u32>> = BTreeMap::new();
    // z variables per (auditor, engagement) pair with at least one edge.
    let mut pair_edges: BTreeMap<(AuditorId, EngagementId), Vec<u32>> = BTreeMap::new();
    for edge in &candidates.edges {
        let auditor_id = candidates.auditor_id(edge);
        let auditor = instance
            .auditor(auditor_id)
            .expect("edges reference known auditors");
        if auditor.is_mock {
            mock_edges
                .entry(auditor_id.clone())
                .or_default()
                .push(edge.edge_id);
        }
        pair_edges
            .entry((auditor_id.clone(), candidates.task_key(edge).engagement.clone()))
            .or_default()
            .push(edge.edge_id);
    }
    for auditor in mock_edges.keys() {
        let var = problem.add_var(format!("y_{auditor}"), instance.weights.c_mock.as_scaled());
        varmap.y.insert(auditor.clone(), var);
    }
    for (auditor, engagement) in pair_edges.keys() {
        let var = problem.add_var(
            format!("z_{auditor}_{engagement}"),
            instance.weights.c_warmup.as_scaled(),
        );
        varmap.z.insert((auditor.clone(), engagement.clone()), var);
    }

    // (1) Coverage: every task assigned exactly once.
    for (task_idx, key) in candidates.task_keys.iter().enumerate() {
        let coeffs = candidates.by_task[task_idx]
            .iter()
            .map(|e| (varmap.x[*e as usize], 1))
            .collect();
        problem.add_row(format!("cover_{key}"), coeffs, Relation::Eq, 1);
    }

    // (2) Multitasking: at most one task per auditor per day where at least
    // two candidate edges overlap.
    let mut overlap_keys: Vec<(u32, u16)> = candidates
        .by_auditor_day
        .iter()
        .filter(|(_, edges)| edges.len() >= 2)
        .map(|(k, _)| *k)
        .collect();
    overlap_keys.sort();
    for (auditor_idx, day) in overlap_keys {
        let edges = &candidates.by_auditor_day[&(auditor_idx, day)];
        let coeffs = edges.iter().map(|e| (varmap.x[*e as usize], 1)).collect();
        problem.add_row(
            format!("mt_{}_d{}", candidates.auditor_ids[auditor_idx as usize], day),
            coeffs,
            Relation::Le,
            1,
        );
    }

    // (3) Enforcement: the enforced auditor covers the task, start day free.
    for (auditor, task) in &instance.preferences.enforced {
        let auditor_idx = candidates.auditor_index(auditor);
        let edge_ids: Vec<u32> = match (auditor_idx, candidates.task_index(task)) {
            (Some(a), Some(t)) => candidates.by_task[t as usize]
                .iter()
                .copied()
                .filter(|e| candidates.edges[*e as usize].auditor == a)
                .collect(),
            _ => Vec::new(),
        };
        if edge_ids.is_empty() {
            return Err(BuildError::EnforcedPairUnsatisfiable {
                auditor: auditor.clone(),
                task: task.clone(),
            });
        }
        let coeffs = edge_ids.iter().map(|e| (varmap.x[*e as usize], 1)).collect();
        problem.add_row(format!("enf_{auditor}_{task}"), coeffs, Relation::Eq, 1);
    }

    // (4) Mock linking: y_a >= x_e for every edge of mock a.
    for (auditor, edges) in &mock_edges {
        let y = varmap.y[auditor];
        for edge in edges {
            problem.add_row(
                format!("mock_{auditor}_e{edge}"),
                vec![(varmap.x[*edge as usize], 1), (y, -1)],
                Relation::Le,
                0,
            );
        }
    }

    // (5) Warm-up linking: z_ae >= x_e for every edge of the pair.
    for (pair, edges) in &pair_edges {
        let z = varmap.z[pair];
        for edge in edges {
            problem.add_row(
                format!("warm_{}_{}_e{edge}", pair.0, pair.1),
                vec![(varmap.x[*edge as usize], 1), (z, -1)],
                Relation::Le,
                0,
            );
        }
    }

    Ok((problem, varmap))
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("solution carries no assignment")]
    NoAssignment,
    #[error("schedule consistency violation: {0}")]
    Inconsistent(String),
}

/// Turn a feasible solver solution back into a schedule, re-checking every
/// business rule and recomputing the objective decomposition from scratch.
pub fn extract_schedule(
    solution: &Solution,
    varmap: &VarMap,
    instance: &Instance,
    candidates: &CandidateSet,
) -> Result<Schedule, ExtractError> {
    let assignment = solution
        .assignment
        .as_ref()
        .ok_or(ExtractError::NoAssignment)?;

    let selected: Vec<&crate::candidates::CandidateEdge> = candidates
        .edges
        .iter()
        .filter(|e| assignment[varmap.x[e.edge_id as usize] as usize] == 1)
        .collect();

    // One assignment per task.
    let mut seen_tasks = HashSet::new();
    for edge in &selected {
        if !seen_tasks.insert(edge.task) {
            return Err(ExtractError::Inconsistent(format!(
                "task {} assigned twice",
                candidates.task_key(edge)
            )));
        }
    }
    if seen_tasks.len() != candidates.task_keys.len() {
        return Err(ExtractError::Inconsistent(format!(
            "{} of {} tasks assigned",
            seen_tasks.len(),
            candidates.task_keys.len()
        )));
    }
    // Per-auditor-per-day exclusivity.
    let mut busy = HashSet::new();
    for edge in &selected {
        for (day, _) in &edge.occupancy.worked {
            if !busy.insert((edge.auditor, day.0)) {
                return Err(ExtractError::Inconsistent(format!(
                    "auditor {} double-booked on day {}",
                    candidates.auditor_id(edge),
                    day
                )));
            }
        }
    }
    // Enforced pairs present, forbidden absent.
    for (auditor, task) in &instance.preferences.enforced {
        let held = selected.iter().any(|e| {
            candidates.auditor_id(e) == auditor && candidates.task_key(e) == task
        });
        if !held {
            return Err(ExtractError::Inconsistent(format!(
                "enforced pair ({auditor}, {task}) not selected"
            )));
        }
    }
    for (auditor, task) in &instance.preferences.forbidden {
        let held = selected.iter().any(|e| {
            candidates.auditor_id(e) == auditor && candidates.task_key(e) == task
        });
        if held {
            return Err(ExtractError::Inconsistent(format!(
                "forbidden pair ({auditor}, {task}) selected"
            )));
        }
    }

    // Slacks actually used.
    let mut hired_mocks = BTreeSet::new();
    let mut warmup_pairs = BTreeSet::new();
    for edge in &selected {
        let auditor_id = candidates.auditor_id(edge);
        let auditor = instance
            .auditor(auditor_id)
            .expect("edges reference known auditors");
        if auditor.is_mock {
            hired_mocks.insert(auditor_id.clone());
        }
        warmup_pairs.insert((auditor_id.clone(), candidates.task_key(edge).engagement.clone()));
    }
    // The solver's slack values must cover actual usage.
    for mock in &hired_mocks {
        let var = varmap.y.get(mock).copied();
        if var.map(|v| assignment[v as usize]) != Some(1) {
            return Err(ExtractError::Inconsistent(format!(
                "mock {mock} used without y = 1"
            )));
        }
    }
    for pair in &warmup_pairs {
        let var = varmap.z.get(pair).copied();
        if var.map(|v| assignment[v as usize]) != Some(1) {
            return Err(ExtractError::Inconsistent(format!(
                "pair ({}, {}) used without z = 1",
                pair.0, pair.1
            )));
        }
    }

    let edge_cost: Cost = selected.iter().map(|e| e.cost).sum();
    let objective = ScheduleObjective {
        edge_cost,
        mock_cost: instance.weights.c_mock * hired_mocks.len() as i64,
        warmup_cost: instance.weights.c_warmup * warmup_pairs.len() as i64,
    };
    // Independent recomputation must agree with the solver's claim, modulo
    // slack variables the solver set to 1 without using them (possible only
    // when their cost is 0).
    if let Some(solver_objective) = solution.objective {
        let mut slack_only = 0i64;
        for (mock, var) in &varmap.y {
            if assignment[*var as usize] == 1 && !hired_mocks.contains(mock) {
                slack_only += instance.weights.c_mock.as_scaled();
            }
        }
        for (pair, var) in &varmap.z {
            if assignment[*var as usize] == 1 && !warmup_pairs.contains(pair) {
                slack_only += instance.weights.c_warmup.as_scaled();
            }
        }
        if objective.total().as_scaled() + slack_only != solver_objective {
            return Err(ExtractError::Inconsistent(format!(
                "recomputed objective {} != solver objective {}",
                objective.total().as_scaled() + slack_only,
                solver_objective
            )));
        }
    }

    let mut assignments: Vec<Assignment> = selected
        .iter()
        .map(|e| Assignment {
            auditor: candidates.auditor_id(e).clone(),
            task: candidates.task_key(e).clone(),
            start_day: e.start_day,
            occupancy: e.occupancy.clone(),
        })
        .collect();
    relabel_interchangeable_indices(&mut assignments);
    assignments.sort_by(|a, b| a.task.cmp(&b.task));

    Ok(Schedule {
        assignments,
        hired_mocks,
        warmup_pairs,
        objective,
    })
}

/// Same-(engagement, phase, level) index slots are interchangeable; relabel
/// them in (start_day, auditor) order so equivalent optima serialize
/// identically.
pub fn relabel_interchangeable_indices(assignments: &mut [Assignment]) {
    let mut groups: BTreeMap<(EngagementId, PhaseId, LevelId), Vec<usize>> = BTreeMap::new();
    for (i, a) in assignments.iter().enumerate() {
        groups
            .entry((a.task.engagement.clone(), a.task.phase.clone(), a.task.level.clone()))
            .or_default()
            .push(i);
    }
    for members in groups.values() {
        if members.len() < 2 {
            continue;
        }
        let mut indices: Vec<u32> = members.iter().map(|i| assignments[*i].task.index).collect();
        indices.sort_unstable();
        let mut order: Vec<usize> = members.clone();
        order.sort_by(|a, b| {
            let (a, b) = (&assignments[*a], &assignments[*b]);
            (a.start_day, &a.auditor).cmp(&(b.start_day, &b.auditor))
        });
        for (slot, index) in order.into_iter().zip(indices) {
            assignments[slot].task.index = index;
        }
    }
}

/// Counts summarizing a schedule for side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub tasks_assigned: usize,
    pub auditor_availability_violations: usize,
    pub engagement_availability_violations: usize,
    pub familiarity_misses: usize,
    pub level_substitutions: usize,
    pub mocks_to_recruit: usize,
    pub distinct_auditor_engagement_pairs: usize,
}

pub fn schedule_metrics(schedule: &Schedule, instance: &Instance) -> MetricsReport {
    let mut auditor_violations = 0;
    let mut engagement_violations = 0;
    let mut familiarity_misses = 0;
    let mut substitutions = 0;
    for assignment in &schedule.assignments {
        let auditor = instance.auditor(&assignment.auditor);
        let engagement = instance.engagement(&assignment.task.engagement);
        let window = engagement.and_then(|e| e.phase_windows.get(&assignment.task.phase));
        for (day, hours) in &assignment.occupancy.worked {
            let available = auditor
                .and_then(|a| a.calendar.hours(*day))
                .unwrap_or(crate::scaled::Hours::ZERO);
            if available < *hours {
                auditor_violations += 1;
            }
            if !window.map(|w| w.contains(*day)).unwrap_or(false) {
                engagement_violations += 1;
            }
        }
        if let Some(a) = auditor {
            if !a.familiar_engagements.contains(&assignment.task.engagement) {
                familiarity_misses += 1;
            }
            if a.level != assignment.task.level {
                substitutions += 1;
            }
        }
    }
    MetricsReport {
        tasks_assigned: schedule.assignments.len(),
        auditor_availability_violations: auditor_violations,
        engagement_availability_violations: engagement_violations,
        familiarity_misses,
        level_substitutions: substitutions,
        mocks_to_recruit: schedule.hired_mocks.len(),
        distinct_auditor_engagement_pairs: schedule.warmup_pairs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::enumerate_edges;
    use crate::cost::price_edges;
    use crate::scaled::Hours;
    use crate::solver::{brute_force_oracle, solve_exact, SolveLimits};
    use crate::testutil::*;

    fn prepared(mut instance: Instance) -> (Instance, CandidateSet) {
        let mut set = enumerate_edges(&instance);
        price_edges(&mut set, &instance);
        instance.weights = instance.weights.clone();
        (instance, set)
    }

    #[test]
    fn one_task_three_starts_model_shape() {
        let (instance, set) = prepared(tiny_instance());
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        // 3 x vars + 1 z var; no mocks.
        assert_eq!(problem.num_vars, 4);
        assert_eq!(varmap.x.len(), 3);
        assert!(varmap.y.is_empty());
        assert_eq!(varmap.z.len(), 1);
        // 1 coverage row + 3 warm-up links; single-task edges never overlap
        // pairwise in a way that needs multitask rows (each edge is one day
        // here, distinct days share no edge pair... they do share: all
        // 1-day edges start on different days), so no mt rows.
        let cover_rows = problem.rows.iter().filter(|r| r.name.starts_with("cover_")).count();
        let mt_rows = problem.rows.iter().filter(|r| r.name.starts_with("mt_")).count();
        assert_eq!(cover_rows, 1);
        assert_eq!(mt_rows, 0);
    }

    #[test]
    fn overlapping_windows_produce_one_multitask_row() {
        let instance = instance_with(
            9,
            vec![full_time("A0", "L0", 9)],
            vec![
                engagement("E0", &[("p", 1, 5)], &[("p", "L0", 0, 24.0)]),
                engagement("E1", &[("p", 5, 7)], &[("p", "L0", 0, 16.0)]),
            ],
        );
        let (instance, set) = prepared(instance);
        let (problem, _) = build_flow_model(&instance, &set).unwrap();
        let mt_rows: Vec<&crate::milp::Row> = problem
            .rows
            .iter()
            .filter(|r| r.name.starts_with("mt_"))
            .collect();
        // Edge occupancies: E0 starts 1/2/3 (3 days each), E1 starts 5/6
        // (2 days each). Days 2, 3, 4, 5 and 6 each carry >= 2 overlapping
        // edges; day 5 is the only cross-engagement overlap (E0 start 3
        // reaches day 5, E1 start 5 begins there).
        assert_eq!(mt_rows.len(), 5);
        assert!(mt_rows
            .iter()
            .any(|r| r.name.ends_with("_d5") && r.coeffs.len() == 2));
    }

    #[test]
    fn mock_auditor_gets_one_linking_row_per_edge() {
        let mut instance = tiny_instance();
        instance.auditors[0].is_mock = true;
        let (instance, set) = prepared(instance);
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        assert_eq!(varmap.y.len(), 1);
        let mock_rows = problem.rows.iter().filter(|r| r.name.starts_with("mock_")).count();
        assert_eq!(mock_rows, set.edges.len());
    }

    #[test]
    fn enforced_pair_without_edges_is_diagnosed() {
        let mut instance = tiny_instance();
        let key = instance.engagements[0].tasks[0].key(&instance.engagements[0].id);
        instance.auditors.push(full_time("A9", "L0", 6));
        // A9 cannot travel, so the pair has no edges.
        instance.auditors[1].max_travel_km = Some(0.5);
        instance.engagements[0].client_location = (50.0, 0.0);
        instance
            .preferences
            .enforced
            .insert((AuditorId::new("A9"), key));
        let (instance, set) = prepared(instance);
        let err = build_flow_model(&instance, &set).unwrap_err();
        assert!(matches!(err, BuildError::EnforcedPairUnsatisfiable { .. }));
    }

    #[test]
    fn deterministic_model_build() {
        let (instance, set) = prepared(worked_example_instance());
        let (p1, _) = build_flow_model(&instance, &set).unwrap();
        let (p2, _) = build_flow_model(&instance, &set).unwrap();
        assert_eq!(crate::milp::write_lp(&p1), crate::milp::write_lp(&p2));
    }

    #[test]
    fn empty_instance_extracts_empty_schedule() {
        let instance = instance_with(3, vec![full_time("A0", "L0", 3)], vec![]);
        let (instance, set) = prepared(instance);
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        let solution = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
        let schedule = extract_schedule(&solution, &varmap, &instance, &set).unwrap();
        assert!(schedule.assignments.is_empty());
        assert_eq!(schedule.objective.total(), Cost::ZERO);
    }

    #[test]
    fn tiny_solve_matches_oracle_and_checks_out() {
        let mut instance = tiny_instance();
        instance.engagements[0].tasks.push(TaskSpec {
            phase_id: PhaseId::new("interim"),
            required_level: LevelId::new("L0"),
            index: 1,
            hours: Hours::from_f64(8.0),
        });
        instance.weights.k_discount = 0.5;
        instance.weights.w_uncertainty = Cost::from_f64(10.0);
        let (instance, set) = prepared(instance);
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        let oracle = brute_force_oracle(&problem, &SolveLimits::default()).unwrap();
        let exact = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
        assert_eq!(exact.objective, oracle.objective);
        let schedule = extract_schedule(&exact, &varmap, &instance, &set).unwrap();
        assert_eq!(
            schedule.objective.total().as_scaled(),
            exact.objective.unwrap()
        );
        assert_eq!(schedule.assignments.len(), 2);
    }

    #[test]
    fn mock_usage_is_counted_once() {
        let mut instance = tiny_instance();
        let mut mock = full_time("M0", "L0", 6);
        mock.is_mock = true;
        instance.auditors.push(mock);
        // Two tasks on the same single day force the mock in.
        instance.engagements[0].phase_windows.insert(
            PhaseId::new("interim"),
            EngagementWindow::from_range(1, 1),
        );
        instance.engagements[0].tasks[0].hours = Hours::from_f64(8.0);
        instance.engagements[0].tasks.push(TaskSpec {
            phase_id: PhaseId::new("interim"),
            required_level: LevelId::new("L0"),
            index: 1,
            hours: Hours::from_f64(8.0),
        });
        instance.weights.c_mock = Cost::from_f64(100.0);
        let (instance, set) = prepared(instance);
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        let solution = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
        let schedule = extract_schedule(&solution, &varmap, &instance, &set).unwrap();
        assert_eq!(schedule.hired_mocks.len(), 1);
        assert_eq!(schedule.objective.mock_cost, Cost::from_f64(100.0));
        let metrics = schedule_metrics(&schedule, &instance);
        assert_eq!(metrics.mocks_to_recruit, 1);
        assert_eq!(metrics.auditor_availability_violations, 0);
        assert_eq!(metrics.engagement_availability_violations, 0);
    }

    #[test]
    fn metrics_count_familiarity_and_substitutions() {
        let mut instance = tiny_instance();
        instance.auditors[0].level = LevelId::new("L1");
        instance.weights.substitution_penalty.insert(1, Cost::from_f64(5.0));
        let (instance, set) = prepared(instance);
        let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
        let solution = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
        let schedule = extract_schedule(&solution, &varmap, &instance, &set).unwrap();
        let metrics = schedule_metrics(&schedule, &instance);
        assert_eq!(metrics.level_substitutions, 1);
        assert_eq!(metrics.familiarity_misses, 1);
        assert_eq!(metrics.distinct_auditor_engagement_pairs, 1);
    }
}
