//! End-to-end acceptance suite. Each test prints one pass line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use auditsched::candidates::{enumerate_edges, CandidateSet};
use auditsched::cost::price_edges;
use auditsched::dense::{build_dense_model, dense_warm_start};
use auditsched::diff::diff_schedules;
use auditsched::domain::*;
use auditsched::flow::{build_flow_model, extract_schedule, uncoverable_tasks, Schedule};
use auditsched::generator::{generate_instance, GeneratorParams};
use auditsched::greedy::{greedy_baseline, GreedyOutcome};
use auditsched::milp::{check_feasible, model_stats};
use auditsched::scaled::{Cost, Hours};
use auditsched::solver::{brute_force_oracle, solve_exact, SolveLimits, SolveStatus};
use auditsched::testutil::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

fn pass(criterion: u32, what: &str) {
    println!("[acceptance] criterion {criterion:>2} pass: {what}");
}

fn priced(instance: &Instance) -> CandidateSet {
    let mut set = enumerate_edges(instance);
    price_edges(&mut set, instance);
    set
}

fn solve_to_schedule(instance: &Instance, set: &CandidateSet) -> (Schedule, i64) {
    let (problem, varmap) = build_flow_model(instance, set).unwrap();
    let solution = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
    assert_eq!(solution.status, SolveStatus::Optimal);
    let schedule = extract_schedule(&solution, &varmap, instance, set).unwrap();
    (schedule, solution.objective.unwrap())
}

/// No voluntary gap: every skipped day inside an occupancy span must be
/// unusable (auditor away or outside the engagement window).
fn assert_no_voluntary_gap(instance: &Instance, set: &CandidateSet) {
    for edge in &set.edges {
        let auditor = instance.auditor(set.auditor_id(edge)).unwrap();
        let task = set.task_key(edge);
        let window = &instance.engagement(&task.engagement).unwrap().phase_windows[&task.phase];
        let worked: Vec<u16> = edge.occupancy.worked.iter().map(|(d, _)| d.0).collect();
        let (first, last) = (worked[0], *worked.last().unwrap());
        for day in first..=last {
            if worked.contains(&day) {
                continue;
            }
            let usable = window.contains(DayIndex(day))
                && !auditor
                    .calendar
                    .hours(DayIndex(day))
                    .unwrap_or(Hours::ZERO)
                    .is_zero();
            assert!(
                !usable,
                "edge {} skips usable day {day} (voluntary gap)",
                edge.edge_id
            );
        }
    }
}

#[test]
fn acceptance_01_window_enumeration_golden_case() {
    // 5-day window, 24h task, one 8h/day auditor: starts on the first three
    // window days only, and no enumerated occupancy skips a usable day.
    let started = Instant::now();
    let instance = instance_with(
        9,
        vec![full_time("A0", "L0", 9)],
        vec![engagement("E0", &[("p", 2, 6)], &[("p", "L0", 0, 24.0)])],
    );
    let set = priced(&instance);
    assert_eq!(set.edges.len(), 3);
    let mut starts: Vec<u16> = set.edges.iter().map(|e| e.start_day.0).collect();
    starts.sort_unstable();
    assert_eq!(starts, vec![2, 3, 4]);
    assert_no_voluntary_gap(&instance, &set);
    assert!(started.elapsed() < Duration::from_secs(1));
    pass(1, "3 edges on first 3 window days, no voluntary gaps");
}

#[test]
fn acceptance_02_daily_hours_golden_case() {
    // 8h task in a 3-day window: 8h/day auditor -> 3 starts, 4h/day -> 2,
    // 2h/day -> 0 (cannot finish inside the window).
    let started = Instant::now();
    let mut full = full_time("F", "L0", 6);
    full.calendar = AuditorCalendar::uniform(6, Hours::from_f64(8.0));
    let mut half = full_time("H", "L0", 6);
    half.calendar = AuditorCalendar::uniform(6, Hours::from_f64(4.0));
    let mut quarter = full_time("Q", "L0", 6);
    quarter.calendar = AuditorCalendar::uniform(6, Hours::from_f64(2.0));
    let instance = instance_with(
        6,
        vec![full, half, quarter],
        vec![engagement("E0", &[("p", 1, 3)], &[("p", "L0", 0, 8.0)])],
    );
    let set = priced(&instance);
    let count_for = |id: &str| {
        set.edges
            .iter()
            .filter(|e| set.auditor_id(e) == &AuditorId::new(id))
            .count()
    };
    assert_eq!(count_for("F"), 3);
    assert_eq!(count_for("H"), 2);
    assert_eq!(count_for("Q"), 0);
    assert!(started.elapsed() < Duration::from_secs(1));
    pass(2, "edge counts 3/2/0 for 8h/4h/2h per-day auditors");
}

/// Small random instance whose flow model stays within the oracle cap.
fn tiny_random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(4..=12u16);
    let n_levels = rng.gen_range(1..=2usize);
    let n_auditors = rng.gen_range(1..=3usize);
    let n_engagements = rng.gen_range(1..=2usize);

    let mut auditors = Vec::new();
    for i in 0..n_auditors {
        let mut auditor = full_time(&format!("A{i}"), &format!("L{}", rng.gen_range(0..n_levels)), horizon);
        for day in 0..horizon {
            let hours = match rng.gen_range(0..10) {
                0..=1 => 0.0,
                2..=3 => 4.0,
                _ => 8.0,
            };
            auditor.calendar.hours_by_day[day as usize] = Hours::from_f64(hours);
        }
        if i == n_auditors - 1 && n_auditors > 1 && rng.gen_bool(0.3) {
            auditor.is_mock = true;
        }
        auditors.push(auditor);
    }

    let mut engagements = Vec::new();
    let mut total_tasks = 0usize;
    for e in 0..n_engagements {
        let len = rng.gen_range(2..=5u16).min(horizon);
        let start = rng.gen_range(0..=horizon - len);
        let mut tasks = Vec::new();
        let n_tasks = rng.gen_range(if e == 0 { 1..=2 } else { 0..=2 });
        for i in 0..n_tasks {
            if total_tasks >= 4 {
                break;
            }
            total_tasks += 1;
            tasks.push(TaskSpec {
                phase_id: PhaseId::new("p"),
                required_level: LevelId::new(format!("L{}", rng.gen_range(0..n_levels))),
                index: i,
                hours: Hours::from_f64(rng.gen_range(4..=16) as f64),
            });
        }
        let mut engagement = engagement(&format!("E{e}"), &[("p", start, start + len - 1)], &[]);
        engagement.tasks = tasks;
        engagement.client_location = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        engagements.push(engagement);
    }

    let mut instance = instance_with(horizon, auditors, engagements);
    instance.levels = levels(n_levels);
    let w = &mut instance.weights;
    w.c_mock = Cost::from_f64(rng.gen_range(50.0..500.0));
    w.c_warmup = Cost::from_f64(rng.gen_range(0.0..10.0));
    w.k_discount = rng.gen_range(0.0..0.3);
    w.w_uncertainty = Cost::from_f64(rng.gen_range(0.0..20.0));
    w.w_travel = Cost::from_f64(rng.gen_range(0.0..1.0));
    w.substitution_penalty = [
        (-1, Cost::from_f64(rng.gen_range(0.0..80.0))),
        (0, Cost::ZERO),
        (1, Cost::from_f64(rng.gen_range(0.0..50.0))),
    ]
    .into_iter()
    .collect();
    w.familiarity_reward = Cost::from_f64(rng.gen_range(0.0..10.0));
    if rng.gen_bool(0.3) {
        instance.max_pause_days = Some(rng.gen_range(0..=2));
    }
    instance
}

#[test]
fn acceptance_03_oracle_equivalence_sweep() {
    let started = Instant::now();
    let mut accepted = 0u32;
    let mut feasible = 0u32;
    let mut seed = 0u64;
    while accepted < 100 {
        seed += 1;
        assert!(seed < 10_000, "not enough tiny instances accepted");
        let instance = tiny_random_instance(seed);
        let set = priced(&instance);
        let Ok((problem, varmap)) = build_flow_model(&instance, &set) else {
            continue;
        };
        if problem.num_vars == 0 || problem.num_vars > 24 {
            continue;
        }
        accepted += 1;
        let oracle = brute_force_oracle(&problem, &SolveLimits::default()).unwrap();
        let exact = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
        assert_eq!(exact.status, oracle.status, "seed {seed}");
        assert_eq!(exact.objective, oracle.objective, "seed {seed}");
        if exact.status == SolveStatus::Optimal {
            assert_eq!(exact.gap, Some(0), "seed {seed}: gap must be proven 0");
            feasible += 1;
            let assignment = exact.assignment.as_ref().unwrap();
            assert!(check_feasible(&problem, assignment).unwrap().is_empty());
            let schedule = extract_schedule(&exact, &varmap, &instance, &set).unwrap();
            assert_eq!(schedule.objective.total().as_scaled(), exact.objective.unwrap());
        } else {
            assert_eq!(exact.status, SolveStatus::Infeasible);
        }
    }
    assert!(feasible >= 30, "only {feasible} of {accepted} were feasible");
    assert!(started.elapsed() < Duration::from_secs(300));
    pass(
        3,
        "solve_exact == oracle on 100 tiny instances (status, objective, gap 0)",
    );
}

#[test]
fn acceptance_04_mock_minimality() {
    // Two same-day tasks, one real auditor: exactly one mock hire despite a
    // dominating c_mock.
    let mut mock = full_time("M0", "L0", 4);
    mock.is_mock = true;
    let instance = {
        let mut i = instance_with(
            4,
            vec![full_time("A0", "L0", 4), mock],
            vec![engagement(
                "E0",
                &[("p", 1, 1)],
                &[("p", "L0", 0, 8.0), ("p", "L0", 1, 8.0)],
            )],
        );
        i.weights.c_mock = Cost::from_f64(10_000.0);
        i.weights.c_warmup = Cost::from_f64(1.0);
        i.weights.w_uncertainty = Cost::from_f64(5.0);
        i.weights.k_discount = 0.1;
        i
    };
    let set = priced(&instance);
    let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
    let oracle = brute_force_oracle(&problem, &SolveLimits::default()).unwrap();
    let exact = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
    assert_eq!(exact.objective, oracle.objective);
    let schedule = extract_schedule(&exact, &varmap, &instance, &set).unwrap();
    assert_eq!(schedule.hired_mocks.len(), 1);
    pass(4, "exactly one mock hired under a dominating c_mock (oracle-confirmed)");
}

#[test]
fn acceptance_05_earliest_start_discounting() {
    // Only the uncertainty term is active: the optimal start is the
    // earliest feasible day (c_reward(d) = 1/(1+kd) decreasing in d).
    let mut instance = instance_with(
        10,
        vec![full_time("A0", "L0", 10)],
        vec![engagement("E0", &[("p", 1, 5)], &[("p", "L0", 0, 8.0)])],
    );
    instance.weights.k_discount = 0.2;
    instance.weights.w_uncertainty = Cost::from_f64(50.0);
    let set = priced(&instance);
    assert_eq!(set.edges.len(), 5, "five feasible starts expected");
    let (schedule, _) = solve_to_schedule(&instance, &set);
    assert_eq!(schedule.assignments[0].start_day, DayIndex(1));
    pass(5, "optimal start is the earliest of 5 feasible days");
}

#[test]
fn acceptance_06_update_stability() {
    let mut instance = worked_example_instance();
    instance.weights.k_discount = 0.05;
    instance.weights.w_uncertainty = Cost::from_f64(10.0);
    instance.weights.c_warmup = Cost::from_f64(2.0);
    let set = priced(&instance);
    let (first, _) = solve_to_schedule(&instance, &set);

    // Identical instance re-solved as an update; the stability reward
    // dwarfs every other per-edge cost magnitude.
    let mut update = instance.clone();
    update.previous_schedule = Some(first.clone());
    update.weights.stability_reward = Cost::from_f64(100_000.0);
    update.weights.stability_penalty = Cost::from_f64(100_000.0);
    let set = priced(&update);
    let (second, _) = solve_to_schedule(&update, &set);

    let report = diff_schedules(&first, &second);
    assert_eq!(report.auditor_changes, 0, "{report:?}");
    assert_eq!(report.start_shifts, 0, "{report:?}");
    assert_eq!(report.added + report.removed, 0, "{report:?}");
    pass(6, "no-op update re-solve keeps every assignment in place");
}

#[test]
fn acceptance_07_formulation_comparison_medium() {
    let started = Instant::now();
    let params = GeneratorParams {
        auditors: 10,
        engagements: 8,
        phases: 2,
        levels: 3,
        indices: 2,
        days: 90,
        availability_density: 0.9,
        window_density: 0.05,
        scarcity: 0.03,
        mocks: 0,
        seed: 1,
    };
    let instance = generate_instance(&params).unwrap();
    let set = priced(&instance);
    assert!(uncoverable_tasks(&set).is_empty());
    let (flow_problem, flow_map) = build_flow_model(&instance, &set).unwrap();
    let (dense_problem, dense_map) = build_dense_model(&instance, &set).unwrap();
    let (flow_vars, ..) = model_stats(&flow_problem);
    let (dense_vars, ..) = model_stats(&dense_problem);
    assert!(
        dense_vars > flow_vars,
        "dense {dense_vars} vars must exceed flow {flow_vars}"
    );

    let limits = SolveLimits::default();
    let flow_solution = solve_exact(&flow_problem, &limits, None).unwrap();
    assert_eq!(flow_solution.status, SolveStatus::Optimal);
    assert_eq!(flow_solution.gap, Some(0));
    let schedule =
        extract_schedule(&flow_solution, &flow_map, &instance, &set).unwrap();
    assert_eq!(schedule.assignments.len(), instance.task_count());

    // The dense solve starts from the flow optimum as incumbent, so the
    // comparison measures proof effort on equal footing.
    let warm = dense_warm_start(&schedule, &dense_map, dense_problem.num_vars)
        .expect("flow schedule maps onto the dense variables");
    let dense_solution = solve_exact(&dense_problem, &limits, Some(&warm)).unwrap();
    assert_eq!(dense_solution.status, SolveStatus::Optimal);
    assert_eq!(dense_solution.gap, Some(0));
    assert_eq!(
        flow_solution.objective, dense_solution.objective,
        "both formulations must agree at optimality"
    );

    // Timing ordering is reported, not asserted (measurement noise, and the
    // dense side inherits its first incumbent from the warm start).
    println!(
        "[acceptance] criterion  7 report: flow first incumbent {:?} ({} nodes), \
         dense proof {} nodes",
        flow_solution.stats.first_incumbent,
        flow_solution.stats.nodes,
        dense_solution.stats.nodes,
    );
    assert!(started.elapsed() < Duration::from_secs(600));
    pass(
        7,
        "dense vars > flow vars; equal optimal objectives at gap 0 (10/8/2/3/2/90, seed 1)",
    );
}

#[test]
fn acceptance_08_pruning_ratio_full_scale() {
    let started = Instant::now();
    let params = GeneratorParams {
        auditors: 71,
        engagements: 47,
        phases: 3,
        levels: 10,
        indices: 6,
        days: 365,
        availability_density: 0.8,
        window_density: 0.3,
        scarcity: 0.6,
        mocks: 2,
        seed: 1,
    };
    let instance = generate_instance(&params).unwrap();
    let set = enumerate_edges(&instance);
    let cross_join = cross_join_size(&instance);
    let ratio = set.edges.len() as f64 / cross_join as f64;
    assert!(
        ratio < 0.05,
        "{} edges of cross-join {cross_join} = {ratio:.4}",
        set.edges.len()
    );
    assert!(started.elapsed() < Duration::from_secs(120));
    pass(
        8,
        "candidate edges under 5% of the auditor x task x day cross-join at 71/47/3/10/6/365",
    );
}

#[test]
fn acceptance_09_warmup_slack_consolidates() {
    // Two interchangeable auditors, two tasks of one engagement doable
    // sequentially; only c_warmup differentiates -> one auditor takes both.
    let mut instance = instance_with(
        10,
        vec![full_time("A0", "L0", 10), full_time("A1", "L0", 10)],
        vec![engagement(
            "E0",
            &[("p", 1, 4)],
            &[("p", "L0", 0, 8.0), ("p", "L0", 1, 8.0)],
        )],
    );
    instance.weights.c_warmup = Cost::from_f64(5.0);
    let set = priced(&instance);
    let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
    assert!(problem.num_vars <= 24, "{} vars", problem.num_vars);
    let oracle = brute_force_oracle(&problem, &SolveLimits::default()).unwrap();
    let exact = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
    assert_eq!(exact.objective, oracle.objective);
    assert_eq!(exact.objective, Some(Cost::from_f64(5.0).as_scaled()));
    let schedule = extract_schedule(&exact, &varmap, &instance, &set).unwrap();
    assert_eq!(schedule.warmup_pairs.len(), 1);
    pass(9, "optimum uses one auditor-engagement pair where two would cost double warm-up");
}

/// Generator seed for the recorded greedy-failure exhibit. Found by a seed
/// sweep; at these parameters greedy dead-ends while the exact solver
/// proves a feasible optimum.
const GREEDY_FAILURE_SEED: u64 = 245;

#[test]
fn acceptance_10_greedy_failure_exhibit() {
    let params = GeneratorParams {
        auditors: 3,
        engagements: 2,
        phases: 1,
        levels: 2,
        indices: 3,
        days: 8,
        availability_density: 0.8,
        window_density: 0.5,
        scarcity: 0.7,
        mocks: 0,
        seed: GREEDY_FAILURE_SEED,
    };
    let instance = generate_instance(&params).unwrap();
    let set = priced(&instance);
    let outcome = greedy_baseline(&instance, &set);
    let GreedyOutcome::Stuck(report) = outcome else {
        panic!("greedy unexpectedly completed; the recorded seed no longer reproduces");
    };
    let (problem, varmap) = build_flow_model(&instance, &set).unwrap();
    let solution = solve_exact(&problem, &SolveLimits::default(), None).unwrap();
    assert_eq!(solution.status, SolveStatus::Optimal);
    let schedule = extract_schedule(&solution, &varmap, &instance, &set).unwrap();
    assert_eq!(schedule.assignments.len(), instance.task_count());
    println!(
        "[acceptance] criterion 10 report: greedy stuck on task {} after {} assignments; \
         exact optimum objective {}",
        report.task,
        report.assigned_before_failure,
        schedule.objective.total()
    );
    pass(10, "greedy dead-ends where branch-and-bound finds the optimum (seed 245)");
}
