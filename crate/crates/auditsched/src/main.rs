//! Command-line front end: validate, solve, update, compare, generate and
//! render scheduling instances.

use auditsched::candidates::{dump_edges, enumerate_edges, CandidateSet};
use auditsched::cost::price_edges;
use auditsched::dense::{build_dense_model, dense_warm_start};
use auditsched::diff::diff_schedules;
use auditsched::docs::{
    self, load_instance, load_schedule, save_instance, save_schedule, schedule_from_body,
    schedule_to_document, Provenance,
};
use auditsched::domain::{validate_instance, Instance};
use auditsched::flow::{
    build_flow_model, extract_schedule, schedule_metrics, uncoverable_tasks, Schedule, VarMap,
};
use auditsched::gantt::render_gantt;
use auditsched::generator::{generate_instance, GeneratorParams};
use auditsched::milp::{check_feasible, model_stats, write_lp, MilpProblem};
use auditsched::scaled::Cost;
use auditsched::solver::{
    solve_with_backend, BackendConfig, SolveLimits, SolveStatus, Solution, SolverError,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

/// Environment variable naming the default solver backend.
const BACKEND_ENV: &str = "AUDITSCHED_BACKEND";

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_BACKEND: u8 = 4;

#[derive(Parser)]
#[command(
    name = "auditsched",
    version,
    about = "Audit staff scheduling: exact task assignment over availability windows"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct SolveOpts {
    /// Solver backend: "builtin" or a path to an executable speaking the
    /// LP-dump protocol. Defaults to $AUDITSCHED_BACKEND, then "builtin".
    #[arg(long)]
    backend: Option<String>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Branch-and-bound node limit.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Absolute optimality gap tolerance, in cost units.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
}

#[derive(Args, Default)]
struct WeightOverrides {
    /// Override the mock-hire cost.
    #[arg(long)]
    c_mock: Option<f64>,
    /// Override the warm-up cost per new (auditor, engagement) pair.
    #[arg(long)]
    c_warmup: Option<f64>,
    /// Override the hyperbolic discounting parameter k.
    #[arg(long)]
    k_discount: Option<f64>,
    /// Override the uncertainty weight.
    #[arg(long)]
    w_uncertainty: Option<f64>,
    /// Override the travel cost per km.
    #[arg(long)]
    w_travel: Option<f64>,
    /// Override the reward for keeping an auditor on their previous task.
    #[arg(long)]
    stability_reward: Option<f64>,
    /// Override the penalty for reassigning a previously held task.
    #[arg(long)]
    stability_penalty: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance document and report every violated invariant.
    Validate {
        instance: PathBuf,
    },
    /// Solve an instance to a schedule document.
    Solve {
        instance: PathBuf,
        /// Write the schedule document here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Dump the candidate edges to this file.
        #[arg(long)]
        edges_out: Option<PathBuf>,
        /// Dump the flow binary program in LP format to this file.
        #[arg(long)]
        lp_out: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveOpts,
        #[command(flatten)]
        weights: WeightOverrides,
    },
    /// Re-solve against a previous schedule: stability terms active, warm
    /// start installed, change report printed.
    Update {
        instance: PathBuf,
        /// Previous schedule document.
        #[arg(long)]
        previous: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveOpts,
        #[command(flatten)]
        weights: WeightOverrides,
    },
    /// Build and solve both formulations (flow and dense occupancy) and
    /// report sizes, times and objectives.
    Compare {
        instance: PathBuf,
        #[command(flatten)]
        solve: SolveOpts,
    },
    /// Generate a synthetic instance document.
    Generate {
        #[arg(short, long)]
        output: PathBuf,
        /// Random seed (generation is deterministic per seed).
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        auditors: usize,
        #[arg(long, default_value_t = 8)]
        engagements: usize,
        #[arg(long, default_value_t = 2)]
        phases: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 2)]
        indices: usize,
        #[arg(long, default_value_t = 90)]
        days: u16,
        #[arg(long, default_value_t = 0.8)]
        availability_density: f64,
        #[arg(long, default_value_t = 0.3)]
        window_density: f64,
        #[arg(long, default_value_t = 0.5)]
        scarcity: f64,
        #[arg(long, default_value_t = 2)]
        mocks: usize,
    },
    /// Render a schedule as a text Gantt chart.
    Gantt {
        instance: PathBuf,
        /// Schedule document to render.
        #[arg(long)]
        schedule: PathBuf,
    },
}

/// An error plus the process exit code it maps to.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
    fn infeasible(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_INFEASIBLE,
            message: message.into(),
        }
    }
    fn backend(message: impl Into<String>) -> CliError {
        CliError {
            code: EXIT_BACKEND,
            message: message.into(),
        }
    }
}

impl From<docs::DocError> for CliError {
    fn from(e: docs::DocError) -> CliError {
        CliError::input(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> CliError {
        match e {
            SolverError::BackendUnavailable(..)
            | SolverError::BackendFailed(..)
            | SolverError::BackendInvalid(..) => CliError::backend(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Validate { instance } => cmd_validate(&instance),
        Cmd::Solve {
            instance,
            output,
            edges_out,
            lp_out,
            solve,
            weights,
        } => cmd_solve(&instance, output, edges_out, lp_out, &solve, &weights),
        Cmd::Update {
            instance,
            previous,
            output,
            solve,
            weights,
        } => cmd_update(&instance, &previous, output, &solve, &weights),
        Cmd::Compare { instance, solve } => cmd_compare(&instance, &solve),
        Cmd::Generate {
            output,
            seed,
            auditors,
            engagements,
            phases,
            levels,
            indices,
            days,
            availability_density,
            window_density,
            scarcity,
            mocks,
        } => {
            let params = GeneratorParams {
                auditors,
                engagements,
                phases,
                levels,
                indices,
                days,
                availability_density,
                window_density,
                scarcity,
                mocks,
                seed,
            };
            let instance = generate_instance(&params).map_err(|e| CliError::input(e.to_string()))?;
            save_instance(&instance, &output)?;
            println!(
                "generated {} ({} auditors, {} tasks, {} days, seed {seed})",
                output.display(),
                instance.auditors.len(),
                instance.task_count(),
                instance.horizon_days
            );
            Ok(())
        }
        Cmd::Gantt { instance, schedule } => {
            let instance = load_instance(&instance)?;
            let doc = load_schedule(&schedule)?;
            print!("{}", render_gantt(&schedule_from_body(&doc.schedule), &instance));
            Ok(())
        }
    }
}

fn cmd_validate(path: &PathBuf) -> Result<(), CliError> {
    // Validation issues must be listed, not folded into the load error.
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    match docs::instance_from_json(&text) {
        Ok(instance) => {
            let report = validate_instance(&instance);
            for warning in &report.warnings {
                println!("warning: {}: {}", warning.entity, warning.reason);
            }
            println!(
                "ok: {} auditors, {} engagements, {} tasks, {} days",
                instance.auditors.len(),
                instance.engagements.len(),
                instance.task_count(),
                instance.horizon_days
            );
            Ok(())
        }
        Err(docs::DocError::Validation(report)) => {
            for issue in &report.errors {
                println!("error: {}: {}", issue.entity, issue.reason);
            }
            Err(CliError::input(format!(
                "{} validation error(s)",
                report.errors.len()
            )))
        }
        Err(other) => Err(other.into()),
    }
}

fn apply_overrides(instance: &mut Instance, weights: &WeightOverrides) {
    let w = &mut instance.weights;
    if let Some(v) = weights.c_mock {
        w.c_mock = Cost::from_f64(v);
    }
    if let Some(v) = weights.c_warmup {
        w.c_warmup = Cost::from_f64(v);
    }
    if let Some(v) = weights.k_discount {
        w.k_discount = v;
    }
    if let Some(v) = weights.w_uncertainty {
        w.w_uncertainty = Cost::from_f64(v);
    }
    if let Some(v) = weights.w_travel {
        w.w_travel = Cost::from_f64(v);
    }
    if let Some(v) = weights.stability_reward {
        w.stability_reward = Cost::from_f64(v);
    }
    if let Some(v) = weights.stability_penalty {
        w.stability_penalty = Cost::from_f64(v);
    }
}

fn backend_config(opts: &SolveOpts) -> BackendConfig {
    let name = opts
        .backend
        .clone()
        .or_else(|| std::env::var(BACKEND_ENV).ok())
        .unwrap_or_else(|| "builtin".to_string());
    BackendConfig::parse(&name)
}

fn solve_limits(opts: &SolveOpts) -> SolveLimits {
    SolveLimits {
        time_limit: opts.time_limit.map(Duration::from_secs_f64),
        node_limit: opts.node_limit,
        abs_gap: Cost::from_f64(opts.gap).as_scaled(),
    }
}

fn prepare(instance: &Instance) -> (CandidateSet, MilpProblem, VarMap) {
    let mut set = enumerate_edges(instance);
    price_edges(&mut set, instance);
    match build_flow_model(instance, &set) {
        Ok((problem, varmap)) => (set, problem, varmap),
        Err(e) => {
            // Unsatisfiable enforced pair: a modeling infeasibility.
            eprintln!("error: {e}");
            std::process::exit(EXIT_INFEASIBLE as i32);
        }
    }
}

fn require_coverable(set: &CandidateSet) -> Result<(), CliError> {
    let uncoverable = uncoverable_tasks(set);
    if uncoverable.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = uncoverable.iter().map(|t| t.to_string()).collect();
    Err(CliError::infeasible(format!(
        "infeasible: no candidate edges for task(s) {}",
        names.join(", ")
    )))
}

fn solved_or_exit(solution: &Solution) -> Result<(), CliError> {
    match solution.status {
        SolveStatus::Infeasible => Err(CliError::infeasible("model is infeasible".to_string())),
        SolveStatus::Limit if solution.assignment.is_none() => Err(CliError::infeasible(
            "no feasible solution found within the limits".to_string(),
        )),
        _ => Ok(()),
    }
}

fn print_metrics(schedule: &Schedule, instance: &Instance) {
    let metrics = schedule_metrics(schedule, instance);
    println!("metric                                value");
    println!("tasks assigned                        {}", metrics.tasks_assigned);
    println!("auditor availability violations       {}", metrics.auditor_availability_violations);
    println!("engagement availability violations    {}", metrics.engagement_availability_violations);
    println!("familiarity misses                    {}", metrics.familiarity_misses);
    println!("level substitutions                   {}", metrics.level_substitutions);
    println!("mocks to recruit                      {}", metrics.mocks_to_recruit);
    println!("distinct auditor-engagement pairs     {}", metrics.distinct_auditor_engagement_pairs);
}

fn provenance_for(solution: &Solution, opts: &SolveOpts, backend: &BackendConfig) -> Provenance {
    Provenance {
        generator_seed: None,
        backend: Some(match backend {
            BackendConfig::Builtin => "builtin".to_string(),
            BackendConfig::External { command } => command.display().to_string(),
        }),
        time_limit_secs: opts.time_limit,
        node_limit: opts.node_limit,
        status: Some(solution.status.to_string()),
        gap: solution.gap,
        nodes: Some(solution.stats.nodes),
        wall_secs: Some(solution.stats.wall.as_secs_f64()),
    }
}

fn cmd_solve(
    path: &PathBuf,
    output: Option<PathBuf>,
    edges_out: Option<PathBuf>,
    lp_out: Option<PathBuf>,
    opts: &SolveOpts,
    weights: &WeightOverrides,
) -> Result<(), CliError> {
    let mut instance = load_instance(path)?;
    apply_overrides(&mut instance, weights);
    let (set, problem, varmap) = prepare(&instance);
    if let Some(edges_path) = edges_out {
        let file = std::fs::File::create(&edges_path)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", edges_path.display())))?;
        dump_edges(&set, std::io::BufWriter::new(file))
            .map_err(|e| CliError::input(e.to_string()))?;
    }
    if let Some(lp_path) = lp_out {
        std::fs::write(&lp_path, write_lp(&problem))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", lp_path.display())))?;
    }
    require_coverable(&set)?;
    let backend = backend_config(opts);
    let solution = solve_with_backend(&problem, &backend, &solve_limits(opts), None)?;
    solved_or_exit(&solution)?;
    let schedule = extract_schedule(&solution, &varmap, &instance, &set)
        .map_err(|e| CliError::input(format!("solution extraction failed: {e}")))?;
    report_and_save(&schedule, &instance, &solution, opts, &backend, output)
}

fn report_and_save(
    schedule: &Schedule,
    instance: &Instance,
    solution: &Solution,
    opts: &SolveOpts,
    backend: &BackendConfig,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    println!(
        "status {}  objective {}  gap {}",
        solution.status,
        schedule.objective.total(),
        solution
            .gap
            .map(|g| Cost::from_scaled(g).to_string())
            .unwrap_or_else(|| "unknown".to_string()),
    );
    print_metrics(schedule, instance);
    if let Some(out) = output {
        let metrics = schedule_metrics(schedule, instance);
        let doc = schedule_to_document(schedule, &metrics, provenance_for(solution, opts, backend));
        save_schedule(&doc, &out)?;
        println!("schedule written to {}", out.display());
    }
    Ok(())
}

/// Warm start from a previous schedule: select the matching edge for every
/// assignment plus the slack variables it implies. `None` when the previous
/// schedule no longer maps onto the current model.
fn warm_start_from(
    previous: &Schedule,
    set: &CandidateSet,
    problem: &MilpProblem,
    varmap: &VarMap,
) -> Option<Vec<u8>> {
    let mut assignment = vec![0u8; problem.num_vars as usize];
    for prev in &previous.assignments {
        let edge = set.edges.iter().find(|e| {
            set.auditor_id(e) == &prev.auditor
                && set.task_key(e) == &prev.task
                && e.start_day == prev.start_day
        })?;
        assignment[varmap.x[edge.edge_id as usize] as usize] = 1;
        let pair = (prev.auditor.clone(), prev.task.engagement.clone());
        if let Some(z) = varmap.z.get(&pair) {
            assignment[*z as usize] = 1;
        }
        if let Some(y) = varmap.y.get(&prev.auditor) {
            assignment[*y as usize] = 1;
        }
    }
    match auditsched::milp::check_feasible(problem, &assignment) {
        Ok(violated) if violated.is_empty() => Some(assignment),
        _ => None,
    }
}

fn cmd_update(
    path: &PathBuf,
    previous_path: &PathBuf,
    output: Option<PathBuf>,
    opts: &SolveOpts,
    weights: &WeightOverrides,
) -> Result<(), CliError> {
    let mut instance = load_instance(path)?;
    apply_overrides(&mut instance, weights);
    let previous = schedule_from_body(&load_schedule(previous_path)?.schedule);
    instance.previous_schedule = Some(previous.clone());
    let (set, problem, varmap) = prepare(&instance);
    require_coverable(&set)?;
    let warm = warm_start_from(&previous, &set, &problem, &varmap);
    let backend = backend_config(opts);
    let solution = solve_with_backend(&problem, &backend, &solve_limits(opts), warm.as_deref())?;
    solved_or_exit(&solution)?;
    let schedule = extract_schedule(&solution, &varmap, &instance, &set)
        .map_err(|e| CliError::input(format!("solution extraction failed: {e}")))?;
    let report = diff_schedules(&previous, &schedule);
    println!(
        "changes: {} unchanged, {} auditor change(s), {} start shift(s), {} added, {} removed",
        report.unchanged, report.auditor_changes, report.start_shifts, report.added, report.removed
    );
    for (task, change) in &report.changes {
        if *change != auditsched::diff::TaskChange::Unchanged {
            println!("  {task}: {change:?}");
        }
    }
    report_and_save(&schedule, &instance, &solution, opts, &backend, output)
}

fn cmd_compare(path: &PathBuf, opts: &SolveOpts) -> Result<(), CliError> {
    let mut instance = load_instance(path)?;
    instance.previous_schedule = None;
    let mut set = enumerate_edges(&instance);
    price_edges(&mut set, &instance);
    require_coverable(&set)?;
    let (flow_problem, flow_map) =
        build_flow_model(&instance, &set).map_err(|e| CliError::infeasible(e.to_string()))?;
    let (dense_problem, dense_map) =
        build_dense_model(&instance, &set).map_err(|e| CliError::infeasible(e.to_string()))?;
    let backend = backend_config(opts);
    let limits = solve_limits(opts);

    println!("formulation   vars     rows     nonzeros first_incumbent_s total_s  objective status");
    let mut objectives = Vec::new();
    let mut flow_schedule = None;
    for (name, problem) in [("flow", &flow_problem), ("dense", &dense_problem)] {
        // The dense solve is seeded with the flow optimum: the comparison
        // measures proof effort on a shared incumbent, not luck in finding
        // one.
        let warm = match (name, &flow_schedule) {
            ("dense", Some(schedule)) => {
                dense_warm_start(schedule, &dense_map, dense_problem.num_vars)
                    .filter(|w| matches!(check_feasible(problem, w), Ok(v) if v.is_empty()))
            }
            _ => None,
        };
        let (vars, rows, nonzeros) = model_stats(problem);
        let solution = solve_with_backend(problem, &backend, &limits, warm.as_deref())?;
        if name == "flow" {
            if let Ok(schedule) = extract_schedule(&solution, &flow_map, &instance, &set) {
                flow_schedule = Some(schedule);
            }
        }
        let first = solution
            .stats
            .first_incumbent
            .map(|d| format!("{:.3}", d.as_secs_f64()))
            .unwrap_or_else(|| "-".to_string());
        let objective = solution
            .objective
            .map(|o| Cost::from_scaled(o).to_string())
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{name:<13} {vars:<8} {rows:<8} {nonzeros:<8} {first:<17} {:<8.3} {objective:<9} {}",
            solution.stats.wall.as_secs_f64(),
            solution.status
        );
        objectives.push(solution.objective);
        solved_or_exit(&solution)?;
    }
    println!("(timings are machine-dependent)");
    if objectives.len() == 2 && objectives[0] == objectives[1] {
        println!("objectives agree");
    } else {
        println!("warning: objectives differ: {objectives:?}");
    }
    Ok(())
}
