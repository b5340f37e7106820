//! The rival three-dimensional (auditor × task × day) occupancy formulation.
//! Built only for head-to-head comparison with the flow model; both encode
//! the same feasible schedules and agree on the optimal objective.

use crate::candidates::CandidateSet;
use crate::cost::{uncertainty_cost, PricingContext};
use crate::domain::*;
use crate::flow::BuildError;
use crate::milp::{MilpProblem, Relation};
use crate::scaled::Hours;
use std::collections::BTreeMap;

/// Variable handles of the built dense model.
#[derive(Debug, Clone, Default)]
pub struct DenseVarMap {
    /// (auditor, task) -> assignment variable. Only pairs with at least one
    /// candidate edge.
    pub u: BTreeMap<(AuditorId, TaskKey), u32>,
    /// (auditor, task, day) -> occupancy variable. Only usable days of pairs
    /// that have a u variable.
    pub w: BTreeMap<(AuditorId, TaskKey, DayIndex), u32>,
    /// (auditor, task, day) -> start indicator, same day set as w.
    pub s: BTreeMap<(AuditorId, TaskKey, DayIndex), u32>,
    /// mock auditor -> hire variable.
    pub y: BTreeMap<AuditorId, u32>,
    /// (auditor, engagement) -> warm-up variable.
    pub z: BTreeMap<(AuditorId, EngagementId), u32>,
}

/// Days an auditor can put nonzero hours into a task: inside the phase
/// window, inside the horizon, calendar hours > 0. Sorted.
fn usable_days(auditor: &Auditor, window: &EngagementWindow, horizon_days: u16) -> Vec<DayIndex> {
    window
        .available_days
        .iter()
        .filter(|d| d.0 < horizon_days)
        .filter(|d| {
            auditor
                .calendar
                .hours(**d)
                .map(|h| !h.is_zero())
                .unwrap_or(false)
        })
        .copied()
        .collect()
}

/// Build the dense occupancy binary program over the same candidate pairs
/// as the flow model.
///
/// Occupied days of an assigned pair are forced to be exactly the greedy
/// fill from the chosen start: start rows pin one run, continuity rows
/// forbid voluntary gaps, the capacity row demands the task's hours and the
/// prefix rows cut any day past the greedy finish. Start-day-dependent cost
/// (uncertainty) sits on s, everything else on u, so the objective matches
/// the flow model term for term.
pub fn build_dense_model(
    instance: &Instance,
    candidates: &CandidateSet,
) -> Result<(MilpProblem, DenseVarMap), BuildError> {
    let ctx = PricingContext::new(instance);
    let mut problem = MilpProblem::new();
    let mut varmap = DenseVarMap::default();

    // Pairs admitted by candidate enumeration, in (auditor, task) order.
    let mut pairs: BTreeMap<(AuditorId, TaskKey), Vec<DayIndex>> = BTreeMap::new();
    for edge in &candidates.edges {
        pairs
            .entry((
                candidates.auditor_id(edge).clone(),
                candidates.task_key(edge).clone(),
            ))
            .or_default();
    }
    for ((auditor_id, task_key), days) in &mut pairs {
        let auditor = instance.auditor(auditor_id).expect("known auditor");
        let window = instance
            .engagement(&task_key.engagement)
            .and_then(|e| e.phase_windows.get(&task_key.phase))
            .expect("edges reference known phase windows");
        *days = usable_days(auditor, window, instance.horizon_days);
    }

    for ((auditor_id, task_key), days) in &pairs {
        let auditor = instance.auditor(auditor_id).expect("known auditor");
        let pair_cost = ctx.pair_cost(auditor, task_key).total();
        let u = problem.add_var(format!("u_{auditor_id}_{task_key}"), pair_cost.as_scaled());
        varmap.u.insert((auditor_id.clone(), task_key.clone()), u);
        for day in days {
            let w = problem.add_var(format!("w_{auditor_id}_{task_key}_d{day}"), 0);
            varmap
                .w
                .insert((auditor_id.clone(), task_key.clone(), *day), w);
        }
        for day in days {
            let s = problem.add_var(
                format!("s_{auditor_id}_{task_key}_d{day}"),
                uncertainty_cost(*day, &instance.weights).as_scaled(),
            );
            varmap
                .s
                .insert((auditor_id.clone(), task_key.clone(), *day), s);
        }
    }

    // Slack variables, mirroring the flow model.
    let mut mock_pairs: BTreeMap<AuditorId, Vec<u32>> = BTreeMap::new();
    let mut engagement_pairs: BTreeMap<(AuditorId, EngagementId), Vec<u32>> = BTreeMap::new();
    for ((auditor_id, task_key), _) in &pairs {
        let u = varmap.u[&(auditor_id.clone(), task_key.clone())];
        if instance.auditor(auditor_id).expect("known auditor").is_mock {
            mock_pairs.entry(auditor_id.clone()).or_default().push(u);
        }
        engagement_pairs
            .entry((auditor_id.clone(), task_key.engagement.clone()))
            .or_default()
            .push(u);
    }
    for auditor in mock_pairs.keys() {
        let y = problem.add_var(format!("y_{auditor}"), instance.weights.c_mock.as_scaled());
        varmap.y.insert(auditor.clone(), y);
    }
    for (auditor, engagement) in engagement_pairs.keys() {
        let z = problem.add_var(
            format!("z_{auditor}_{engagement}"),
            instance.weights.c_warmup.as_scaled(),
        );
        varmap.z.insert((auditor.clone(), engagement.clone()), z);
    }

    // Coverage: one auditor per task.
    for task_key in &candidates.task_keys {
        let coeffs = pairs
            .keys()
            .filter(|(_, t)| t == task_key)
            .map(|k| (varmap.u[k], 1))
            .collect();
        problem.add_row(format!("cover_{task_key}"), coeffs, Relation::Eq, 1);
    }

    for ((auditor_id, task_key), days) in &pairs {
        let auditor = instance.auditor(auditor_id).expect("known auditor");
        let u = varmap.u[&(auditor_id.clone(), task_key.clone())];
        let task_hours = instance
            .engagement(&task_key.engagement)
            .and_then(|e| {
                e.tasks
                    .iter()
                    .find(|t| &t.key(&e.id) == task_key)
                    .map(|t| t.hours)
            })
            .expect("edges reference known tasks");
        let wv: Vec<u32> = days
            .iter()
            .map(|d| varmap.w[&(auditor_id.clone(), task_key.clone(), *d)])
            .collect();
        let sv: Vec<u32> = days
            .iter()
            .map(|d| varmap.s[&(auditor_id.clone(), task_key.clone(), *d)])
            .collect();
        let hours: Vec<i64> = days
            .iter()
            .map(|d| auditor.calendar.hours(*d).unwrap_or(Hours::ZERO).as_centi())
            .collect();
        let tag = format!("{auditor_id}_{task_key}");

        // Occupancy only on assigned pairs.
        for (i, day) in days.iter().enumerate() {
            problem.add_row(
                format!("link_{tag}_d{day}"),
                vec![(wv[i], 1), (u, -1)],
                Relation::Le,
                0,
            );
        }
        // Exactly one start per assigned pair, none otherwise.
        problem.add_row(
            format!("startcount_{tag}"),
            sv.iter().map(|s| (*s, 1)).chain([(u, -1)]).collect(),
            Relation::Eq,
            0,
        );
        // A start is a worked day...
        for (i, day) in days.iter().enumerate() {
            problem.add_row(
                format!("startwork_{tag}_d{day}"),
                vec![(sv[i], 1), (wv[i], -1)],
                Relation::Le,
                0,
            );
        }
        // ...and the first one: a worked day not preceded by a worked day
        // must carry the start.
        for (i, day) in days.iter().enumerate() {
            let mut coeffs = vec![(wv[i], 1), (sv[i], -1)];
            if i > 0 {
                coeffs.push((wv[i - 1], -1));
            }
            problem.add_row(format!("startfirst_{tag}_d{day}"), coeffs, Relation::Le, 0);
        }
        // No voluntary gaps between usable days.
        for i in 0..days.len().saturating_sub(2) {
            problem.add_row(
                format!("cont_{tag}_d{}", days[i + 1]),
                vec![(wv[i], 1), (wv[i + 2], 1), (wv[i + 1], -1)],
                Relation::Le,
                1,
            );
        }
        // Forced pauses longer than the cap break the run.
        if let Some(max_pause) = instance.max_pause_days {
            for i in 0..days.len().saturating_sub(1) {
                if days[i + 1].0 - days[i].0 - 1 > max_pause {
                    problem.add_row(
                        format!("pause_{tag}_d{}", days[i]),
                        vec![(wv[i], 1), (wv[i + 1], 1)],
                        Relation::Le,
                        1,
                    );
                }
            }
        }
        // Enough hours to finish the task.
        problem.add_row(
            format!("capacity_{tag}"),
            wv.iter()
                .zip(&hours)
                .map(|(w, h)| (*w, *h))
                .chain([(u, -task_hours.as_centi())])
                .collect(),
            Relation::Ge,
            0,
        );
        // No day past the greedy finish: a worked day implies the pair's
        // earlier days contributed strictly less than the task's hours.
        let mut prefix: i64 = 0;
        for (i, day) in days.iter().enumerate() {
            if i > 0 && prefix > task_hours.as_centi() - 1 {
                let coeffs = wv[..i]
                    .iter()
                    .zip(&hours)
                    .map(|(w, h)| (*w, *h))
                    .chain([(wv[i], prefix)])
                    .collect();
                problem.add_row(
                    format!("minimal_{tag}_d{day}"),
                    coeffs,
                    Relation::Le,
                    task_hours.as_centi() - 1 + prefix,
                );
            }
            prefix += hours[i];
        }
    }

    // Per-auditor-per-day exclusivity wherever two occupancy variables meet.
    let mut by_auditor_day: BTreeMap<(AuditorId, DayIndex), Vec<u32>> = BTreeMap::new();
    for ((auditor_id, _, day), w) in &varmap.w {
        by_auditor_day
            .entry((auditor_id.clone(), *day))
            .or_default()
            .push(*w);
    }
    for ((auditor_id, day), ws) in &by_auditor_day {
        if ws.len() < 2 {
            continue;
        }
        problem.add_row(
            format!("mt_{auditor_id}_d{day}"),
            ws.iter().map(|w| (*w, 1)).collect(),
            Relation::Le,
            1,
        );
    }

    // Enforced pairs.
    for (auditor, task) in &instance.preferences.enforced {
        let Some(u) = varmap.u.get(&(auditor.clone(), task.clone())) else {
            return Err(BuildError::EnforcedPairUnsatisfiable {
                auditor: auditor.clone(),
                task: task.clone(),
            });
        };
        problem.add_row(
            format!("enf_{auditor}_{task}"),
            vec![(*u, 1)],
            Relation::Eq,
            1,
        );
    }

    // Mock and warm-up linking on u.
    for (auditor, us) in &mock_pairs {
        let y = varmap.y[auditor];
        for u in us {
            problem.add_row(
                format!("mock_{auditor}_u{u}"),
                vec![(*u, 1), (y, -1)],
                Relation::Le,
                0,
            );
        }
    }
    for (pair, us) in &engagement_pairs {
        let z = varmap.z[pair];
        for u in us {
            problem.add_row(
                format!("warm_{}_{}_u{u}", pair.0, pair.1),
                vec![(*u, 1), (z, -1)],
                Relation::Le,
                0,
            );
        }
    }

    Ok((problem, varmap))
}

/// Translate a schedule (typically an optimum of the flow model) into a
/// dense assignment vector usable as a warm start. `None` when some piece
/// of the schedule has no dense variable.
pub fn dense_warm_start(
    schedule: &crate::flow::Schedule,
    varmap: &DenseVarMap,
    num_vars: u32,
) -> Option<Vec<u8>> {
    let mut assignment = vec![0u8; num_vars as usize];
    for a in &schedule.assignments {
        let u = varmap.u.get(&(a.auditor.clone(), a.task.clone()))?;
        assignment[*u as usize] = 1;
        let s = varmap
            .s
            .get(&(a.auditor.clone(), a.task.clone(), a.start_day))?;
        assignment[*s as usize] = 1;
        for (day, _) in &a.occupancy.worked {
            let w = varmap.w.get(&(a.auditor.clone(), a.task.clone(), *day))?;
            assignment[*w as usize] = 1;
        }
    }
    for mock in &schedule.hired_mocks {
        assignment[*varmap.y.get(mock)? as usize] = 1;
    }
    for pair in &schedule.warmup_pairs {
        assignment[*varmap.z.get(pair)? as usize] = 1;
    }
    Some(assignment)
}
