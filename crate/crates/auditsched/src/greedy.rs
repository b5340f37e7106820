//! Greedy baseline: assign tasks one at a time, cheapest candidate edge
//! first, never backtracking. Fast, and deliberately incomplete — it can
//! paint itself into a corner the exact solver avoids.

use crate::candidates::CandidateSet;
use crate::domain::{AuditorId, EngagementId, Instance, TaskKey};
use crate::flow::{
    relabel_interchangeable_indices, Assignment, Schedule, ScheduleObjective,
};
use crate::scaled::Cost;
use std::collections::{BTreeSet, HashSet};

/// Why the greedy pass got stuck.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureReport {
    /// Task that had no usable edge left.
    pub task: TaskKey,
    /// Tasks already committed when the dead end was hit.
    pub assigned_before_failure: usize,
    /// Candidate edges of the stuck task, all blocked by earlier picks.
    pub blocked_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GreedyOutcome {
    Complete(Schedule),
    Stuck(FailureReport),
}

/// Task order: fewest candidate edges first (most constrained), ties by
/// earlier window end, then key. Within a task, cheapest edge wins; ties by
/// earlier start, then auditor id.
pub fn greedy_baseline(instance: &Instance, candidates: &CandidateSet) -> GreedyOutcome {
    let window_end = |key: &TaskKey| -> u16 {
        instance
            .engagement(&key.engagement)
            .and_then(|e| e.phase_windows.get(&key.phase))
            .and_then(|w| w.last_day())
            .map(|d| d.0)
            .unwrap_or(0)
    };

    let mut task_order: Vec<u32> = (0..candidates.task_keys.len() as u32).collect();
    task_order.sort_by_key(|t| {
        let key = &candidates.task_keys[*t as usize];
        (candidates.by_task[*t as usize].len(), window_end(key), key.clone())
    });

    let enforced_for = |task: &TaskKey| -> Option<&AuditorId> {
        instance
            .preferences
            .enforced
            .iter()
            .find(|(_, t)| t == task)
            .map(|(a, _)| a)
    };

    let mut busy: HashSet<(u32, u16)> = HashSet::new();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut hired_mocks: BTreeSet<AuditorId> = BTreeSet::new();
    let mut warmup_pairs: BTreeSet<(AuditorId, EngagementId)> = BTreeSet::new();
    let mut edge_cost = Cost::ZERO;

    for task_idx in task_order {
        let key = &candidates.task_keys[task_idx as usize];
        let enforced = enforced_for(key);
        let mut best: Option<&crate::candidates::CandidateEdge> = None;
        for edge_id in &candidates.by_task[task_idx as usize] {
            let edge = &candidates.edges[*edge_id as usize];
            if let Some(required) = enforced {
                if candidates.auditor_id(edge) != required {
                    continue;
                }
            }
            if edge
                .occupancy
                .worked
                .iter()
                .any(|(day, _)| busy.contains(&(edge.auditor, day.0)))
            {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let eb = (b.cost, b.start_day, candidates.auditor_id(b));
                    (edge.cost, edge.start_day, candidates.auditor_id(edge)) < eb
                }
            };
            if better {
                best = Some(edge);
            }
        }
        let Some(edge) = best else {
            return GreedyOutcome::Stuck(FailureReport {
                task: key.clone(),
                assigned_before_failure: assignments.len(),
                blocked_edges: candidates.by_task[task_idx as usize].len(),
            });
        };
        for (day, _) in &edge.occupancy.worked {
            busy.insert((edge.auditor, day.0));
        }
        let auditor_id = candidates.auditor_id(edge).clone();
        if instance
            .auditor(&auditor_id)
            .map(|a| a.is_mock)
            .unwrap_or(false)
        {
            hired_mocks.insert(auditor_id.clone());
        }
        warmup_pairs.insert((auditor_id.clone(), key.engagement.clone()));
        edge_cost += edge.cost;
        assignments.push(Assignment {
            auditor: auditor_id,
            task: key.clone(),
            start_day: edge.start_day,
            occupancy: edge.occupancy.clone(),
        });
    }

    let objective = ScheduleObjective {
        edge_cost,
        mock_cost: instance.weights.c_mock * hired_mocks.len() as i64,
        warmup_cost: instance.weights.c_warmup * warmup_pairs.len() as i64,
    };
    relabel_interchangeable_indices(&mut assignments);
    assignments.sort_by(|a, b| a.task.cmp(&b.task));
    GreedyOutcome::Complete(Schedule {
        assignments,
        hired_mocks,
        warmup_pairs,
        objective,
    })
}
