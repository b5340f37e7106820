//! Candidate-edge enumeration: exactly the legal (auditor, sink) pairings,
//! each with its concrete day-by-day occupancy. Pruning illegal edges up
//! front is what keeps the flow model small.

use crate::domain::*;
use crate::scaled::{Cost, Hours};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;

/// A (task, start day) pair; the right-hand node of the flow graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sink {
    pub task_key: TaskKey,
    pub start_day: DayIndex,
}

/// The exact days and hours one edge consumes. Days are strictly increasing
/// and the hours sum to the task hours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    pub worked: Vec<(DayIndex, Hours)>,
}

impl Occupancy {
    pub fn days(&self) -> impl Iterator<Item = DayIndex> + '_ {
        self.worked.iter().map(|(d, _)| *d)
    }

    pub fn first_day(&self) -> DayIndex {
        self.worked[0].0
    }

    pub fn last_day(&self) -> DayIndex {
        self.worked[self.worked.len() - 1].0
    }

    pub fn total_hours(&self) -> Hours {
        self.worked.iter().map(|(_, h)| *h).sum()
    }
}

/// One legal (auditor, sink) pairing; carries the decision variable of the
/// flow model. Auditor and task are indices into the owning [`CandidateSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEdge {
    pub edge_id: u32,
    pub auditor: u32,
    pub task: u32,
    pub start_day: DayIndex,
    pub occupancy: Occupancy,
    /// Total edge cost; zero until priced by the cost model.
    pub cost: Cost,
}

/// All candidate edges of an instance plus exact inverted indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    /// Auditor ids in the canonical (sorted) order the edges reference.
    pub auditor_ids: Vec<AuditorId>,
    /// Task keys in canonical order.
    pub task_keys: Vec<TaskKey>,
    pub edges: Vec<CandidateEdge>,
    /// task index -> edge ids, in edge order.
    pub by_task: Vec<Vec<u32>>,
    /// (auditor index, day) -> edge ids occupying that day.
    pub by_auditor_day: HashMap<(u32, u16), Vec<u32>>,
}

impl CandidateSet {
    pub fn auditor_id(&self, edge: &CandidateEdge) -> &AuditorId {
        &self.auditor_ids[edge.auditor as usize]
    }

    pub fn task_key(&self, edge: &CandidateEdge) -> &TaskKey {
        &self.task_keys[edge.task as usize]
    }

    pub fn sink(&self, edge: &CandidateEdge) -> Sink {
        Sink {
            task_key: self.task_key(edge).clone(),
            start_day: edge.start_day,
        }
    }

    pub fn auditor_index(&self, id: &AuditorId) -> Option<u32> {
        self.auditor_ids
            .binary_search(id)
            .ok()
            .map(|i| i as u32)
    }

    pub fn task_index(&self, key: &TaskKey) -> Option<u32> {
        self.task_keys.binary_search(key).ok().map(|i| i as u32)
    }

    pub fn edges_of_task(&self, key: &TaskKey) -> &[u32] {
        match self.task_index(key) {
            Some(t) => &self.by_task[t as usize],
            None => &[],
        }
    }
}

/// Greedy occupancy construction: starting at `start_day`, the auditor spends
/// every usable hour on the task until it is done. Returns `None` when the
/// task cannot be completed from that start.
pub fn occupancy_for(
    auditor: &Auditor,
    task_hours: Hours,
    window: &EngagementWindow,
    start_day: DayIndex,
    horizon_days: u16,
    max_pause_days: Option<u16>,
) -> Option<Occupancy> {
    if !window.contains(start_day) {
        return None;
    }
    let start_hours = auditor.calendar.hours(start_day)?;
    if start_hours.is_zero() {
        return None;
    }
    let last_window_day = window.last_day()?;
    let mut worked = Vec::new();
    let mut remaining = task_hours;
    let mut pause = 0u16;
    let mut day = start_day.0;
    while remaining > Hours::ZERO {
        if day >= horizon_days || day > last_window_day.0 {
            return None;
        }
        let avail = auditor.calendar.hours(DayIndex(day)).unwrap_or(Hours::ZERO);
        let usable = window.contains(DayIndex(day)) && !avail.is_zero();
        if usable {
            let spent = avail.min(remaining);
            worked.push((DayIndex(day), spent));
            remaining -= spent;
            pause = 0;
        } else if !worked.is_empty() {
            pause += 1;
            if let Some(max_pause) = max_pause_days {
                if pause > max_pause {
                    return None;
                }
            }
        }
        day += 1;
    }
    Some(Occupancy { worked })
}

struct TaskContext<'a> {
    key: TaskKey,
    spec: &'a TaskSpec,
    engagement: &'a Engagement,
    window: &'a EngagementWindow,
}

fn euclidean_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Raw edges of one task in (start_day, auditor) order.
fn edges_for_task(
    instance: &Instance,
    task: &TaskContext<'_>,
    auditors: &[&Auditor],
) -> Vec<(u32, DayIndex, Occupancy)> {
    let mut eligible: Vec<(u32, &Auditor)> = Vec::new();
    for (idx, auditor) in auditors.iter().enumerate() {
        if instance
            .preferences
            .forbidden
            .contains(&(auditor.id.clone(), task.key.clone()))
        {
            continue;
        }
        if let Some(max_km) = auditor.max_travel_km {
            if euclidean_km(auditor.office_location, task.engagement.client_location) > max_km {
                continue;
            }
        }
        let auditor_rank = instance.level_rank(&auditor.level);
        let task_rank = instance.level_rank(&task.spec.required_level);
        match (auditor_rank, task_rank) {
            (Some(ar), Some(tr)) => {
                if instance.weights.substitution(ar - tr).is_none() {
                    continue;
                }
            }
            _ => continue,
        }
        eligible.push((idx as u32, auditor));
    }

    let mut edges = Vec::new();
    for start in &task.window.available_days {
        for (idx, auditor) in &eligible {
            if let Some(occ) = occupancy_for(
                auditor,
                task.spec.hours,
                task.window,
                *start,
                instance.horizon_days,
                instance.max_pause_days,
            ) {
                edges.push((*idx, *start, occ));
            }
        }
    }
    edges
}

fn assemble(
    instance: &Instance,
    auditor_ids: Vec<AuditorId>,
    task_keys: Vec<TaskKey>,
    per_task: Vec<Vec<(u32, DayIndex, Occupancy)>>,
) -> CandidateSet {
    let total: usize = per_task.iter().map(Vec::len).sum();
    let mut edges = Vec::with_capacity(total);
    let mut by_task = vec![Vec::new(); task_keys.len()];
    let mut by_auditor_day: HashMap<(u32, u16), Vec<u32>> = HashMap::new();
    for (task_idx, raw) in per_task.into_iter().enumerate() {
        for (auditor, start_day, occupancy) in raw {
            let edge_id = edges.len() as u32;
            by_task[task_idx].push(edge_id);
            for (day, _) in &occupancy.worked {
                by_auditor_day
                    .entry((auditor, day.0))
                    .or_default()
                    .push(edge_id);
            }
            edges.push(CandidateEdge {
                edge_id,
                auditor,
                task: task_idx as u32,
                start_day,
                occupancy,
                cost: Cost::ZERO,
            });
        }
    }
    let _ = instance;
    CandidateSet {
        auditor_ids,
        task_keys,
        edges,
        by_task,
        by_auditor_day,
    }
}

fn task_contexts(instance: &Instance) -> Vec<TaskContext<'_>> {
    let mut tasks: Vec<TaskContext<'_>> = instance
        .tasks()
        .filter_map(|(engagement, spec)| {
            engagement.phase_windows.get(&spec.phase_id).map(|window| TaskContext {
                key: spec.key(&engagement.id),
                spec,
                engagement,
                window,
            })
        })
        .collect();
    tasks.sort_by(|a, b| a.key.cmp(&b.key));
    tasks
}

fn sorted_auditors(instance: &Instance) -> Vec<&Auditor> {
    let mut auditors: Vec<&Auditor> = instance.auditors.iter().collect();
    auditors.sort_by(|a, b| a.id.cmp(&b.id));
    auditors
}

/// Enumerate every legal candidate edge, in canonical
/// (task key, start day, auditor id) order.
pub fn enumerate_edges(instance: &Instance) -> CandidateSet {
    #[cfg(feature = "parallel")]
    {
        let tasks = task_contexts(instance);
        let auditors = sorted_auditors(instance);
        let per_task: Vec<_> = tasks
            .par_iter()
            .map(|t| edges_for_task(instance, t, &auditors))
            .collect();
        assemble(
            instance,
            auditors.iter().map(|a| a.id.clone()).collect(),
            tasks.into_iter().map(|t| t.key).collect(),
            per_task,
        )
    }
    #[cfg(not(feature = "parallel"))]
    {
        enumerate_edges_sequential(instance)
    }
}

/// Single-threaded enumeration; same output as [`enumerate_edges`].
pub fn enumerate_edges_sequential(instance: &Instance) -> CandidateSet {
    let tasks = task_contexts(instance);
    let auditors = sorted_auditors(instance);
    let per_task: Vec<_> = tasks
        .iter()
        .map(|t| edges_for_task(instance, t, &auditors))
        .collect();
    assemble(
        instance,
        auditors.iter().map(|a| a.id.clone()).collect(),
        tasks.into_iter().map(|t| t.key).collect(),
        per_task,
    )
}

/// Edge ids of the given auditor whose occupancy covers the given day.
pub fn overlapping_edges(set: &CandidateSet, auditor: &AuditorId, day: DayIndex) -> Vec<u32> {
    match set.auditor_index(auditor) {
        Some(idx) => set
            .by_auditor_day
            .get(&(idx, day.0))
            .cloned()
            .unwrap_or_default(),
        None => Vec::new(),
    }
}

/// Tabular debug dump: one edge per line.
pub fn dump_edges(set: &CandidateSet, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "# edge auditor task start days hours")?;
    for edge in &set.edges {
        let days: Vec<String> = edge
            .occupancy
            .worked
            .iter()
            .map(|(d, h)| format!("{}:{}", d, h))
            .collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            edge.edge_id,
            set.auditor_id(edge),
            set.task_key(edge),
            edge.start_day,
            days.join(","),
            edge.occupancy.total_hours(),
        )?;
    }
    Ok(())
}
