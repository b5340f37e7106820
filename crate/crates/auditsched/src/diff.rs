//! Task-level comparison of two schedules, for judging how disruptive an
//! update was.

use crate::domain::{AuditorId, DayIndex, TaskKey};
use crate::flow::Schedule;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TaskChange {
    Unchanged,
    AuditorChanged {
        from: AuditorId,
        to: AuditorId,
    },
    /// Same auditor, different start day.
    StartShifted {
        from: DayIndex,
        to: DayIndex,
    },
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChangeReport {
    /// One entry per task of either schedule, in task order.
    pub changes: Vec<(TaskKey, TaskChange)>,
    pub unchanged: usize,
    pub auditor_changes: usize,
    pub start_shifts: usize,
    pub added: usize,
    pub removed: usize,
}

impl ChangeReport {
    pub fn total_changes(&self) -> usize {
        self.auditor_changes + self.start_shifts + self.added + self.removed
    }
}

pub fn diff_schedules(old: &Schedule, new: &Schedule) -> ChangeReport {
    let old_by_task: BTreeMap<&TaskKey, _> =
        old.assignments.iter().map(|a| (&a.task, a)).collect();
    let new_by_task: BTreeMap<&TaskKey, _> =
        new.assignments.iter().map(|a| (&a.task, a)).collect();

    let mut tasks: Vec<&TaskKey> = old_by_task.keys().copied().collect();
    tasks.extend(new_by_task.keys().copied().filter(|t| !old_by_task.contains_key(*t)));
    tasks.sort();

    let mut report = ChangeReport {
        changes: Vec::new(),
        unchanged: 0,
        auditor_changes: 0,
        start_shifts: 0,
        added: 0,
        removed: 0,
    };
    for task in tasks {
        let change = match (old_by_task.get(task), new_by_task.get(task)) {
            (Some(o), Some(n)) if o.auditor != n.auditor => {
                report.auditor_changes += 1;
                TaskChange::AuditorChanged {
                    from: o.auditor.clone(),
                    to: n.auditor.clone(),
                }
            }
            (Some(o), Some(n)) if o.start_day != n.start_day => {
                report.start_shifts += 1;
                TaskChange::StartShifted {
                    from: o.start_day,
                    to: n.start_day,
                }
            }
            (Some(_), Some(_)) => {
                report.unchanged += 1;
                TaskChange::Unchanged
            }
            (Some(_), None) => {
                report.removed += 1;
                TaskChange::Removed
            }
            (None, Some(_)) => {
                report.added += 1;
                TaskChange::Added
            }
            (None, None) => unreachable!("task came from one of the schedules"),
        };
        report.changes.push(((*task).clone(), change));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::Occupancy;
    use crate::domain::*;
    use crate::flow::{Assignment, ScheduleObjective};
    use crate::scaled::Hours;
    use std::collections::BTreeSet;

    fn assignment(auditor: &str, task_index: u32, start: u16) -> Assignment {
        Assignment {
            auditor: AuditorId::new(auditor),
            task: TaskKey {
                engagement: EngagementId::new("E0"),
                phase: PhaseId::new("p"),
                level: LevelId::new("L0"),
                index: task_index,
            },
            start_day: DayIndex(start),
            occupancy: Occupancy {
                worked: vec![(DayIndex(start), Hours::from_f64(8.0))],
            },
        }
    }

    fn schedule(assignments: Vec<Assignment>) -> Schedule {
        Schedule {
            assignments,
            hired_mocks: BTreeSet::new(),
            warmup_pairs: BTreeSet::new(),
            objective: ScheduleObjective::default(),
        }
    }

    #[test]
    fn identical_schedules_report_no_changes() {
        let s = schedule(vec![assignment("A0", 0, 1), assignment("A1", 1, 3)]);
        let report = diff_schedules(&s, &s.clone());
        assert_eq!(report.total_changes(), 0);
        assert_eq!(report.unchanged, 2);
        assert!(report
            .changes
            .iter()
            .all(|(_, c)| *c == TaskChange::Unchanged));
    }

    #[test]
    fn start_shift_same_auditor() {
        let old = schedule(vec![assignment("A0", 0, 1)]);
        let new = schedule(vec![assignment("A0", 0, 2)]);
        let report = diff_schedules(&old, &new);
        assert_eq!(report.start_shifts, 1);
        assert_eq!(report.auditor_changes, 0);
        assert_eq!(
            report.changes[0].1,
            TaskChange::StartShifted {
                from: DayIndex(1),
                to: DayIndex(2)
            }
        );
    }

    #[test]
    fn auditor_change_wins_over_start_shift() {
        // Both auditor and start differ: classified as an auditor change.
        let old = schedule(vec![assignment("A0", 0, 1)]);
        let new = schedule(vec![assignment("A1", 0, 4)]);
        let report = diff_schedules(&old, &new);
        assert_eq!(report.auditor_changes, 1);
        assert_eq!(report.start_shifts, 0);
    }

    #[test]
    fn added_and_removed_tasks() {
        let old = schedule(vec![assignment("A0", 0, 1), assignment("A0", 1, 2)]);
        let new = schedule(vec![assignment("A0", 1, 2), assignment("A0", 2, 3)]);
        let report = diff_schedules(&old, &new);
        assert_eq!(report.removed, 1);
        assert_eq!(report.added, 1);
        assert_eq!(report.unchanged, 1);
        assert_eq!(report.changes.len(), 3);
    }
}
