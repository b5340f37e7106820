//! Instance builders shared by unit, integration, and acceptance tests.
#![doc(hidden)]

use crate::domain::*;
use crate::scaled::{Cost, Hours};
use std::collections::BTreeMap;

pub fn levels(n: usize) -> Vec<Level> {
    (0..n)
        .map(|i| Level {
            id: LevelId::new(format!("L{i}")),
            rank: i as i32,
        })
        .collect()
}

pub fn full_time(id: &str, level: &str, horizon: u16) -> Auditor {
    Auditor {
        id: AuditorId::new(id),
        level: LevelId::new(level),
        office_location: (0.0, 0.0),
        max_travel_km: None,
        calendar: AuditorCalendar::uniform(horizon, Hours::from_f64(8.0)),
        is_mock: false,
        familiar_engagements: Default::default(),
    }
}

pub fn engagement(id: &str, windows: &[(&str, u16, u16)], tasks: &[(&str, &str, u32, f64)]) -> Engagement {
    Engagement {
        id: EngagementId::new(id),
        client_location: (0.0, 0.0),
        phase_windows: windows
            .iter()
            .map(|(p, s, e)| (PhaseId::new(*p), EngagementWindow::from_range(*s, *e)))
            .collect(),
        tasks: tasks
            .iter()
            .map(|(p, l, i, h)| TaskSpec {
                phase_id: PhaseId::new(*p),
                required_level: LevelId::new(*l),
                index: *i,
                hours: Hours::from_f64(*h),
            })
            .collect(),
    }
}

pub fn instance_with(
    horizon: u16,
    auditors: Vec<Auditor>,
    engagements: Vec<Engagement>,
) -> Instance {
    Instance {
        horizon_days: horizon,
        levels: levels(3),
        auditors,
        engagements,
        weights: Weights::zero(),
        preferences: Preferences::default(),
        previous_schedule: None,
        max_pause_days: None,
    }
}

/// One full-time auditor, one engagement, one 8h task over a 3-day window.
pub fn tiny_instance() -> Instance {
    instance_with(
        6,
        vec![full_time("A0", "L0", 6)],
        vec![engagement("E0", &[("interim", 1, 3)], &[("interim", "L0", 0, 8.0)])],
    )
}

/// Small worked example: 2 auditors, 3 engagements with
/// interim/final phases.
pub fn worked_example_instance() -> Instance {
    let mut instance = instance_with(
        20,
        vec![full_time("A0", "L0", 20), full_time("A1", "L1", 20)],
        vec![
            engagement(
                "E0",
                &[("interim", 1, 4), ("final", 12, 16)],
                &[
                    ("interim", "L0", 0, 24.0),
                    ("interim", "L1", 0, 16.0),
                    ("final", "L0", 0, 24.0),
                    ("final", "L1", 0, 8.0),
                ],
            ),
            engagement(
                "E1",
                &[("fieldwork", 6, 13)],
                &[("fieldwork", "L0", 0, 48.0), ("fieldwork", "L1", 0, 24.0)],
            ),
            engagement(
                "E2",
                &[("interim", 3, 7), ("final", 15, 18)],
                &[
                    ("interim", "L0", 0, 24.0),
                    ("interim", "L1", 0, 16.0),
                    ("final", "L0", 0, 24.0),
                    ("final", "L1", 0, 8.0),
                ],
            ),
        ],
    );
    instance.weights.substitution_penalty.insert(1, Cost::from_f64(50.0));
    instance.weights.substitution_penalty.insert(-1, Cost::from_f64(80.0));
    instance
}

/// Instance whose dimension counts are exactly the given values; used to
/// check cross-join accounting.
pub fn shaped_instance_for_dims(
    auditors: usize,
    engagements: usize,
    phases: usize,
    levels_n: usize,
    indices: usize,
    days: u16,
) -> Instance {
    let level_defs = levels(levels_n.max(1));
    let engagement_list: Vec<Engagement> = (0..engagements)
        .map(|e| {
            let phase_windows: BTreeMap<PhaseId, EngagementWindow> = (0..phases)
                .map(|p| {
                    (
                        PhaseId::new(format!("P{p}")),
                        EngagementWindow::from_range(0, days.saturating_sub(1)),
                    )
                })
                .collect();
            let tasks = if phases > 0 && indices > 0 {
                vec![TaskSpec {
                    phase_id: PhaseId::new("P0"),
                    required_level: level_defs[0].id.clone(),
                    index: indices as u32 - 1,
                    hours: Hours::from_f64(8.0),
                }]
            } else {
                vec![]
            };
            Engagement {
                id: EngagementId::new(format!("E{e}")),
                client_location: (0.0, 0.0),
                phase_windows,
                tasks,
            }
        })
        .collect();
    let auditor_list = (0..auditors)
        .map(|a| full_time(&format!("A{a}"), "L0", days))
        .collect();
    let mut instance = instance_with(days.max(1), auditor_list, engagement_list);
    instance.horizon_days = days;
    for auditor in &mut instance.auditors {
        auditor.calendar = AuditorCalendar::uniform(days, Hours::from_f64(8.0));
    }
    instance.levels = levels(levels_n);
    instance
}
