//! Fixed-width text Gantt chart: one column per day, engagements grouped
//! with their phase windows, one row per auditor working the engagement.

use crate::domain::{EngagementId, Instance};
use crate::flow::Schedule;
use std::collections::BTreeMap;
use std::fmt::Write as _;

const WINDOW_MARK: char = '=';
const WORK_MARK: char = '#';
const EMPTY_MARK: char = '.';

/// Render a schedule as fixed-width text. Deterministic: engagements,
/// phases and auditors appear in sorted order.
pub fn render_gantt(schedule: &Schedule, instance: &Instance) -> String {
    let days = instance.horizon_days as usize;
    let mut out = String::new();
    let _ = writeln!(out, "schedule over {days} days");

    // Rows keyed (engagement, auditor) -> worked day flags.
    let mut rows: BTreeMap<(EngagementId, crate::domain::AuditorId), Vec<bool>> = BTreeMap::new();
    for assignment in &schedule.assignments {
        let row = rows
            .entry((assignment.task.engagement.clone(), assignment.auditor.clone()))
            .or_insert_with(|| vec![false; days]);
        for (day, _) in &assignment.occupancy.worked {
            if (day.0 as usize) < days {
                row[day.0 as usize] = true;
            }
        }
    }
    if rows.is_empty() {
        return out;
    }

    let label_width = rows
        .keys()
        .map(|(_, a)| a.as_str().len() + 2)
        .chain(
            instance
                .engagements
                .iter()
                .flat_map(|e| e.phase_windows.keys().map(|p| p.as_str().len() + 2)),
        )
        .max()
        .unwrap_or(8)
        .max(8);

    // Day ruler: tens line (sparse) and ones line.
    let mut tens = String::new();
    let mut ones = String::new();
    for d in 0..days {
        tens.push(if d % 10 == 0 {
            char::from_digit(((d / 10) % 10) as u32, 10).unwrap()
        } else {
            ' '
        });
        ones.push(char::from_digit((d % 10) as u32, 10).unwrap());
    }
    let _ = writeln!(out, "{:label_width$}{tens}", "");
    let _ = writeln!(out, "{:label_width$}{ones}", "day");

    let mut engagement_ids: Vec<&EngagementId> = rows.keys().map(|(e, _)| e).collect();
    engagement_ids.dedup();
    for engagement_id in engagement_ids {
        let _ = writeln!(out, "{engagement_id}");
        if let Some(engagement) = instance.engagement(engagement_id) {
            for (phase, window) in &engagement.phase_windows {
                let mut cells = String::with_capacity(days);
                for d in 0..days {
                    cells.push(if window.contains(crate::domain::DayIndex(d as u16)) {
                        WINDOW_MARK
                    } else {
                        EMPTY_MARK
                    });
                }
                let _ = writeln!(out, "{:>label_width$}{cells}", format!("{phase}  "));
            }
        }
        for ((e, auditor), worked) in &rows {
            if e != engagement_id {
                continue;
            }
            let cells: String = worked
                .iter()
                .map(|w| if *w { WORK_MARK } else { EMPTY_MARK })
                .collect();
            let _ = writeln!(out, "{:>label_width$}{cells}", format!("{auditor}  "));
        }
    }
    out
}
