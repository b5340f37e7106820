//! Versioned JSON documents for instances and schedules. Calendars are
//! run-length encoded and windows stored as day ranges so year-long
//! instances stay compact; hour/cost amounts serialize as their scaled
//! integers (centihours, 1e-4 cost units) and round-trip exactly.

use crate::candidates::Occupancy;
use crate::domain::*;
use crate::flow::{Assignment, MetricsReport, Schedule, ScheduleObjective};
use crate::scaled::{Cost, Hours};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported schema_version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u32 },
    #[error("invalid instance: {}", summarize(.0))]
    Validation(ValidationReport),
}

fn summarize(report: &ValidationReport) -> String {
    report
        .errors
        .iter()
        .map(|e| format!("{}: {}", e.entity, e.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

/// One run of identical daily hours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalendarRun {
    pub hours: Hours,
    pub days: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DayRange {
    pub from: u16,
    pub to: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditorDoc {
    pub id: AuditorId,
    pub level: LevelId,
    pub office: (f64, f64),
    #[serde(default)]
    pub max_travel_km: Option<f64>,
    pub calendar: Vec<CalendarRun>,
    #[serde(default)]
    pub is_mock: bool,
    #[serde(default)]
    pub familiar_engagements: Vec<EngagementId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub phase: PhaseId,
    pub level: LevelId,
    pub index: u32,
    pub hours: Hours,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDoc {
    pub id: PhaseId,
    pub windows: Vec<DayRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngagementDoc {
    pub id: EngagementId,
    pub client: (f64, f64),
    pub phases: Vec<PhaseDoc>,
    pub tasks: Vec<TaskDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstitutionDoc {
    pub delta: i32,
    pub cost: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    pub c_mock: Cost,
    pub c_warmup: Cost,
    pub k_discount: f64,
    pub w_uncertainty: Cost,
    pub w_travel: Cost,
    pub substitution_penalty: Vec<SubstitutionDoc>,
    pub familiarity_reward: Cost,
    pub preference_weight: Cost,
    pub stability_reward: Cost,
    pub stability_penalty: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub auditor: AuditorId,
    pub task: TaskKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PreferencesDoc {
    #[serde(default)]
    pub enforced: Vec<PairDoc>,
    #[serde(default)]
    pub forbidden: Vec<PairDoc>,
    #[serde(default)]
    pub soft: Vec<SoftPreference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub id: LevelId,
    pub rank: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub horizon_days: u16,
    #[serde(default)]
    pub max_pause_days: Option<u16>,
    pub levels: Vec<LevelDoc>,
    pub auditors: Vec<AuditorDoc>,
    pub engagements: Vec<EngagementDoc>,
    pub weights: WeightsDoc,
    #[serde(default)]
    pub preferences: PreferencesDoc,
    #[serde(default)]
    pub previous_schedule: Option<ScheduleBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkedDay {
    pub day: DayIndex,
    pub hours: Hours,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentDoc {
    pub auditor: AuditorId,
    pub task: TaskKey,
    pub start_day: DayIndex,
    pub occupancy: Vec<WorkedDay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDoc {
    pub edge_cost: Cost,
    pub mock_cost: Cost,
    pub warmup_cost: Cost,
    pub total: Cost,
}

/// The schedule itself, shared by schedule documents and the
/// previous-schedule block of instance documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBody {
    pub assignments: Vec<AssignmentDoc>,
    #[serde(default)]
    pub hired_mocks: Vec<AuditorId>,
    #[serde(default)]
    pub warmup_pairs: Vec<(AuditorId, EngagementId)>,
    pub objective: ObjectiveDoc,
}

/// Where a schedule came from: solver status and limits, generator seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(default)]
    pub generator_seed: Option<u64>,
    #[serde(default)]
    pub backend: Option<String>,
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
    #[serde(default)]
    pub node_limit: Option<u64>,
    #[serde(default)]
    pub status: Option<String>,
    #[serde(default)]
    pub gap: Option<i64>,
    #[serde(default)]
    pub nodes: Option<u64>,
    #[serde(default)]
    pub wall_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub schema_version: u32,
    pub schedule: ScheduleBody,
    pub metrics: MetricsReport,
    #[serde(default)]
    pub provenance: Provenance,
}

fn encode_calendar(calendar: &AuditorCalendar) -> Vec<CalendarRun> {
    let mut runs: Vec<CalendarRun> = Vec::new();
    for hours in &calendar.hours_by_day {
        match runs.last_mut() {
            Some(run) if run.hours == *hours => run.days += 1,
            _ => runs.push(CalendarRun {
                hours: *hours,
                days: 1,
            }),
        }
    }
    runs
}

fn decode_calendar(runs: &[CalendarRun]) -> AuditorCalendar {
    let mut hours_by_day = Vec::new();
    for run in runs {
        hours_by_day.extend(std::iter::repeat(run.hours).take(run.days as usize));
    }
    AuditorCalendar { hours_by_day }
}

fn encode_window(window: &EngagementWindow) -> Vec<DayRange> {
    let mut ranges: Vec<DayRange> = Vec::new();
    for day in &window.available_days {
        match ranges.last_mut() {
            Some(range) if range.to + 1 == day.0 => range.to = day.0,
            _ => ranges.push(DayRange {
                from: day.0,
                to: day.0,
            }),
        }
    }
    ranges
}

fn decode_window(ranges: &[DayRange]) -> EngagementWindow {
    let mut window = EngagementWindow::default();
    for range in ranges {
        for day in range.from..=range.to {
            window.available_days.insert(DayIndex(day));
        }
    }
    window
}

pub fn schedule_to_body(schedule: &Schedule) -> ScheduleBody {
    ScheduleBody {
        assignments: schedule
            .assignments
            .iter()
            .map(|a| AssignmentDoc {
                auditor: a.auditor.clone(),
                task: a.task.clone(),
                start_day: a.start_day,
                occupancy: a
                    .occupancy
                    .worked
                    .iter()
                    .map(|(day, hours)| WorkedDay {
                        day: *day,
                        hours: *hours,
                    })
                    .collect(),
            })
            .collect(),
        hired_mocks: schedule.hired_mocks.iter().cloned().collect(),
        warmup_pairs: schedule.warmup_pairs.iter().cloned().collect(),
        objective: ObjectiveDoc {
            edge_cost: schedule.objective.edge_cost,
            mock_cost: schedule.objective.mock_cost,
            warmup_cost: schedule.objective.warmup_cost,
            total: schedule.objective.total(),
        },
    }
}

pub fn schedule_from_body(body: &ScheduleBody) -> Schedule {
    Schedule {
        assignments: body
            .assignments
            .iter()
            .map(|a| Assignment {
                auditor: a.auditor.clone(),
                task: a.task.clone(),
                start_day: a.start_day,
                occupancy: Occupancy {
                    worked: a.occupancy.iter().map(|w| (w.day, w.hours)).collect(),
                },
            })
            .collect(),
        hired_mocks: body.hired_mocks.iter().cloned().collect(),
        warmup_pairs: body.warmup_pairs.iter().cloned().collect(),
        objective: ScheduleObjective {
            edge_cost: body.objective.edge_cost,
            mock_cost: body.objective.mock_cost,
            warmup_cost: body.objective.warmup_cost,
        },
    }
}

pub fn instance_to_document(instance: &Instance) -> InstanceDocument {
    InstanceDocument {
        schema_version: SCHEMA_VERSION,
        horizon_days: instance.horizon_days,
        max_pause_days: instance.max_pause_days,
        levels: instance
            .levels
            .iter()
            .map(|l| LevelDoc {
                id: l.id.clone(),
                rank: l.rank,
            })
            .collect(),
        auditors: instance
            .auditors
            .iter()
            .map(|a| AuditorDoc {
                id: a.id.clone(),
                level: a.level.clone(),
                office: a.office_location,
                max_travel_km: a.max_travel_km,
                calendar: encode_calendar(&a.calendar),
                is_mock: a.is_mock,
                familiar_engagements: a.familiar_engagements.iter().cloned().collect(),
            })
            .collect(),
        engagements: instance
            .engagements
            .iter()
            .map(|e| EngagementDoc {
                id: e.id.clone(),
                client: e.client_location,
                phases: e
                    .phase_windows
                    .iter()
                    .map(|(id, window)| PhaseDoc {
                        id: id.clone(),
                        windows: encode_window(window),
                    })
                    .collect(),
                tasks: e
                    .tasks
                    .iter()
                    .map(|t| TaskDoc {
                        phase: t.phase_id.clone(),
                        level: t.required_level.clone(),
                        index: t.index,
                        hours: t.hours,
                    })
                    .collect(),
            })
            .collect(),
        weights: WeightsDoc {
            c_mock: instance.weights.c_mock,
            c_warmup: instance.weights.c_warmup,
            k_discount: instance.weights.k_discount,
            w_uncertainty: instance.weights.w_uncertainty,
            w_travel: instance.weights.w_travel,
            substitution_penalty: instance
                .weights
                .substitution_penalty
                .iter()
                .map(|(delta, cost)| SubstitutionDoc {
                    delta: *delta,
                    cost: *cost,
                })
                .collect(),
            familiarity_reward: instance.weights.familiarity_reward,
            preference_weight: instance.weights.preference_weight,
            stability_reward: instance.weights.stability_reward,
            stability_penalty: instance.weights.stability_penalty,
        },
        preferences: PreferencesDoc {
            enforced: instance
                .preferences
                .enforced
                .iter()
                .map(|(auditor, task)| PairDoc {
                    auditor: auditor.clone(),
                    task: task.clone(),
                })
                .collect(),
            forbidden: instance
                .preferences
                .forbidden
                .iter()
                .map(|(auditor, task)| PairDoc {
                    auditor: auditor.clone(),
                    task: task.clone(),
                })
                .collect(),
            soft: instance.preferences.soft.clone(),
        },
        previous_schedule: instance.previous_schedule.as_ref().map(schedule_to_body),
    }
}

/// Document -> validated Instance.
pub fn instance_from_document(doc: &InstanceDocument) -> Result<Instance, DocError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::Version {
            found: doc.schema_version as u64,
            supported: SCHEMA_VERSION,
        });
    }
    let instance = Instance {
        horizon_days: doc.horizon_days,
        max_pause_days: doc.max_pause_days,
        levels: doc
            .levels
            .iter()
            .map(|l| Level {
                id: l.id.clone(),
                rank: l.rank,
            })
            .collect(),
        auditors: doc
            .auditors
            .iter()
            .map(|a| Auditor {
                id: a.id.clone(),
                level: a.level.clone(),
                office_location: a.office,
                max_travel_km: a.max_travel_km,
                calendar: decode_calendar(&a.calendar),
                is_mock: a.is_mock,
                familiar_engagements: a.familiar_engagements.iter().cloned().collect(),
            })
            .collect(),
        engagements: doc
            .engagements
            .iter()
            .map(|e| Engagement {
                id: e.id.clone(),
                client_location: e.client,
                phase_windows: e
                    .phases
                    .iter()
                    .map(|p| (p.id.clone(), decode_window(&p.windows)))
                    .collect::<BTreeMap<_, _>>(),
                tasks: e
                    .tasks
                    .iter()
                    .map(|t| TaskSpec {
                        phase_id: t.phase.clone(),
                        required_level: t.level.clone(),
                        index: t.index,
                        hours: t.hours,
                    })
                    .collect(),
            })
            .collect(),
        weights: Weights {
            c_mock: doc.weights.c_mock,
            c_warmup: doc.weights.c_warmup,
            k_discount: doc.weights.k_discount,
            w_uncertainty: doc.weights.w_uncertainty,
            w_travel: doc.weights.w_travel,
            substitution_penalty: doc
                .weights
                .substitution_penalty
                .iter()
                .map(|s| (s.delta, s.cost))
                .collect(),
            familiarity_reward: doc.weights.familiarity_reward,
            preference_weight: doc.weights.preference_weight,
            stability_reward: doc.weights.stability_reward,
            stability_penalty: doc.weights.stability_penalty,
        },
        preferences: Preferences {
            enforced: doc
                .preferences
                .enforced
                .iter()
                .map(|p| (p.auditor.clone(), p.task.clone()))
                .collect(),
            forbidden: doc
                .preferences
                .forbidden
                .iter()
                .map(|p| (p.auditor.clone(), p.task.clone()))
                .collect(),
            soft: doc.preferences.soft.clone(),
        },
        previous_schedule: doc.previous_schedule.as_ref().map(schedule_from_body),
    };
    let report = validate_instance(&instance);
    if !report.is_ok() {
        return Err(DocError::Validation(report));
    }
    Ok(instance)
}

/// Parse the version field before the strict schema so a future-version
/// document fails with a version error, not a shape error.
fn check_version(value: &serde_json::Value) -> Result<(), DocError> {
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DocError::Parse("missing schema_version field".to_string()))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(DocError::Version {
            found,
            supported: SCHEMA_VERSION,
        });
    }
    Ok(())
}

pub fn instance_from_json(text: &str) -> Result<Instance, DocError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DocError::Parse(e.to_string()))?;
    check_version(&value)?;
    let doc: InstanceDocument =
        serde_json::from_value(value).map_err(|e| DocError::Parse(e.to_string()))?;
    instance_from_document(&doc)
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&instance_to_document(instance))
        .expect("instance documents always serialize")
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, DocError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text)
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), DocError> {
    let path = path.as_ref();
    std::fs::write(path, instance_to_json(instance)).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn schedule_to_document(
    schedule: &Schedule,
    metrics: &MetricsReport,
    provenance: Provenance,
) -> ScheduleDocument {
    ScheduleDocument {
        schema_version: SCHEMA_VERSION,
        schedule: schedule_to_body(schedule),
        metrics: metrics.clone(),
        provenance,
    }
}

pub fn schedule_from_json(text: &str) -> Result<ScheduleDocument, DocError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DocError::Parse(e.to_string()))?;
    check_version(&value)?;
    serde_json::from_value(value).map_err(|e| DocError::Parse(e.to_string()))
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<ScheduleDocument, DocError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })?;
    schedule_from_json(&text)
}

pub fn save_schedule(doc: &ScheduleDocument, path: impl AsRef<Path>) -> Result<(), DocError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(doc).expect("schedule documents always serialize");
    std::fs::write(path, text).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })
}
