//! Core problem entities: auditors, engagements, tasks, calendars, weights,
//! and whole-instance validation.

use crate::flow::Schedule;
use crate::scaled::{Cost, Hours};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

id_type!(AuditorId);
id_type!(EngagementId);
id_type!(PhaseId);
id_type!(LevelId);

/// Integer day offset from the horizon start.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct DayIndex(pub u16);

impl DayIndex {
    pub fn value(self) -> u16 {
        self.0
    }
}

impl fmt::Display for DayIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-day working hours over the horizon. Zero means the auditor is away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditorCalendar {
    pub hours_by_day: Vec<Hours>,
}

impl AuditorCalendar {
    pub fn uniform(horizon_days: u16, hours: Hours) -> AuditorCalendar {
        AuditorCalendar {
            hours_by_day: vec![hours; horizon_days as usize],
        }
    }

    pub fn hours(&self, day: DayIndex) -> Option<Hours> {
        self.hours_by_day.get(day.0 as usize).copied()
    }
}

/// Days on which work on one engagement phase is permitted. May be
/// non-contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EngagementWindow {
    pub available_days: BTreeSet<DayIndex>,
}

impl EngagementWindow {
    pub fn from_range(start: u16, end_inclusive: u16) -> EngagementWindow {
        EngagementWindow {
            available_days: (start..=end_inclusive).map(DayIndex).collect(),
        }
    }

    pub fn contains(&self, day: DayIndex) -> bool {
        self.available_days.contains(&day)
    }

    pub fn last_day(&self) -> Option<DayIndex> {
        self.available_days.iter().next_back().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub id: LevelId,
    pub rank: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Auditor {
    pub id: AuditorId,
    pub level: LevelId,
    /// Office coordinates in km (Euclidean projection).
    pub office_location: (f64, f64),
    /// `None` means unlimited.
    pub max_travel_km: Option<f64>,
    pub calendar: AuditorCalendar,
    pub is_mock: bool,
    pub familiar_engagements: BTreeSet<EngagementId>,
}

/// Identity of one task slot: (engagement, phase, level, index).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskKey {
    pub engagement: EngagementId,
    pub phase: PhaseId,
    pub level: LevelId,
    pub index: u32,
}

impl fmt::Display for TaskKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}#{}",
            self.engagement, self.phase, self.level, self.index
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub phase_id: PhaseId,
    pub required_level: LevelId,
    pub index: u32,
    pub hours: Hours,
}

impl TaskSpec {
    pub fn key(&self, engagement: &EngagementId) -> TaskKey {
        TaskKey {
            engagement: engagement.clone(),
            phase: self.phase_id.clone(),
            level: self.required_level.clone(),
            index: self.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Engagement {
    pub id: EngagementId,
    pub client_location: (f64, f64),
    pub phase_windows: BTreeMap<PhaseId, EngagementWindow>,
    pub tasks: Vec<TaskSpec>,
}

/// All tunable penalties and rewards of the cost model.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub c_mock: Cost,
    pub c_warmup: Cost,
    /// Hyperbolic discounting parameter k.
    pub k_discount: f64,
    pub w_uncertainty: Cost,
    /// Cost per km of office-to-client distance.
    pub w_travel: Cost,
    /// Penalty by signed rank delta (auditor rank minus task rank).
    /// A delta absent from the map is forbidden; delta 0 is always free.
    pub substitution_penalty: BTreeMap<i32, Cost>,
    pub familiarity_reward: Cost,
    pub preference_weight: Cost,
    pub stability_reward: Cost,
    pub stability_penalty: Cost,
}

impl Weights {
    /// All-zero weights; every substitution within +-1 rank allowed for free.
    pub fn zero() -> Weights {
        Weights {
            c_mock: Cost::ZERO,
            c_warmup: Cost::ZERO,
            k_discount: 0.0,
            w_uncertainty: Cost::ZERO,
            w_travel: Cost::ZERO,
            substitution_penalty: [(-1, Cost::ZERO), (0, Cost::ZERO), (1, Cost::ZERO)]
                .into_iter()
                .collect(),
            familiarity_reward: Cost::ZERO,
            preference_weight: Cost::ZERO,
            stability_reward: Cost::ZERO,
            stability_penalty: Cost::ZERO,
        }
    }

    /// Substitution cost for a signed rank delta, `None` when forbidden.
    pub fn substitution(&self, delta: i32) -> Option<Cost> {
        if delta == 0 {
            return Some(*self.substitution_penalty.get(&0).unwrap_or(&Cost::ZERO));
        }
        self.substitution_penalty.get(&delta).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PrefTarget {
    Task(TaskKey),
    Engagement(EngagementId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftPreference {
    pub auditor: AuditorId,
    pub target: PrefTarget,
    /// Positive means the auditor wants the work.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Preferences {
    pub enforced: BTreeSet<(AuditorId, TaskKey)>,
    pub forbidden: BTreeSet<(AuditorId, TaskKey)>,
    pub soft: Vec<SoftPreference>,
}

/// The full problem statement.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub horizon_days: u16,
    pub levels: Vec<Level>,
    pub auditors: Vec<Auditor>,
    pub engagements: Vec<Engagement>,
    pub weights: Weights,
    pub preferences: Preferences,
    pub previous_schedule: Option<Schedule>,
    /// Longest permitted run of unusable days inside one occupancy.
    /// `None` means unlimited.
    pub max_pause_days: Option<u16>,
}

impl Instance {
    pub fn auditor(&self, id: &AuditorId) -> Option<&Auditor> {
        self.auditors.iter().find(|a| &a.id == id)
    }

    pub fn engagement(&self, id: &EngagementId) -> Option<&Engagement> {
        self.engagements.iter().find(|e| &e.id == id)
    }

    pub fn level_rank(&self, id: &LevelId) -> Option<i32> {
        self.levels.iter().find(|l| &l.id == id).map(|l| l.rank)
    }

    /// Iterate every task with its engagement, in declaration order.
    pub fn tasks(&self) -> impl Iterator<Item = (&Engagement, &TaskSpec)> {
        self.engagements
            .iter()
            .flat_map(|e| e.tasks.iter().map(move |t| (e, t)))
    }

    pub fn task_count(&self) -> usize {
        self.engagements.iter().map(|e| e.tasks.len()).sum()
    }
}

/// One violated invariant, with enough context to locate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub entity: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationIssue>,
    /// Non-fatal findings, e.g. a warm-up cost that is not substantially
    /// smaller than the level-substitution penalties.
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn err(report: &mut ValidationReport, entity: impl Into<String>, reason: impl Into<String>) {
    report.errors.push(ValidationIssue {
        entity: entity.into(),
        reason: reason.into(),
    });
}

/// Check every instance invariant. Never mutates the instance; a clean report
/// means the instance is well-formed.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let horizon = instance.horizon_days;

    if horizon == 0 {
        err(&mut report, "instance", "horizon_days must be >= 1");
    }

    // Levels: unique ids, distinct ranks.
    let mut level_ids = HashSet::new();
    let mut ranks = HashSet::new();
    for level in &instance.levels {
        if !level_ids.insert(&level.id) {
            err(&mut report, level.id.as_str(), "duplicate level id");
        }
        if !ranks.insert(level.rank) {
            err(
                &mut report,
                level.id.as_str(),
                format!("duplicate level rank {}", level.rank),
            );
        }
    }

    // Auditors.
    let mut auditor_ids = HashSet::new();
    for auditor in &instance.auditors {
        let ctx = format!("auditor {}", auditor.id);
        if !auditor_ids.insert(&auditor.id) {
            err(&mut report, &ctx, "duplicate auditor id");
        }
        if !level_ids.contains(&auditor.level) {
            err(&mut report, &ctx, format!("unknown level {}", auditor.level));
        }
        if auditor.calendar.hours_by_day.len() != horizon as usize {
            err(
                &mut report,
                &ctx,
                format!(
                    "calendar length {} does not match horizon {}",
                    auditor.calendar.hours_by_day.len(),
                    horizon
                ),
            );
        }
        for (day, hours) in auditor.calendar.hours_by_day.iter().enumerate() {
            if hours.is_negative() {
                err(&mut report, &ctx, format!("negative hours on day {day}"));
            }
        }
        if let Some(max) = auditor.max_travel_km {
            if !max.is_finite() || max < 0.0 {
                err(&mut report, &ctx, "max_travel_km must be finite and >= 0");
            }
        }
        if !auditor.office_location.0.is_finite() || !auditor.office_location.1.is_finite() {
            err(&mut report, &ctx, "office location must be finite");
        }
    }

    // Engagements and tasks.
    let mut engagement_ids = HashSet::new();
    let mut task_keys = HashSet::new();
    for engagement in &instance.engagements {
        let ctx = format!("engagement {}", engagement.id);
        if !engagement_ids.insert(&engagement.id) {
            err(&mut report, &ctx, "duplicate engagement id");
        }
        if !engagement.client_location.0.is_finite() || !engagement.client_location.1.is_finite() {
            err(&mut report, &ctx, "client location must be finite");
        }
        for (phase, window) in &engagement.phase_windows {
            for day in &window.available_days {
                if day.0 >= horizon {
                    err(
                        &mut report,
                        format!("{ctx} phase {phase}"),
                        format!("window day {} outside horizon {}", day, horizon),
                    );
                }
            }
        }
        for task in &engagement.tasks {
            let key = task.key(&engagement.id);
            let tctx = format!("task {key}");
            if !engagement.phase_windows.contains_key(&task.phase_id) {
                err(&mut report, &tctx, format!("unknown phase {}", task.phase_id));
            }
            if !level_ids.contains(&task.required_level) {
                err(
                    &mut report,
                    &tctx,
                    format!("unknown level {}", task.required_level),
                );
            }
            if task.hours.as_centi() <= 0 {
                err(&mut report, &tctx, "task hours must be > 0");
            }
            if !task_keys.insert(key.clone()) {
                err(&mut report, &tctx, "duplicate task key");
            }
        }
    }

    // Weights.
    let weights = &instance.weights;
    for (name, cost) in [
        ("c_mock", weights.c_mock),
        ("c_warmup", weights.c_warmup),
        ("w_uncertainty", weights.w_uncertainty),
        ("w_travel", weights.w_travel),
        ("familiarity_reward", weights.familiarity_reward),
        ("preference_weight", weights.preference_weight),
        ("stability_reward", weights.stability_reward),
        ("stability_penalty", weights.stability_penalty),
    ] {
        if cost.is_negative() {
            err(&mut report, "weights", format!("{name} must be >= 0"));
        }
    }
    if !(weights.k_discount.is_finite() && weights.k_discount >= 0.0) {
        err(&mut report, "weights", "k_discount must be finite and >= 0");
    }
    if let Some(zero) = weights.substitution_penalty.get(&0) {
        if !zero.is_zero() {
            err(&mut report, "weights", "substitution_penalty(0) must be 0");
        }
    }
    for (delta, cost) in &weights.substitution_penalty {
        if cost.is_negative() {
            err(
                &mut report,
                "weights",
                format!("substitution_penalty({delta}) must be >= 0"),
            );
        }
        // Warm-up must stay cheaper than any real substitution penalty so it
        // cannot override level specialization.
        if *delta != 0 && !cost.is_zero() && weights.c_warmup >= *cost {
            report.warnings.push(ValidationIssue {
                entity: "weights".to_string(),
                reason: format!(
                    "c_warmup {} is not smaller than substitution_penalty({delta}) {}",
                    weights.c_warmup, cost
                ),
            });
        }
    }

    // Preferences.
    let prefs = &instance.preferences;
    for (auditor, task) in prefs.enforced.intersection(&prefs.forbidden) {
        err(
            &mut report,
            format!("preference ({auditor}, {task})"),
            "preference conflict: pair is both enforced and forbidden",
        );
    }
    for (kind, set) in [("enforced", &prefs.enforced), ("forbidden", &prefs.forbidden)] {
        for (auditor, task) in set.iter() {
            if !auditor_ids.contains(auditor) {
                err(
                    &mut report,
                    format!("{kind} preference ({auditor}, {task})"),
                    "unknown auditor",
                );
            }
            if !task_keys.contains(task) {
                err(
                    &mut report,
                    format!("{kind} preference ({auditor}, {task})"),
                    "unknown task",
                );
            }
        }
    }
    for pref in &prefs.soft {
        let ctx = format!("soft preference of {}", pref.auditor);
        if !auditor_ids.contains(&pref.auditor) {
            err(&mut report, &ctx, "unknown auditor");
        }
        match &pref.target {
            PrefTarget::Task(key) => {
                if !task_keys.contains(key) {
                    err(&mut report, &ctx, format!("unknown task {key}"));
                }
            }
            PrefTarget::Engagement(id) => {
                if !engagement_ids.contains(id) {
                    err(&mut report, &ctx, format!("unknown engagement {id}"));
                }
            }
        }
        if !pref.score.is_finite() {
            err(&mut report, &ctx, "score must be finite");
        }
    }

    // Familiarity references.
    for auditor in &instance.auditors {
        for engagement in &auditor.familiar_engagements {
            if !engagement_ids.contains(engagement) {
                err(
                    &mut report,
                    format!("auditor {}", auditor.id),
                    format!("familiar engagement {engagement} does not exist"),
                );
            }
        }
    }

    report
}

/// Hours the auditor can work on the given day.
pub fn working_hours(auditor: &Auditor, day: DayIndex) -> Result<Hours, DayOutOfRange> {
    auditor.calendar.hours(day).ok_or(DayOutOfRange {
        day,
        horizon: auditor.calendar.hours_by_day.len() as u16,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("day {day} is outside the horizon of {horizon} days")]
pub struct DayOutOfRange {
    pub day: DayIndex,
    pub horizon: u16,
}

/// Size of the exhaustive auditor x engagement x phase x level x index x day
/// cross-join, computed from the instance dimension counts.
pub fn cross_join_size(instance: &Instance) -> u64 {
    let auditors = instance.auditors.len() as u64;
    let engagements = instance.engagements.len() as u64;
    let phases = instance
        .engagements
        .iter()
        .map(|e| e.phase_windows.len())
        .max()
        .unwrap_or(0) as u64;
    let levels = instance.levels.len() as u64;
    let indices = instance
        .tasks()
        .map(|(_, t)| t.index as u64 + 1)
        .max()
        .unwrap_or(0);
    let days = instance.horizon_days as u64;
    auditors * engagements * phases * levels * indices * days
}
