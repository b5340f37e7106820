//! Seeded synthetic instance generator: a desk-scale stand-in for real
//! engagement data, with tunable dimension counts, availability densities
//! and a staff-scarcity dial.

use crate::domain::*;
use crate::scaled::{Cost, Hours};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub auditors: usize,
    pub engagements: usize,
    pub phases: usize,
    pub levels: usize,
    pub indices: usize,
    pub days: u16,
    /// Probability that an auditor is available (8h) on any given day.
    pub availability_density: f64,
    /// Phase window length as a fraction of the horizon.
    pub window_density: f64,
    /// Total task hours divided by total real-auditor hours.
    pub scarcity: f64,
    pub mocks: usize,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> GeneratorParams {
        GeneratorParams {
            auditors: 10,
            engagements: 8,
            phases: 2,
            levels: 3,
            indices: 2,
            days: 90,
            availability_density: 0.8,
            window_density: 0.3,
            scarcity: 0.5,
            mocks: 2,
            seed: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
}

fn bad(field: &'static str, reason: impl Into<String>) -> GeneratorError {
    GeneratorError::InvalidParams {
        field,
        reason: reason.into(),
    }
}

fn check(params: &GeneratorParams) -> Result<(), GeneratorError> {
    let positive: [(&'static str, usize); 5] = [
        ("auditors", params.auditors),
        ("engagements", params.engagements),
        ("phases", params.phases),
        ("levels", params.levels),
        ("indices", params.indices),
    ];
    for (field, value) in positive {
        if value == 0 {
            return Err(bad(field, "must be >= 1"));
        }
    }
    if params.days == 0 {
        return Err(bad("days", "must be >= 1"));
    }
    for (field, value) in [
        ("availability_density", params.availability_density),
        ("window_density", params.window_density),
    ] {
        if !(value > 0.0 && value <= 1.0) {
            return Err(bad(field, format!("{value} is outside (0, 1]")));
        }
    }
    if !(params.scarcity > 0.0 && params.scarcity.is_finite()) {
        return Err(bad("scarcity", "must be > 0"));
    }
    Ok(())
}

const FULL_DAY: f64 = 8.0;
/// Offices and clients live on a FIELD_KM x FIELD_KM plane.
const FIELD_KM: f64 = 100.0;

/// Deterministically generate an instance; the same params (including seed)
/// always produce the same instance. The achieved scarcity ratio lands
/// within 5% of the requested one (hours are whole-hour granular).
pub fn generate_instance(params: &GeneratorParams) -> Result<Instance, GeneratorError> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let days = params.days;

    let levels = (0..params.levels)
        .map(|i| Level {
            id: LevelId::new(format!("L{i}")),
            rank: i as i32,
        })
        .collect::<Vec<_>>();

    let mut auditors = Vec::new();
    for i in 0..params.auditors {
        let level = levels[rng.gen_range(0..levels.len())].id.clone();
        let office = (rng.gen_range(0.0..FIELD_KM), rng.gen_range(0.0..FIELD_KM));
        let max_travel = Some(rng.gen_range(30.0..90.0));
        let hours_by_day = (0..days)
            .map(|_| {
                if rng.gen_bool(params.availability_density) {
                    Hours::from_f64(FULL_DAY)
                } else {
                    Hours::ZERO
                }
            })
            .collect();
        auditors.push(Auditor {
            id: AuditorId::new(format!("A{i:03}")),
            level,
            office_location: office,
            max_travel_km: max_travel,
            calendar: AuditorCalendar { hours_by_day },
            is_mock: false,
            familiar_engagements: Default::default(),
        });
    }
    // Mocks: always available, unlimited travel, levels cycling through the
    // ladder so every task rank has a mock within substitution reach.
    for i in 0..params.mocks {
        auditors.push(Auditor {
            id: AuditorId::new(format!("M{i:02}")),
            level: levels[i % levels.len()].id.clone(),
            office_location: (FIELD_KM / 2.0, FIELD_KM / 2.0),
            max_travel_km: None,
            calendar: AuditorCalendar::uniform(days, Hours::from_f64(FULL_DAY)),
            is_mock: true,
            familiar_engagements: Default::default(),
        });
    }

    let window_len = ((params.window_density * days as f64).round() as u16)
        .clamp(1, days);
    let mut engagements = Vec::new();
    for e in 0..params.engagements {
        let mut phase_windows = BTreeMap::new();
        for p in 0..params.phases {
            let start = rng.gen_range(0..=days - window_len);
            phase_windows.insert(
                PhaseId::new(format!("P{p}")),
                EngagementWindow::from_range(start, start + window_len - 1),
            );
        }
        engagements.push(Engagement {
            id: EngagementId::new(format!("E{e:02}")),
            client_location: (rng.gen_range(0.0..FIELD_KM), rng.gen_range(0.0..FIELD_KM)),
            phase_windows,
            tasks: Vec::new(),
        });
    }

    // Familiarity: each real auditor knows ~30% of the engagements.
    for auditor in auditors.iter_mut().filter(|a| !a.is_mock) {
        for engagement in &engagements {
            if rng.gen_bool(0.3) {
                auditor.familiar_engagements.insert(engagement.id.clone());
            }
        }
    }

    // Tasks until the scarcity target is met. Whole-hour sizes; the final
    // task is clamped to the remainder, which keeps the achieved ratio
    // within 5% of the request.
    let real_hours: i64 = auditors
        .iter()
        .filter(|a| !a.is_mock)
        .flat_map(|a| &a.calendar.hours_by_day)
        .map(|h| h.as_centi())
        .sum();
    let target_centi = (params.scarcity * real_hours as f64).round() as i64;
    let mut used: BTreeMap<(usize, usize, usize), u32> = BTreeMap::new();
    let mut total_centi: i64 = 0;
    let slot_budget = params.engagements * params.phases * params.levels * params.indices;
    let mut attempts = 0usize;
    while total_centi < target_centi && attempts < slot_budget * 30 {
        attempts += 1;
        let e = rng.gen_range(0..params.engagements);
        let p = rng.gen_range(0..params.phases);
        let l = rng.gen_range(0..params.levels);
        let slot = used.entry((e, p, l)).or_insert(0);
        if *slot >= params.indices as u32 {
            continue;
        }
        let max_whole = ((window_len as f64 * FULL_DAY).floor() as i64).clamp(1, 64);
        let min_whole = 8.min(max_whole);
        let mut hours_whole = rng.gen_range(min_whole..=max_whole);
        let remaining = target_centi - total_centi;
        if hours_whole * 100 > remaining {
            hours_whole = ((remaining + 99) / 100).clamp(1, max_whole);
        }
        engagements[e].tasks.push(TaskSpec {
            phase_id: PhaseId::new(format!("P{p}")),
            required_level: LevelId::new(format!("L{l}")),
            index: *slot,
            hours: Hours::from_f64(hours_whole as f64),
        });
        *slot += 1;
        total_centi += hours_whole * 100;
    }
    // Random sampling undershoots when the scarcity target is close to the
    // slot capacity; grow existing tasks toward their window capacity until
    // the target is met.
    if total_centi < target_centi {
        'grow: for engagement in &mut engagements {
            for task in &mut engagement.tasks {
                let cap_centi = window_len as i64 * (FULL_DAY as i64) * 100;
                let room = cap_centi - task.hours.as_centi();
                if room <= 0 {
                    continue;
                }
                let deficit = target_centi - total_centi;
                let grow_whole = ((deficit.min(room) + 99) / 100).max(0);
                task.hours = Hours::from_centi(task.hours.as_centi() + grow_whole * 100);
                total_centi += grow_whole * 100;
                if total_centi >= target_centi {
                    break 'grow;
                }
            }
        }
    }
    if (total_centi as f64) < target_centi as f64 * 0.95 {
        return Err(bad(
            "scarcity",
            format!(
                "target of {} task hours is unreachable: {} engagement/phase/level/index slots \
                 with {window_len}-day windows cap out at {} hours",
                target_centi / 100,
                slot_budget,
                slot_budget as i64 * window_len as i64 * FULL_DAY as i64,
            ),
        ));
    }
    // Degenerate parameters can still demand at least one task.
    if engagements.iter().all(|e| e.tasks.is_empty()) {
        engagements[0].tasks.push(TaskSpec {
            phase_id: PhaseId::new("P0"),
            required_level: LevelId::new("L0"),
            index: 0,
            hours: Hours::from_f64(1.0),
        });
    }

    let mut weights = Weights::zero();
    weights.c_mock = Cost::from_f64(500.0);
    weights.c_warmup = Cost::from_f64(5.0);
    weights.k_discount = 0.01;
    weights.w_uncertainty = Cost::from_f64(10.0);
    weights.w_travel = Cost::from_f64(0.1);
    weights.substitution_penalty =
        [(-1, Cost::from_f64(80.0)), (0, Cost::ZERO), (1, Cost::from_f64(50.0))]
            .into_iter()
            .collect();
    weights.familiarity_reward = Cost::from_f64(10.0);
    weights.stability_reward = Cost::from_f64(20.0);
    weights.stability_penalty = Cost::from_f64(20.0);

    Ok(Instance {
        horizon_days: days,
        levels,
        auditors,
        engagements,
        weights,
        preferences: Preferences::default(),
        previous_schedule: None,
        max_pause_days: None,
    })
}
