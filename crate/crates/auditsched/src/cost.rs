//! Edge pricing: the scalar cost of every candidate edge as a documented sum
//! of shaping terms (travel, level substitution, familiarity, soft
//! preferences, start-day discounting, schedule stability).

use crate::candidates::{CandidateEdge, CandidateSet};
use crate::domain::*;
use crate::flow::Schedule;
use crate::scaled::Cost;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Per-edge cost decomposition; `total` is the exact sum of the components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CostBreakdown {
    pub travel: Cost,
    pub substitution: Cost,
    pub familiarity: Cost,
    pub soft_preference: Cost,
    pub uncertainty: Cost,
    pub stability: Cost,
}

impl CostBreakdown {
    pub fn total(&self) -> Cost {
        self.travel
            + self.substitution
            + self.familiarity
            + self.soft_preference
            + self.uncertainty
            + self.stability
    }
}

pub fn euclidean_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// w_travel times the flying distance between office and client.
pub fn travel_cost(auditor: &Auditor, engagement: &Engagement, weights: &Weights) -> Cost {
    let km = euclidean_km(auditor.office_location, engagement.client_location);
    Cost::from_f64(weights.w_travel.as_f64() * km)
}

/// Hyperbolic discount factor 1 / (1 + k d).
pub fn discount_factor(start_day: DayIndex, k: f64) -> f64 {
    1.0 / (1.0 + k * start_day.0 as f64)
}

/// Uncertainty cost of starting on a given day:
/// w_uncertainty x (1 - discount_factor).
pub fn uncertainty_cost(start_day: DayIndex, weights: &Weights) -> Cost {
    let factor = discount_factor(start_day, weights.k_discount);
    Cost::from_f64(weights.w_uncertainty.as_f64() * (1.0 - factor))
}

/// Cost of putting an auditor of one level on a task of another;
/// `None` means the substitution is forbidden.
pub fn substitution_cost(auditor_level: &Level, task_level: &Level, weights: &Weights) -> Option<Cost> {
    weights.substitution(auditor_level.rank - task_level.rank)
}

/// Stability shaping against a previous schedule: reward keeping an auditor
/// on their task (any start day), penalize a newcomer on a task somebody
/// else held before. Tasks absent from the previous schedule are neutral.
pub fn stability_term(
    auditor: &AuditorId,
    task: &TaskKey,
    previous: Option<&Schedule>,
    weights: &Weights,
) -> Cost {
    let Some(previous) = previous else {
        return Cost::ZERO;
    };
    match previous.assignee(task) {
        Some(prev_auditor) if prev_auditor == auditor => -weights.stability_reward,
        Some(_) => weights.stability_penalty,
        None => Cost::ZERO,
    }
}

/// Lookup tables shared by all edges of one instance.
pub struct PricingContext<'a> {
    instance: &'a Instance,
    rank_by_level: BTreeMap<&'a LevelId, i32>,
    soft_task: BTreeMap<(&'a AuditorId, &'a TaskKey), f64>,
    soft_engagement: BTreeMap<(&'a AuditorId, &'a EngagementId), f64>,
}

impl<'a> PricingContext<'a> {
    pub fn new(instance: &'a Instance) -> PricingContext<'a> {
        let rank_by_level = instance.levels.iter().map(|l| (&l.id, l.rank)).collect();
        let mut soft_task: BTreeMap<(&AuditorId, &TaskKey), f64> = BTreeMap::new();
        let mut soft_engagement: BTreeMap<(&AuditorId, &EngagementId), f64> = BTreeMap::new();
        for pref in &instance.preferences.soft {
            match &pref.target {
                PrefTarget::Task(key) => {
                    *soft_task.entry((&pref.auditor, key)).or_default() += pref.score;
                }
                PrefTarget::Engagement(id) => {
                    *soft_engagement.entry((&pref.auditor, id)).or_default() += pref.score;
                }
            }
        }
        PricingContext {
            instance,
            rank_by_level,
            soft_task,
            soft_engagement,
        }
    }

    /// All cost terms that depend only on the (auditor, task) pair, not on
    /// the start day.
    pub fn pair_cost(&self, auditor: &Auditor, task: &TaskKey) -> CostBreakdown {
        let instance = self.instance;
        let weights = &instance.weights;
        let engagement = instance
            .engagement(&task.engagement)
            .expect("edge references a known engagement");

        let travel = travel_cost(auditor, engagement, weights);

        let auditor_rank = self.rank_by_level[&auditor.level];
        let task_rank = self.rank_by_level[&task.level];
        let substitution = weights
            .substitution(auditor_rank - task_rank)
            .expect("forbidden substitutions are pruned during enumeration");

        let familiarity = if auditor.familiar_engagements.contains(&task.engagement) {
            -weights.familiarity_reward
        } else {
            Cost::ZERO
        };

        let mut score = 0.0;
        if let Some(s) = self.soft_task.get(&(&auditor.id, task)) {
            score += s;
        }
        if let Some(s) = self.soft_engagement.get(&(&auditor.id, &task.engagement)) {
            score += s;
        }
        let soft_preference = Cost::from_f64(-weights.preference_weight.as_f64() * score);

        let stability = stability_term(
            &auditor.id,
            task,
            instance.previous_schedule.as_ref(),
            weights,
        );

        CostBreakdown {
            travel,
            substitution,
            familiarity,
            soft_preference,
            uncertainty: Cost::ZERO,
            stability,
        }
    }
}

/// Full cost breakdown of one candidate edge.
pub fn edge_cost(edge: &CandidateEdge, set: &CandidateSet, instance: &Instance) -> CostBreakdown {
    let ctx = PricingContext::new(instance);
    edge_cost_with(&ctx, edge, set)
}

fn edge_cost_with(
    ctx: &PricingContext<'_>,
    edge: &CandidateEdge,
    set: &CandidateSet,
) -> CostBreakdown {
    let auditor = ctx
        .instance
        .auditor(set.auditor_id(edge))
        .expect("edge references a known auditor");
    let mut breakdown = ctx.pair_cost(auditor, set.task_key(edge));
    breakdown.uncertainty = uncertainty_cost(edge.start_day, &ctx.instance.weights);
    breakdown
}

/// Price every edge of the set, filling `CandidateEdge::cost`.
pub fn price_edges(set: &mut CandidateSet, instance: &Instance) {
    let ctx = PricingContext::new(instance);
    // Pair-level terms are shared by all start days of one (auditor, task).
    let mut pair_cost: BTreeMap<(u32, u32), Cost> = BTreeMap::new();
    for edge in &set.edges {
        pair_cost.entry((edge.auditor, edge.task)).or_insert_with(|| {
            let auditor = ctx
                .instance
                .auditor(&set.auditor_ids[edge.auditor as usize])
                .expect("edge references a known auditor");
            ctx.pair_cost(auditor, &set.task_keys[edge.task as usize]).total()
        });
    }
    let weights = &instance.weights;
    let totals: Vec<Cost> = {
        #[cfg(feature = "parallel")]
        {
            set.edges
                .par_iter()
                .map(|e| pair_cost[&(e.auditor, e.task)] + uncertainty_cost(e.start_day, weights))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            set.edges
                .iter()
                .map(|e| pair_cost[&(e.auditor, e.task)] + uncertainty_cost(e.start_day, weights))
                .collect()
        }
    };
    for (edge, total) in set.edges.iter_mut().zip(totals) {
        edge.cost = total;
    }
}
