//! Convergence summaries and best-configuration selection.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::config::Param;
use super::output::SummaryRow;
use crate::trace::{RunTrace, TraceEvent};

/// What "converged" means for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowRule {
    /// From the first record within tolerance onward, every record stays
    /// within tolerance, and the run never diverged.
    #[default]
    StayWithin,
    /// Reaching the tolerance once is enough.
    FirstHit,
}

/// Convergence facts about one run, computed on the full (unthinned) trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub row: SummaryRow,
    pub seed: u64,
    /// Oracle calls at the first record within tolerance.
    pub first_hit: Option<u64>,
    /// Divergence or final-solver cap exhaustion occurred.
    pub flags: Vec<String>,
}

impl RunSummary {
    fn calls_under(&self, rule: WindowRule) -> Option<u64> {
        match rule {
            WindowRule::StayWithin => self.row.calls_to_tolerance,
            WindowRule::FirstHit => self.first_hit,
        }
    }
}

/// Scans `trace` against `f_star` within `tolerance`.
pub fn summarize(trace: &RunTrace, f_star: Option<f64>, tolerance: f64) -> (Option<u64>, Option<u64>, f64) {
    let best_f = trace.records.iter().map(|r| r.true_f).fold(f64::INFINITY, f64::min);
    let Some(f_star) = f_star else {
        return (None, None, best_f);
    };
    let within = |f: f64| (f - f_star).abs() <= tolerance;
    let first = trace.records.iter().position(|r| within(r.true_f));
    let first_hit = first.map(|i| trace.records[i].total_oracle_calls);
    let stays = first.is_some_and(|i| trace.records[i..].iter().all(|r| within(r.true_f)));
    let converged = if stays && !trace.diverged() { first_hit } else { None };
    (first_hit, converged, best_f)
}

pub fn event_flags(trace: &RunTrace) -> Vec<String> {
    trace
        .events
        .iter()
        .map(|e| match e {
            TraceEvent::Diverged { iter } => format!("diverged at iteration {iter}"),
            TraceEvent::FinalSolverCapExhausted { iter, gradient_norm } => {
                format!("final solver hit its cap at iteration {iter} (model gradient norm {gradient_norm:e})")
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Best(String),
    NoneConverged,
}

/// Parses a canonical `key=value;...` string.
pub fn parse_hyperparameters(s: &str) -> BTreeMap<String, Param> {
    s.split(';')
        .filter_map(|kv| kv.split_once('='))
        .filter_map(|(k, v)| v.parse().ok().map(|p| (k.to_string(), p)))
        .collect()
}

fn num(map: &BTreeMap<String, Param>, keys: &[&str]) -> f64 {
    keys.iter().find_map(|k| map.get(*k)).map_or(f64::INFINITY, |p| p.num().unwrap_or(f64::INFINITY))
}

/// Tie-break key: smaller batch (gradient batch first), then smaller step.
fn tie_key(hyper: &str) -> [f64; 3] {
    let map = parse_hyperparameters(hyper);
    [num(&map, &["batch", "batch_grad"]), num(&map, &["batch_hvp"]), num(&map, &["step"])]
}

/// The run with the fewest oracle calls to tolerance under `rule`; ties go
/// to the smaller batch, then the smaller step, then the smaller run id.
pub fn select_best(summaries: &[RunSummary], rule: WindowRule) -> Selection {
    summaries
        .iter()
        .filter_map(|s| s.calls_under(rule).map(|c| (c, s)))
        .min_by(|(ca, a), (cb, b)| {
            ca.cmp(cb)
                .then_with(|| {
                    let (ka, kb) = (tie_key(&a.row.hyperparameters), tie_key(&b.row.hyperparameters));
                    ka.iter()
                        .zip(&kb)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                })
                .then_with(|| a.row.run_id.cmp(&b.row.run_id))
        })
        .map_or(Selection::NoneConverged, |(_, s)| Selection::Best(s.row.run_id.clone()))
}

/// `select_best` applied separately to each master seed.
pub fn select_per_seed(summaries: &[RunSummary], rule: WindowRule) -> BTreeMap<u64, Selection> {
    let mut by_seed: BTreeMap<u64, Vec<RunSummary>> = BTreeMap::new();
    for s in summaries {
        by_seed.entry(s.seed).or_default().push(s.clone());
    }
    by_seed.into_iter().map(|(seed, group)| (seed, select_best(&group, rule))).collect()
}
