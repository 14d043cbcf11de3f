//! Greedy local search over per-type probability simplices.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adt::Universe;
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::probmap::{owner_of, ProbMap};
use crate::spec::{GenSpec, Strategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Amount added to or removed from one probability per move.
    pub delta: f64,
    /// Smallest cost improvement worth another step.
    pub epsilon: f64,
    pub max_steps: usize,
    /// Grid used to recognise already visited maps.
    pub quantum: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta: 0.01,
            epsilon: 1e-6,
            max_steps: 10_000,
            quantum: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), found {}", self.delta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, found {}", self.epsilon)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max steps must be at least 1".into()));
        }
        if !(self.quantum > 0.0 && self.quantum < self.delta) {
            return Err(Error::Config(format!(
                "quantum must be positive and smaller than delta, found {}",
                self.quantum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// No unvisited neighbor improves on the current map.
    LocalMinimum,
    /// The last accepted move improved the cost by at most epsilon.
    EpsilonStop,
    /// The step cap was reached.
    StepCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub probs: ProbMap,
    pub cost: f64,
}

/// The initial map followed by every accepted move.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<SearchStep>,
    pub outcome: Outcome,
    /// Number of cost evaluations, the initial map included.
    pub evaluations: usize,
}

impl SearchTrace {
    pub fn moves(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn initial_cost(&self) -> f64 {
        self.steps[0].cost
    }

    pub fn final_cost(&self) -> f64 {
        self.steps[self.steps.len() - 1].cost
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome,
            "moves": self.moves(),
            "evaluations": self.evaluations,
            "initialCost": self.initial_cost(),
            "finalCost": self.final_cost(),
            "costs": self.steps.iter().map(|s| s.cost).collect::<Vec<_>>(),
        })
    }
}

fn quantize(p: &ProbMap, quantum: f64) -> Vec<i64> {
    p.iter().map(|(_, &v)| (v / quantum).round() as i64).collect()
}

/// Maps one move away from `p`: every unpinned constructor, in key order,
/// nudged up by `delta` and down by `delta` (floored at 0), with its type
/// renormalized afterwards. Candidates equal to `p` on the quantum grid, and
/// repeats, are dropped.
pub fn neighbors(p: &ProbMap, delta: f64, pinned: &BTreeSet<String>, quantum: f64) -> Vec<ProbMap> {
    let own = quantize(p, quantum);
    let mut seen = HashSet::from([own]);
    let mut out = Vec::new();
    for (key, &v) in p.iter() {
        if pinned.contains(key) {
            continue;
        }
        let ty = owner_of(key);
        for moved in [v + delta, (v - delta).max(0.0)] {
            let mut total = 0.0;
            for (k, &w) in p.iter() {
                if owner_of(k) == ty {
                    total += if k == key { moved } else { w };
                }
            }
            if total <= 0.0 {
                continue;
            }
            let mut candidate = p.clone();
            for (k, &w) in p.iter() {
                if owner_of(k) == ty {
                    let raw = if k == key { moved } else { w };
                    candidate.insert(k.clone(), raw / total);
                }
            }
            if seen.insert(quantize(&candidate, quantum)) {
                out.push(candidate);
            }
        }
    }
    out
}

/// Best-improvement descent from `init`.
///
/// Each step evaluates every neighbor not visited before and moves to the
/// cheapest one, the first in key order on ties. The search stops when
/// nothing improves, when the improvement is at most epsilon (that last move
/// is still taken), or after `max_steps` moves.
pub fn optimize(
    cost: &CostFunction<'_>,
    size: usize,
    init: &ProbMap,
    cfg: &SearchConfig,
) -> Result<(ProbMap, SearchTrace)> {
    cfg.validate()?;
    let pinned = cost.pinned_names();
    let mut current = init.clone();
    let mut current_cost = cost.evaluate(size, &current);
    let mut visited = HashSet::from([quantize(&current, cfg.quantum)]);
    let mut steps = vec![SearchStep {
        probs: current.clone(),
        cost: current_cost,
    }];
    let mut evaluations = 1;

    let outcome = loop {
        if steps.len() > cfg.max_steps {
            break Outcome::StepCap;
        }
        let fresh: Vec<ProbMap> = neighbors(&current, cfg.delta, &pinned, cfg.quantum)
            .into_iter()
            .filter(|q| visited.insert(quantize(q, cfg.quantum)))
            .collect();
        if fresh.is_empty() {
            break Outcome::LocalMinimum;
        }
        evaluations += fresh.len();
        let costs: Vec<f64> = fresh.par_iter().map(|q| cost.evaluate(size, q)).collect();
        let (best, &best_cost) = costs
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, &f64)>, (i, c)| match acc {
                Some((_, b)) if !(c < b) => acc,
                _ => Some((i, c)),
            })
            .expect("nonempty");
        let gain = current_cost - best_cost;
        if !(gain > 0.0) {
            break Outcome::LocalMinimum;
        }
        current = fresh.into_iter().nth(best).expect("index in range");
        current_cost = best_cost;
        steps.push(SearchStep {
            probs: current.clone(),
            cost: current_cost,
        });
        if gain <= cfg.epsilon {
            break Outcome::EpsilonStop;
        }
    };
    Ok((
        current,
        SearchTrace {
            steps,
            outcome,
            evaluations,
        },
    ))
}

/// Tunes a generator of the given size against `cost`, starting from the
/// uniform map that respects the cost's pinned constructors.
pub fn derive_generator(
    u: &Universe,
    size: usize,
    cost: &CostFunction<'_>,
    cfg: &SearchConfig,
) -> Result<(GenSpec, SearchTrace)> {
    if size == 0 {
        return Err(Error::Config("generation size must be at least 1".into()));
    }
    let init = cost.initial_probmap();
    let (best, trace) = optimize(cost, size, &init, cfg)?;
    Ok((GenSpec::new(u, size, Strategy::Dragen, &best)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adt::parse_universe;
    use crate::cost::{only_cost, uniform_cost};
    use crate::probmap::uniform_probmap;
    use crate::predict::predict_constructors;

    const TREE: &str = "data Tree = LeafA | LeafB | LeafC | Node Tree Tree";

    #[test]
    fn node_bump_by_hand() {
        let u = parse_universe(TREE, "Tree").unwrap();
        let p: ProbMap = uniform_probmap(&u);
        let ns = neighbors(&p, 0.05, &BTreeSet::new(), 1e-6);
        let up = ns
            .iter()
            .find(|q| q.get("Tree.Node").unwrap() > &0.28)
            .unwrap();
        assert!((up.get("Tree.Node").unwrap() - 0.30 / 1.05).abs() < 1e-15);
        assert!((up.get("Tree.LeafA").unwrap() - 0.25 / 1.05).abs() < 1e-15);
        assert_eq!(ns.len(), 8);
    }

    #[test]
    fn single_constructor_types_have_no_moves() {
        let u = parse_universe("data U = OnlyU", "U").unwrap();
        let p: ProbMap = uniform_probmap(&u);
        assert!(neighbors(&p, 0.01, &BTreeSet::new(), 1e-6).is_empty());
    }

    #[test]
    fn clamped_zero_is_dropped_and_pins_hold() {
        let p = ProbMap::from_entries([
            ("T.A".to_string(), 0.0),
            ("T.B".to_string(), 0.5),
            ("T.C".to_string(), 0.5),
        ]);
        let ns = neighbors(&p, 0.01, &BTreeSet::new(), 1e-6);
        assert_eq!(ns.len(), 5);
        let pinned = BTreeSet::from(["T.A".to_string()]);
        for q in neighbors(&p, 0.01, &pinned, 1e-6) {
            assert_eq!(q.get("T.A"), Some(&0.0));
            let s: f64 = q.iter().map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        for bad in [
            SearchConfig { delta: 0.0, ..Default::default() },
            SearchConfig { delta: 1.0, ..Default::default() },
            SearchConfig { epsilon: 0.0, ..Default::default() },
            SearchConfig { max_steps: 0, ..Default::default() },
            SearchConfig { quantum: 0.0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn local_minimum_start_stays_put() {
        let u = parse_universe("data U = OnlyU", "U").unwrap();
        let cost = uniform_cost(&u);
        let (spec, trace) = derive_generator(&u, 10, &cost, &SearchConfig::default()).unwrap();
        assert_eq!(trace.outcome, Outcome::LocalMinimum);
        assert_eq!(trace.moves(), 0);
        assert_eq!(spec.probabilities["U.OnlyU"], 1.0);
    }

    #[test]
    fn step_cap_is_reported() {
        let u = parse_universe(TREE, "Tree").unwrap();
        let cost = uniform_cost(&u);
        let cfg = SearchConfig { max_steps: 3, ..Default::default() };
        let (_, trace) = optimize(&cost, 10, &uniform_probmap(&u), &cfg).unwrap();
        assert_eq!(trace.outcome, Outcome::StepCap);
        assert_eq!(trace.moves(), 3);
    }

    #[test]
    fn uniform_tree_lands_near_balance() {
        let u = parse_universe(TREE, "Tree").unwrap();
        let cost = uniform_cost(&u);
        let (spec, trace) = derive_generator(&u, 10, &cost, &SearchConfig::default()).unwrap();
        assert!(trace.final_cost() < trace.initial_cost());
        let r = predict_constructors(&u, &spec.probmap(), 10).unwrap();
        let node = r.per_constructor["Tree.Node"].total;
        assert!((node - 14.73).abs() / 14.73 < 0.1, "{node}");
        for w in trace.steps.windows(2).take(trace.moves().saturating_sub(1)) {
            assert!(w[0].cost - w[1].cost > SearchConfig::default().epsilon);
        }
    }

    #[test]
    fn only_keeps_pins() {
        let u = parse_universe(
            "data Tree'' = LeafA | LeafB | NodeA Tree'' Tree'' | NodeB Tree''",
            "Tree''",
        )
        .unwrap();
        let cost = only_cost(&u, &["Tree''.LeafA".into(), "Tree''.NodeA".into()]).unwrap();
        let (spec, trace) = derive_generator(&u, 10, &cost, &SearchConfig::default()).unwrap();
        assert_eq!(spec.probabilities["Tree''.LeafB"], 0.0);
        assert_eq!(spec.probabilities["Tree''.NodeB"], 0.0);
        assert!(trace.steps.iter().all(|s| s.probs.get("Tree''.NodeB") == Some(&0.0)));
    }
}
