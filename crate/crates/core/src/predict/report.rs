use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::{
    generations, initial_population, mean_matrix_constructors, mean_matrix_types, Granularity,
    PopulationVector,
};
use crate::adt::{build_cdg, Universe};
use crate::error::{Error, Result};
use crate::probmap::ProbMap;
use crate::scalar::{sum, Scalar};

/// Terminal probabilities renormalized within each family type, used to fill
/// the last generation level.
#[derive(Debug, Clone, PartialEq)]
pub struct StarProbs<T> {
    pub probs: BTreeMap<String, T>,
}

impl<T: Scalar> StarProbs<T> {
    pub fn get(&self, key: &str) -> Option<&T> {
        self.probs.get(key)
    }
}

pub fn star_probs<T: Scalar>(u: &Universe, p: &ProbMap<T>) -> Result<StarProbs<T>> {
    let mut probs = BTreeMap::new();
    for &t in u.family() {
        let terminals = u.terminals_of(t)?;
        if terminals.is_empty() {
            return Err(Error::NoTerminal(u.type_name(t).to_string()));
        }
        let weights = terminals
            .iter()
            .map(|&c| p.prob(u, c))
            .collect::<Result<Vec<_>>>()?;
        let total = sum(weights.iter().cloned());
        if total.is_zero() {
            let mass = u
                .type_info(t)
                .ctors
                .iter()
                .map(|&c| p.prob(u, c))
                .collect::<Result<Vec<_>>>()?;
            if !sum(mass).is_zero() {
                log::warn!(
                    "all terminals of `{}` have probability 0; the last level picks them uniformly",
                    u.type_name(t)
                );
            }
            let n = T::from_count(terminals.len());
            for &c in &terminals {
                probs.insert(u.qualified(c).to_string(), T::one() / n.clone());
            }
        } else {
            for (&c, w) in terminals.iter().zip(weights) {
                probs.insert(u.qualified(c).to_string(), w / total.clone());
            }
        }
    }
    Ok(StarProbs { probs })
}

/// Expected count of one constructor, split into the part produced by the
/// branching process up to level `n - 1` and the part filling level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructorTerms<T> {
    pub branching: T,
    pub last_level: T,
    pub total: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport<T> {
    pub size: usize,
    pub per_constructor: BTreeMap<String, ConstructorTerms<T>>,
    pub per_foreign: BTreeMap<String, T>,
}

impl<T: Scalar> PredictionReport<T> {
    pub fn total(&self, key: &str) -> Option<&T> {
        self.per_constructor.get(key).map(|t| &t.total)
    }

    /// Expected totals keyed by constructor, family and foreign together.
    pub fn expected_counts(&self) -> BTreeMap<String, T> {
        let mut out: BTreeMap<String, T> = self
            .per_constructor
            .iter()
            .map(|(k, v)| (k.clone(), v.total.clone()))
            .collect();
        out.extend(self.per_foreign.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("generation size must be at least 1".into()));
    }
    Ok(())
}

/// Expected number of every family constructor generated by a sized
/// generator of size `n`.
///
/// Runs on the type-level mean matrix: a constructor's expectation at any
/// level is the expected number of placeholders of its type times its
/// probability. Terminals additionally receive their starred share of the
/// placeholders left open at level `n`.
pub fn predict_constructors<T: Scalar>(
    u: &Universe,
    p: &ProbMap<T>,
    n: usize,
) -> Result<PredictionReport<T>> {
    check_size(n)?;
    p.require_family(u)?;
    let star = star_probs(u, p)?;
    let m = mean_matrix_types(u, p)?;
    let g0 = initial_population(u, p, Granularity::Type)?;
    // (E[G_{n-1}], E[P_{n-1}]), then one more step gives the open placeholders.
    let (last, upto) = generations(&g0, &m, n - 1)?;
    let open = last.times(&m)?;

    let mut per_constructor = BTreeMap::new();
    for (ti, &t) in u.family().iter().enumerate() {
        for &c in &u.type_info(t).ctors {
            let key = u.qualified(c);
            let branching = upto.values[ti].clone() * p.prob(u, c)?;
            let last_level = match star.get(key) {
                Some(s) if u.is_terminal(c) => s.clone() * open.values[ti].clone(),
                _ => T::zero(),
            };
            let total = branching.clone() + last_level.clone();
            per_constructor.insert(
                key.to_string(),
                ConstructorTerms {
                    branching,
                    last_level,
                    total,
                },
            );
        }
    }
    Ok(PredictionReport {
        size: n,
        per_constructor,
        per_foreign: BTreeMap::new(),
    })
}

/// Same prediction computed on the constructor-level mean matrix, following
/// the per-constructor formulas literally. Kept as an independent route for
/// cross-checking [`predict_constructors`].
pub fn predict_constructors_direct<T: Scalar>(
    u: &Universe,
    p: &ProbMap<T>,
    n: usize,
) -> Result<PredictionReport<T>> {
    check_size(n)?;
    let star = star_probs(u, p)?;
    let m = mean_matrix_constructors(u, p)?;
    let g0 = initial_population(u, p, Granularity::Constructor)?;
    let (last, upto): (PopulationVector<T>, PopulationVector<T>) = generations(&g0, &m, n - 1)?;
    let ctors = u.family_ctors();

    let mut per_constructor = BTreeMap::new();
    for (i, &c) in ctors.iter().enumerate() {
        let key = u.qualified(c);
        let branching = upto.values[i].clone();
        let last_level = if u.is_terminal(c) {
            let owner = u.ctor(c).owner;
            let mut fill = T::zero();
            for (j, &d) in ctors.iter().enumerate() {
                let beta = u.beta(owner, d);
                if beta > 0 {
                    fill = fill + T::from_count(beta) * last.values[j].clone();
                }
            }
            star.get(key).cloned().unwrap_or_else(T::zero) * fill
        } else {
            T::zero()
        };
        let total = branching.clone() + last_level.clone();
        per_constructor.insert(
            key.to_string(),
            ConstructorTerms {
                branching,
                last_level,
                total,
            },
        );
    }
    Ok(PredictionReport {
        size: n,
        per_constructor,
        per_foreign: BTreeMap::new(),
    })
}

/// Expected counts of constructors outside the family, obtained by pushing
/// the family's expected counts along the constructor dependency graph.
///
/// Each edge multiplies by its field multiplicity and the child's
/// probability; a foreign constructor sums over all its parents.
pub fn predict_foreign<T: Scalar>(
    u: &Universe,
    foreign_probs: &ProbMap<T>,
    report: &PredictionReport<T>,
) -> Result<BTreeMap<String, T>> {
    let cdg = build_cdg(u)?;
    let mut expected: BTreeMap<usize, T> = BTreeMap::new();
    for &c in u.family_ctors() {
        let total = report
            .total(u.qualified(c))
            .cloned()
            .ok_or_else(|| Error::MissingProbability(u.qualified(c).to_string()))?;
        expected.insert(c.0, total);
    }
    let parents = u
        .family_ctors()
        .iter()
        .copied()
        .chain(cdg.foreign_order.iter().flat_map(|&t| u.type_info(t).ctors.iter().copied()));
    let mut out = BTreeMap::new();
    for parent in parents {
        let count = expected.get(&parent.0).cloned().unwrap_or_else(T::zero);
        if !u.in_family(u.ctor(parent).owner) {
            out.insert(u.qualified(parent).to_string(), count.clone());
        }
        for edge in cdg.edges_from(parent) {
            let p = foreign_probs.prob(u, edge.child)?;
            let add = count.clone() * T::from_count(edge.multiplicity) * p;
            let slot = expected.entry(edge.child.0).or_insert_with(T::zero);
            *slot = slot.clone() + add;
        }
    }
    Ok(out)
}

/// Family prediction plus foreign counts, the full report.
pub fn predict<T: Scalar>(u: &Universe, p: &ProbMap<T>, n: usize) -> Result<PredictionReport<T>> {
    let mut report = predict_constructors(u, p, n)?;
    report.per_foreign = predict_foreign(u, p, &report)?;
    Ok(report)
}

/// Serialized form of a prediction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictionReportJson {
    pub size: usize,
    pub expected: BTreeMap<String, f64>,
    pub branching: BTreeMap<String, f64>,
    #[serde(rename = "lastLevel")]
    pub last_level: BTreeMap<String, f64>,
    pub foreign: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extinction: BTreeMap<String, f64>,
}

impl PredictionReport<f64> {
    pub fn to_json(&self, extinction: Option<&PopulationVector<f64>>) -> PredictionReportJson {
        PredictionReportJson {
            size: self.size,
            expected: self
                .per_constructor
                .iter()
                .map(|(k, v)| (k.clone(), v.total))
                .collect(),
            branching: self
                .per_constructor
                .iter()
                .map(|(k, v)| (k.clone(), v.branching))
                .collect(),
            last_level: self
                .per_constructor
                .iter()
                .map(|(k, v)| (k.clone(), v.last_level))
                .collect(),
            foreign: self.per_foreign.clone(),
            extinction: extinction
                .map(|q| q.index.iter().cloned().zip(q.values.iter().copied()).collect())
                .unwrap_or_default(),
        }
    }
}
