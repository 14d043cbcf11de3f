//! Side-by-side comparison of predicted and observed constructor counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adt::Universe;
use crate::error::Result;
use crate::predict::{extinction_probability, predict, PredictionReport};
use crate::probmap::{uniform_probmap, ProbMap};
use crate::sample::{empirical_stats, SampleStats};
use crate::spec::{GenSpec, Strategy};

/// Observations may sit this many standard errors from the prediction.
pub const VERIFY_SIGMAS: f64 = 4.0;
/// Absolute slack added to the tolerance, so exact agreement with zero
/// spread still passes after rounding.
pub const VERIFY_SLACK: f64 = 1e-9;

/// Number of size levels a halving generator of size `n` goes through
/// before reaching 0.
pub fn halving_depth(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Expected counts for a sized spec.
///
/// A halving generator of size `n` behaves like a decrementing one of size
/// [`halving_depth`]`(n)` with uniform probabilities, since only the number
/// of levels above size 0 matters.
pub fn predict_spec(u: &Universe, spec: &GenSpec) -> Result<Option<PredictionReport<f64>>> {
    Ok(match spec.strategy {
        Strategy::Dragen => Some(predict(u, &spec.probmap(), spec.size)?),
        Strategy::Megadeth => {
            let p: ProbMap = uniform_probmap(u);
            Some(predict(u, &p, halving_depth(spec.size))?)
        }
        Strategy::Derive => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyRow {
    pub name: String,
    pub predicted: f64,
    pub observed: f64,
    pub std_err: f64,
    pub pass: bool,
}

impl VerifyRow {
    fn new(name: impl Into<String>, predicted: f64, observed: f64, std_err: f64) -> Self {
        let pass = (observed - predicted).abs() <= VERIFY_SIGMAS * std_err + VERIFY_SLACK;
        VerifyRow {
            name: name.into(),
            predicted,
            observed,
            std_err,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub strategy: Strategy,
    pub size: usize,
    pub samples: u64,
    pub seed: u64,
    pub sigmas: f64,
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
    pub stats: SampleStats,
}

/// Samples the spec `samples` times and checks every constructor's mean
/// against its prediction. For the unbounded strategy the abort rate is
/// checked against one minus the extinction probability instead.
pub fn verify(u: &Universe, spec: &GenSpec, samples: u64, seed: u64) -> Result<VerifyReport> {
    let stats = empirical_stats(u, spec, samples, seed)?;
    let rows = match predict_spec(u, spec)? {
        Some(report) => {
            let expected: BTreeMap<String, f64> = report.expected_counts();
            u.ctors()
                .iter()
                .map(|c| {
                    let key = &c.qualified;
                    VerifyRow::new(
                        key.clone(),
                        expected.get(key).copied().unwrap_or(0.0),
                        stats.mean_counts[key],
                        stats.std_err[key],
                    )
                })
                .collect()
        }
        None => {
            let q = extinction_probability(u, &uniform_probmap::<f64>(u))?;
            let predicted = 1.0 - q.values[0];
            let n = stats.samples as f64;
            let observed = stats.budget_exhausted as f64 / n;
            let se = (predicted * (1.0 - predicted) / n).sqrt();
            vec![VerifyRow::new("abortFraction", predicted, observed, se)]
        }
    };
    let pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        strategy: spec.strategy,
        size: spec.size,
        samples,
        seed,
        sigmas: VERIFY_SIGMAS,
        rows,
        pass,
        stats,
    })
}
