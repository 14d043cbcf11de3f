use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::census::derive_census;
use super::engine::{sample_rng, Sampler};
use super::value::Token;
use crate::adt::Universe;
use crate::error::{Error, Result};
use crate::spec::{GenSpec, Strategy};

/// Aggregate constructor counts over many generated values.
///
/// Means and standard errors are taken over the runs that produced a value;
/// runs abandoned at the constructor budget are only counted in
/// `budget_exhausted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleStats {
    pub samples: u64,
    pub mean_counts: BTreeMap<String, f64>,
    pub std_err: BTreeMap<String, f64>,
    /// Total constructors per value → number of values.
    pub size_histogram: BTreeMap<u64, u64>,
    pub budget_exhausted: u64,
}

impl SampleStats {
    pub fn completed(&self) -> u64 {
        self.samples - self.budget_exhausted
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("stats serialize")
    }

    /// Size distribution as CSV with a `constructors,count` header.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("constructors,count\n");
        for (size, n) in &self.size_histogram {
            out.push_str(&format!("{size},{n}\n"));
        }
        out
    }

    /// Fraction of values with at most `k` constructors.
    pub fn mass_at_most(&self, k: u64) -> f64 {
        let hit: u64 = self.size_histogram.range(..=k).map(|(_, n)| n).sum();
        hit as f64 / self.completed().max(1) as f64
    }
}

/// Integer sums, so the result is independent of how samples are grouped.
#[derive(Clone)]
struct Totals {
    sum: Vec<u128>,
    sum_sq: Vec<u128>,
    histogram: BTreeMap<u64, u64>,
    exhausted: u64,
    scratch: Vec<u64>,
}

impl Totals {
    fn new(n: usize) -> Self {
        Totals {
            sum: vec![0; n],
            sum_sq: vec![0; n],
            histogram: BTreeMap::new(),
            exhausted: 0,
            scratch: vec![0; n],
        }
    }

    fn record(&mut self, size: Option<u64>) {
        match size {
            Some(size) => {
                for (i, x) in self.scratch.iter_mut().enumerate() {
                    let v = u128::from(*x);
                    self.sum[i] += v;
                    self.sum_sq[i] += v * v;
                    *x = 0;
                }
                *self.histogram.entry(size).or_insert(0) += 1;
            }
            None => {
                self.scratch.iter_mut().for_each(|x| *x = 0);
                self.exhausted += 1;
            }
        }
    }

    fn merge(mut self, other: Totals) -> Totals {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        self.exhausted += other.exhausted;
        self
    }
}

impl<'u> Sampler<'u> {
    /// Runs the generator `samples` times, sample `i` on stream `i` of
    /// `seed`. Unbounded runs are counted generation by generation rather
    /// than built.
    pub fn stats(&self, samples: u64, seed: u64) -> Result<SampleStats> {
        self.collect(samples, seed, self.strategy() == Strategy::Derive)
    }

    /// Like [`Sampler::stats`] but always builds every value depth first.
    pub fn stats_sequential(&self, samples: u64, seed: u64) -> Result<SampleStats> {
        self.collect(samples, seed, false)
    }

    fn collect(&self, samples: u64, seed: u64, census: bool) -> Result<SampleStats> {
        if samples == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        let u = self.universe();
        let n = u.ctors().len();
        let totals = (0..samples)
            .into_par_iter()
            .try_fold(
                || Totals::new(n),
                |mut acc, i| -> Result<Totals> {
                    let mut rng = sample_rng(seed, i);
                    let size = if census {
                        derive_census(self, &mut rng, &mut acc.scratch)
                    } else {
                        let scratch = &mut acc.scratch;
                        let mut size = 0u64;
                        let done = self.run(&mut rng, |t| {
                            if let Token::Ctor(c) = t {
                                scratch[c.0] += 1;
                                size += 1;
                            }
                        })?;
                        done.ok().map(|()| size)
                    };
                    acc.record(size);
                    Ok(acc)
                },
            )
            .try_reduce(|| Totals::new(n), |a, b| Ok(a.merge(b)))?;
        Ok(summarize(u, samples, totals))
    }
}

fn summarize(u: &Universe, samples: u64, t: Totals) -> SampleStats {
    let completed = samples - t.exhausted;
    let m = completed as f64;
    let mut mean_counts = BTreeMap::new();
    let mut std_err = BTreeMap::new();
    for (i, info) in u.ctors().iter().enumerate() {
        let (mean, se) = if completed == 0 {
            (0.0, 0.0)
        } else {
            let mean = t.sum[i] as f64 / m;
            let se = if completed > 1 {
                // exact integer numerator of the sample variance
                let centered = (completed as u128) * t.sum_sq[i] - t.sum[i] * t.sum[i];
                let var = centered as f64 / (m * (m - 1.0));
                (var / m).sqrt()
            } else {
                0.0
            };
            (mean, se)
        };
        mean_counts.insert(info.qualified.clone(), mean);
        std_err.insert(info.qualified.clone(), se);
    }
    SampleStats {
        samples,
        mean_counts,
        std_err,
        size_histogram: t.histogram,
        budget_exhausted: t.exhausted,
    }
}

/// Statistics of `samples` runs of the spec's generator.
pub fn empirical_stats(u: &Universe, spec: &GenSpec, samples: u64, seed: u64) -> Result<SampleStats> {
    Sampler::from_spec(u, spec)?.stats(samples, seed)
}
