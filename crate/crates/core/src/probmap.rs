use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::adt::{CtorId, TypeId, Universe};
use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// Per-type normalization tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Constructor probabilities keyed by qualified name (`Type.Ctor`), one
/// distribution per type.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbMap<T = f64> {
    entries: BTreeMap<String, T>,
}

/// Owning type of a qualified key: everything before the last `.`.
pub fn owner_of(key: &str) -> &str {
    key.rsplit_once('.').map_or(key, |(t, _)| t)
}

#[derive(Serialize, Deserialize)]
struct ProbMapJson {
    probabilities: BTreeMap<String, f64>,
}

impl<T: Scalar> ProbMap<T> {
    pub fn new() -> Self {
        ProbMap {
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, T)>) -> Self {
        ProbMap {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&T> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: impl Into<String>, p: T) {
        self.entries.insert(key.into(), p);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &T)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<String, T> {
        &self.entries
    }

    pub fn into_entries(self) -> BTreeMap<String, T> {
        self.entries
    }

    /// Probability of a constructor of `u`.
    pub fn prob(&self, u: &Universe, c: CtorId) -> Result<T> {
        self.entries
            .get(u.qualified(c))
            .cloned()
            .ok_or_else(|| Error::MissingProbability(u.qualified(c).to_string()))
    }

    /// Probabilities of the family constructors, in `u.family_ctors()` order.
    pub fn family_vector(&self, u: &Universe) -> Result<Vec<T>> {
        u.family_ctors().iter().map(|&c| self.prob(u, c)).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ProbMap<U> {
        ProbMap {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// Restricts to the constructors of the given types.
    pub fn restricted_to(&self, u: &Universe, types: &[TypeId]) -> ProbMap<T> {
        let mut out = ProbMap::new();
        for &t in types {
            for &c in &u.type_info(t).ctors {
                if let Some(p) = self.entries.get(u.qualified(c)) {
                    out.insert(u.qualified(c), p.clone());
                }
            }
        }
        out
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged_with(&self, other: &ProbMap<T>) -> ProbMap<T> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.insert(k.clone(), v.clone());
        }
        out
    }

    /// Checks that every key names a constructor of `u`, entries are
    /// nonnegative, and every type with an entry is fully covered and sums to
    /// one within [`NORMALIZATION_TOLERANCE`].
    pub fn validate(&self, u: &Universe) -> Result<()> {
        let mut per_type: BTreeMap<TypeId, Vec<f64>> = BTreeMap::new();
        for (k, v) in &self.entries {
            let c = u.ctor_id(k)?;
            if u.qualified(c) != k {
                return Err(Error::InvalidProbMap(format!(
                    "key `{k}` must be qualified as `{}`",
                    u.qualified(c)
                )));
            }
            let x = v.to_f64_lossy();
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidProbMap(format!("`{k}` has probability {x}")));
            }
            per_type.entry(u.ctor(c).owner).or_default().push(x);
        }
        let mut disabled = Vec::new();
        for (&t, probs) in &per_type {
            let info = u.type_info(t);
            if probs.len() != info.ctors.len() {
                let missing = info
                    .ctors
                    .iter()
                    .find(|&&c| !self.entries.contains_key(u.qualified(c)))
                    .map(|&c| u.qualified(c).to_string())
                    .unwrap_or_default();
                return Err(Error::MissingProbability(missing));
            }
            let total: f64 = probs.iter().sum();
            if total == 0.0 {
                disabled.push(t);
                continue;
            }
            if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::InvalidProbMap(format!(
                    "probabilities of `{}` sum to {total}",
                    info.name
                )));
            }
        }
        self.check_disabled(u, &disabled)
    }

    /// A type whose constructors all have probability 0 can never be
    /// generated, so nothing generated may refer to it.
    fn check_disabled(&self, u: &Universe, disabled: &[TypeId]) -> Result<()> {
        if disabled.contains(&u.root()) {
            return Err(Error::InvalidProbMap(format!(
                "root type `{}` has no probability mass",
                u.root_name()
            )));
        }
        for (k, v) in &self.entries {
            if v.is_zero() {
                continue;
            }
            let c = u.ctor_id(k)?;
            if let Some(t) = u.ctor(c).fields.iter().filter_map(|f| f.type_id()).find(|t| disabled.contains(t)) {
                return Err(Error::InvalidProbMap(format!(
                    "`{k}` has positive probability but refers to `{}`, whose constructors all have probability 0",
                    u.type_name(t)
                )));
            }
        }
        Ok(())
    }

    /// Fails unless every family constructor has an entry.
    pub fn require_family(&self, u: &Universe) -> Result<()> {
        self.family_vector(u).map(|_| ())
    }

    /// Per-type sums, keyed by owner name.
    pub fn type_sums(&self) -> BTreeMap<String, T> {
        let mut out: BTreeMap<String, Vec<T>> = BTreeMap::new();
        for (k, v) in &self.entries {
            out.entry(owner_of(k).to_string()).or_default().push(v.clone());
        }
        out.into_iter().map(|(k, v)| (k, sum(v))).collect()
    }
}

impl ProbMap<f64> {
    pub fn from_json(text: &str, u: &Universe) -> Result<Self> {
        let parsed: ProbMapJson = serde_json::from_str(text)?;
        let map = ProbMap {
            entries: parsed.probabilities,
        };
        map.validate(u)?;
        Ok(map)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ProbMapJson {
            probabilities: self.entries.clone(),
        })
        .expect("probability map serializes")
    }

    /// Exact rational image of every entry.
    pub fn to_exact(&self) -> ProbMap<BigRational> {
        self.map(|&x| BigRational::from_float(x).expect("finite probability"))
    }
}

/// Equal probability for the constructors of every type in `u`.
pub fn uniform_probmap<T: Scalar>(u: &Universe) -> ProbMap<T> {
    let mut map = ProbMap::new();
    for info in u.types() {
        let n = T::from_count(info.ctors.len());
        for &c in &info.ctors {
            map.insert(u.qualified(c), T::one() / n.clone());
        }
    }
    map
}
