use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adt::{parse_universe, Universe};
use crate::error::{Error, Result};
use crate::predict::star_probs;
use crate::probmap::{uniform_probmap, ProbMap};

/// Constructor budget used by the `derive` strategy when none is given.
pub const DEFAULT_DERIVE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Size-bounded, decrementing the size at every recursive call and
    /// choosing constructors with the tuned probabilities.
    Dragen,
    /// Size-bounded, halving the size at every recursive call and choosing
    /// uniformly.
    Megadeth,
    /// Unbounded uniform choice, aborted after a constructor budget.
    Derive,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dragen" => Ok(Strategy::Dragen),
            "megadeth" => Ok(Strategy::Megadeth),
            "derive" => Ok(Strategy::Derive),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}`, expected dragen, megadeth or derive"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Dragen => "dragen",
            Strategy::Megadeth => "megadeth",
            Strategy::Derive => "derive",
        })
    }
}

/// Everything a sampler needs to reproduce a tuned generator: root, size,
/// strategy, probabilities for every type and the starred terminal
/// probabilities of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenSpec {
    pub root: String,
    pub size: usize,
    pub strategy: Strategy,
    pub probabilities: BTreeMap<String, f64>,
    pub star_probabilities: BTreeMap<String, f64>,
    pub universe_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

/// SHA-256 of the canonical declarations and the root name, in hex.
pub fn universe_hash(u: &Universe) -> String {
    let mut h = Sha256::new();
    h.update(u.print().as_bytes());
    h.update(b"\n");
    h.update(u.root_name().as_bytes());
    hex::encode(h.finalize())
}

impl GenSpec {
    /// Builds a spec from probabilities covering at least the family. Types
    /// without entries get uniform probabilities.
    pub fn new(u: &Universe, size: usize, strategy: Strategy, probs: &ProbMap) -> Result<Self> {
        let full = uniform_probmap::<f64>(u).merged_with(probs);
        full.validate(u)?;
        let star = star_probs(u, &full)?;
        Ok(GenSpec {
            root: u.root_name().to_string(),
            size,
            strategy,
            probabilities: full.into_entries(),
            star_probabilities: star.probs,
            universe_hash: universe_hash(u),
            source: Some(u.print()),
            budget: (strategy == Strategy::Derive).then_some(DEFAULT_DERIVE_BUDGET),
        })
    }

    pub fn probmap(&self) -> ProbMap {
        ProbMap::from_entries(self.probabilities.clone())
    }

    pub fn star_probmap(&self) -> ProbMap {
        ProbMap::from_entries(self.star_probabilities.clone())
    }

    pub fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_DERIVE_BUDGET)
    }

    /// Reads a spec, either bare or wrapped in an object under `"spec"` as
    /// the optimizer prints it.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let inner = match value.get("spec") {
            Some(spec) if value.get("root").is_none() => spec.clone(),
            _ => value,
        };
        Ok(serde_json::from_value(inner)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }

    /// Rebuilds the universe from the embedded declarations.
    pub fn universe(&self) -> Result<Universe> {
        let source = self
            .source
            .as_deref()
            .ok_or_else(|| Error::SpecMismatch("spec carries no declarations, pass them with a file".into()))?;
        let u = parse_universe(source, &self.root)?;
        self.check(&u)?;
        Ok(u)
    }

    /// Fails unless the spec was made for `u` and its probabilities are
    /// valid there.
    pub fn check(&self, u: &Universe) -> Result<()> {
        if self.root != u.root_name() {
            return Err(Error::SpecMismatch(format!(
                "spec root `{}` differs from `{}`",
                self.root,
                u.root_name()
            )));
        }
        let hash = universe_hash(u);
        if self.universe_hash != hash {
            return Err(Error::SpecMismatch(format!(
                "universe hash {} does not match {hash}",
                self.universe_hash
            )));
        }
        if self.size == 0 && self.strategy != Strategy::Derive {
            return Err(Error::Config("spec size must be at least 1".into()));
        }
        if self.budget == Some(0) {
            return Err(Error::Config("derive budget must be positive".into()));
        }
        let p = self.probmap();
        p.validate(u)?;
        p.require_family(u)?;
        if u.types().iter().any(|t| t.ctors.iter().any(|&c| p.get(u.qualified(c)).is_none())) {
            return Err(Error::MissingProbability("spec must cover every type".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREE: &str = "data Tree = LeafA | LeafB | LeafC | Node Tree Tree";

    #[test]
    fn round_trip_and_wrapper() {
        let u = parse_universe(TREE, "Tree").unwrap();
        let spec = GenSpec::new(&u, 10, Strategy::Dragen, &uniform_probmap(&u)).unwrap();
        let text = spec.to_json().to_string();
        assert_eq!(GenSpec::from_json(&text).unwrap(), spec);
        let wrapped = serde_json::json!({"spec": spec.to_json(), "trace": {}}).to_string();
        assert_eq!(GenSpec::from_json(&wrapped).unwrap(), spec);
        assert_eq!(spec.universe().unwrap(), u);
        let v = spec.to_json();
        for key in ["root", "size", "strategy", "probabilities", "starProbabilities", "universeHash"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["strategy"], "dragen");
        assert!((spec.star_probabilities["Tree.LeafA"] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hash_mismatch() {
        let u = parse_universe(TREE, "Tree").unwrap();
        let other = parse_universe("data Tree = Leaf | Node Tree Tree", "Tree").unwrap();
        let spec = GenSpec::new(&u, 10, Strategy::Dragen, &uniform_probmap(&u)).unwrap();
        assert!(matches!(spec.check(&other), Err(Error::SpecMismatch(_))));
        assert_eq!(universe_hash(&u).len(), 64);
        assert_ne!(universe_hash(&u), universe_hash(&other));
    }

    #[test]
    fn foreign_types_default_to_uniform() {
        let src = "data Maybe a = Nothing | Just a\ndata Bool = False | True\n\
                   data Tree = LeafA (Maybe Bool) | LeafB Bool Bool | Node Tree Tree";
        let u = parse_universe(src, "Tree").unwrap();
        let family = ProbMap::from_entries([
            ("Tree.LeafA".to_string(), 0.2),
            ("Tree.LeafB".to_string(), 0.3),
            ("Tree.Node".to_string(), 0.5),
        ]);
        let spec = GenSpec::new(&u, 5, Strategy::Dragen, &family).unwrap();
        assert_eq!(spec.probabilities["Bool.True"], 0.5);
        assert_eq!(spec.probabilities["Tree.Node"], 0.5);
        assert!(!spec.star_probabilities.contains_key("Bool.True"));
    }

    #[test]
    fn strategy_names() {
        for s in [Strategy::Dragen, Strategy::Megadeth, Strategy::Derive] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("quickcheck".parse::<Strategy>().is_err());
    }
}
