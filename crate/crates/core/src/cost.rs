//! Cost functions scoring how far a probability assignment's predicted
//! constructor counts are from a target distribution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::adt::{CtorId, FieldRef, TypeId, Universe};
use crate::error::{Error, Result};
use crate::predict::predict_constructors;
use crate::probmap::ProbMap;

/// Pearson's statistic `sum (o - e)^2 / e`.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(Error::ChiSquare(format!(
            "{} observed values against {} expected values",
            observed.len(),
            expected.len()
        )));
    }
    if let Some(e) = expected.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::ChiSquare(format!("expected value {e} is not positive")));
    }
    Ok(observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum())
}

/// Parsed form of a cost-function description such as `uniform` or
/// `weighted(Tree.LeafA=3,Tree.LeafB=1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    Uniform,
    Weighted(Vec<(String, f64)>),
    Only(Vec<String>),
    Without(Vec<String>),
    OnlyTypes(Vec<String>),
    WithoutTypes(Vec<String>),
}

impl FromStr for CostSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "uniform" {
            return Ok(CostSpec::Uniform);
        }
        let (head, rest) = text
            .split_once('(')
            .ok_or_else(|| Error::CostSyntax(format!("expected `name(...)` or `uniform`, found `{text}`")))?;
        let body = rest
            .strip_suffix(')')
            .ok_or_else(|| Error::CostSyntax(format!("missing closing parenthesis in `{text}`")))?;
        let items: Vec<&str> = body
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        let names = || -> Result<Vec<String>> {
            items
                .iter()
                .map(|s| {
                    if s.chars().all(|c| c.is_alphanumeric() || "._'[],".contains(c)) {
                        Ok(s.to_string())
                    } else {
                        Err(Error::CostSyntax(format!("bad name `{s}`")))
                    }
                })
                .collect()
        };
        match head.trim() {
            "weighted" => {
                let mut weights = Vec::new();
                for item in &items {
                    let (k, w) = item
                        .split_once('=')
                        .ok_or_else(|| Error::CostSyntax(format!("expected `Ctor=weight`, found `{item}`")))?;
                    let w: f64 = w
                        .trim()
                        .parse()
                        .map_err(|_| Error::CostSyntax(format!("bad weight in `{item}`")))?;
                    weights.push((k.trim().to_string(), w));
                }
                Ok(CostSpec::Weighted(weights))
            }
            "only" => Ok(CostSpec::Only(names()?)),
            "without" => Ok(CostSpec::Without(names()?)),
            "onlyTypes" => Ok(CostSpec::OnlyTypes(names()?)),
            "withoutTypes" => Ok(CostSpec::WithoutTypes(names()?)),
            other => Err(Error::CostSyntax(format!("unknown cost function `{other}`"))),
        }
    }
}

impl fmt::Display for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[String]| {
            write!(f, "{name}({})", xs.join(","))
        };
        match self {
            CostSpec::Uniform => f.write_str("uniform"),
            CostSpec::Weighted(ws) => {
                let parts: Vec<String> = ws.iter().map(|(k, w)| format!("{k}={w}")).collect();
                write!(f, "weighted({})", parts.join(","))
            }
            CostSpec::Only(xs) => list(f, "only", xs),
            CostSpec::Without(xs) => list(f, "without", xs),
            CostSpec::OnlyTypes(xs) => list(f, "onlyTypes", xs),
            CostSpec::WithoutTypes(xs) => list(f, "withoutTypes", xs),
        }
    }
}

/// A target distribution over family constructors plus the constructors held
/// at probability zero.
///
/// Evaluation predicts the counts for the given size and returns the
/// chi-square distance to `weight * size` over the targeted constructors.
#[derive(Debug, Clone)]
pub struct CostFunction<'u> {
    universe: &'u Universe,
    spec: CostSpec,
    targets: Vec<(CtorId, f64)>,
    pinned: BTreeSet<CtorId>,
}

impl<'u> CostFunction<'u> {
    pub fn new(u: &'u Universe, spec: &CostSpec) -> Result<Self> {
        match spec {
            CostSpec::Uniform => Ok(uniform_cost(u)),
            CostSpec::Weighted(ws) => weighted_cost(u, ws),
            CostSpec::Only(xs) => only_cost(u, xs),
            CostSpec::Without(xs) => without_cost(u, xs),
            CostSpec::OnlyTypes(xs) => only_types_cost(u, xs),
            CostSpec::WithoutTypes(xs) => without_types_cost(u, xs),
        }
    }

    pub fn parse(u: &'u Universe, text: &str) -> Result<Self> {
        CostFunction::new(u, &text.parse()?)
    }

    pub fn universe(&self) -> &'u Universe {
        self.universe
    }

    pub fn spec(&self) -> &CostSpec {
        &self.spec
    }

    /// Constructors pinned at probability 0.
    pub fn pinned(&self) -> &BTreeSet<CtorId> {
        &self.pinned
    }

    pub fn pinned_names(&self) -> BTreeSet<String> {
        self.pinned
            .iter()
            .map(|&c| self.universe.qualified(c).to_string())
            .collect()
    }

    pub fn is_pinned(&self, key: &str) -> bool {
        self.universe
            .ctor_id(key)
            .map(|c| self.pinned.contains(&c))
            .unwrap_or(false)
    }

    /// Targeted constructors with their weights, in family order.
    pub fn targets(&self) -> Vec<(String, f64)> {
        self.targets
            .iter()
            .map(|&(c, w)| (self.universe.qualified(c).to_string(), w))
            .collect()
    }

    /// Cost of `p` at `size`. Maps the prediction engine rejects, or that
    /// break a pinned zero, cost `f64::INFINITY`.
    pub fn evaluate(&self, size: usize, p: &ProbMap) -> f64 {
        self.try_evaluate(size, p).unwrap_or(f64::INFINITY)
    }

    pub fn try_evaluate(&self, size: usize, p: &ProbMap) -> Result<f64> {
        let u = self.universe;
        for &c in &self.pinned {
            if p.prob(u, c)? != 0.0 {
                return Err(Error::Constraint(format!(
                    "`{}` is pinned to 0",
                    u.qualified(c)
                )));
            }
        }
        let report = predict_constructors(u, p, size)?;
        let n = size as f64;
        let mut observed = Vec::with_capacity(self.targets.len());
        let mut expected = Vec::with_capacity(self.targets.len());
        for &(c, w) in &self.targets {
            observed.push(report.per_constructor[u.qualified(c)].total);
            expected.push(w * n);
        }
        chi_square(&observed, &expected)
    }

    /// Uniform distribution over the family with pinned constructors at 0
    /// and the rest of each type sharing its mass equally.
    pub fn initial_probmap(&self) -> ProbMap {
        let u = self.universe;
        let mut map = ProbMap::new();
        for &t in u.family() {
            let ctors = &u.type_info(t).ctors;
            let free = ctors.iter().filter(|c| !self.pinned.contains(c)).count();
            for &c in ctors {
                let p = if self.pinned.contains(&c) {
                    0.0
                } else {
                    1.0 / free as f64
                };
                map.insert(u.qualified(c), p);
            }
        }
        map
    }
}

/// Every family constructor targets `size`.
pub fn uniform_cost(u: &Universe) -> CostFunction<'_> {
    CostFunction {
        universe: u,
        spec: CostSpec::Uniform,
        targets: u.family_ctors().iter().map(|&c| (c, 1.0)).collect(),
        pinned: BTreeSet::new(),
    }
}

fn family_ctor(u: &Universe, name: &str) -> Result<CtorId> {
    let c = u.ctor_id(name)?;
    if !u.in_family(u.ctor(c).owner) {
        return Err(Error::NotInFamily(u.qualified(c).to_string()));
    }
    Ok(c)
}

/// Listed constructors target `weight * size`; the others are free.
pub fn weighted_cost<'u>(u: &'u Universe, weights: &[(String, f64)]) -> Result<CostFunction<'u>> {
    if weights.is_empty() {
        return Err(Error::CostSyntax("weighted cost needs at least one constructor".into()));
    }
    let mut by_ctor = BTreeMap::new();
    for (name, w) in weights {
        if !(*w > 0.0 && w.is_finite()) {
            return Err(Error::CostSyntax(format!("weight of `{name}` must be positive, found {w}")));
        }
        let c = family_ctor(u, name)?;
        if by_ctor.insert(c, *w).is_some() {
            return Err(Error::CostSyntax(format!("`{name}` is weighted twice")));
        }
    }
    Ok(CostFunction {
        universe: u,
        spec: CostSpec::Weighted(weights.to_vec()),
        targets: u
            .family_ctors()
            .iter()
            .filter_map(|c| by_ctor.get(c).map(|&w| (*c, w)))
            .collect(),
        pinned: BTreeSet::new(),
    })
}

/// Only the listed family constructors may be generated.
pub fn only_cost<'u>(u: &'u Universe, whitelist: &[String]) -> Result<CostFunction<'u>> {
    let keep = whitelist
        .iter()
        .map(|n| family_ctor(u, n))
        .collect::<Result<BTreeSet<_>>>()?;
    let excluded = u
        .family_ctors()
        .iter()
        .copied()
        .filter(|c| !keep.contains(c))
        .collect();
    pinned_cost(u, CostSpec::Only(whitelist.to_vec()), excluded)
}

/// The listed family constructors are never generated.
pub fn without_cost<'u>(u: &'u Universe, blacklist: &[String]) -> Result<CostFunction<'u>> {
    let excluded = blacklist
        .iter()
        .map(|n| family_ctor(u, n))
        .collect::<Result<BTreeSet<_>>>()?;
    pinned_cost(u, CostSpec::Without(blacklist.to_vec()), excluded)
}

/// Only the listed types may appear in generated values, besides ground
/// atoms.
pub fn only_types_cost<'u>(u: &'u Universe, types: &[String]) -> Result<CostFunction<'u>> {
    let keep = types
        .iter()
        .map(|n| u.type_id(n))
        .collect::<Result<BTreeSet<_>>>()?;
    let excluded = (0..u.types().len())
        .map(TypeId)
        .filter(|t| !keep.contains(t))
        .collect();
    type_cost(u, CostSpec::OnlyTypes(types.to_vec()), excluded)
}

/// The listed types never appear in generated values.
pub fn without_types_cost<'u>(u: &'u Universe, types: &[String]) -> Result<CostFunction<'u>> {
    let excluded = types
        .iter()
        .map(|n| u.type_id(n))
        .collect::<Result<BTreeSet<_>>>()?;
    type_cost(u, CostSpec::WithoutTypes(types.to_vec()), excluded)
}

fn type_cost(u: &Universe, spec: CostSpec, excluded: BTreeSet<TypeId>) -> Result<CostFunction<'_>> {
    if excluded.contains(&u.root()) {
        return Err(Error::Constraint(format!(
            "the root type `{}` cannot be excluded",
            u.root_name()
        )));
    }
    // A foreign type that can reach an excluded type is itself unusable,
    // since its values would contain the excluded one.
    let mut tainted = excluded;
    loop {
        let grown: Vec<TypeId> = u
            .foreign_types()
            .filter(|t| !tainted.contains(t))
            .filter(|&t| {
                u.type_info(t)
                    .ctors
                    .iter()
                    .any(|&c| refers_to(u, c, &tainted))
            })
            .collect();
        if grown.is_empty() {
            break;
        }
        tainted.extend(grown);
    }
    let mut pinned = BTreeSet::new();
    for &c in u.family_ctors() {
        if tainted.contains(&u.ctor(c).owner) || refers_to(u, c, &tainted) {
            pinned.insert(c);
        }
    }
    let dropped: BTreeSet<TypeId> = u
        .family()
        .iter()
        .copied()
        .filter(|t| tainted.contains(t))
        .collect();
    finish(u, spec, pinned, &dropped, false)
}

fn refers_to(u: &Universe, c: CtorId, types: &BTreeSet<TypeId>) -> bool {
    u.ctor(c)
        .fields
        .iter()
        .any(|f| matches!(f, FieldRef::Family(t) | FieldRef::Foreign(t) if types.contains(t)))
}

fn pinned_cost(u: &Universe, spec: CostSpec, excluded: BTreeSet<CtorId>) -> Result<CostFunction<'_>> {
    finish(u, spec, excluded, &BTreeSet::new(), true)
}

/// Pins the family types no retained constructor leads to, then checks that
/// every type still generated keeps a constructor and a terminal.
fn finish<'u>(
    u: &'u Universe,
    spec: CostSpec,
    mut pinned: BTreeSet<CtorId>,
    dropped: &BTreeSet<TypeId>,
    user_pins: bool,
) -> Result<CostFunction<'u>> {
    let mut reachable = BTreeSet::from([u.root()]);
    let mut stack = vec![u.root()];
    while let Some(t) = stack.pop() {
        for &c in &u.type_info(t).ctors {
            if pinned.contains(&c) {
                continue;
            }
            for f in &u.ctor(c).fields {
                if let FieldRef::Family(v) = f {
                    if reachable.insert(*v) {
                        stack.push(*v);
                    }
                }
            }
        }
    }
    for &t in u.family() {
        if !reachable.contains(&t) {
            pinned.extend(u.type_info(t).ctors.iter().copied());
            continue;
        }
        let info = u.type_info(t);
        if dropped.contains(&t) || info.ctors.iter().all(|c| pinned.contains(c)) {
            let why = if user_pins { "excludes" } else { "leaves no usable constructor of" };
            return Err(Error::Constraint(format!(
                "the constraint {why} every constructor of `{}`",
                info.name
            )));
        }
        if u.terminals_of(t)?.iter().all(|c| pinned.contains(c)) {
            return Err(Error::Constraint(format!(
                "no terminal constructor of `{}` remains, generation could not stop",
                info.name
            )));
        }
    }
    let targets = u
        .family_ctors()
        .iter()
        .filter(|c| !pinned.contains(c))
        .map(|&c| (c, 1.0))
        .collect();
    Ok(CostFunction {
        universe: u,
        spec,
        targets,
        pinned,
    })
}
