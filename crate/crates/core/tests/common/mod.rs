#![allow(dead_code)]

use std::collections::BTreeMap;

use dragen::adt::FieldRef;
use dragen::{parse_universe, ProbMap, Universe};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TREE: &str = "data Tree = LeafA | LeafB | LeafC | Node Tree Tree";
pub const TREE_PRIME: &str = "data Tree' = Leaf | NodeA Tree' Tree' | NodeB Tree'";
pub const TREE_2: &str = "data Tree'' = LeafA | LeafB | NodeA Tree'' Tree'' | NodeB Tree''";
pub const T1T2: &str = "data T1 = A | B T1 T2\ndata T2 = C | D T1";
pub const MAYBE_BOOL: &str = "data Maybe a = Nothing | Just a\ndata Bool = False | True\n\
                              data Tree = LeafA (Maybe Bool) | LeafB Bool Bool | Node Tree Tree";

pub fn probs(pairs: &[(&str, f64)]) -> ProbMap {
    ProbMap::from_entries(pairs.iter().map(|(k, v)| (k.to_string(), *v)))
}

/// Declarations of a random universe: up to `max_types` types and
/// `max_ctors` constructors in total, every type with a nullary constructor,
/// fields referring to arbitrary types.
pub fn random_source(rng: &mut impl Rng, max_types: usize, max_ctors: usize) -> String {
    let k = rng.random_range(1..=max_types);
    let total = rng.random_range(k..=max_ctors.max(k));
    let mut per_type = vec![1usize; k];
    for _ in k..total {
        per_type[rng.random_range(0..k)] += 1;
    }
    let mut lines = Vec::new();
    for (t, &n) in per_type.iter().enumerate() {
        let mut ctors = vec![format!("K{t}x0")];
        for c in 1..n {
            let arity = rng.random_range(0..=3);
            let fields: Vec<String> = (0..arity).map(|_| format!("T{}", rng.random_range(0..k))).collect();
            ctors.push(format!("K{t}x{c} {}", fields.join(" ")).trim_end().to_string());
        }
        lines.push(format!("data T{t} = {}", ctors.join(" | ")));
    }
    lines.join("\n")
}

/// Random per-type probabilities, some of them zero, always normalized.
pub fn random_probs(u: &Universe, rng: &mut impl Rng) -> ProbMap {
    let mut map = ProbMap::new();
    for info in u.types() {
        let mut w: Vec<f64> = info
            .ctors
            .iter()
            .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.01..1.0) })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let s: f64 = w.iter().sum();
        for (&c, x) in info.ctors.iter().zip(w) {
            map.insert(u.qualified(c), x / s);
        }
    }
    map
}

pub fn random_case(seed: u64) -> (Universe, ProbMap, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Recursive types the root cannot reach back are rejected; draw again.
    let u = loop {
        let src = random_source(&mut rng, 4, 8);
        match parse_universe(&src, "T0") {
            Ok(u) => break u,
            Err(dragen::Error::ForeignCycle(_)) => continue,
            Err(e) => panic!("{src}: {e}"),
        }
    };
    let p = random_probs(&u, &mut rng);
    let n = rng.random_range(1..=20);
    (u, p, n)
}

/// Expected constructor counts of a size-1 generator, by listing every
/// outcome: the root constructor, then a terminal for each family field,
/// with the probability of each combination.
pub fn depth_one_enumeration(u: &Universe, p: &ProbMap) -> BTreeMap<String, f64> {
    let star = |c: dragen::adt::CtorId| -> f64 {
        let owner = u.ctor(c).owner;
        let terms: Vec<_> = u.terminals_of(owner).unwrap();
        let total: f64 = terms.iter().map(|&t| p.get(u.qualified(t)).copied().unwrap()).sum();
        p.get(u.qualified(c)).copied().unwrap() / total
    };
    let mut expected: BTreeMap<String, f64> =
        u.family_ctors().iter().map(|&c| (u.qualified(c).to_string(), 0.0)).collect();
    for &root in &u.type_info(u.root()).ctors {
        let p_root = p.get(u.qualified(root)).copied().unwrap();
        let slots: Vec<Vec<dragen::adt::CtorId>> = u
            .ctor(root)
            .fields
            .iter()
            .filter_map(|f| match f {
                FieldRef::Family(t) => Some(u.terminals_of(*t).unwrap()),
                _ => None,
            })
            .collect();
        let mut outcomes = vec![(p_root, vec![root])];
        for slot in &slots {
            outcomes = outcomes
                .into_iter()
                .flat_map(|(prob, seen)| {
                    slot.iter().map(move |&t| {
                        let mut next = seen.clone();
                        next.push(t);
                        (prob * star(t), next)
                    })
                })
                .collect();
        }
        for (prob, outcome) in outcomes {
            for c in outcome {
                *expected.get_mut(u.qualified(c)).unwrap() += prob;
            }
        }
    }
    expected
}
