use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::value::{AtomValue, Token, Value};
use crate::adt::{Atom, CtorId, FieldRef, TypeId, Universe};
use crate::error::{Error, Result};
use crate::probmap::{uniform_probmap, ProbMap};
use crate::spec::{GenSpec, Strategy, DEFAULT_DERIVE_BUDGET};

/// Random stream for sample `index` under `seed`.
///
/// Every sample gets its own ChaCha8 stream, so results do not depend on
/// how samples are spread over threads.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn sample_atom<R: Rng + ?Sized>(atom: Atom, rng: &mut R) -> AtomValue {
    match atom {
        Atom::Int => AtomValue::Int(rng.random_range(-100..=100)),
        Atom::Double => AtomValue::Double(rng.random::<f64>()),
        Atom::Char => AtomValue::Char(char::from(rng.random_range(0x20u8..=0x7e))),
        Atom::Unit => AtomValue::Unit,
    }
}

/// Weighted choice among a fixed list of constructors.
#[derive(Debug, Clone)]
pub(crate) struct Chooser {
    ctors: Vec<CtorId>,
    cumulative: Vec<f64>,
}

impl Chooser {
    fn new(weighted: impl IntoIterator<Item = (CtorId, f64)>) -> Option<Self> {
        let mut ctors = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for (c, w) in weighted {
            if w > 0.0 {
                acc += w;
                ctors.push(c);
                cumulative.push(acc);
            }
        }
        (!ctors.is_empty()).then_some(Chooser { ctors, cumulative })
    }

    fn uniform(ctors: &[CtorId]) -> Option<Self> {
        Chooser::new(ctors.iter().map(|&c| (c, 1.0)))
    }

    pub(crate) fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> CtorId {
        if self.ctors.len() == 1 {
            return self.ctors[0];
        }
        let total = self.cumulative[self.cumulative.len() - 1];
        let r = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= r);
        self.ctors[i.min(self.ctors.len() - 1)]
    }
}

/// A field still to be filled, in pre-order.
#[derive(Debug, Clone, Copy)]
enum Task {
    Family(TypeId, usize),
    Other(TypeId),
    Ground(Atom),
}

/// Marker for a run that hit its constructor budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

/// Outcome of one generator run.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Value(Value),
    BudgetExhausted,
}

impl Sample {
    pub fn value(&self) -> Option<&Value> {
        match self {
            Sample::Value(v) => Some(v),
            Sample::BudgetExhausted => None,
        }
    }
}

/// A ready-to-run generator for one universe and strategy.
#[derive(Debug, Clone)]
pub struct Sampler<'u> {
    universe: &'u Universe,
    strategy: Strategy,
    size: usize,
    budget: u64,
    /// Choice among all constructors, per type.
    full: Vec<Option<Chooser>>,
    /// Choice among terminals at size 0, per family type.
    terminal: Vec<Option<Chooser>>,
}

impl<'u> Sampler<'u> {
    /// Size-decrementing generator driven by `probs` and the starred
    /// terminal probabilities `star`. Types missing from `probs` are chosen
    /// uniformly.
    pub fn dragen(u: &'u Universe, size: usize, probs: &ProbMap, star: &ProbMap) -> Result<Self> {
        let probs = uniform_probmap::<f64>(u).merged_with(probs);
        let mut full = Vec::with_capacity(u.types().len());
        let mut terminal = Vec::with_capacity(u.types().len());
        for (i, info) in u.types().iter().enumerate() {
            let weights = info
                .ctors
                .iter()
                .map(|&c| probs.prob(u, c).map(|p| (c, p)))
                .collect::<Result<Vec<_>>>()?;
            full.push(Chooser::new(weights));
            terminal.push(if info.in_family {
                let ts = u.terminals_of(TypeId(i))?;
                let weights = ts
                    .iter()
                    .map(|&c| star.prob(u, c).map(|p| (c, p)))
                    .collect::<Result<Vec<_>>>()?;
                Chooser::new(weights)
            } else {
                None
            });
        }
        Ok(Sampler {
            universe: u,
            strategy: Strategy::Dragen,
            size,
            budget: u64::MAX,
            full,
            terminal,
        })
    }

    /// Size-halving generator choosing uniformly at every step.
    pub fn megadeth(u: &'u Universe, size: usize) -> Result<Self> {
        Ok(Sampler {
            strategy: Strategy::Megadeth,
            size,
            budget: u64::MAX,
            ..Sampler::uniform(u)?
        })
    }

    /// Unbounded generator choosing uniformly, abandoned after `budget`
    /// constructors.
    pub fn derive(u: &'u Universe, budget: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Config("derive budget must be positive".into()));
        }
        Ok(Sampler {
            strategy: Strategy::Derive,
            budget,
            ..Sampler::uniform(u)?
        })
    }

    fn uniform(u: &'u Universe) -> Result<Self> {
        let mut terminal = Vec::new();
        for (i, info) in u.types().iter().enumerate() {
            terminal.push(if info.in_family {
                Chooser::uniform(&u.terminals_of(TypeId(i))?)
            } else {
                None
            });
        }
        Ok(Sampler {
            universe: u,
            strategy: Strategy::Derive,
            size: 0,
            budget: DEFAULT_DERIVE_BUDGET,
            full: u.types().iter().map(|t| Chooser::uniform(&t.ctors)).collect(),
            terminal,
        })
    }

    /// Generator described by a spec, which must match `u`.
    pub fn from_spec(u: &'u Universe, spec: &GenSpec) -> Result<Self> {
        spec.check(u)?;
        match spec.strategy {
            Strategy::Dragen => Sampler::dragen(u, spec.size, &spec.probmap(), &spec.star_probmap()),
            Strategy::Megadeth => Sampler::megadeth(u, spec.size),
            Strategy::Derive => Sampler::derive(u, spec.budget()),
        }
    }

    pub fn universe(&self) -> &'u Universe {
        self.universe
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    fn pick<R: Rng + ?Sized>(&self, task: Task, rng: &mut R) -> Result<(CtorId, usize)> {
        let u = self.universe;
        let (t, chooser, child_size) = match (task, self.strategy) {
            (Task::Family(t, 0), Strategy::Dragen | Strategy::Megadeth) => (t, &self.terminal[t.0], 0),
            (Task::Family(t, k), Strategy::Dragen) => (t, &self.full[t.0], k - 1),
            (Task::Family(t, k), Strategy::Megadeth) => (t, &self.full[t.0], k / 2),
            (Task::Family(t, _) | Task::Other(t), _) => (t, &self.full[t.0], 0),
            (Task::Ground(_), _) => unreachable!("atoms are not chosen"),
        };
        let chooser = chooser.as_ref().ok_or_else(|| {
            Error::InvalidProbMap(format!("no constructor of `{}` can be chosen", u.type_name(t)))
        })?;
        Ok((chooser.choose(rng), child_size))
    }

    /// Runs the generator once, handing every token to `emit` in pre-order.
    pub fn run<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut emit: impl FnMut(Token),
    ) -> Result<std::result::Result<(), BudgetExhausted>> {
        let u = self.universe;
        let mut stack = vec![Task::Family(u.root(), self.size)];
        let mut emitted = 0u64;
        while let Some(task) = stack.pop() {
            if let Task::Ground(a) = task {
                emit(Token::Atom(sample_atom(a, rng)));
                continue;
            }
            if emitted == self.budget {
                return Ok(Err(BudgetExhausted));
            }
            emitted += 1;
            let (c, child_size) = self.pick(task, rng)?;
            emit(Token::Ctor(c));
            for f in u.ctor(c).fields.iter().rev() {
                stack.push(match *f {
                    FieldRef::Family(v) => Task::Family(v, child_size),
                    FieldRef::Foreign(v) => Task::Other(v),
                    FieldRef::Ground(a) => Task::Ground(a),
                });
            }
        }
        Ok(Ok(()))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        let mut tokens = Vec::new();
        Ok(match self.run(rng, |t| tokens.push(t))? {
            Ok(()) => Sample::Value(Value::from_tokens(tokens)),
            Err(BudgetExhausted) => Sample::BudgetExhausted,
        })
    }
}

/// One value from the spec's generator with the stream for `index`.
pub fn sample_spec(u: &Universe, spec: &GenSpec, seed: u64, index: u64) -> Result<Sample> {
    Sampler::from_spec(u, spec)?.sample(&mut sample_rng(seed, index))
}

pub fn sample_dragen(u: &Universe, spec: &GenSpec, seed: u64) -> Result<Value> {
    let sampler = Sampler::dragen(u, spec.size, &spec.probmap(), &spec.star_probmap())?;
    match sampler.sample(&mut sample_rng(seed, 0))? {
        Sample::Value(v) => Ok(v),
        Sample::BudgetExhausted => unreachable!("sized generation has no budget"),
    }
}

pub fn sample_megadeth(u: &Universe, size: usize, seed: u64) -> Result<Value> {
    match Sampler::megadeth(u, size)?.sample(&mut sample_rng(seed, 0))? {
        Sample::Value(v) => Ok(v),
        Sample::BudgetExhausted => unreachable!("sized generation has no budget"),
    }
}

pub fn sample_derive(u: &Universe, budget: u64, seed: u64) -> Result<Sample> {
    Sampler::derive(u, budget)?.sample(&mut sample_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adt::parse_universe;
    use crate::spec::GenSpec;

    const TREE_PRIME: &str = "data Tree' = Leaf | NodeA Tree' Tree' | NodeB Tree'";

    fn tree_prime_spec(u: &Universe, size: usize) -> GenSpec {
        let p = ProbMap::from_entries([
            ("Tree'.Leaf".to_string(), 0.2),
            ("Tree'.NodeA".to_string(), 0.5),
            ("Tree'.NodeB".to_string(), 0.3),
        ]);
        GenSpec::new(u, size, Strategy::Dragen, &p).unwrap()
    }

    #[test]
    fn size_zero_is_a_leaf() {
        let u = parse_universe(TREE_PRIME, "Tree'").unwrap();
        let spec = tree_prime_spec(&u, 0);
        for seed in 0..50 {
            let v = sample_dragen(&u, &spec, seed).unwrap();
            assert_eq!(v.to_sexp(&u), "(Leaf)");
        }
        for seed in 0..20 {
            assert_eq!(sample_megadeth(&u, 0, seed).unwrap().size(), 1);
        }
    }

    #[test]
    fn dragen_respects_depth_and_types() {
        let u = parse_universe(TREE_PRIME, "Tree'").unwrap();
        let spec = tree_prime_spec(&u, 6);
        for seed in 0..200 {
            let v = sample_dragen(&u, &spec, seed).unwrap();
            v.type_check(&u, u.root()).unwrap();
            assert!(v.family_depth(&u) <= 6);
        }
    }

    #[test]
    fn reproducible_streams() {
        let u = parse_universe(TREE_PRIME, "Tree'").unwrap();
        let spec = tree_prime_spec(&u, 8);
        let a = sample_spec(&u, &spec, 42, 7).unwrap();
        let b = sample_spec(&u, &spec, 42, 7).unwrap();
        assert_eq!(a, b);
        let differ = (0..20).any(|i| sample_spec(&u, &spec, 42, i).unwrap() != a);
        assert!(differ);
    }

    #[test]
    fn terminal_only_type() {
        let u = parse_universe("data U = OnlyU", "U").unwrap();
        let spec = GenSpec::new(&u, 10, Strategy::Dragen, &uniform_probmap(&u)).unwrap();
        assert_eq!(sample_dragen(&u, &spec, 1).unwrap().to_sexp(&u), "(OnlyU)");
        for seed in 0..20 {
            assert!(matches!(sample_derive(&u, 1, seed).unwrap(), Sample::Value(_)));
        }
    }

    #[test]
    fn derive_budget_aborts() {
        let u = parse_universe("data N = Z | S N N", "N").unwrap();
        let runs: Vec<Sample> = (0..200).map(|s| sample_derive(&u, 3, s).unwrap()).collect();
        for r in &runs {
            if let Sample::Value(v) = r {
                assert!(v.size() <= 3);
                v.type_check(&u, u.root()).unwrap();
            }
        }
        assert!(runs.iter().any(|r| *r == Sample::BudgetExhausted));
        assert!(runs.iter().any(|r| matches!(r, Sample::Value(_))));
        assert!(sample_derive(&u, 0, 1).is_err());
    }

    #[test]
    fn megadeth_halves() {
        let u = parse_universe("data N = Z | S N", "N").unwrap();
        for seed in 0..200 {
            let v = sample_megadeth(&u, 10, seed).unwrap();
            // 10, 5, 2, 1, 0
            assert!(v.family_depth(&u) <= 4);
        }
    }

    #[test]
    fn foreign_and_ground_fields_filled() {
        let src = "data Maybe a = Nothing | Just a\ndata Bool = False | True\n\
                   data Tree = LeafA (Maybe Bool) | LeafB Bool Bool | LeafC Int Char Double Unit | Node Tree Tree";
        let u = parse_universe(src, "Tree").unwrap();
        let spec = GenSpec::new(&u, 4, Strategy::Dragen, &uniform_probmap(&u)).unwrap();
        for seed in 0..100 {
            let v = sample_dragen(&u, &spec, seed).unwrap();
            v.type_check(&u, u.root()).unwrap();
            for t in v.tokens() {
                if let Token::Atom(a) = t {
                    match a {
                        AtomValue::Int(i) => assert!((-100..=100).contains(i)),
                        AtomValue::Double(d) => assert!((0.0..1.0).contains(d)),
                        AtomValue::Char(c) => assert!((' '..='~').contains(c)),
                        AtomValue::Unit => {}
                    }
                }
            }
        }
    }

    #[test]
    fn zero_probability_never_chosen() {
        let u = parse_universe("data T = A | B | C T", "T").unwrap();
        let p = ProbMap::from_entries([
            ("T.A".to_string(), 0.0),
            ("T.B".to_string(), 0.5),
            ("T.C".to_string(), 0.5),
        ]);
        let spec = GenSpec::new(&u, 5, Strategy::Dragen, &p).unwrap();
        for seed in 0..200 {
            let counts = sample_dragen(&u, &spec, seed).unwrap().count_constructors(&u);
            assert!(!counts.contains_key("T.A"));
        }
    }
}
