use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{print_decls, TypeDecl, TypeExpr};
use super::parse::parse_decls;
use crate::error::{Error, Result};

/// Upper bound on instantiated types; polymorphic recursion would otherwise
/// never stop producing fresh instances.
const MAX_INSTANCES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CtorId(pub usize);

/// Builtin ground atoms. They contribute no constructors to any count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    Int,
    Double,
    Char,
    Unit,
}

impl Atom {
    pub fn from_name(name: &str) -> Option<Atom> {
        match name {
            "Int" => Some(Atom::Int),
            "Double" => Some(Atom::Double),
            "Char" => Some(Atom::Char),
            "Unit" => Some(Atom::Unit),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Atom::Int => "Int",
            Atom::Double => "Double",
            Atom::Char => "Char",
            Atom::Unit => "Unit",
        }
    }
}

/// A resolved constructor field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldRef {
    /// A type inside the root's mutually recursive family.
    Family(TypeId),
    /// A monomorphized type outside the family.
    Foreign(TypeId),
    Ground(Atom),
}

impl FieldRef {
    pub fn type_id(self) -> Option<TypeId> {
        match self {
            FieldRef::Family(t) | FieldRef::Foreign(t) => Some(t),
            FieldRef::Ground(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeInfo {
    /// Concrete id: `Tree`, or `Maybe[Bool]` for an instantiated generic.
    pub name: String,
    pub ctors: Vec<CtorId>,
    pub in_family: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorInfo {
    pub name: String,
    /// `Type.Ctor`, the key used in probability maps and reports.
    pub qualified: String,
    pub owner: TypeId,
    pub fields: Vec<FieldRef>,
}

/// A fully monomorphized set of declarations reachable from a generation root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    decls: Vec<TypeDecl>,
    root: TypeId,
    types: Vec<TypeInfo>,
    ctors: Vec<CtorInfo>,
    family: Vec<TypeId>,
    family_ctors: Vec<CtorId>,
    type_edges: BTreeSet<(TypeId, TypeId)>,
    type_index: HashMap<String, TypeId>,
    ctor_index: HashMap<String, CtorId>,
}

/// Parses DSL source and builds the universe rooted at `root`.
pub fn parse_universe(source: &str, root: &str) -> Result<Universe> {
    Universe::from_decls(parse_decls(source)?, root)
}

fn instance_name(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}[{}]", args.join(","))
    }
}

struct Monomorphizer<'a> {
    decls: HashMap<&'a str, &'a TypeDecl>,
    types: Vec<TypeInfo>,
    ctors: Vec<CtorInfo>,
    type_index: HashMap<String, TypeId>,
    pending: VecDeque<(TypeId, &'a TypeDecl, Vec<ResolvedArg>)>,
}

/// A fully applied argument: either a ground atom or a concrete type.
#[derive(Debug, Clone)]
enum ResolvedArg {
    Ground(Atom),
    Type(TypeId),
}

enum Resolved {
    Ground(Atom),
    Type(TypeId),
}

impl<'a> Monomorphizer<'a> {
    fn arg_name(&self, arg: &ResolvedArg) -> String {
        match arg {
            ResolvedArg::Ground(a) => a.name().to_string(),
            ResolvedArg::Type(t) => self.types[t.0].name.clone(),
        }
    }

    fn instantiate(&mut self, name: &str, args: Vec<ResolvedArg>) -> Result<TypeId> {
        let decl = *self
            .decls
            .get(name)
            .ok_or_else(|| Error::UnknownType(name.to_string()))?;
        if decl.params.len() != args.len() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: decl.params.len(),
                found: args.len(),
            });
        }
        let arg_names: Vec<String> = args.iter().map(|a| self.arg_name(a)).collect();
        let id = instance_name(name, &arg_names);
        if let Some(&t) = self.type_index.get(&id) {
            return Ok(t);
        }
        if self.types.len() >= MAX_INSTANCES {
            return Err(Error::Unsupported(format!(
                "more than {MAX_INSTANCES} type instances (polymorphic recursion in `{name}`?)"
            )));
        }
        let t = TypeId(self.types.len());
        self.types.push(TypeInfo {
            name: id.clone(),
            ctors: Vec::new(),
            in_family: false,
        });
        self.type_index.insert(id, t);
        self.pending.push_back((t, decl, args));
        Ok(t)
    }

    fn resolve(
        &mut self,
        expr: &TypeExpr,
        decl: &TypeDecl,
        env: &[ResolvedArg],
    ) -> Result<Resolved> {
        match expr {
            TypeExpr::Var(v) => {
                let idx = decl.params.iter().position(|p| p == v).ok_or_else(|| {
                    Error::UnboundVariable {
                        var: v.clone(),
                        decl: decl.name.clone(),
                    }
                })?;
                Ok(match &env[idx] {
                    ResolvedArg::Ground(a) => Resolved::Ground(*a),
                    ResolvedArg::Type(t) => Resolved::Type(*t),
                })
            }
            TypeExpr::Con { name, args } => {
                if let Some(atom) = Atom::from_name(name) {
                    if !args.is_empty() {
                        return Err(Error::Arity {
                            name: name.clone(),
                            expected: 0,
                            found: args.len(),
                        });
                    }
                    return Ok(Resolved::Ground(atom));
                }
                let mut resolved = Vec::with_capacity(args.len());
                for a in args {
                    resolved.push(match self.resolve(a, decl, env)? {
                        Resolved::Ground(atom) => ResolvedArg::Ground(atom),
                        Resolved::Type(t) => ResolvedArg::Type(t),
                    });
                }
                Ok(Resolved::Type(self.instantiate(name, resolved)?))
            }
        }
    }

    /// Expands every pending instance; fields hold `Foreign` placeholders
    /// until the family is known.
    fn run(&mut self) -> Result<()> {
        while let Some((t, decl, env)) = self.pending.pop_front() {
            for c in &decl.constructors {
                let mut fields = Vec::with_capacity(c.fields.len());
                for f in &c.fields {
                    fields.push(match self.resolve(f, decl, &env)? {
                        Resolved::Ground(a) => FieldRef::Ground(a),
                        Resolved::Type(ft) => FieldRef::Foreign(ft),
                    });
                }
                let id = CtorId(self.ctors.len());
                let owner = &self.types[t.0].name;
                self.ctors.push(CtorInfo {
                    name: c.name.clone(),
                    qualified: format!("{owner}.{}", c.name),
                    owner: t,
                    fields,
                });
                self.types[t.0].ctors.push(id);
            }
        }
        Ok(())
    }
}

fn check_decls(decls: &[TypeDecl]) -> Result<()> {
    let mut type_names = HashSet::new();
    let mut ctor_names = HashSet::new();
    for d in decls {
        if Atom::from_name(&d.name).is_some() || !type_names.insert(d.name.as_str()) {
            return Err(Error::DuplicateType(d.name.clone()));
        }
        if d.constructors.is_empty() {
            return Err(Error::Unsupported(format!("type `{}` has no constructors", d.name)));
        }
        let mut params = HashSet::new();
        for p in &d.params {
            if !params.insert(p.as_str()) {
                return Err(Error::Unsupported(format!(
                    "type variable `{p}` repeated in `{}`",
                    d.name
                )));
            }
        }
        for c in &d.constructors {
            if !ctor_names.insert(c.name.as_str()) {
                return Err(Error::DuplicateConstructor(c.name.clone()));
            }
            for f in &c.fields {
                check_vars(f, d)?;
            }
        }
    }
    Ok(())
}

fn check_vars(expr: &TypeExpr, decl: &TypeDecl) -> Result<()> {
    match expr {
        TypeExpr::Var(v) if !decl.params.contains(v) => Err(Error::UnboundVariable {
            var: v.clone(),
            decl: decl.name.clone(),
        }),
        TypeExpr::Var(_) => Ok(()),
        TypeExpr::Con { args, .. } => args.iter().try_for_each(|a| check_vars(a, decl)),
    }
}

impl Universe {
    /// Monomorphizes `decls` starting from `root` and computes the branching
    /// family (the strongly connected component of the root in the type graph).
    pub fn from_decls(decls: Vec<TypeDecl>, root: &str) -> Result<Universe> {
        check_decls(&decls)?;
        let root_decl = decls
            .iter()
            .find(|d| d.name == root)
            .ok_or_else(|| Error::UnknownType(root.to_string()))?;
        if !root_decl.params.is_empty() {
            return Err(Error::Unsupported(format!(
                "generation root `{root}` must not take type parameters"
            )));
        }

        let (types, ctors, type_index) = {
            let mut mono = Monomorphizer {
                decls: decls.iter().map(|d| (d.name.as_str(), d)).collect(),
                types: Vec::new(),
                ctors: Vec::new(),
                type_index: HashMap::new(),
                pending: VecDeque::new(),
            };
            mono.instantiate(root, Vec::new())?;
            mono.run()?;
            (mono.types, mono.ctors, mono.type_index)
        };
        let root_id = TypeId(0);

        let mut type_edges = BTreeSet::new();
        for c in &ctors {
            for f in &c.fields {
                if let Some(t) = f.type_id() {
                    type_edges.insert((c.owner, t));
                }
            }
        }

        // Every instance is reachable from the root, so the root's component is
        // exactly the set of types that can reach the root back.
        let mut reaches_root = vec![false; types.len()];
        reaches_root[root_id.0] = true;
        let mut queue = VecDeque::from([root_id]);
        while let Some(t) = queue.pop_front() {
            for &(from, to) in &type_edges {
                if to == t && !reaches_root[from.0] {
                    reaches_root[from.0] = true;
                    queue.push_back(from);
                }
            }
        }

        let mut universe = Universe {
            decls,
            root: root_id,
            types,
            ctors,
            family: Vec::new(),
            family_ctors: Vec::new(),
            type_edges,
            type_index,
            ctor_index: HashMap::new(),
        };
        for (i, info) in universe.types.iter_mut().enumerate() {
            info.in_family = reaches_root[i];
        }
        universe.family = (0..universe.types.len())
            .filter(|&i| reaches_root[i])
            .map(TypeId)
            .collect();
        universe.family_ctors = universe
            .family
            .iter()
            .flat_map(|t| universe.types[t.0].ctors.iter().copied())
            .collect();
        for c in &mut universe.ctors {
            for f in &mut c.fields {
                if let FieldRef::Foreign(t) = *f {
                    if reaches_root[t.0] {
                        *f = FieldRef::Family(t);
                    }
                }
            }
        }
        universe.ctor_index = universe
            .ctors
            .iter()
            .enumerate()
            .map(|(i, c)| (c.qualified.clone(), CtorId(i)))
            .collect();
        universe.check_foreign_acyclic()?;
        Ok(universe)
    }

    fn check_foreign_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks = vec![Mark::New; self.types.len()];
        for start in self.foreign_types() {
            if marks[start.0] != Mark::New {
                continue;
            }
            // Iterative DFS; the stack holds (type, next successor index).
            let mut stack = vec![(start, 0usize)];
            marks[start.0] = Mark::Active;
            while let Some(&(t, next)) = stack.last() {
                let succs = self.foreign_successors(t);
                if next < succs.len() {
                    let s = succs[next];
                    if let Some(top) = stack.last_mut() {
                        top.1 += 1;
                    }
                    match marks[s.0] {
                        Mark::Active => {
                            let mut cycle: Vec<&str> = stack
                                .iter()
                                .skip_while(|(x, _)| *x != s)
                                .map(|(x, _)| self.type_name(*x))
                                .collect();
                            cycle.push(self.type_name(s));
                            return Err(Error::ForeignCycle(cycle.join(" -> ")));
                        }
                        Mark::New => {
                            marks[s.0] = Mark::Active;
                            stack.push((s, 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    marks[t.0] = Mark::Done;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    fn foreign_successors(&self, t: TypeId) -> Vec<TypeId> {
        self.type_edges
            .range((t, TypeId(0))..=(t, TypeId(usize::MAX)))
            .map(|&(_, to)| to)
            .filter(|to| !self.types[to.0].in_family)
            .collect()
    }

    pub fn root(&self) -> TypeId {
        self.root
    }

    pub fn root_name(&self) -> &str {
        &self.types[self.root.0].name
    }

    /// Source-level declarations, as parsed.
    pub fn decls(&self) -> &[TypeDecl] {
        &self.decls
    }

    pub fn types(&self) -> &[TypeInfo] {
        &self.types
    }

    pub fn ctors(&self) -> &[CtorInfo] {
        &self.ctors
    }

    pub fn type_info(&self, t: TypeId) -> &TypeInfo {
        &self.types[t.0]
    }

    pub fn ctor(&self, c: CtorId) -> &CtorInfo {
        &self.ctors[c.0]
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.types[t.0].name
    }

    /// The root's mutually recursive family, root first.
    pub fn family(&self) -> &[TypeId] {
        &self.family
    }

    /// Constructors of the family, grouped by type in family order.
    pub fn family_ctors(&self) -> &[CtorId] {
        &self.family_ctors
    }

    pub fn foreign_types(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.types.len())
            .map(TypeId)
            .filter(|t| !self.types[t.0].in_family)
    }

    pub fn in_family(&self, t: TypeId) -> bool {
        self.types[t.0].in_family
    }

    /// Directed type-reference edges `u -> v`.
    pub fn type_edges(&self) -> &BTreeSet<(TypeId, TypeId)> {
        &self.type_edges
    }

    pub fn type_id(&self, name: &str) -> Result<TypeId> {
        self.type_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    /// Resolves `Type.Ctor`, or a bare constructor name when it is unambiguous.
    pub fn ctor_id(&self, name: &str) -> Result<CtorId> {
        if let Some(&c) = self.ctor_index.get(name) {
            return Ok(c);
        }
        let mut matches = self.ctors.iter().enumerate().filter(|(_, c)| c.name == name);
        match (matches.next(), matches.next()) {
            (Some((i, _)), None) => Ok(CtorId(i)),
            (Some(_), Some(_)) => Err(Error::AmbiguousConstructor(name.to_string())),
            _ => Err(Error::UnknownConstructor(name.to_string())),
        }
    }

    pub fn qualified(&self, c: CtorId) -> &str {
        &self.ctors[c.0].qualified
    }

    /// Number of fields of `c` whose type is `t`.
    pub fn beta(&self, t: TypeId, c: CtorId) -> usize {
        self.ctors[c.0]
            .fields
            .iter()
            .filter(|f| f.type_id() == Some(t))
            .count()
    }

    /// Branching factor from constructor `ctor` to type `ty`, by name.
    pub fn branching_factor(&self, ctor: &str, ty: &str) -> Result<usize> {
        let c = self.ctor_id(ctor)?;
        let t = self.type_id(ty)?;
        Ok(self.beta(t, c))
    }

    /// A constructor is terminal when none of its fields refers to the family.
    pub fn is_terminal(&self, c: CtorId) -> bool {
        !self.ctors[c.0]
            .fields
            .iter()
            .any(|f| matches!(f, FieldRef::Family(_)))
    }

    pub fn terminals_of(&self, t: TypeId) -> Result<Vec<CtorId>> {
        if !self.in_family(t) {
            return Err(Error::NotInFamily(self.type_name(t).to_string()));
        }
        Ok(self.types[t.0]
            .ctors
            .iter()
            .copied()
            .filter(|&c| self.is_terminal(c))
            .collect())
    }

    /// Terminal constructors of a family type, by name.
    pub fn terminal_constructors(&self, ty: &str) -> Result<Vec<String>> {
        let t = self.type_id(ty)?;
        Ok(self
            .terminals_of(t)?
            .into_iter()
            .map(|c| self.qualified(c).to_string())
            .collect())
    }

    /// Canonical DSL rendering of the source declarations.
    pub fn print(&self) -> String {
        print_decls(&self.decls)
    }
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREE: &str = "data Tree = LeafA | LeafB | LeafC | Node Tree Tree";
    const T1T2: &str = "data T1 = A | B T1 T2\ndata T2 = C | D T1";

    #[test]
    fn tree_universe() {
        let u = parse_universe(TREE, "Tree").unwrap();
        assert_eq!(u.family().len(), 1);
        assert_eq!(u.family_ctors().len(), 4);
        assert_eq!(u.branching_factor("Node", "Tree").unwrap(), 2);
        assert_eq!(u.branching_factor("LeafA", "Tree").unwrap(), 0);
        assert_eq!(
            u.terminal_constructors("Tree").unwrap(),
            vec!["Tree.LeafA", "Tree.LeafB", "Tree.LeafC"]
        );
    }

    #[test]
    fn singleton_without_recursion() {
        let u = parse_universe("data U = OnlyU", "U").unwrap();
        assert_eq!(u.family(), &[TypeId(0)]);
        assert!(u.type_edges().is_empty());
        assert_eq!(u.terminal_constructors("U").unwrap(), vec!["U.OnlyU"]);
    }

    #[test]
    fn mutual_recursion_family() {
        let u = parse_universe(T1T2, "T1").unwrap();
        let names: Vec<_> = u.family().iter().map(|&t| u.type_name(t)).collect();
        assert_eq!(names, vec!["T1", "T2"]);
        assert_eq!(u.branching_factor("B", "T2").unwrap(), 1);
        assert_eq!(u.terminal_constructors("T2").unwrap(), vec!["T2.C"]);
        let order: Vec<_> = u.family_ctors().iter().map(|&c| u.qualified(c)).collect();
        assert_eq!(order, vec!["T1.A", "T1.B", "T2.C", "T2.D"]);
    }

    #[test]
    fn tree_double_prime_terminals() {
        let u = parse_universe(
            "data Tree'' = LeafA | LeafB | NodeA Tree'' Tree'' | NodeB Tree''",
            "Tree''",
        )
        .unwrap();
        assert_eq!(
            u.terminal_constructors("Tree''").unwrap(),
            vec!["Tree''.LeafA", "Tree''.LeafB"]
        );
    }

    #[test]
    fn monomorphizes_generic_applications() {
        let src = "data Maybe a = Nothing | Just a\ndata Bool = False | True\n\
                   data Tree = LeafA (Maybe Bool) | LeafB Bool Bool | Node Tree Tree";
        let u = parse_universe(src, "Tree").unwrap();
        let maybe = u.type_id("Maybe[Bool]").unwrap();
        assert!(!u.in_family(maybe));
        assert_eq!(u.ctor_id("Maybe[Bool].Just").unwrap(), u.ctor_id("Just").unwrap());
        assert_eq!(u.branching_factor("LeafB", "Bool").unwrap(), 2);
        // foreign and ground fields keep a constructor terminal
        assert_eq!(u.terminal_constructors("Tree").unwrap().len(), 2);
        let just = u.ctor(u.ctor_id("Just").unwrap());
        assert_eq!(just.fields, vec![FieldRef::Foreign(u.type_id("Bool").unwrap())]);
    }

    #[test]
    fn two_instances_of_one_generic_stay_distinct() {
        let src = "data Maybe a = Nothing | Just a\ndata Bool = F | T\n\
                   data R = R (Maybe Bool) (Maybe Int)";
        let u = parse_universe(src, "R").unwrap();
        assert!(u.type_id("Maybe[Bool]").is_ok());
        assert!(u.type_id("Maybe[Int]").is_ok());
        assert!(matches!(u.ctor_id("Just"), Err(Error::AmbiguousConstructor(_))));
    }

    #[test]
    fn generic_recursion_joins_the_family() {
        let src = "data List a = Nil | Cons a (List a)\ndata Rose = Rose Int (List Rose)";
        let u = parse_universe(src, "Rose").unwrap();
        let names: Vec<_> = u.family().iter().map(|&t| u.type_name(t)).collect();
        assert_eq!(names, vec!["Rose", "List[Rose]"]);
    }

    #[test]
    fn ground_atoms_resolve() {
        let u = parse_universe("data P = P Int Double Char Unit", "P").unwrap();
        let p = u.ctor(u.ctor_id("P").unwrap());
        assert_eq!(
            p.fields,
            vec![
                FieldRef::Ground(Atom::Int),
                FieldRef::Ground(Atom::Double),
                FieldRef::Ground(Atom::Char),
                FieldRef::Ground(Atom::Unit)
            ]
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_universe("data T = A U", "T"), Err(Error::UnknownType(_))));
        assert!(matches!(parse_universe("data T = A", "X"), Err(Error::UnknownType(_))));
        assert!(matches!(
            parse_universe("data T = A | B\ndata U = A", "T"),
            Err(Error::DuplicateConstructor(_))
        ));
        assert!(matches!(
            parse_universe("data T = A b", "T"),
            Err(Error::UnboundVariable { .. })
        ));
        assert!(matches!(
            parse_universe("data M a = N | J a\ndata T = A M", "T"),
            Err(Error::Arity { .. })
        ));
        assert!(matches!(
            parse_universe("data M a = N | J a", "M"),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            parse_universe("data T = A\ndata T = B", "T"),
            Err(Error::DuplicateType(_))
        ));
        assert!(matches!(parse_universe("data Int = I", "Int"), Err(Error::DuplicateType(_))));
    }

    #[test]
    fn recursive_foreign_component_rejected() {
        let src = "data L = Nil | Cons L\ndata P = P L";
        assert!(matches!(parse_universe(src, "P"), Err(Error::ForeignCycle(_))));
    }

    #[test]
    fn polymorphic_recursion_is_unsupported() {
        let src = "data N a = Z a | S (N (N a))\ndata R = R (N Int)";
        assert!(matches!(parse_universe(src, "R"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn print_round_trip() {
        let src = "data Maybe a = Nothing | Just a\ndata Bool = False | True\n\
                   data Tree = LeafA (Maybe Bool) | LeafB Bool Bool | Node Tree Tree";
        let u = parse_universe(src, "Tree").unwrap();
        let again = parse_universe(&u.print(), "Tree").unwrap();
        assert_eq!(u, again);
    }
}
