use std::collections::{BTreeMap, VecDeque};

use super::universe::{CtorId, FieldRef, TypeId, Universe};
use crate::error::{Error, Result};

/// Edge of a constructor dependency graph: `parent` has `multiplicity` fields
/// of the type owning `child`, and `child` is drawn with its own probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdgEdge {
    pub parent: CtorId,
    pub child: CtorId,
    pub multiplicity: usize,
}

/// Constructor dependency graph from the family's constructors through every
/// reachable foreign constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cdg {
    pub edges: Vec<CdgEdge>,
    /// Foreign types, parents before children.
    pub foreign_order: Vec<TypeId>,
}

impl Cdg {
    pub fn edges_from(&self, parent: CtorId) -> impl Iterator<Item = &CdgEdge> + '_ {
        self.edges.iter().filter(move |e| e.parent == parent)
    }

    /// Edges rendered with qualified names, for reports.
    pub fn named_edges<'u>(&self, u: &'u Universe) -> Vec<(&'u str, &'u str, usize)> {
        self.edges
            .iter()
            .map(|e| (u.qualified(e.parent), u.qualified(e.child), e.multiplicity))
            .collect()
    }
}

/// Per distinct foreign field type of `c`, the number of fields of that type.
fn foreign_multiplicities(u: &Universe, c: CtorId) -> BTreeMap<TypeId, usize> {
    let mut out = BTreeMap::new();
    for f in &u.ctor(c).fields {
        if let FieldRef::Foreign(t) = f {
            *out.entry(*t).or_insert(0) += 1;
        }
    }
    out
}

pub fn build_cdg(u: &Universe) -> Result<Cdg> {
    // Kahn's algorithm over the foreign type subgraph.
    let foreign: Vec<TypeId> = u.foreign_types().collect();
    let mut indegree: BTreeMap<TypeId, usize> = foreign.iter().map(|&t| (t, 0)).collect();
    for &(from, to) in u.type_edges() {
        if !u.in_family(from) && !u.in_family(to) {
            *indegree.get_mut(&to).expect("foreign type") += 1;
        }
    }
    let mut ready: VecDeque<TypeId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&t, _)| t)
        .collect();
    let mut foreign_order = Vec::with_capacity(foreign.len());
    while let Some(t) = ready.pop_front() {
        foreign_order.push(t);
        for &(from, to) in u.type_edges() {
            if from == t && !u.in_family(to) {
                let d = indegree.get_mut(&to).expect("foreign type");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(to);
                }
            }
        }
    }
    if foreign_order.len() != foreign.len() {
        let stuck: Vec<&str> = indegree
            .iter()
            .filter(|(_, &d)| d > 0)
            .map(|(&t, _)| u.type_name(t))
            .collect();
        return Err(Error::ForeignCycle(stuck.join(", ")));
    }

    let parents = u
        .family_ctors()
        .iter()
        .copied()
        .chain(foreign_order.iter().flat_map(|&t| u.type_info(t).ctors.iter().copied()));
    let mut edges = Vec::new();
    for parent in parents {
        for (t, multiplicity) in foreign_multiplicities(u, parent) {
            for &child in &u.type_info(t).ctors {
                edges.push(CdgEdge {
                    parent,
                    child,
                    multiplicity,
                });
            }
        }
    }
    Ok(Cdg {
        edges,
        foreign_order,
    })
}
