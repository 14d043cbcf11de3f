use super::matrix::PopulationVector;
use crate::adt::{FieldRef, Universe};
use crate::error::Result;
use crate::probmap::ProbMap;
use crate::scalar::RealScalar;

pub const EXTINCTION_TOLERANCE: f64 = 1e-12;
pub const EXTINCTION_MAX_ITERATIONS: usize = 1_000_000;

/// Probability that an unbounded generator started at each family type
/// terminates.
///
/// This is the least fixpoint of the per-type generating functions
/// `q_t = sum_C p_C * prod_{family fields f of C} q_{type(f)}`, reached by
/// iterating from zero. Foreign and ground fields always terminate.
pub fn extinction_probability<T: RealScalar>(
    u: &Universe,
    p: &ProbMap<T>,
) -> Result<PopulationVector<T>> {
    let family = u.family();
    let slot = |t| family.iter().position(|&x| x == t).expect("family type");
    // (probability, family-slot of each recursive field) per constructor, per type
    let mut shape: Vec<Vec<(T, Vec<usize>)>> = Vec::with_capacity(family.len());
    for &t in family {
        let mut ctors = Vec::new();
        for &c in &u.type_info(t).ctors {
            let fields = u
                .ctor(c)
                .fields
                .iter()
                .filter_map(|f| match f {
                    FieldRef::Family(ft) => Some(slot(*ft)),
                    _ => None,
                })
                .collect();
            ctors.push((p.prob(u, c)?, fields));
        }
        shape.push(ctors);
    }

    let tol = T::from(EXTINCTION_TOLERANCE)
        .unwrap_or_else(T::epsilon)
        .max(T::epsilon());
    let mut q = vec![T::zero(); family.len()];
    for _ in 0..EXTINCTION_MAX_ITERATIONS {
        let next: Vec<T> = shape
            .iter()
            .map(|ctors| {
                ctors.iter().fold(T::zero(), |acc, (pc, fields)| {
                    acc + fields.iter().fold(*pc, |prod, &j| prod * q[j])
                })
            })
            .map(|x| x.min(T::one()))
            .collect();
        let delta = next
            .iter()
            .zip(&q)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        q = next;
        if delta < tol {
            break;
        }
    }
    PopulationVector::new(
        family.iter().map(|&t| u.type_name(t).to_string()).collect(),
        q,
    )
}
