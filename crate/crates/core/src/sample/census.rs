use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::engine::Sampler;
use crate::adt::{FieldRef, TypeId};

/// Unbounded uniform generation counted one generation at a time.
///
/// Instead of building the value, the `n` open fields of each type in the
/// current generation are split among that type's constructors with a
/// multinomial draw. The total number of constructors, and how many of each,
/// have the same distribution as in a depth-first run. A run is abandoned as
/// soon as the constructors emitted plus the fields still open exceed the
/// budget, which happens exactly when a depth-first run would exceed it.
///
/// Adds the constructor counts of a completed run to `counts` and returns
/// its size, or `None` when the budget is exhausted.
pub(crate) fn derive_census<R: Rng + ?Sized>(
    sampler: &Sampler<'_>,
    rng: &mut R,
    counts: &mut [u64],
) -> Option<u64> {
    let u = sampler.universe();
    let budget = sampler.budget();
    let mut pending = vec![0u64; u.types().len()];
    pending[u.root().0] = 1;
    let mut local = vec![0u64; counts.len()];
    let mut emitted = 0u64;
    loop {
        let open: u64 = pending.iter().sum();
        if open == 0 {
            break;
        }
        if emitted.saturating_add(open) > budget {
            return None;
        }
        emitted += open;
        let mut next = vec![0u64; pending.len()];
        for (t, &n) in pending.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let ctors = &u.type_info(TypeId(t)).ctors;
            let k = ctors.len();
            let mut rest = n;
            for (i, &c) in ctors.iter().enumerate() {
                let x = if i + 1 == k || rest == 0 {
                    rest
                } else {
                    Binomial::new(rest, 1.0 / (k - i) as f64)
                        .expect("valid binomial")
                        .sample(rng)
                };
                rest -= x;
                if x == 0 {
                    continue;
                }
                local[c.0] += x;
                for f in &u.ctor(c).fields {
                    if let FieldRef::Family(v) | FieldRef::Foreign(v) = f {
                        next[v.0] += x;
                    }
                }
            }
        }
        pending = next;
    }
    for (acc, x) in counts.iter_mut().zip(local) {
        *acc += x;
    }
    Some(emitted)
}
