use serde::Serialize;

use crate::adt::Universe;
use crate::error::{Error, Result};
use crate::probmap::ProbMap;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Granularity {
    Constructor,
    Type,
}

/// Dense square matrix of expected offspring counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix<T> {
    granularity: Granularity,
    index: Vec<String>,
    entries: Vec<T>,
}

impl<T: Scalar> MeanMatrix<T> {
    /// Builds a matrix from row-major entries.
    pub fn from_rows(granularity: Granularity, index: Vec<String>, entries: Vec<T>) -> Result<Self> {
        let d = index.len();
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Ok(MeanMatrix {
            granularity,
            index,
            entries,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn index(&self) -> &[String] {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.entries[row * self.dim() + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        let d = self.dim();
        &self.entries[row * d..(row + 1) * d]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.iter().position(|x| x == id)
    }

    /// Entry by row and column id.
    pub fn at(&self, row: &str, col: &str) -> Option<&T> {
        Some(self.get(self.position(row)?, self.position(col)?))
    }
}

/// Expected counts per constructor or per type.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector<T> {
    pub index: Vec<String>,
    pub values: Vec<T>,
}

impl<T: Scalar> PopulationVector<T> {
    pub fn new(index: Vec<String>, values: Vec<T>) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: index.len(),
                found: values.len(),
            });
        }
        Ok(PopulationVector { index, values })
    }

    pub fn zeros(index: Vec<String>) -> Self {
        let values = vec![T::zero(); index.len()];
        PopulationVector { index, values }
    }

    pub fn get(&self, id: &str) -> Option<&T> {
        self.index.iter().position(|x| x == id).map(|i| &self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row vector times matrix.
    pub fn times(&self, m: &MeanMatrix<T>) -> Result<Self> {
        let d = m.dim();
        if self.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.len(),
            });
        }
        let mut out = vec![T::zero(); d];
        for (i, vi) in self.values.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, mij) in out.iter_mut().zip(m.row(i)) {
                *o = o.clone() + vi.clone() * mij.clone();
            }
        }
        Ok(PopulationVector {
            index: self.index.clone(),
            values: out,
        })
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.clone() + b.clone();
        }
    }
}

fn family_type_index(u: &Universe) -> Vec<String> {
    u.family().iter().map(|&t| u.type_name(t).to_string()).collect()
}

fn family_ctor_index(u: &Universe) -> Vec<String> {
    u.family_ctors().iter().map(|&c| u.qualified(c).to_string()).collect()
}

/// `m[i][j] = beta(type(j), i) * p_j` over the family constructors.
pub fn mean_matrix_constructors<T: Scalar>(u: &Universe, p: &ProbMap<T>) -> Result<MeanMatrix<T>> {
    let probs = p.family_vector(u)?;
    let ctors = u.family_ctors();
    let mut entries = Vec::with_capacity(ctors.len() * ctors.len());
    for &parent in ctors {
        for (&child, pc) in ctors.iter().zip(&probs) {
            let beta = u.beta(u.ctor(child).owner, parent);
            entries.push(T::from_count(beta) * pc.clone());
        }
    }
    MeanMatrix::from_rows(Granularity::Constructor, family_ctor_index(u), entries)
}

/// `m[u][v] = sum over constructors C of u of beta(v, C) * p_C` over the
/// family types.
pub fn mean_matrix_types<T: Scalar>(u: &Universe, p: &ProbMap<T>) -> Result<MeanMatrix<T>> {
    let family = u.family();
    let mut entries = Vec::with_capacity(family.len() * family.len());
    for &row in family {
        for &col in family {
            let mut acc = T::zero();
            for &c in &u.type_info(row).ctors {
                let beta = u.beta(col, c);
                if beta > 0 {
                    acc = acc + T::from_count(beta) * p.prob(u, c)?;
                }
            }
            entries.push(acc);
        }
    }
    MeanMatrix::from_rows(Granularity::Type, family_type_index(u), entries)
}

/// Expected generation zero: the root's constructor probabilities (constructor
/// granularity) or a single placeholder of the root type (type granularity).
pub fn initial_population<T: Scalar>(
    u: &Universe,
    p: &ProbMap<T>,
    granularity: Granularity,
) -> Result<PopulationVector<T>> {
    match granularity {
        Granularity::Constructor => {
            let values = u
                .family_ctors()
                .iter()
                .map(|&c| {
                    if u.ctor(c).owner == u.root() {
                        p.prob(u, c)
                    } else {
                        Ok(T::zero())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            PopulationVector::new(family_ctor_index(u), values)
        }
        Granularity::Type => {
            let values = u
                .family()
                .iter()
                .map(|&t| if t == u.root() { T::one() } else { T::zero() })
                .collect();
            PopulationVector::new(family_type_index(u), values)
        }
    }
}

/// `E[G_n] = E[G_0] M^n`, by `n` successive vector-matrix products.
pub fn expected_generation<T: Scalar>(
    g0: &PopulationVector<T>,
    m: &MeanMatrix<T>,
    n: usize,
) -> Result<PopulationVector<T>> {
    let mut g = g0.clone();
    if g.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: g.len(),
        });
    }
    for _ in 0..n {
        g = g.times(m)?;
    }
    Ok(g)
}

/// `E[P_n] = sum_{k=0..n} E[G_k]`, accumulated generation by generation so a
/// singular `I - M` needs no special handling.
pub fn expected_population<T: Scalar>(
    g0: &PopulationVector<T>,
    m: &MeanMatrix<T>,
    n: usize,
) -> Result<PopulationVector<T>> {
    Ok(generations(g0, m, n)?.1)
}

/// Returns `(E[G_n], E[P_n])` in one pass.
pub(crate) fn generations<T: Scalar>(
    g0: &PopulationVector<T>,
    m: &MeanMatrix<T>,
    n: usize,
) -> Result<(PopulationVector<T>, PopulationVector<T>)> {
    if g0.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: g0.len(),
        });
    }
    let mut g = g0.clone();
    let mut total = g0.clone();
    for _ in 0..n {
        g = g.times(m)?;
        total.add_assign(&g);
    }
    Ok((g, total))
}
