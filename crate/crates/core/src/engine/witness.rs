use std::collections::BTreeSet;
use std::fmt;

use super::polynomial::Polynomial;
use super::semiring::{Annotation, Semiring};
use crate::relmodel::TupleId;

pub type Witness = BTreeSet<TupleId>;

/// A set of witnesses where no witness strictly contains another.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WitnessBasis(BTreeSet<Witness>);

impl WitnessBasis {
    /// Builds a basis, discarding non-minimal witnesses.
    pub fn new(witnesses: impl IntoIterator<Item = Witness>) -> Self {
        WitnessBasis(minimize(witnesses.into_iter().collect()))
    }

    pub fn single(witness: Witness) -> Self {
        WitnessBasis(BTreeSet::from([witness]))
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All tuples mentioned by any witness.
    pub fn tuples(&self) -> Witness {
        self.0.iter().flatten().cloned().collect()
    }
}

fn minimize(all: BTreeSet<Witness>) -> BTreeSet<Witness> {
    let mut by_size: Vec<Witness> = all.into_iter().collect();
    by_size.sort_by_key(BTreeSet::len);
    let mut kept: Vec<Witness> = Vec::with_capacity(by_size.len());
    for w in by_size {
        if !kept.iter().any(|k| k.is_subset(&w)) {
            kept.push(w);
        }
    }
    kept.into_iter().collect()
}

impl Semiring for WitnessBasis {
    fn zero() -> Self {
        WitnessBasis::default()
    }

    fn one() -> Self {
        WitnessBasis::single(Witness::new())
    }

    fn plus(&self, other: &Self) -> Self {
        WitnessBasis(minimize(self.0.union(&other.0).cloned().collect()))
    }

    fn times(&self, other: &Self) -> Self {
        let mut all = BTreeSet::new();
        for a in &self.0 {
            for b in &other.0 {
                all.insert(a.union(b).cloned().collect());
            }
        }
        WitnessBasis(minimize(all))
    }
}

impl Annotation for WitnessBasis {
    fn variable(id: &TupleId) -> Self {
        WitnessBasis::single(Witness::from([id.clone()]))
    }
}

/// Drops coefficients and exponents: each monomial becomes the set of its
/// variables, reduced to a minimal antichain.
pub fn support_of(p: &Polynomial) -> WitnessBasis {
    WitnessBasis::new(p.monomials().map(|m| m.support().cloned().collect()))
}

impl fmt::Display for WitnessBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let ids: Vec<String> = w.iter().map(ToString::to_string).collect();
            write!(f, "{{{}}}", ids.join(", "))?;
        }
        f.write_str("}")
    }
}
