use std::fmt::Debug;

use crate::relmodel::TupleId;

/// A commutative semiring of annotations.
pub trait Semiring: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

/// A semiring that can annotate a source tuple with its own variable.
pub trait Annotation: Semiring {
    fn variable(id: &TupleId) -> Self;
}

/// Boolean semiring: presence only.
impl Semiring for bool {
    fn zero() -> Self {
        false
    }
    fn one() -> Self {
        true
    }
    fn plus(&self, other: &Self) -> Self {
        *self || *other
    }
    fn times(&self, other: &Self) -> Self {
        *self && *other
    }
}

impl Annotation for bool {
    fn variable(_: &TupleId) -> Self {
        true
    }
}

/// Product semiring: both components evaluated side by side.
impl<A: Semiring, B: Semiring> Semiring for (A, B) {
    fn zero() -> Self {
        (A::zero(), B::zero())
    }
    fn one() -> Self {
        (A::one(), B::one())
    }
    fn plus(&self, other: &Self) -> Self {
        (self.0.plus(&other.0), self.1.plus(&other.1))
    }
    fn times(&self, other: &Self) -> Self {
        (self.0.times(&other.0), self.1.times(&other.1))
    }
}

impl<A: Annotation, B: Annotation> Annotation for (A, B) {
    fn variable(id: &TupleId) -> Self {
        (A::variable(id), B::variable(id))
    }
}
