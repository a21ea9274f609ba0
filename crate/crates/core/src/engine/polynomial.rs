//! Provenance polynomials with natural-number coefficients over tuple
//! variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use thiserror::Error;

use super::semiring::{Annotation, Semiring};
use crate::relmodel::TupleId;

/// A product of tuple variables, kept as a sorted multiset so that monomials
/// order lexicographically by their variable sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<TupleId>);

impl Monomial {
    pub fn new(mut vars: Vec<TupleId>) -> Self {
        vars.sort();
        Monomial(vars)
    }

    pub fn variables(&self) -> &[TupleId] {
        &self.0
    }

    /// Distinct variables, exponents dropped.
    pub fn support(&self) -> impl Iterator<Item = &TupleId> {
        let mut prev: Option<&TupleId> = None;
        self.0.iter().filter(move |v| {
            let fresh = prev != Some(*v);
            prev = Some(*v);
            fresh
        })
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut vars = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                vars.push(self.0[i].clone());
                i += 1;
            } else {
                vars.push(other.0[j].clone());
                j += 1;
            }
        }
        vars.extend_from_slice(&self.0[i..]);
        vars.extend_from_slice(&other.0[j..]);
        Monomial(vars)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let mut j = i;
            while j < self.0.len() && self.0[j] == self.0[i] {
                j += 1;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "t[{}]", self.0[i])?;
            if j - i > 1 {
                write!(f, "^{}", j - i)?;
            }
            i = j;
        }
        Ok(())
    }
}

/// Canonical sum of monomials: like monomials merged, no zero coefficients,
/// monomials in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, u64>,
}

impl Polynomial {
    pub fn constant(c: u64) -> Self {
        let mut p = Polynomial::default();
        p.add_term(Monomial::default(), c);
        p
    }

    pub fn var(id: TupleId) -> Self {
        let mut p = Polynomial::default();
        p.add_term(Monomial(vec![id]), 1);
        p
    }

    /// Builds a polynomial from arbitrary (coefficient, variables) pairs.
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Vec<TupleId>)>) -> Self {
        let mut p = Polynomial::default();
        for (c, vars) in terms {
            p.add_term(Monomial::new(vars), c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: u64) {
        if c == 0 {
            return;
        }
        *self.terms.entry(m).or_insert(0) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every variable occurring in the polynomial, sorted and distinct.
    pub fn variables(&self) -> Vec<TupleId> {
        let mut out: Vec<TupleId> = self.terms.keys().flat_map(|m| m.support().cloned()).collect();
        out.sort();
        out.dedup();
        out
    }
}

impl Semiring for Polynomial {
    fn zero() -> Self {
        Polynomial::default()
    }

    fn one() -> Self {
        Polynomial::constant(1)
    }

    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    fn times(&self, other: &Self) -> Self {
        let mut out = Polynomial::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.times(m2), c1 * c2);
            }
        }
        out
    }
}

impl Annotation for Polynomial {
    fn variable(id: &TupleId) -> Self {
        Polynomial::var(id.clone())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.plus(rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.times(rhs)
    }
}

/// `2*t[Grades/0]*t[Grades/1]^2 + t[Grades/2]`; the zero polynomial is `0`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match (*c, m.0.is_empty()) {
                (c, true) => write!(f, "{c}")?,
                (1, false) => write!(f, "{m}")?,
                (c, false) => write!(f, "{c}*{m}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed polynomial `{input}`: {reason}")]
pub struct PolynomialParseError {
    pub input: String,
    pub reason: String,
}

impl FromStr for Polynomial {
    type Err = PolynomialParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| PolynomialParseError { input: s.to_string(), reason: reason.to_string() };
        let trimmed = s.trim();
        if trimmed == "0" {
            return Ok(Polynomial::zero());
        }
        let mut p = Polynomial::zero();
        for term in trimmed.split('+') {
            let mut coefficient = 1u64;
            let mut vars = Vec::new();
            for factor in term.split('*').map(str::trim) {
                if let Some(rest) = factor.strip_prefix("t[") {
                    let (id, tail) = rest.split_once(']').ok_or_else(|| fail("unclosed `t[`"))?;
                    let id: TupleId = id.parse().map_err(|_| fail("bad tuple id"))?;
                    let power = match tail.strip_prefix('^') {
                        Some(e) => e.parse::<usize>().map_err(|_| fail("bad exponent"))?,
                        None if tail.is_empty() => 1,
                        None => return Err(fail("trailing characters after variable")),
                    };
                    vars.extend(std::iter::repeat(id).take(power));
                } else {
                    let c: u64 = factor.parse().map_err(|_| fail("expected coefficient or `t[..]`"))?;
                    coefficient *= c;
                }
            }
            p.add_term(Monomial::new(vars), coefficient);
        }
        Ok(p)
    }
}
