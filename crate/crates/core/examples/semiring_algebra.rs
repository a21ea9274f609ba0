//! Provenance polynomials and witness bases by hand.

use provkit::engine::{support_of, Annotation, Polynomial, Semiring, WitnessBasis};
use provkit::relmodel::TupleId;

fn main() {
    let t = |i| TupleId::new("Grades", i);
    let (a, b, c) = (Polynomial::variable(&t(0)), Polynomial::variable(&t(1)), Polynomial::variable(&t(2)));

    // Two alternative derivations, one of them joining t0 with itself.
    let p = a.times(&a).plus(&b.times(&c));
    println!("p = {p}");
    println!("p + p = {}", p.plus(&p));
    println!("p * (a + 1) = {}", p.times(&a.plus(&Polynomial::one())));
    println!("support(p) = {}", support_of(&p));

    let w = WitnessBasis::variable(&t(0)).plus(&WitnessBasis::variable(&t(0)).times(&WitnessBasis::variable(&t(1))));
    println!("{{t0}} + {{t0, t1}} = {w}");

    let parsed: Polynomial = "2*t[Grades/0]*t[Grades/1] + t[Grades/2]".parse().unwrap();
    println!("parsed: {parsed}, zero: {}", Polynomial::zero());
}
