//! Seeded generators and independent reference implementations shared by
//! the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use provkit::engine::Polynomial;
use provkit::privacy::PrivacyPolicy;
use provkit::query::{AggFn, CmpOp, Comparison, Expr, Operand, Predicate};
use provkit::relmodel::{Attribute, AttributeType, AttrRef, Database, Relation, Schema, TupleId, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The eleven grades of the shipped hierarchy.
pub const GRADE_DOMAIN: [&str; 11] = ["1.0", "1.3", "1.7", "2.0", "2.3", "2.7", "3.0", "3.3", "3.7", "4.0", "5.0"];

pub fn grades_schema() -> Schema {
    Schema::new(
        "Grades",
        vec![
            Attribute::new("Student", AttributeType::Text),
            Attribute::new("Module", AttributeType::Text),
            Attribute::new("Grade", AttributeType::Number),
        ],
    )
    .unwrap()
}

pub fn grades(rows: &[(&str, &str, &str)]) -> Database {
    let rows = rows.iter().map(|(s, m, g)| vec![Value::txt(*s), Value::txt(*m), Value::num(g)]).collect();
    Database::new([Relation::from_rows(grades_schema(), rows).unwrap()])
}

pub fn scenario() -> Database {
    grades(&[("Alice", "DB", "1.0"), ("Alice", "Math", "1.3"), ("Bob", "DB", "2.0")])
}

pub fn grade_policy() -> PrivacyPolicy {
    PrivacyPolicy::new([AttrRef::new("Grades", "Grade")], [AttrRef::new("Grades", "Module")], 2)
}

// Random instances -----------------------------------------------------------

const RELATION_NAMES: [&str; 3] = ["R", "S", "T"];
const TEXTS: [&str; 3] = ["x", "y", "it's"];

fn random_value(rng: &mut ChaCha8Rng, ty: AttributeType) -> Value {
    if rng.gen_ratio(1, 10) {
        return Value::Null;
    }
    match ty {
        AttributeType::Number => Value::num(["0", "1", "2", "1.5"][rng.gen_range(0..4)]),
        AttributeType::Text => Value::txt(*TEXTS.choose(rng).unwrap()),
    }
}

/// Up to three relations with globally distinct attribute names and at most
/// `max_tuples` tuples each; when `total_cap` is set, the tuple count across
/// relations is capped too.
pub fn random_database(rng: &mut ChaCha8Rng, max_tuples: usize, total_cap: Option<usize>) -> Database {
    let n = rng.gen_range(1..=3);
    let mut budget = total_cap.unwrap_or(usize::MAX);
    let mut relations = Vec::new();
    for name in &RELATION_NAMES[..n] {
        let arity = rng.gen_range(1..=3);
        let attrs: Vec<Attribute> = (0..arity)
            .map(|i| {
                let ty = if rng.gen_bool(0.5) { AttributeType::Number } else { AttributeType::Text };
                Attribute::new(format!("{}{i}", name.to_lowercase()), ty)
            })
            .collect();
        let schema = Schema::new(*name, attrs.clone()).unwrap();
        let count = rng.gen_range(0..=max_tuples.min(budget));
        budget -= count;
        let rows = (0..count).map(|_| attrs.iter().map(|a| random_value(rng, a.ty)).collect()).collect();
        relations.push(Relation::from_rows(schema, rows).unwrap());
    }
    Database::new(relations)
}

fn random_predicate(rng: &mut ChaCha8Rng, attrs: &[Attribute]) -> Predicate {
    let n = rng.gen_range(1..=2);
    let conjuncts = (0..n)
        .map(|_| {
            let left = attrs.choose(rng).unwrap();
            let op = *CmpOp::ALL.choose(rng).unwrap();
            let same: Vec<&Attribute> = attrs.iter().filter(|a| a.ty == left.ty && a.name != left.name).collect();
            let rhs = if !same.is_empty() && rng.gen_bool(0.3) {
                Operand::Attr(same.choose(rng).unwrap().name.clone())
            } else {
                let mut v = random_value(rng, left.ty);
                if v.is_null() && rng.gen_bool(0.7) {
                    v = random_value(rng, left.ty);
                }
                Operand::Const(v)
            };
            Comparison { attr: left.name.clone(), op, rhs }
        })
        .collect();
    Predicate { conjuncts }
}

/// Output attributes of an SPJ expression over `db`.
pub fn output_attributes(expr: &Expr, db: &Database) -> Vec<Attribute> {
    match expr {
        Expr::Scan(r) => db.relation(r).unwrap().schema().attributes.clone(),
        Expr::Select { input, .. } => output_attributes(input, db),
        Expr::Project { attrs, input } => {
            let inner = output_attributes(input, db);
            attrs.iter().map(|a| inner.iter().find(|x| &x.name == a).unwrap().clone()).collect()
        }
        Expr::Join { left, right, .. } => {
            let mut out = output_attributes(left, db);
            out.extend(output_attributes(right, db));
            out
        }
        Expr::Aggregate { .. } => unreachable!("SPJ only"),
    }
}

/// A random select-project-join query over `db`, each relation scanned at
/// most once.
pub fn random_spj(rng: &mut ChaCha8Rng, db: &Database) -> Expr {
    let mut names: Vec<String> = db.relations().map(|r| r.name().to_string()).collect();
    names.shuffle(rng);
    names.truncate(rng.gen_range(1..=names.len()));
    let mut expr: Option<Expr> = None;
    for name in names {
        let mut side = Expr::scan(name.clone());
        if rng.gen_bool(0.3) {
            let attrs = db.relation(&name).unwrap().schema().attributes.clone();
            side = Expr::select(random_predicate(rng, &attrs), side);
        }
        expr = Some(match expr {
            None => side,
            Some(left) => {
                let la = output_attributes(&left, db);
                let ra = output_attributes(&side, db);
                let mut on = Vec::new();
                let pairs: Vec<(String, String)> = la
                    .iter()
                    .flat_map(|l| ra.iter().filter(|r| r.ty == l.ty).map(move |r| (l.name.clone(), r.name.clone())))
                    .collect();
                if !pairs.is_empty() && rng.gen_bool(0.7) {
                    on.push(pairs.choose(rng).unwrap().clone());
                }
                Expr::join(on, left, side)
            }
        });
    }
    let mut expr = expr.unwrap();
    if rng.gen_bool(0.3) {
        let attrs = output_attributes(&expr, db);
        expr = Expr::select(random_predicate(rng, &attrs), expr);
    }
    if rng.gen_bool(0.5) {
        let attrs = output_attributes(&expr, db);
        let k = rng.gen_range(1..=attrs.len());
        let chosen: Vec<String> = attrs.choose_multiple(rng, k).map(|a| a.name.clone()).collect();
        expr = Expr::project(chosen, expr);
    }
    expr
}

/// A random aggregate over a random SPJ query of `db`.
pub fn random_aggregate(rng: &mut ChaCha8Rng, db: &Database) -> Expr {
    let input = random_spj(rng, db);
    let attrs = output_attributes(&input, db);
    let numbers: Vec<&Attribute> = attrs.iter().filter(|a| a.ty == AttributeType::Number).collect();
    let (func, target) = match numbers.choose(rng) {
        Some(t) if rng.gen_ratio(4, 5) => {
            let f = *[AggFn::Avg, AggFn::Sum, AggFn::Min, AggFn::Max, AggFn::Count].choose(rng).unwrap();
            (f, if f == AggFn::Count { None } else { Some(t.name.clone()) })
        }
        _ => (AggFn::Count, None),
    };
    let keys: Vec<String> = attrs
        .iter()
        .filter(|a| Some(&a.name) != target.as_ref() && rng.gen_bool(0.4))
        .map(|a| a.name.clone())
        .collect();
    Expr::aggregate(keys, func, target.as_deref(), input)
}

fn random_identifier(rng: &mut ChaCha8Rng) -> String {
    const POOL: [&str; 8] = ["Grades", "a", "b_1", "Student", "Sigma", "joins", "x9", "Pi"];
    POOL.choose(rng).unwrap().to_string()
}

fn random_constant(rng: &mut ChaCha8Rng) -> Value {
    match rng.gen_range(0..5) {
        0 => Value::Null,
        1 => Value::txt(["", "Alice", "it's", "a b", "''"][rng.gen_range(0..5)]),
        _ => {
            let scaled: i64 = rng.gen_range(-200_000..200_000);
            Value::Num(provkit::relmodel::Decimal::from_scaled(scaled as i128))
        }
    }
}

/// Syntactically arbitrary expressions, not necessarily valid against any
/// catalog.
pub fn random_ast(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..5) };
    let ids = |rng: &mut ChaCha8Rng, min: usize| -> Vec<String> {
        (0..rng.gen_range(min..=3)).map(|_| random_identifier(rng)).collect()
    };
    match choice {
        0 => Expr::scan(random_identifier(rng)),
        1 => {
            let conjuncts = (0..rng.gen_range(1..=3))
                .map(|_| Comparison {
                    attr: random_identifier(rng),
                    op: *CmpOp::ALL.choose(rng).unwrap(),
                    rhs: if rng.gen_bool(0.3) {
                        Operand::Attr(random_identifier(rng))
                    } else {
                        Operand::Const(random_constant(rng))
                    },
                })
                .collect();
            Expr::select(Predicate { conjuncts }, random_ast(rng, depth - 1))
        }
        2 => Expr::project(ids(rng, 1), random_ast(rng, depth - 1)),
        3 => {
            let on: Vec<(String, String)> =
                (0..rng.gen_range(0..=2)).map(|_| (random_identifier(rng), random_identifier(rng))).collect();
            Expr::join(on, random_ast(rng, depth - 1), random_ast(rng, depth - 1))
        }
        _ => {
            let func = *AggFn::ALL.choose(rng).unwrap();
            let target = if func == AggFn::Count && rng.gen_bool(0.5) { None } else { Some(random_identifier(rng)) };
            Expr::aggregate(ids(rng, 0), func, target.as_deref(), random_ast(rng, depth - 1))
        }
    }
}

pub fn random_polynomial(rng: &mut ChaCha8Rng) -> Polynomial {
    let vars: Vec<TupleId> = (0..4).map(|i| TupleId::new("R", i)).collect();
    let terms = (0..rng.gen_range(0..=4)).map(|_| {
        let coeff = rng.gen_range(1..=3);
        let mono = (0..rng.gen_range(0..=3)).map(|_| vars.choose(rng).unwrap().clone()).collect();
        (coeff, mono)
    });
    Polynomial::from_terms(terms)
}

// Reference evaluator -------------------------------------------------------

/// A set-semantics relation: attribute names and distinct rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveTable {
    pub attrs: Vec<String>,
    pub rows: BTreeSet<Vec<Value>>,
}

fn naive_compare(op: CmpOp, l: &Value, r: &Value) -> bool {
    if l.is_null() || r.is_null() {
        return false;
    }
    let ord = match (l, r) {
        (Value::Num(a), Value::Num(b)) => a.scaled().cmp(&b.scaled()),
        (Value::Txt(a), Value::Txt(b)) => a.as_bytes().cmp(b.as_bytes()),
        _ => return false,
    };
    match op.symbol() {
        "=" => ord.is_eq(),
        "!=" | "<>" => ord.is_ne(),
        "<" => ord.is_lt(),
        "<=" => ord.is_le(),
        ">" => ord.is_gt(),
        ">=" => ord.is_ge(),
        s => panic!("unknown operator {s}"),
    }
}

/// Evaluates an SPJ expression by brute force, with no provenance.
pub fn naive_eval(db: &Database, expr: &Expr) -> NaiveTable {
    match expr {
        Expr::Scan(r) => {
            let rel = db.relation(r).unwrap();
            NaiveTable {
                attrs: rel.schema().attribute_names().map(str::to_string).collect(),
                rows: rel.tuples().iter().map(|t| t.values.clone()).collect(),
            }
        }
        Expr::Select { predicate, input } => {
            let t = naive_eval(db, input);
            let pos = |a: &str| t.attrs.iter().position(|x| x == a).unwrap();
            let rows = t
                .rows
                .iter()
                .filter(|row| {
                    predicate.conjuncts.iter().all(|c| {
                        let rhs = match &c.rhs {
                            Operand::Attr(a) => row[pos(a)].clone(),
                            Operand::Const(v) => v.clone(),
                        };
                        naive_compare(c.op, &row[pos(&c.attr)], &rhs)
                    })
                })
                .cloned()
                .collect();
            NaiveTable { attrs: t.attrs, rows }
        }
        Expr::Project { attrs, input } => {
            let t = naive_eval(db, input);
            let idx: Vec<usize> = attrs.iter().map(|a| t.attrs.iter().position(|x| x == a).unwrap()).collect();
            NaiveTable { attrs: attrs.clone(), rows: t.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect() }
        }
        Expr::Join { left, right, on } => {
            let l = naive_eval(db, left);
            let r = naive_eval(db, right);
            let keys: Vec<(usize, usize)> = on
                .iter()
                .map(|(a, b)| {
                    match (l.attrs.iter().position(|x| x == a), r.attrs.iter().position(|x| x == b)) {
                        (Some(i), Some(j)) => (i, j),
                        _ => (
                            l.attrs.iter().position(|x| x == b).unwrap(),
                            r.attrs.iter().position(|x| x == a).unwrap(),
                        ),
                    }
                })
                .collect();
            let mut rows = BTreeSet::new();
            for lr in &l.rows {
                for rr in &r.rows {
                    if keys.iter().all(|&(i, j)| naive_compare(CmpOp::Eq, &lr[i], &rr[j])) {
                        rows.insert(lr.iter().chain(rr).cloned().collect());
                    }
                }
            }
            NaiveTable { attrs: l.attrs.into_iter().chain(r.attrs).collect(), rows }
        }
        Expr::Aggregate { .. } => unreachable!("SPJ only"),
    }
}

/// All minimal sub-instances of `db` on which `expr` produces `row`, found
/// by enumerating every subset of the source tuples.
pub fn brute_force_witnesses(db: &Database, expr: &Expr, row: &[Value]) -> BTreeSet<BTreeSet<TupleId>> {
    let ids = db.tuple_ids();
    assert!(ids.len() <= 16, "exhaustive enumeration needs a small instance");
    let mut producing: Vec<BTreeSet<TupleId>> = Vec::new();
    for mask in 0u32..(1 << ids.len()) {
        let subset: BTreeSet<TupleId> =
            ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| id.clone()).collect();
        if naive_eval(&db.restrict_to(&subset), expr).rows.contains(row) {
            producing.push(subset);
        }
    }
    producing
        .iter()
        .filter(|w| !producing.iter().any(|v| v.len() < w.len() && v.is_subset(w)))
        .cloned()
        .collect()
}

// Aggregate reference -------------------------------------------------------

/// Aggregate of grade strings as a scaled integer (four decimals), rounding
/// averages half away from zero; `None` for an empty input.
pub fn reference_aggregate(func: AggFn, grades: &[i64]) -> Option<i64> {
    if grades.is_empty() {
        return None;
    }
    Some(match func {
        AggFn::Sum => grades.iter().sum(),
        AggFn::Min => *grades.iter().min().unwrap(),
        AggFn::Max => *grades.iter().max().unwrap(),
        AggFn::Count => grades.len() as i64 * 10_000,
        AggFn::Avg => {
            let sum: i64 = grades.iter().sum();
            let n = grades.len() as i64;
            let q = sum / n;
            let r = sum % n;
            if 2 * r.abs() >= n {
                q + sum.signum()
            } else {
                q
            }
        }
    })
}

/// "2.3" -> 23000.
pub fn scaled(grade: &str) -> i64 {
    let (int, frac) = grade.split_once('.').unwrap_or((grade, ""));
    let frac = format!("{frac:0<4}");
    int.parse::<i64>().unwrap() * 10_000 + frac.parse::<i64>().unwrap()
}

// Corpus --------------------------------------------------------------------

fn university() -> Database {
    let students = Schema::new(
        "Students",
        vec![
            Attribute::new("Name", AttributeType::Text),
            Attribute::new("Major", AttributeType::Text),
            Attribute::new("Year", AttributeType::Number),
        ],
    )
    .unwrap();
    let s = |n: &str, m: &str, y: &str| vec![Value::txt(n), Value::txt(m), Value::num(y)];
    let students = Relation::from_rows(
        students,
        vec![s("Alice", "CS", "2"), s("Bob", "Math", "1"), s("Carol", "CS", "3"), s("Dave", "CS", "2")],
    )
    .unwrap();
    grades(&[
        ("Alice", "DB", "1.0"),
        ("Alice", "Math", "1.3"),
        ("Bob", "DB", "2.0"),
        ("Carol", "DB", "2.0"),
        ("Carol", "AI", "2.0"),
        ("Dave", "AI", "3.7"),
        ("Dave", "Math", "5.0"),
    ])
    .with_relation(students)
}

/// Query/database pairs with a matching policy, covering every operator.
pub fn corpus() -> Vec<(String, Database, Expr, PrivacyPolicy)> {
    use provkit::query::parse;
    let mut out = Vec::new();
    let uni_policy = PrivacyPolicy::new(
        [AttrRef::new("Grades", "Grade")],
        [AttrRef::new("Grades", "Module"), AttrRef::new("Students", "Major")],
        2,
    );
    let fixed = [
        (scenario(), "agg[Student; avg(Grade)](Grades)"),
        (scenario(), "Grades"),
        (scenario(), "pi[Student](Grades)"),
        (university(), "agg[Module; avg(Grade)](Grades)"),
        (university(), "agg[Student; sum(Grade)](Grades)"),
        (university(), "agg[Student; min(Grade)](Grades)"),
        (university(), "agg[Module; max(Grade)](Grades)"),
        (university(), "agg[Module; count()](Grades)"),
        (university(), "agg[; avg(Grade)](Grades)"),
        (university(), "agg[Major; avg(Grade)](join[Student = Name](Grades, Students))"),
        (university(), "pi[Name, Grade](join[Student = Name](Grades, sigma[Major = 'CS'](Students)))"),
        (university(), "sigma[Grade <= 2.0](Grades)"),
        (university(), "pi[Module, Grade](Grades)"),
        (university(), "agg[Student, Module; avg(Grade)](Grades)"),
        (university(), "pi[Name](Students)"),
    ];
    for (i, (db, q)) in fixed.into_iter().enumerate() {
        let policy = if db.relation("Students").is_some() { uni_policy.clone() } else { grade_policy() };
        out.push((format!("fixed-{i}: {q}"), db, parse(q).unwrap(), policy));
    }
    let mut r = rng(0xC0A5);
    for i in 0..10 {
        let db = random_database(&mut r, 5, None);
        let expr = if i % 2 == 0 { random_aggregate(&mut r, &db) } else { random_spj(&mut r, &db) };
        out.push((format!("random-{i}: {expr}"), db.clone(), expr, random_policy(&db)));
    }
    out
}

/// Every number attribute sensitive, every text attribute quasi-identifying.
pub fn random_policy(db: &Database) -> PrivacyPolicy {
    let mut sensitive = Vec::new();
    let mut qi = Vec::new();
    for rel in db.relations() {
        for a in &rel.schema().attributes {
            let r = AttrRef::new(rel.name(), a.name.as_str());
            match a.ty {
                AttributeType::Number => sensitive.push(r),
                AttributeType::Text => qi.push(r),
            }
        }
    }
    PrivacyPolicy::new(sensitive, qi, 2)
}

/// Grade lists per student for zero-variance checks; a third of the groups
/// repeat one grade.
pub fn random_grade_groups(rng: &mut ChaCha8Rng) -> BTreeMap<String, Vec<&'static str>> {
    let students = ["Ann", "Ben", "Cem", "Dan"];
    let n = rng.gen_range(1..=students.len());
    students[..n]
        .iter()
        .map(|s| {
            let size = rng.gen_range(1..=3);
            let grades = if rng.gen_ratio(1, 3) {
                vec![*GRADE_DOMAIN.choose(rng).unwrap(); size]
            } else {
                (0..size).map(|_| *GRADE_DOMAIN.choose(rng).unwrap()).collect()
            };
            (s.to_string(), grades)
        })
        .collect()
}
