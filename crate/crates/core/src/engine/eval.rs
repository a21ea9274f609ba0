use std::collections::BTreeMap;

use super::aggexpr::{aggregate_values, AggExpr, AggTerm};
use super::lineage::where_of_ast;
use super::polynomial::Polynomial;
use super::semiring::Annotation;
use super::witness::{Witness, WitnessBasis};
use super::{AnnotatedResult, HowAnnotation, ProvenanceLevel, ResultTuple};
use crate::query::{AggFn, Expr, Operand, Predicate, ValidatedQuery};
use crate::relmodel::{Database, Decimal, Value};

/// An annotated relation under set semantics: one annotation per distinct
/// value tuple, rows ordered by value.
struct Annotated<K> {
    attrs: Vec<String>,
    rows: BTreeMap<Vec<Value>, K>,
}

impl<K: Annotation> Annotated<K> {
    fn insert(&mut self, values: Vec<Value>, k: K) {
        match self.rows.get_mut(&values) {
            Some(existing) => *existing = existing.plus(&k),
            None => {
                self.rows.insert(values, k);
            }
        }
    }

    fn position(&self, attr: &str) -> usize {
        self.attrs.iter().position(|a| a == attr).expect("validated attribute")
    }
}

fn holds(predicate: &Predicate, attrs: &[String], row: &[Value]) -> bool {
    let pos = |a: &str| attrs.iter().position(|x| x == a).expect("validated attribute");
    predicate.conjuncts.iter().all(|c| {
        let left = &row[pos(&c.attr)];
        let right = match &c.rhs {
            Operand::Attr(a) => &row[pos(a)],
            Operand::Const(v) => v,
        };
        c.op.holds(left, right)
    })
}

/// Select-project-join evaluation in the annotation semiring `K`.
fn eval_spj<K: Annotation>(expr: &Expr, db: &Database) -> Annotated<K> {
    match expr {
        Expr::Scan(name) => {
            let rel = db.relation(name).expect("validated relation");
            let mut out = Annotated { attrs: rel.schema().attribute_names().map(str::to_string).collect(), rows: BTreeMap::new() };
            for t in rel.tuples() {
                out.insert(t.values.clone(), K::variable(&t.id));
            }
            out
        }
        Expr::Select { predicate, input } => {
            let mut inner = eval_spj::<K>(input, db);
            let attrs = inner.attrs.clone();
            inner.rows.retain(|row, _| holds(predicate, &attrs, row));
            inner
        }
        Expr::Project { attrs, input } => {
            let inner = eval_spj::<K>(input, db);
            let positions: Vec<usize> = attrs.iter().map(|a| inner.position(a)).collect();
            let mut out = Annotated { attrs: attrs.clone(), rows: BTreeMap::new() };
            for (row, k) in inner.rows {
                out.insert(positions.iter().map(|&p| row[p].clone()).collect(), k);
            }
            out
        }
        Expr::Join { left, right, on } => {
            let l = eval_spj::<K>(left, db);
            let r = eval_spj::<K>(right, db);
            let keys: Vec<(usize, usize)> = on.iter().map(|(a, b)| (l.position(a), r.position(b))).collect();
            let mut out = Annotated { attrs: l.attrs.iter().chain(&r.attrs).cloned().collect(), rows: BTreeMap::new() };
            for (lrow, lk) in &l.rows {
                for (rrow, rk) in &r.rows {
                    if keys.iter().all(|&(i, j)| lrow[i].sql_eq(&rrow[j])) {
                        let values = lrow.iter().chain(rrow).cloned().collect();
                        out.insert(values, lk.times(rk));
                    }
                }
            }
            out
        }
        Expr::Aggregate { .. } => unreachable!("aggregation only occurs at the root"),
    }
}

/// Annotation semirings that can be turned into result annotations.
trait LevelAnnotation: Annotation {
    fn witness_basis(&self) -> Option<WitnessBasis>;
    fn polynomial(&self) -> Option<&Polynomial>;
}

impl LevelAnnotation for bool {
    fn witness_basis(&self) -> Option<WitnessBasis> {
        None
    }
    fn polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

impl LevelAnnotation for WitnessBasis {
    fn witness_basis(&self) -> Option<WitnessBasis> {
        Some(self.clone())
    }
    fn polynomial(&self) -> Option<&Polynomial> {
        None
    }
}

impl LevelAnnotation for (WitnessBasis, Polynomial) {
    fn witness_basis(&self) -> Option<WitnessBasis> {
        Some(self.0.clone())
    }
    fn polynomial(&self) -> Option<&Polynomial> {
        Some(&self.1)
    }
}

fn build<K: LevelAnnotation>(expr: &Expr, db: &Database) -> Vec<ResultTuple> {
    let Expr::Aggregate { group_by, func, target, input } = expr else {
        return eval_spj::<K>(expr, db)
            .rows
            .into_iter()
            .map(|(values, k)| ResultTuple {
                values,
                witnesses: k.witness_basis(),
                how: k.polynomial().cloned().map(HowAnnotation::Polynomial),
            })
            .collect();
    };

    let inner = eval_spj::<K>(input, db);
    let key_positions: Vec<usize> = group_by.iter().map(|a| inner.position(a)).collect();
    let target_position = target.as_ref().map(|t| inner.position(t));

    let mut groups: BTreeMap<Vec<Value>, Vec<(&Vec<Value>, &K)>> = BTreeMap::new();
    for (row, k) in &inner.rows {
        let key = key_positions.iter().map(|&p| row[p].clone()).collect();
        groups.entry(key).or_default().push((row, k));
    }

    let one = Value::Num(Decimal::from_int(1));
    groups
        .into_iter()
        .map(|(key, members)| {
            // COUNT contributes 1 per member; other functions contribute the
            // target value and ignore Nulls.
            let contributions: Vec<(&K, &Value)> = members
                .iter()
                .map(|(row, k)| (*k, target_position.map_or(&one, |p| &row[p])))
                .filter(|(_, v)| *func == AggFn::Count || !v.is_null())
                .collect();
            let value = if *func == AggFn::Count {
                Value::Num(Decimal::from_int(members.len() as i64))
            } else {
                aggregate_values(*func, contributions.iter().map(|(_, v)| *v)).expect("source values are numeric")
            };

            let witnesses = members.first().and_then(|(_, k)| k.witness_basis()).map(|_| {
                let all: Witness = members.iter().flat_map(|(_, k)| k.witness_basis().expect("same level").tuples()).collect();
                WitnessBasis::single(all)
            });
            let how = members.first().and_then(|(_, k)| k.polynomial()).map(|_| {
                let terms = contributions
                    .iter()
                    .map(|(k, v)| AggTerm { annotation: k.polynomial().expect("same level").clone(), value: (*v).clone() })
                    .collect();
                HowAnnotation::Aggregate(AggExpr::new(*func, terms))
            });

            let mut values = key;
            values.push(value);
            ResultTuple { values, witnesses, how }
        })
        .collect()
}

/// Evaluates a validated query over `db`, annotating each result tuple at
/// the requested provenance level.
pub fn evaluate(db: &Database, query: &ValidatedQuery, level: ProvenanceLevel) -> AnnotatedResult {
    let expr = query.expr();
    let tuples = match level {
        ProvenanceLevel::Where => build::<bool>(expr, db),
        ProvenanceLevel::Why => build::<WitnessBasis>(expr, db),
        ProvenanceLevel::How => build::<(WitnessBasis, Polynomial)>(expr, db),
    };
    AnnotatedResult {
        query: expr.clone(),
        level,
        schema: query.schema().clone(),
        lineage: where_of_ast(query, &db.catalog()),
        generalized: Default::default(),
        tuples,
    }
}
