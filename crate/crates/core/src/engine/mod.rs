//! Query evaluation with where-, why- and how-provenance.
//!
//! Every operator works over annotated relations under set semantics.
//! Selection keeps annotations, projection adds the annotations of merged
//! tuples, and join multiplies. The three levels are three semirings: plain
//! presence for where (whose lineage is computed statically from the query),
//! minimal witness bases for why, and provenance polynomials for how.
//! Aggregation may only appear at the root. Its why-annotation is the single
//! witness made of the whole group. Its how-annotation is an [`AggExpr`]
//! listing every contributing term.

mod aggexpr;
mod eval;
mod lineage;
mod polynomial;
mod semiring;
mod witness;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggexpr::{aggregate_values, AggExpr, AggExprParseError, AggTerm};
pub use eval::evaluate;
pub use lineage::{where_of_ast, WhereLineage};
pub use polynomial::{Monomial, Polynomial, PolynomialParseError};
pub use semiring::{Annotation, Semiring};
pub use witness::{support_of, Witness, WitnessBasis};

use crate::query::{parse, AggFn, Expr};
use crate::relmodel::{Attribute, AttrRef, Schema, TupleId, Value};

/// Provenance levels, ordered by how much they reveal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProvenanceLevel {
    Where,
    Why,
    How,
}

impl ProvenanceLevel {
    pub const ALL: [ProvenanceLevel; 3] = [ProvenanceLevel::Where, ProvenanceLevel::Why, ProvenanceLevel::How];

    pub fn name(self) -> &'static str {
        match self {
            ProvenanceLevel::Where => "where",
            ProvenanceLevel::Why => "why",
            ProvenanceLevel::How => "how",
        }
    }
}

impl fmt::Display for ProvenanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProvenanceLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProvenanceLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown provenance level `{s}` (expected where, why or how)"))
    }
}

/// How-provenance of one result tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HowAnnotation {
    Polynomial(Polynomial),
    Aggregate(AggExpr),
}

impl fmt::Display for HowAnnotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HowAnnotation::Polynomial(p) => write!(f, "{p}"),
            HowAnnotation::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultTuple {
    pub values: Vec<Value>,
    /// Present at the why and how levels.
    pub witnesses: Option<WitnessBasis>,
    /// Present at the how level.
    pub how: Option<HowAnnotation>,
}

/// A query result carrying provenance at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedResult {
    pub query: Expr,
    pub level: ProvenanceLevel,
    pub schema: Schema,
    pub lineage: WhereLineage,
    /// Source attributes whose published values are generalization labels.
    pub generalized: BTreeSet<AttrRef>,
    pub tuples: Vec<ResultTuple>,
}

/// The aggregation at the root of a query, if any.
#[derive(Clone, Copy, Debug)]
pub struct AggregateShape<'a> {
    pub group_by: &'a [String],
    pub func: AggFn,
    pub target: Option<&'a str>,
}

impl AnnotatedResult {
    pub fn aggregate(&self) -> Option<AggregateShape<'_>> {
        match &self.query {
            Expr::Aggregate { group_by, func, target, .. } => {
                Some(AggregateShape { group_by, func: *func, target: target.as_deref() })
            }
            _ => None,
        }
    }

    /// Canonical text of the query that produced this result.
    pub fn query_text(&self) -> String {
        self.query.to_string()
    }

    /// The most informative level whose annotations are present on every
    /// tuple.
    pub fn available_level(&self) -> ProvenanceLevel {
        if self.tuples.iter().all(|t| t.how.is_some() && t.witnesses.is_some()) {
            self.level
        } else if self.tuples.iter().all(|t| t.witnesses.is_some()) {
            self.level.min(ProvenanceLevel::Why)
        } else {
            ProvenanceLevel::Where
        }
    }

    pub fn to_json(&self) -> String {
        let wire = ResultWire {
            query: self.query_text(),
            level: self.level,
            schema: self.schema.attributes.clone(),
            lineage: LineageWire {
                relations: self.lineage.relations.clone(),
                attributes: self
                    .lineage
                    .attributes
                    .iter()
                    .map(|(a, s)| AttrLineageWire { attribute: a.clone(), sources: s.iter().map(ToString::to_string).collect() })
                    .collect(),
            },
            generalized: self.generalized.iter().map(ToString::to_string).collect(),
            tuples: self
                .tuples
                .iter()
                .map(|t| TupleWire {
                    values: t.values.iter().map(Value::to_json).collect(),
                    witnesses: t.witnesses.as_ref().map(|b| {
                        b.witnesses().map(|w| w.iter().map(ToString::to_string).collect()).collect()
                    }),
                    how: t.how.as_ref().map(ToString::to_string),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&wire).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<AnnotatedResult, ResultFormatError> {
        let wire: ResultWire = serde_json::from_str(json)?;
        let query = parse(&wire.query).map_err(|e| ResultFormatError::Invalid(format!("query: {e}")))?;
        let bad = |what: String| ResultFormatError::Invalid(what);
        let parse_ref = |s: &str| s.parse::<AttrRef>().map_err(|e| bad(e.to_string()));
        let lineage = WhereLineage {
            relations: wire.lineage.relations,
            attributes: wire
                .lineage
                .attributes
                .into_iter()
                .map(|a| Ok((a.attribute, a.sources.iter().map(|s| parse_ref(s)).collect::<Result<_, _>>()?)))
                .collect::<Result<_, ResultFormatError>>()?,
        };
        let generalized = wire.generalized.iter().map(|s| parse_ref(s)).collect::<Result<_, _>>()?;
        let is_aggregate = query.is_aggregate();
        let tuples = wire
            .tuples
            .into_iter()
            .map(|t| {
                let values = t
                    .values
                    .iter()
                    .map(|v| Value::from_json(v).ok_or_else(|| bad(format!("unsupported value {v}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.len() != wire.schema.len() {
                    return Err(bad(format!("tuple has {} values, schema has {}", values.len(), wire.schema.len())));
                }
                let witnesses = t
                    .witnesses
                    .map(|ws| {
                        ws.into_iter()
                            .map(|w| {
                                w.iter()
                                    .map(|id| id.parse::<TupleId>().map_err(|e| bad(e.to_string())))
                                    .collect::<Result<Witness, _>>()
                            })
                            .collect::<Result<Vec<_>, _>>()
                            .map(WitnessBasis::new)
                    })
                    .transpose()?;
                let how = t
                    .how
                    .map(|h| {
                        if is_aggregate {
                            h.parse().map(HowAnnotation::Aggregate).map_err(|e: AggExprParseError| bad(e.to_string()))
                        } else {
                            h.parse().map(HowAnnotation::Polynomial).map_err(|e: PolynomialParseError| bad(e.to_string()))
                        }
                    })
                    .transpose()?;
                Ok(ResultTuple { values, witnesses, how })
            })
            .collect::<Result<_, ResultFormatError>>()?;
        Ok(AnnotatedResult {
            query,
            level: wire.level,
            schema: Schema { name: crate::query::RESULT_RELATION.to_string(), attributes: wire.schema },
            lineage,
            generalized,
            tuples,
        })
    }
}

#[derive(Debug, Error)]
pub enum ResultFormatError {
    #[error("malformed result JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed result: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct ResultWire {
    query: String,
    level: ProvenanceLevel,
    schema: Vec<Attribute>,
    #[serde(rename = "where")]
    lineage: LineageWire,
    #[serde(default)]
    generalized: Vec<String>,
    tuples: Vec<TupleWire>,
}

#[derive(Serialize, Deserialize)]
struct LineageWire {
    relations: Vec<String>,
    attributes: Vec<AttrLineageWire>,
}

#[derive(Serialize, Deserialize)]
struct AttrLineageWire {
    attribute: String,
    sources: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TupleWire {
    values: Vec<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witnesses: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    how: Option<String>,
}
