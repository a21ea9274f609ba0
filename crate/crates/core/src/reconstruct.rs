//! Inverting a published result into the largest sub-database its provenance
//! reveals. Unrecoverable cells become Null.
//!
//! * where: one tuple per result tuple in every scanned relation; copied
//!   attributes are exact, aggregated values are not source values and stay
//!   Null.
//! * why: one tuple per witness member, which reveals the exact tuple count.
//!   A singleton group of AVG/SUM/MIN/MAX also reveals its source value,
//!   marked inferred.
//! * how: one tuple per variable of every monomial (or per aggregation term),
//!   with every aggregated value recovered exactly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AnnotatedResult, HowAnnotation, ProvenanceLevel};
use crate::query::AggFn;
use crate::relmodel::{Attribute, AttrRef, Catalog, Schema, TupleId, Value};

/// A reconstructed cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    /// Copied verbatim from the published data.
    Exact(Value),
    /// Derived by arithmetic from the published data.
    Inferred(Value),
    Null,
    /// Known only up to a generalization label.
    Generalized(String),
}

/// The status of a [`Cell`] without its payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellStatus {
    Exact,
    Inferred,
    Null,
    Generalized,
}

impl CellStatus {
    pub fn tag(self) -> &'static str {
        match self {
            CellStatus::Exact => "exact",
            CellStatus::Inferred => "inferred",
            CellStatus::Null => "null",
            CellStatus::Generalized => "gen",
        }
    }
}

impl Cell {
    pub fn status(&self) -> CellStatus {
        match self {
            Cell::Exact(_) => CellStatus::Exact,
            Cell::Inferred(_) => CellStatus::Inferred,
            Cell::Null => CellStatus::Null,
            Cell::Generalized(_) => CellStatus::Generalized,
        }
    }

    /// The ground value of an exact or inferred cell.
    pub fn value(&self) -> Option<&Value> {
        match self {
            Cell::Exact(v) | Cell::Inferred(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_disclosing(&self) -> bool {
        self.value().is_some()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Exact(v) => write!(f, "{v}"),
            Cell::Inferred(v) => write!(f, "{v}*"),
            Cell::Null => f.write_str("-"),
            Cell::Generalized(l) => write!(f, "<{l}>"),
        }
    }
}

/// Where a reconstructed row comes from: a result row (where level) or an
/// identified source tuple (why and how levels).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RowOrigin {
    ResultRow(usize),
    Tuple(TupleId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconRow {
    pub origin: RowOrigin,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconRelation {
    pub schema: Schema,
    pub rows: Vec<ReconRow>,
}

impl ReconRelation {
    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn column(&self, attr: &str) -> Option<usize> {
        self.schema.position(attr)
    }
}

/// Marked tables over the source schemas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructedDatabase {
    pub level: ProvenanceLevel,
    pub query: String,
    pub relations: Vec<ReconRelation>,
}

impl ReconstructedDatabase {
    pub fn relation(&self, name: &str) -> Option<&ReconRelation> {
        self.relations.iter().find(|r| r.name() == name)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&ReconRelation, usize, usize, &Cell)> {
        self.relations.iter().flat_map(|rel| {
            rel.rows
                .iter()
                .enumerate()
                .flat_map(move |(r, row)| row.cells.iter().enumerate().map(move |(c, cell)| (rel, r, c, cell)))
        })
    }

    /// Number of exact plus inferred cells.
    pub fn disclosed_cells(&self) -> usize {
        self.cells().filter(|(_, _, _, c)| c.is_disclosing()).count()
    }

    pub fn row_count(&self) -> usize {
        self.relations.iter().map(|r| r.rows.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("lineage names relation `{0}` which is not in the catalog")]
    UnknownRelationInLineage(String),
    #[error("lineage names attribute `{0}` which is not in the catalog")]
    UnknownAttributeInLineage(String),
    #[error("cannot reconstruct at level {requested}: result only carries {available} provenance")]
    LevelMismatch { requested: ProvenanceLevel, available: ProvenanceLevel },
}

/// Dispatches on `level`, which may be lower than the result's own level.
pub fn reconstruct(
    result: &AnnotatedResult,
    catalog: &Catalog,
    level: ProvenanceLevel,
) -> Result<ReconstructedDatabase, ReconstructError> {
    match level {
        ProvenanceLevel::Where => reconstruct_where(result, catalog),
        ProvenanceLevel::Why => reconstruct_why(result, catalog),
        ProvenanceLevel::How => reconstruct_how(result, catalog),
    }
}

/// Output columns copied from a source attribute without aggregation, plus
/// the source of the aggregated column.
struct Plan<'a> {
    result: &'a AnnotatedResult,
    relations: Vec<ReconRelation>,
    copies: Vec<(usize, AttrRef, usize)>,
    target: Option<(AttrRef, usize)>,
}

impl<'a> Plan<'a> {
    fn new(result: &'a AnnotatedResult, catalog: &Catalog, level: ProvenanceLevel) -> Result<Self, ReconstructError> {
        let available = result.available_level();
        if level > available {
            return Err(ReconstructError::LevelMismatch { requested: level, available });
        }
        let relations = result
            .lineage
            .relations
            .iter()
            .map(|r| {
                catalog
                    .get(r)
                    .map(|s| ReconRelation { schema: s.clone(), rows: Vec::new() })
                    .ok_or_else(|| ReconstructError::UnknownRelationInLineage(r.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let column = |src: &AttrRef| {
            catalog
                .get(&src.relation)
                .ok_or_else(|| ReconstructError::UnknownRelationInLineage(src.relation.clone()))?
                .position(&src.attribute)
                .ok_or_else(|| ReconstructError::UnknownAttributeInLineage(src.to_string()))
        };

        let aggregated = result.aggregate().map(|_| result.schema.arity() - 1);
        let mut copies = Vec::new();
        let mut target = None;
        for (pos, (_, sources)) in result.lineage.attributes.iter().enumerate() {
            for src in sources {
                let col = column(src)?;
                if Some(pos) == aggregated {
                    target = Some((src.clone(), col));
                } else {
                    copies.push((pos, src.clone(), col));
                }
            }
        }
        Ok(Plan { result, relations, copies, target })
    }

    fn cell(&self, value: &Value, source: &AttrRef) -> Cell {
        match value {
            Value::Null => Cell::Null,
            v if self.result.generalized.contains(source) => Cell::Generalized(v.to_string()),
            v => Cell::Exact(v.clone()),
        }
    }

    /// A row for `relation` with every copied column of result row `row`
    /// filled in.
    fn row(&self, relation: &str, row: usize) -> Vec<Cell> {
        let rel = self.relations.iter().find(|r| r.name() == relation).expect("relation in lineage");
        let mut cells = vec![Cell::Null; rel.schema.arity()];
        let values = &self.result.tuples[row].values;
        for (pos, src, col) in &self.copies {
            if src.relation == relation {
                cells[*col] = self.cell(&values[*pos], src);
            }
        }
        cells
    }

    fn push(&mut self, relation: &str, origin: RowOrigin, cells: Vec<Cell>) {
        let rel = self.relations.iter_mut().find(|r| r.name() == relation).expect("relation in lineage");
        rel.rows.push(ReconRow { origin, cells });
    }

    fn finish(self, level: ProvenanceLevel) -> ReconstructedDatabase {
        ReconstructedDatabase { level, query: self.result.query_text(), relations: self.relations }
    }
}

pub fn reconstruct_where(result: &AnnotatedResult, catalog: &Catalog) -> Result<ReconstructedDatabase, ReconstructError> {
    let mut plan = Plan::new(result, catalog, ProvenanceLevel::Where)?;
    let names: Vec<String> = plan.relations.iter().map(|r| r.name().to_string()).collect();
    for name in &names {
        for i in 0..result.tuples.len() {
            let cells = plan.row(name, i);
            plan.push(name, RowOrigin::ResultRow(i), cells);
        }
    }
    Ok(plan.finish(ProvenanceLevel::Where))
}

pub fn reconstruct_why(result: &AnnotatedResult, catalog: &Catalog) -> Result<ReconstructedDatabase, ReconstructError> {
    let mut plan = Plan::new(result, catalog, ProvenanceLevel::Why)?;
    let closed_form = result
        .aggregate()
        .is_some_and(|a| matches!(a.func, AggFn::Avg | AggFn::Sum | AggFn::Min | AggFn::Max));
    for (i, tuple) in result.tuples.iter().enumerate() {
        let basis = tuple.witnesses.as_ref().expect("checked by plan");
        for witness in basis.witnesses() {
            for id in witness {
                let mut cells = plan.row(&id.relation, i);
                if closed_form && witness.len() == 1 {
                    let output = tuple.values.last().expect("aggregate output");
                    if let Some((src, col)) = &plan.target {
                        if src.relation == id.relation && !output.is_null() {
                            cells[*col] = Cell::Inferred(output.clone());
                        }
                    }
                }
                plan.push(&id.relation, RowOrigin::Tuple(id.clone()), cells);
            }
        }
    }
    Ok(plan.finish(ProvenanceLevel::Why))
}

pub fn reconstruct_how(result: &AnnotatedResult, catalog: &Catalog) -> Result<ReconstructedDatabase, ReconstructError> {
    let mut plan = Plan::new(result, catalog, ProvenanceLevel::How)?;
    for (i, tuple) in result.tuples.iter().enumerate() {
        match tuple.how.as_ref().expect("checked by plan") {
            HowAnnotation::Polynomial(p) => {
                for m in p.monomials() {
                    for id in m.support() {
                        let cells = plan.row(&id.relation, i);
                        plan.push(&id.relation, RowOrigin::Tuple(id.clone()), cells);
                    }
                }
            }
            HowAnnotation::Aggregate(agg) => {
                for term in &agg.terms {
                    for m in term.annotation.monomials() {
                        for id in m.support() {
                            let mut cells = plan.row(&id.relation, i);
                            if let Some((src, col)) = &plan.target {
                                if src.relation == id.relation {
                                    cells[*col] = plan.cell(&term.value, src);
                                }
                            }
                            plan.push(&id.relation, RowOrigin::Tuple(id.clone()), cells);
                        }
                    }
                }
            }
        }
    }
    Ok(plan.finish(ProvenanceLevel::How))
}

impl fmt::Display for ReconstructedDatabase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rel in &self.relations {
            let header: Vec<String> = std::iter::once("origin".to_string())
                .chain(rel.schema.attribute_names().map(str::to_string))
                .collect();
            let body: Vec<Vec<String>> = rel
                .rows
                .iter()
                .map(|row| {
                    let origin = match &row.origin {
                        RowOrigin::ResultRow(i) => format!("row {i}"),
                        RowOrigin::Tuple(t) => t.to_string(),
                    };
                    std::iter::once(origin).chain(row.cells.iter().map(ToString::to_string)).collect()
                })
                .collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            writeln!(f, "{} ({} provenance)", rel.name(), self.level)?;
            for line in std::iter::once(&header).chain(&body) {
                let padded: Vec<String> = line.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
                writeln!(f, "  {}", padded.join(" | ").trim_end())?;
            }
        }
        Ok(())
    }
}

// JSON interchange ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ReconWire {
    level: ProvenanceLevel,
    query: String,
    relations: Vec<RelationWire>,
}

#[derive(Serialize, Deserialize)]
struct RelationWire {
    name: String,
    attributes: Vec<Attribute>,
    rows: Vec<RowWire>,
}

#[derive(Serialize, Deserialize)]
struct RowWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row: Option<usize>,
    cells: Vec<CellWire>,
}

#[derive(Serialize, Deserialize)]
struct CellWire {
    v: serde_json::Value,
    s: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Error)]
pub enum ReconstructionFormatError {
    #[error("malformed reconstruction JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed reconstruction: {0}")]
    Invalid(String),
}

impl ReconstructedDatabase {
    pub fn to_json(&self) -> String {
        let wire = ReconWire {
            level: self.level,
            query: self.query.clone(),
            relations: self
                .relations
                .iter()
                .map(|rel| RelationWire {
                    name: rel.name().to_string(),
                    attributes: rel.schema.attributes.clone(),
                    rows: rel
                        .rows
                        .iter()
                        .map(|row| {
                            let (id, idx) = match &row.origin {
                                RowOrigin::ResultRow(i) => (None, Some(*i)),
                                RowOrigin::Tuple(t) => (Some(t.to_string()), None),
                            };
                            RowWire {
                                id,
                                row: idx,
                                cells: row
                                    .cells
                                    .iter()
                                    .map(|c| CellWire {
                                        v: c.value().map_or(serde_json::Value::Null, Value::to_json),
                                        s: c.status().tag().to_string(),
                                        label: match c {
                                            Cell::Generalized(l) => Some(l.clone()),
                                            _ => None,
                                        },
                                    })
                                    .collect(),
                            }
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&wire).expect("reconstruction serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<ReconstructedDatabase, ReconstructionFormatError> {
        let bad = |s: String| ReconstructionFormatError::Invalid(s);
        let wire: ReconWire = serde_json::from_str(json)?;
        let relations = wire
            .relations
            .into_iter()
            .map(|rel| {
                let schema = Schema::new(rel.name, rel.attributes).map_err(|e| bad(e.to_string()))?;
                let rows = rel
                    .rows
                    .into_iter()
                    .map(|row| {
                        let origin = match (row.id, row.row) {
                            (Some(id), None) => RowOrigin::Tuple(id.parse().map_err(|e: crate::relmodel::TupleIdError| bad(e.to_string()))?),
                            (None, Some(i)) => RowOrigin::ResultRow(i),
                            _ => return Err(bad("row needs exactly one of `id` or `row`".into())),
                        };
                        if row.cells.len() != schema.arity() {
                            return Err(bad(format!("row has {} cells, schema has {}", row.cells.len(), schema.arity())));
                        }
                        let cells = row
                            .cells
                            .into_iter()
                            .map(|c| {
                                let value = || Value::from_json(&c.v).filter(|v| !v.is_null()).ok_or_else(|| bad(format!("cell needs a value: {}", c.v)));
                                Ok(match c.s.as_str() {
                                    "exact" => Cell::Exact(value()?),
                                    "inferred" => Cell::Inferred(value()?),
                                    "null" => Cell::Null,
                                    "gen" => Cell::Generalized(c.label.clone().ok_or_else(|| bad("generalized cell needs a label".into()))?),
                                    other => return Err(bad(format!("unknown cell status `{other}`"))),
                                })
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(ReconRow { origin, cells })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ReconRelation { schema, rows })
            })
            .collect::<Result<Vec<_>, ReconstructionFormatError>>()?;
        Ok(ReconstructedDatabase { level: wire.level, query: wire.query, relations })
    }

    /// Set of source tuples this reconstruction names explicitly.
    pub fn named_tuples(&self) -> BTreeSet<TupleId> {
        self.relations
            .iter()
            .flat_map(|r| r.rows.iter())
            .filter_map(|row| match &row.origin {
                RowOrigin::Tuple(t) => Some(t.clone()),
                RowOrigin::ResultRow(_) => None,
            })
            .collect()
    }
}
