//! Generalization, suppression and permutation of published data.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::engine::{AnnotatedResult, HowAnnotation};
use crate::reconstruct::{Cell, CellStatus, ReconstructedDatabase, RowOrigin};
use crate::relmodel::{AttrRef, AttributeType, Relation, Value};

#[derive(Debug, Error)]
pub enum MitigateError {
    #[error("value `{value}` has no label at level {level} of the hierarchy for {attribute}")]
    ValueNotInHierarchy { attribute: AttrRef, value: String, level: usize },
    #[error("{0} does not occur in the result")]
    AttributeNotInResult(AttrRef),
    #[error("hierarchy for {attribute} has {levels} levels, level {requested} requested")]
    LevelOutOfRange { attribute: AttrRef, levels: usize, requested: usize },
    #[error("relation `{relation}` has no attribute `{attribute}`")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("malformed hierarchy: {0}")]
    Hierarchy(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Successively coarser labelings of one attribute's values. Level 0 is the
/// identity on the ground domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizationHierarchy {
    attribute: AttrRef,
    domain: BTreeSet<String>,
    maps: Vec<BTreeMap<String, String>>,
}

#[derive(Deserialize)]
struct HierarchyWire {
    relation: String,
    attribute: String,
    levels: Vec<serde_json::Value>,
}

impl GeneralizationHierarchy {
    /// `domain` lists the ground values; `maps[i]` labels the values of
    /// level `i` (ground values for `i == 0`). Every map must be total on
    /// the previous level's labels.
    pub fn new(
        attribute: AttrRef,
        domain: impl IntoIterator<Item = String>,
        maps: Vec<BTreeMap<String, String>>,
    ) -> Result<Self, MitigateError> {
        let mut domain: BTreeSet<String> = domain.into_iter().collect();
        if domain.is_empty() {
            if let Some(first) = maps.first() {
                domain = first.keys().cloned().collect();
            }
        }
        let mut previous = domain.clone();
        for (i, map) in maps.iter().enumerate() {
            if let Some(missing) = previous.iter().find(|v| !map.contains_key(*v)) {
                return Err(MitigateError::Hierarchy(format!("level {} has no label for `{missing}`", i + 1)));
            }
            previous = previous.iter().map(|v| map[v].clone()).collect();
        }
        Ok(GeneralizationHierarchy { attribute, domain, maps })
    }

    pub fn from_json(json: &str) -> Result<Self, MitigateError> {
        let bad = |e: String| MitigateError::Hierarchy(e);
        let wire: HierarchyWire = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;
        let mut levels = wire.levels.into_iter();
        let domain = match levels.next() {
            Some(serde_json::Value::Array(items)) => items
                .into_iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => canonical(&s),
                    serde_json::Value::Number(n) => canonical(&n.to_string()),
                    other => Err(bad(format!("unexpected domain value {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(other) => return Err(bad(format!("level 0 must be a list of domain values, found {other}"))),
            None => return Err(bad("no levels".into())),
        };
        let maps = levels
            .map(|level| {
                let serde_json::Value::Object(obj) = level else {
                    return Err(bad("levels above 0 must be objects".into()));
                };
                obj.into_iter()
                    .map(|(k, v)| match v {
                        serde_json::Value::String(label) => Ok((k, label)),
                        other => Err(bad(format!("label for `{k}` must be a string, found {other}"))),
                    })
                    .collect::<Result<BTreeMap<_, _>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        // Ground keys of level 1 are normalized like the domain.
        let mut maps = maps;
        if let Some(first) = maps.first_mut() {
            *first = std::mem::take(first)
                .into_iter()
                .map(|(k, v)| Ok((canonical(&k)?, v)))
                .collect::<Result<_, MitigateError>>()?;
        }
        GeneralizationHierarchy::new(AttrRef::new(wire.relation, wire.attribute), domain, maps)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MitigateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| MitigateError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn attribute(&self) -> &AttrRef {
        &self.attribute
    }

    /// Number of levels including the identity level 0.
    pub fn levels(&self) -> usize {
        self.maps.len() + 1
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> {
        self.domain.iter().map(String::as_str)
    }

    /// The label of a ground value at `level`.
    pub fn label(&self, value: &Value, level: usize) -> Result<String, MitigateError> {
        self.check_level(level)?;
        let ground = value.to_string();
        let missing = || MitigateError::ValueNotInHierarchy {
            attribute: self.attribute.clone(),
            value: ground.clone(),
            level,
        };
        if !self.domain.contains(&ground) {
            return Err(missing());
        }
        self.maps[..level]
            .iter()
            .try_fold(ground.clone(), |v, map| map.get(&v).cloned().ok_or_else(missing))
    }

    fn check_level(&self, level: usize) -> Result<(), MitigateError> {
        if level >= self.levels() {
            return Err(MitigateError::LevelOutOfRange {
                attribute: self.attribute.clone(),
                levels: self.levels(),
                requested: level,
            });
        }
        Ok(())
    }
}

/// Hierarchy keys are numbers in canonical decimal form, or plain text.
fn canonical(raw: &str) -> Result<String, MitigateError> {
    Ok(match raw.parse::<crate::relmodel::Decimal>() {
        Ok(d) => d.to_string(),
        Err(_) => raw.to_string(),
    })
}

/// Replaces published values of `h`'s attribute by their labels at `level`:
/// copied output columns and the values inside aggregation terms. Tuple
/// variables are untouched, and the aggregated output itself stays as is.
pub fn generalize_result(
    result: &AnnotatedResult,
    h: &GeneralizationHierarchy,
    level: usize,
) -> Result<AnnotatedResult, MitigateError> {
    h.check_level(level)?;
    let attr = h.attribute();
    let aggregated = result.aggregate().map(|_| result.schema.arity() - 1);
    let columns: Vec<usize> = result
        .lineage
        .attributes
        .iter()
        .enumerate()
        .filter(|(i, (_, sources))| Some(*i) != aggregated && sources.contains(attr))
        .map(|(i, _)| i)
        .collect();
    let in_terms = aggregated.is_some_and(|i| result.lineage.attributes[i].1.contains(attr));
    if columns.is_empty() && !in_terms {
        return Err(MitigateError::AttributeNotInResult(attr.clone()));
    }
    if level == 0 {
        return Ok(result.clone());
    }

    let label = |v: &Value| -> Result<Value, MitigateError> {
        Ok(if v.is_null() { Value::Null } else { Value::Txt(h.label(v, level)?) })
    };
    let mut out = result.clone();
    for &c in &columns {
        out.schema.attributes[c].ty = AttributeType::Text;
    }
    for t in &mut out.tuples {
        for &c in &columns {
            t.values[c] = label(&t.values[c])?;
        }
        if in_terms {
            if let Some(HowAnnotation::Aggregate(agg)) = &mut t.how {
                for term in &mut agg.terms {
                    term.value = label(&term.value)?;
                }
            }
        }
    }
    out.generalized.insert(attr.clone());
    Ok(out)
}

/// Turns every exact or inferred cell of `h`'s attribute into its label.
pub fn generalize_reconstruction(
    rec: &ReconstructedDatabase,
    h: &GeneralizationHierarchy,
    level: usize,
) -> Result<ReconstructedDatabase, MitigateError> {
    h.check_level(level)?;
    let mut out = rec.clone();
    if level == 0 {
        return Ok(out);
    }
    let attr = h.attribute();
    for rel in out.relations.iter_mut().filter(|r| r.name() == attr.relation) {
        let Some(col) = rel.column(&attr.attribute) else { continue };
        for row in &mut rel.rows {
            if let Some(v) = row.cells[col].value() {
                row.cells[col] = Cell::Generalized(h.label(v, level)?);
            }
        }
    }
    Ok(out)
}

/// Which cells to suppress. Unset fields match anything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellSelector {
    pub relation: Option<String>,
    pub attribute: Option<String>,
    pub statuses: Option<BTreeSet<CellStatus>>,
}

impl CellSelector {
    pub fn attribute(attr: &AttrRef) -> Self {
        CellSelector {
            relation: Some(attr.relation.clone()),
            attribute: Some(attr.attribute.clone()),
            statuses: None,
        }
    }

    pub fn matches(&self, relation: &str, attribute: &str, status: CellStatus) -> bool {
        self.relation.as_deref().is_none_or(|r| r == relation)
            && self.attribute.as_deref().is_none_or(|a| a == attribute)
            && self.statuses.as_ref().is_none_or(|s| s.contains(&status))
    }
}

/// Nulls every cell selected by `pred`. Row counts do not change.
pub fn suppress(
    rec: &ReconstructedDatabase,
    pred: impl Fn(&str, &str, CellStatus) -> bool,
) -> ReconstructedDatabase {
    let mut out = rec.clone();
    for rel in &mut out.relations {
        let names: Vec<String> = rel.schema.attribute_names().map(str::to_string).collect();
        let relation = rel.schema.name.clone();
        for row in &mut rel.rows {
            for (cell, attr) in row.cells.iter_mut().zip(&names) {
                if pred(&relation, attr, cell.status()) {
                    *cell = Cell::Null;
                }
            }
        }
    }
    out
}

/// The MINSTD generator: x' = 48271 x mod (2^31 - 1).
#[derive(Clone, Debug)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MODULUS: u64 = (1 << 31) - 1;
    pub const MULTIPLIER: u64 = 48271;

    pub fn new(seed: u64) -> Self {
        let state = seed % Self::MODULUS;
        Lcg { state: if state == 0 { 1 } else { state } }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.state = self.state * Self::MULTIPLIER % Self::MODULUS;
        self.state as u32
    }
}

/// `perm[i]` is the index whose value lands at position `i`, by Fisher-Yates
/// driven by [`Lcg`] from the last position down.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Lcg::new(seed);
    for i in (1..n).rev() {
        let j = rng.next_u32() as usize % (i + 1);
        perm.swap(i, j);
    }
    perm
}

/// Reorders one column of `rel`; tuple ids and all other columns stay put.
pub fn permute_column(rel: &Relation, attr: &str, seed: u64) -> Result<Relation, MitigateError> {
    let col = rel.schema().position(attr).ok_or_else(|| MitigateError::UnknownAttribute {
        relation: rel.name().to_string(),
        attribute: attr.to_string(),
    })?;
    let perm = permutation(rel.len(), seed);
    let tuples = rel.tuples();
    let values = tuples
        .iter()
        .zip(&perm)
        .map(|(t, &from)| {
            let mut v = t.values.clone();
            v[col] = tuples[from].values[col].clone();
            v
        })
        .collect();
    Ok(rel.with_values(values))
}

/// Reorders one column of a reconstructed relation among its source
/// tuples. Rows naming the same tuple keep agreeing: each tuple contributes
/// one cell (its most revealing one) and receives one cell back. A relation
/// the reconstruction does not contain is left alone.
pub fn permute_reconstruction(
    rec: &ReconstructedDatabase,
    attr: &AttrRef,
    seed: u64,
) -> Result<ReconstructedDatabase, MitigateError> {
    let mut out = rec.clone();
    let unknown = || MitigateError::UnknownAttribute {
        relation: attr.relation.clone(),
        attribute: attr.attribute.clone(),
    };
    let Some(rel) = out.relations.iter_mut().find(|r| r.name() == attr.relation) else {
        return Ok(out);
    };
    let col = rel.column(&attr.attribute).ok_or_else(unknown)?;

    let mut origins: Vec<&RowOrigin> = Vec::new();
    let mut cells: Vec<Cell> = Vec::new();
    for row in &rel.rows {
        match origins.iter().position(|o| *o == &row.origin) {
            Some(i) if !cells[i].is_disclosing() => cells[i] = row.cells[col].clone(),
            Some(_) => {}
            None => {
                origins.push(&row.origin);
                cells.push(row.cells[col].clone());
            }
        }
    }
    let perm = permutation(origins.len(), seed);
    let assigned: Vec<(RowOrigin, Cell)> =
        origins.iter().zip(&perm).map(|(o, &from)| ((*o).clone(), cells[from].clone())).collect();
    for row in &mut rel.rows {
        let (_, cell) = assigned.iter().find(|(o, _)| o == &row.origin).expect("every origin assigned");
        row.cells[col] = cell.clone();
    }
    Ok(out)
}

/// One mitigation step on a reconstruction.
#[derive(Clone, Debug)]
pub enum MitigationPlan {
    Generalize { hierarchy: GeneralizationHierarchy, level: usize },
    Suppress(CellSelector),
    Permute { attribute: AttrRef, seed: u64 },
}

impl MitigationPlan {
    pub fn name(&self) -> &'static str {
        match self {
            MitigationPlan::Generalize { .. } => "generalize",
            MitigationPlan::Suppress(_) => "suppress",
            MitigationPlan::Permute { .. } => "permute",
        }
    }

    pub fn apply(&self, rec: &ReconstructedDatabase) -> Result<ReconstructedDatabase, MitigateError> {
        match self {
            MitigationPlan::Generalize { hierarchy, level } => generalize_reconstruction(rec, hierarchy, *level),
            MitigationPlan::Suppress(sel) => Ok(suppress(rec, |r, a, s| sel.matches(r, a, s))),
            MitigationPlan::Permute { attribute, seed } => permute_reconstruction(rec, attribute, *seed),
        }
    }
}
