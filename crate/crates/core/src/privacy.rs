//! Disclosure analysis of a reconstruction against the ground-truth source.
//!
//! The leakage score is the fraction of sensitive source cells (non-null,
//! in tuples touched by some witness of the query) that the reconstruction
//! recovers exactly or by inference. Cells whose published value disagrees
//! with the source, as after a permutation, do not count as recovered.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::engine::{evaluate, AnnotatedResult, ProvenanceLevel};
use crate::query::{validate, ValidatedQuery, ValidationError};
use crate::reconstruct::{reconstruct, Cell, ReconRelation, ReconstructError, ReconstructedDatabase, RowOrigin};
use crate::relmodel::{AttrRef, Catalog, Database, TupleId, Value};

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("policy names unknown attribute `{0}`")]
    PolicyAttributeUnknown(AttrRef),
    #[error("policy lists `{0}` as both sensitive and quasi-identifying")]
    PolicyOverlap(AttrRef),
    #[error("policy threshold k must be at least 1")]
    PolicyThreshold,
    #[error("malformed policy: {0}")]
    PolicyFormat(String),
    #[error("query does not validate against the source: {0}")]
    Query(#[from] ValidationError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error("result does not match the source: {0}")]
    ResultMismatch(String),
    #[error("`{0}` is not the target of an aggregate query")]
    NotAnAggregateQuery(String),
    #[error("attribute `{attribute}` not in reconstructed relation `{relation}`")]
    UnknownAttribute { relation: String, attribute: String },
    #[error("leakage at {lower} ({lower_score}) exceeds leakage at {higher} ({higher_score})")]
    MonotonicityViolation {
        lower: ProvenanceLevel,
        lower_score: Leakage,
        higher: ProvenanceLevel,
        higher_score: Leakage,
    },
}

/// Which attributes must not be disclosed and which may link records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivacyPolicy {
    pub sensitive: BTreeSet<AttrRef>,
    pub quasi_identifiers: BTreeSet<AttrRef>,
    pub k: usize,
}

#[derive(Serialize, Deserialize)]
struct PolicyWire {
    sensitive: Vec<String>,
    quasi_identifiers: Vec<String>,
    k: usize,
}

impl PrivacyPolicy {
    pub fn new(
        sensitive: impl IntoIterator<Item = AttrRef>,
        quasi_identifiers: impl IntoIterator<Item = AttrRef>,
        k: usize,
    ) -> Self {
        PrivacyPolicy {
            sensitive: sensitive.into_iter().collect(),
            quasi_identifiers: quasi_identifiers.into_iter().collect(),
            k,
        }
    }

    pub fn check(&self, catalog: &Catalog) -> Result<(), PrivacyError> {
        if self.k == 0 {
            return Err(PrivacyError::PolicyThreshold);
        }
        for a in self.sensitive.iter().chain(&self.quasi_identifiers) {
            if !catalog.has_attribute(&a.relation, &a.attribute) {
                return Err(PrivacyError::PolicyAttributeUnknown(a.clone()));
            }
        }
        match self.sensitive.intersection(&self.quasi_identifiers).next() {
            Some(a) => Err(PrivacyError::PolicyOverlap(a.clone())),
            None => Ok(()),
        }
    }

    pub fn from_json(json: &str) -> Result<PrivacyPolicy, PrivacyError> {
        let wire: PolicyWire = serde_json::from_str(json).map_err(|e| PrivacyError::PolicyFormat(e.to_string()))?;
        let refs = |v: Vec<String>| {
            v.iter()
                .map(|s| s.parse::<AttrRef>().map_err(|e| PrivacyError::PolicyFormat(e.to_string())))
                .collect::<Result<BTreeSet<_>, _>>()
        };
        Ok(PrivacyPolicy { sensitive: refs(wire.sensitive)?, quasi_identifiers: refs(wire.quasi_identifiers)?, k: wire.k })
    }

    pub fn to_json(&self) -> String {
        let wire = PolicyWire {
            sensitive: self.sensitive.iter().map(ToString::to_string).collect(),
            quasi_identifiers: self.quasi_identifiers.iter().map(ToString::to_string).collect(),
            k: self.k,
        };
        serde_json::to_string_pretty(&wire).expect("policy serializes") + "\n"
    }
}

/// Recovered over total sensitive cells, kept as an exact fraction.
#[derive(Clone, Copy, Debug, Eq)]
pub struct Leakage {
    pub recovered: usize,
    pub total: usize,
}

impl Leakage {
    pub fn new(recovered: usize, total: usize) -> Self {
        assert!(recovered <= total, "cannot recover more cells than exist");
        Leakage { recovered, total }
    }

    pub fn is_zero(self) -> bool {
        self.recovered == 0
    }

    pub fn score(self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.recovered as f64 / self.total as f64
        }
    }

    /// Numerator and denominator in lowest terms; an empty denominator is 0/1.
    pub fn reduced(self) -> (usize, usize) {
        if self.recovered == 0 || self.total == 0 {
            return (0, 1);
        }
        let (mut a, mut b) = (self.recovered, self.total);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        (self.recovered / a, self.total / a)
    }
}

impl PartialEq for Leakage {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for Leakage {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Leakage {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.reduced();
        let (c, d) = other.reduced();
        (a * d).cmp(&(c * b))
    }
}

impl fmt::Display for Leakage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reduced() {
            (n, 1) => write!(f, "{n}.0"),
            (n, d) => write!(f, "{n}/{d}"),
        }
    }
}

impl Serialize for Leakage {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Leakage", 4)?;
        st.serialize_field("score", &self.score())?;
        st.serialize_field("fraction", &self.to_string())?;
        st.serialize_field("recovered", &self.recovered)?;
        st.serialize_field("total", &self.total)?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellClass {
    DisclosedExact,
    DisclosedInferred,
    ProtectedNull,
    ProtectedGeneralized,
    /// A published value that contradicts every corresponding source tuple.
    ProtectedPerturbed,
}

impl CellClass {
    pub fn is_disclosed(self) -> bool {
        matches!(self, CellClass::DisclosedExact | CellClass::DisclosedInferred)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellReport {
    pub relation: String,
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<String>,
    pub attribute: String,
    pub class: CellClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZeroVarianceGroups {
    pub attribute: String,
    pub groups: Vec<Vec<serde_json::Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisclosureReport {
    pub level: ProvenanceLevel,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub leakage: Leakage,
    /// `None` when no reconstructed relation carries a quasi-identifier.
    #[serde(serialize_with = "k_or_na")]
    pub k_anonymity: Option<usize>,
    pub zero_variance_groups: Vec<ZeroVarianceGroups>,
    pub cells: Vec<CellReport>,
}

fn k_or_na<S: Serializer>(k: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match k {
        Some(k) => s.serialize_u64(*k as u64),
        None => s.serialize_str("n/a"),
    }
}

impl DisclosureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Grouping key of a quasi-identifier cell: what an observer can tell apart.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassKey {
    Null,
    Value(Value),
    Label(String),
}

impl From<&Cell> for ClassKey {
    fn from(c: &Cell) -> Self {
        match c {
            Cell::Exact(v) | Cell::Inferred(v) => ClassKey::Value(v.clone()),
            Cell::Null => ClassKey::Null,
            Cell::Generalized(l) => ClassKey::Label(l.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KAnonymity {
    /// Smallest class size, `None` for an empty relation.
    pub k_min: Option<usize>,
    pub classes: BTreeMap<Vec<ClassKey>, usize>,
}

/// Partitions the rows of `rel` by their cells on `qi`.
pub fn k_anonymity(rel: &ReconRelation, qi: &[&str]) -> Result<KAnonymity, PrivacyError> {
    let cols = qi
        .iter()
        .map(|a| {
            rel.column(a).ok_or_else(|| PrivacyError::UnknownAttribute {
                relation: rel.name().to_string(),
                attribute: a.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut classes = BTreeMap::new();
    for row in &rel.rows {
        let key: Vec<ClassKey> = cols.iter().map(|&c| ClassKey::from(&row.cells[c])).collect();
        *classes.entry(key).or_insert(0) += 1;
    }
    Ok(KAnonymity { k_min: classes.values().copied().min(), classes })
}

/// Ground truth for a result: its query re-evaluated on the source with
/// witnesses, row for row.
struct Truth {
    query: ValidatedQuery,
    rows: Vec<(Vec<Value>, BTreeSet<TupleId>)>,
}

impl Truth {
    fn of(source: &Database, result: &AnnotatedResult) -> Result<Truth, PrivacyError> {
        let query = validate(&result.query, &source.catalog())?;
        let truth = evaluate(source, &query, ProvenanceLevel::Why);
        if truth.tuples.len() != result.tuples.len() {
            return Err(PrivacyError::ResultMismatch(format!(
                "result has {} tuples, the source yields {}",
                result.tuples.len(),
                truth.tuples.len()
            )));
        }
        let rows = truth
            .tuples
            .into_iter()
            .map(|t| (t.values, t.witnesses.expect("why level").tuples()))
            .collect();
        Ok(Truth { query, rows })
    }

    fn touched(&self) -> BTreeSet<&TupleId> {
        self.rows.iter().flat_map(|(_, w)| w).collect()
    }
}

/// Classifies every cell of `rec` and scores it against `policy`.
pub fn analyze_disclosure(
    rec: &ReconstructedDatabase,
    source: &Database,
    result: &AnnotatedResult,
    policy: &PrivacyPolicy,
) -> Result<DisclosureReport, PrivacyError> {
    policy.check(&source.catalog())?;
    if rec.query != result.query_text() {
        return Err(PrivacyError::ResultMismatch(format!(
            "reconstruction is of `{}`, result is of `{}`",
            rec.query,
            result.query_text()
        )));
    }
    let truth = Truth::of(source, result)?;
    let touched = truth.touched();

    let mut total = 0;
    for a in &policy.sensitive {
        let Some(rel) = source.relation(&a.relation) else { continue };
        let col = rel.schema().position(&a.attribute).expect("checked by policy");
        total += rel.tuples().iter().filter(|t| touched.contains(&t.id) && !t.values[col].is_null()).count();
    }

    let mut cells = Vec::new();
    let mut recovered: BTreeSet<(TupleId, usize)> = BTreeSet::new();
    for rel in &rec.relations {
        let source_rel = source
            .relation(rel.name())
            .ok_or_else(|| PrivacyError::ResultMismatch(format!("source has no relation `{}`", rel.name())))?;
        for (r, row) in rel.rows.iter().enumerate() {
            let corresponding: Vec<&TupleId> = match &row.origin {
                RowOrigin::Tuple(t) => vec![t],
                RowOrigin::ResultRow(i) => truth
                    .rows
                    .get(*i)
                    .ok_or_else(|| PrivacyError::ResultMismatch(format!("no result row {i}")))?
                    .1
                    .iter()
                    .filter(|t| t.relation == rel.name())
                    .collect(),
            };
            for (c, cell) in row.cells.iter().enumerate() {
                let attr = &rel.schema.attributes[c].name;
                let class = match cell {
                    Cell::Null => CellClass::ProtectedNull,
                    Cell::Generalized(_) => CellClass::ProtectedGeneralized,
                    Cell::Exact(v) | Cell::Inferred(v) => {
                        let matching: Vec<&TupleId> = corresponding
                            .iter()
                            .copied()
                            .filter(|t| source_rel.tuple(t.ordinal).is_some_and(|st| &st.values[c] == v))
                            .collect();
                        if matching.is_empty() {
                            CellClass::ProtectedPerturbed
                        } else {
                            if policy.sensitive.contains(&AttrRef::new(rel.name(), attr.as_str())) {
                                recovered.extend(matching.into_iter().filter(|t| touched.contains(t)).map(|t| (t.clone(), c)));
                            }
                            if matches!(cell, Cell::Exact(_)) {
                                CellClass::DisclosedExact
                            } else {
                                CellClass::DisclosedInferred
                            }
                        }
                    }
                };
                cells.push(CellReport {
                    relation: rel.name().to_string(),
                    row: r,
                    tuple: match &row.origin {
                        RowOrigin::Tuple(t) => Some(t.to_string()),
                        RowOrigin::ResultRow(_) => None,
                    },
                    attribute: attr.clone(),
                    class,
                });
            }
        }
    }
    let leakage = Leakage::new(recovered.len(), total);

    let mut k_min: Option<usize> = None;
    for rel in &rec.relations {
        let qi: Vec<&str> = policy
            .quasi_identifiers
            .iter()
            .filter(|a| a.relation == rel.name())
            .map(|a| a.attribute.as_str())
            .collect();
        if qi.is_empty() {
            continue;
        }
        if let Some(k) = k_anonymity(rel, &qi)?.k_min {
            k_min = Some(k_min.map_or(k, |m| m.min(k)));
        }
    }

    let mut zero_variance = Vec::new();
    if let Some(shape) = result.aggregate() {
        if shape.target.is_some() {
            for a in &policy.sensitive {
                if result.lineage.sources(result.schema.attributes.last().map_or("", |x| x.name.as_str())).is_some_and(|s| s.contains(a)) {
                    let groups = zero_variance_from_truth(source, &truth, a);
                    zero_variance.push(ZeroVarianceGroups {
                        attribute: a.to_string(),
                        groups: groups.iter().map(|g| g.iter().map(Value::to_json).collect()).collect(),
                    });
                }
            }
        }
    }

    let mut reasons = Vec::new();
    if !leakage.is_zero() {
        reasons.push(format!("{} of {} sensitive cells recovered", leakage.recovered, leakage.total));
    }
    if let Some(k) = k_min.filter(|&k| k < policy.k) {
        reasons.push(format!("k-anonymity {k} is below the required {}", policy.k));
    }
    let verdict = if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail };

    Ok(DisclosureReport {
        level: rec.level,
        verdict,
        reasons,
        leakage,
        k_anonymity: k_min,
        zero_variance_groups: zero_variance,
        cells,
    })
}

/// Group keys of an aggregate result whose witness tuples all carry the
/// same non-null value of `attr`. Publishing such a group's aggregate at the
/// why level gives every member's value away.
pub fn zero_variance_groups(
    source: &Database,
    result: &AnnotatedResult,
    attr: &AttrRef,
) -> Result<Vec<Vec<Value>>, PrivacyError> {
    let targets_attr = result.aggregate().is_some_and(|a| a.target.is_some())
        && result
            .schema
            .attributes
            .last()
            .and_then(|out| result.lineage.sources(&out.name))
            .is_some_and(|s| s.contains(attr));
    if !targets_attr {
        return Err(PrivacyError::NotAnAggregateQuery(attr.to_string()));
    }
    let truth = Truth::of(source, result)?;
    Ok(zero_variance_from_truth(source, &truth, attr))
}

fn zero_variance_from_truth(source: &Database, truth: &Truth, attr: &AttrRef) -> Vec<Vec<Value>> {
    let Some(rel) = source.relation(&attr.relation) else { return Vec::new() };
    let Some(col) = rel.schema().position(&attr.attribute) else { return Vec::new() };
    let keys = truth.query.schema().arity() - 1;
    truth
        .rows
        .iter()
        .filter(|(_, witness)| {
            let mut values = witness
                .iter()
                .filter(|t| t.relation == attr.relation)
                .map(|t| &rel.tuple(t.ordinal).expect("witness tuple exists").values[col]);
            match values.next() {
                Some(first) if !first.is_null() => values.all(|v| v == first),
                _ => false,
            }
        })
        .map(|(values, _)| values[..keys].to_vec())
        .collect()
}

/// One line of a level comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSummary {
    pub level: ProvenanceLevel,
    pub leakage: Leakage,
    pub k_anonymity: Option<usize>,
    pub verdict: Verdict,
}

/// Evaluates, reconstructs and analyzes `query` at every level. Leakage must
/// not decrease from where to why to how.
pub fn compare_levels(
    source: &Database,
    query: &ValidatedQuery,
    policy: &PrivacyPolicy,
) -> Result<Vec<LevelSummary>, PrivacyError> {
    let catalog = source.catalog();
    let mut rows: Vec<LevelSummary> = Vec::new();
    for level in ProvenanceLevel::ALL {
        let result = evaluate(source, query, level);
        let rec = reconstruct(&result, &catalog, level)?;
        let report = analyze_disclosure(&rec, source, &result, policy)?;
        if let Some(prev) = rows.last() {
            if prev.leakage > report.leakage {
                return Err(PrivacyError::MonotonicityViolation {
                    lower: prev.level,
                    lower_score: prev.leakage,
                    higher: level,
                    higher_score: report.leakage,
                });
            }
        }
        rows.push(LevelSummary { level, leakage: report.leakage, k_anonymity: report.k_anonymity, verdict: report.verdict });
    }
    Ok(rows)
}

/// Renders a level comparison as an aligned text table.
pub fn render_comparison(rows: &[LevelSummary]) -> String {
    let mut out = format!("{:<6} {:<8} {:<6} {}\n", "level", "leakage", "k_min", "verdict");
    for r in rows {
        let k = r.k_anonymity.map_or("n/a".to_string(), |k| k.to_string());
        out += &format!("{:<6} {:<8} {:<6} {}\n", r.level.to_string(), r.leakage.to_string(), k, r.verdict);
    }
    out
}
