//! Relational data model: typed values, schemas, identified tuples and
//! databases loaded from CSV files.

mod decimal;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decimal::{Decimal, DecimalError, SCALE_DIGITS};
pub use io::{load_catalog, load_database, parse_catalog, write_database, LoadError};

/// Declared domain of an attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeType {
    Number,
    Text,
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeType::Number => "number",
            AttributeType::Text => "text",
        })
    }
}

/// A cell value. `Null` is a marker, never a ground value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Num(Decimal),
    Txt(String),
    Null,
}

impl Value {
    pub fn num(s: &str) -> Value {
        Value::Num(s.parse().expect("invalid decimal literal"))
    }

    pub fn txt(s: impl Into<String>) -> Value {
        Value::Txt(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn conforms_to(&self, ty: AttributeType) -> bool {
        matches!(
            (self, ty),
            (Value::Null, _) | (Value::Num(_), AttributeType::Number) | (Value::Txt(_), AttributeType::Text)
        )
    }

    /// Equality used by joins and selections: Null never matches anything.
    pub fn sql_eq(&self, other: &Value) -> bool {
        !self.is_null() && !other.is_null() && self == other
    }

    /// Parses a CSV cell under the given type; the empty string is Null.
    pub fn parse_as(raw: &str, ty: AttributeType) -> Result<Value, DecimalError> {
        if raw.is_empty() {
            return Ok(Value::Null);
        }
        match ty {
            AttributeType::Number => raw.parse().map(Value::Num),
            AttributeType::Text => Ok(Value::Txt(raw.to_string())),
        }
    }

    /// The CSV rendering: empty for Null.
    pub fn to_field(&self) -> String {
        match self {
            Value::Num(d) => d.to_string(),
            Value::Txt(s) => s.clone(),
            Value::Null => String::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Num(d) => serde_json::Value::from(d.to_f64()),
            Value::Txt(s) => serde_json::Value::from(s.as_str()),
            Value::Null => serde_json::Value::Null,
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Value> {
        match v {
            serde_json::Value::Null => Some(Value::Null),
            serde_json::Value::String(s) => Some(Value::Txt(s.clone())),
            serde_json::Value::Number(n) => {
                let f = n.as_f64()?;
                format!("{f}").parse().ok().map(Value::Num)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(d) => write!(f, "{d}"),
            Value::Txt(s) => f.write_str(s),
            Value::Null => f.write_str("null"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: AttributeType,
}

impl Attribute {
    pub fn new(name: impl Into<String>, ty: AttributeType) -> Self {
        Attribute { name: name.into(), ty }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("duplicate attribute `{attribute}` in relation `{relation}`")]
    DuplicateAttribute { relation: String, attribute: String },
    #[error("duplicate relation `{0}` in catalog")]
    DuplicateRelation(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
}

/// Relation name plus ordered, uniquely named attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

impl Schema {
    pub fn new(name: impl Into<String>, attributes: Vec<Attribute>) -> Result<Self, SchemaError> {
        let schema = Schema { name: name.into(), attributes };
        schema.check()?;
        Ok(schema)
    }

    pub(crate) fn check(&self) -> Result<(), SchemaError> {
        for (i, a) in self.attributes.iter().enumerate() {
            if self.attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(SchemaError::DuplicateAttribute {
                    relation: self.name.clone(),
                    attribute: a.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attr: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == attr)
    }

    pub fn attribute(&self, attr: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == attr)
    }

    pub fn attribute_names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

/// An ordered list of schemas with unique relation names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub relations: Vec<Schema>,
}

impl Catalog {
    pub fn new(relations: Vec<Schema>) -> Result<Self, SchemaError> {
        let catalog = Catalog { relations };
        catalog.check()?;
        Ok(catalog)
    }

    pub(crate) fn check(&self) -> Result<(), SchemaError> {
        for (i, s) in self.relations.iter().enumerate() {
            s.check()?;
            if self.relations[..i].iter().any(|t| t.name == s.name) {
                return Err(SchemaError::DuplicateRelation(s.name.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, relation: &str) -> Option<&Schema> {
        self.relations.iter().find(|s| s.name == relation)
    }

    /// Checks that `relation.attribute` is declared.
    pub fn has_attribute(&self, relation: &str, attribute: &str) -> bool {
        self.get(relation).is_some_and(|s| s.position(attribute).is_some())
    }
}

/// A qualified attribute reference, written `Relation.Attribute`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrRef {
    pub relation: String,
    pub attribute: String,
}

impl AttrRef {
    pub fn new(relation: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttrRef { relation: relation.into(), attribute: attribute.into() }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.attribute)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed attribute reference `{0}`, expected `Relation.Attribute`")]
pub struct AttrRefError(pub String);

impl FromStr for AttrRef {
    type Err = AttrRefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((r, a)) if !r.is_empty() && !a.is_empty() && !a.contains('.') => Ok(AttrRef::new(r, a)),
            _ => Err(AttrRefError(s.to_string())),
        }
    }
}

/// Stable identity of a source tuple: relation name and load ordinal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleId {
    pub relation: String,
    pub ordinal: usize,
}

impl TupleId {
    pub fn new(relation: impl Into<String>, ordinal: usize) -> Self {
        TupleId { relation: relation.into(), ordinal }
    }
}

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.relation, self.ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed tuple id `{0}`, expected `Relation/ordinal`")]
pub struct TupleIdError(pub String);

impl FromStr for TupleId {
    type Err = TupleIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (rel, ord) = s.rsplit_once('/').ok_or_else(|| TupleIdError(s.to_string()))?;
        if rel.is_empty() {
            return Err(TupleIdError(s.to_string()));
        }
        let ordinal = ord.parse().map_err(|_| TupleIdError(s.to_string()))?;
        Ok(TupleId::new(rel, ordinal))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tuple {
    pub id: TupleId,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("tuple {ordinal} of `{relation}` has {found} values, schema has {expected}")]
    Arity { relation: String, ordinal: usize, expected: usize, found: usize },
    #[error("value `{value}` in tuple {ordinal} of `{relation}` does not conform to {attribute}: {ty}")]
    Type { relation: String, ordinal: usize, attribute: String, ty: AttributeType, value: String },
}

/// A schema and its tuples in load order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    schema: Schema,
    tuples: Vec<Tuple>,
}

impl Relation {
    /// Assigns ordinals 0.. in row order and checks arity and types.
    pub fn from_rows(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self, RelationError> {
        let mut tuples = Vec::with_capacity(rows.len());
        for (ordinal, values) in rows.into_iter().enumerate() {
            if values.len() != schema.arity() {
                return Err(RelationError::Arity {
                    relation: schema.name.clone(),
                    ordinal,
                    expected: schema.arity(),
                    found: values.len(),
                });
            }
            for (v, a) in values.iter().zip(&schema.attributes) {
                if !v.conforms_to(a.ty) {
                    return Err(RelationError::Type {
                        relation: schema.name.clone(),
                        ordinal,
                        attribute: a.name.clone(),
                        ty: a.ty,
                        value: v.to_string(),
                    });
                }
            }
            tuples.push(Tuple { id: TupleId::new(schema.name.clone(), ordinal), values });
        }
        Ok(Relation { schema, tuples })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple(&self, ordinal: usize) -> Option<&Tuple> {
        match self.tuples.get(ordinal) {
            Some(t) if t.id.ordinal == ordinal => Some(t),
            _ => self.tuples.iter().find(|t| t.id.ordinal == ordinal),
        }
    }

    /// Keeps only the tuples whose ids satisfy `keep`, preserving their ids.
    pub fn restrict(&self, mut keep: impl FnMut(&TupleId) -> bool) -> Relation {
        Relation {
            schema: self.schema.clone(),
            tuples: self.tuples.iter().filter(|t| keep(&t.id)).cloned().collect(),
        }
    }

    /// Replaces the values of every tuple, keeping ids. Used by column
    /// transformations that must not disturb identity.
    pub(crate) fn with_values(&self, values: Vec<Vec<Value>>) -> Relation {
        debug_assert_eq!(values.len(), self.tuples.len());
        Relation {
            schema: self.schema.clone(),
            tuples: self
                .tuples
                .iter()
                .zip(values)
                .map(|(t, values)| Tuple { id: t.id.clone(), values })
                .collect(),
        }
    }
}

/// Immutable source instance: relations keyed by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new(relations: impl IntoIterator<Item = Relation>) -> Self {
        Database { relations: relations.into_iter().map(|r| (r.name().to_string(), r)).collect() }
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn tuple(&self, id: &TupleId) -> Option<&Tuple> {
        self.relations.get(&id.relation)?.tuple(id.ordinal)
    }

    pub fn catalog(&self) -> Catalog {
        Catalog { relations: self.relations.values().map(|r| r.schema().clone()).collect() }
    }

    /// All tuple ids, relation by relation in name order.
    pub fn tuple_ids(&self) -> Vec<TupleId> {
        self.relations.values().flat_map(|r| r.tuples().iter().map(|t| t.id.clone())).collect()
    }

    /// The sub-instance made of exactly the given tuples (ids kept).
    pub fn restrict_to(&self, keep: &std::collections::BTreeSet<TupleId>) -> Database {
        Database {
            relations: self
                .relations
                .iter()
                .map(|(n, r)| (n.clone(), r.restrict(|id| keep.contains(id))))
                .collect(),
        }
    }

    pub fn with_relation(&self, relation: Relation) -> Database {
        let mut relations = self.relations.clone();
        relations.insert(relation.name().to_string(), relation);
        Database { relations }
    }
}

/// Values of `tuple` in the order of `attrs`.
pub fn project_tuple(tuple: &[Value], schema: &Schema, attrs: &[&str]) -> Result<Vec<Value>, SchemaError> {
    attrs
        .iter()
        .map(|a| {
            schema
                .position(a)
                .map(|i| tuple[i].clone())
                .ok_or_else(|| SchemaError::UnknownAttribute(a.to_string()))
        })
        .collect()
}
