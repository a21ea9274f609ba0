use thiserror::Error;

use super::ast::{AggFn, Expr, Operand};
use crate::relmodel::{Attribute, AttributeType, Catalog, Schema, Value};

/// Name given to the output schema of every query.
pub const RESULT_RELATION: &str = "result";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown attribute `{attribute}` in {context}")]
    UnknownAttribute { attribute: String, context: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("duplicate output attribute `{0}`")]
    DuplicateOutputAttribute(String),
    #[error("aggregation is only allowed at the root of a query")]
    AggregateNotAtRoot,
    #[error("{func} {problem}")]
    BadAggregateTarget { func: &'static str, problem: &'static str },
    #[error("projection list is empty")]
    EmptyProjection,
}

/// An expression whose attribute references all resolve against a catalog,
/// together with its output schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedQuery {
    expr: Expr,
    schema: Schema,
}

impl ValidatedQuery {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn text(&self) -> String {
        self.expr.to_string()
    }
}

/// Binds every attribute reference and computes the output schema.
pub fn validate(expr: &Expr, catalog: &Catalog) -> Result<ValidatedQuery, ValidationError> {
    let attributes = output_attributes(expr, catalog, true)?;
    Ok(ValidatedQuery {
        expr: expr.clone(),
        schema: Schema { name: RESULT_RELATION.to_string(), attributes },
    })
}

/// Output attribute name of an aggregation node: `<fn>_<target>` or `count`.
pub fn aggregate_output_name(func: AggFn, target: Option<&str>) -> String {
    match target {
        Some(t) => format!("{}_{t}", func.name()),
        None => func.name().to_string(),
    }
}

fn lookup<'a>(attrs: &'a [Attribute], name: &str, context: &str) -> Result<&'a Attribute, ValidationError> {
    attrs.iter().find(|a| a.name == name).ok_or_else(|| ValidationError::UnknownAttribute {
        attribute: name.to_string(),
        context: context.to_string(),
    })
}

fn check_unique(attrs: &[Attribute]) -> Result<(), ValidationError> {
    for (i, a) in attrs.iter().enumerate() {
        if attrs[..i].iter().any(|b| b.name == a.name) {
            return Err(ValidationError::DuplicateOutputAttribute(a.name.clone()));
        }
    }
    Ok(())
}

fn output_attributes(expr: &Expr, catalog: &Catalog, root: bool) -> Result<Vec<Attribute>, ValidationError> {
    match expr {
        Expr::Scan(rel) => catalog
            .get(rel)
            .map(|s| s.attributes.clone())
            .ok_or_else(|| ValidationError::UnknownRelation(rel.clone())),
        Expr::Select { predicate, input } => {
            let attrs = output_attributes(input, catalog, false)?;
            for c in &predicate.conjuncts {
                let left = lookup(&attrs, &c.attr, "selection")?;
                let right_ty = match &c.rhs {
                    Operand::Attr(a) => Some(lookup(&attrs, a, "selection")?.ty),
                    Operand::Const(Value::Num(_)) => Some(AttributeType::Number),
                    Operand::Const(Value::Txt(_)) => Some(AttributeType::Text),
                    Operand::Const(Value::Null) => None,
                };
                if right_ty.is_some_and(|t| t != left.ty) {
                    return Err(ValidationError::TypeMismatch(format!("comparison `{c}` mixes types")));
                }
            }
            Ok(attrs)
        }
        Expr::Project { attrs: names, input } => {
            if names.is_empty() {
                return Err(ValidationError::EmptyProjection);
            }
            let attrs = output_attributes(input, catalog, false)?;
            let out = names
                .iter()
                .map(|n| lookup(&attrs, n, "projection").cloned())
                .collect::<Result<Vec<_>, _>>()?;
            check_unique(&out)?;
            Ok(out)
        }
        Expr::Join { left, right, on } => {
            let l = output_attributes(left, catalog, false)?;
            let r = output_attributes(right, catalog, false)?;
            for (la, ra) in on {
                let lt = lookup(&l, la, "join (left input)")?.ty;
                let rt = lookup(&r, ra, "join (right input)")?.ty;
                if lt != rt {
                    return Err(ValidationError::TypeMismatch(format!("join condition `{la} = {ra}` mixes types")));
                }
            }
            let out: Vec<_> = l.into_iter().chain(r).collect();
            check_unique(&out)?;
            Ok(out)
        }
        Expr::Aggregate { group_by, func, target, input } => {
            if !root {
                return Err(ValidationError::AggregateNotAtRoot);
            }
            let attrs = output_attributes(input, catalog, false)?;
            let mut out = group_by
                .iter()
                .map(|n| lookup(&attrs, n, "group-by list").cloned())
                .collect::<Result<Vec<_>, _>>()?;
            match (func, target) {
                (AggFn::Count, Some(_)) => {
                    return Err(ValidationError::BadAggregateTarget { func: "count", problem: "takes no argument" })
                }
                (AggFn::Count, None) => {}
                (f, None) => return Err(ValidationError::BadAggregateTarget { func: f.name(), problem: "needs a target attribute" }),
                (_, Some(t)) => {
                    if lookup(&attrs, t, "aggregate target")?.ty != AttributeType::Number {
                        return Err(ValidationError::TypeMismatch(format!("aggregate target `{t}` is not a number")));
                    }
                }
            }
            out.push(Attribute::new(aggregate_output_name(*func, target.as_deref()), AttributeType::Number));
            check_unique(&out)?;
            Ok(out)
        }
    }
}
