use std::collections::BTreeSet;

use crate::query::{aggregate_output_name, Expr, ValidatedQuery};
use crate::relmodel::{AttrRef, Catalog};

/// Static where-provenance of a query: for each output attribute the source
/// attributes it is copied from, and the relations every result tuple draws
/// on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WhereLineage {
    pub relations: Vec<String>,
    pub attributes: Vec<(String, BTreeSet<AttrRef>)>,
}

impl WhereLineage {
    pub fn sources(&self, output_attr: &str) -> Option<&BTreeSet<AttrRef>> {
        self.attributes.iter().find(|(a, _)| a == output_attr).map(|(_, s)| s)
    }
}

/// Computes attribute lineage by structural induction over the query.
/// The query must have been validated against `catalog`.
pub fn where_of_ast(query: &ValidatedQuery, catalog: &Catalog) -> WhereLineage {
    WhereLineage {
        relations: query.expr().scanned_relations().into_iter().map(str::to_string).collect(),
        attributes: lineage(query.expr(), catalog),
    }
}

fn lineage(expr: &Expr, catalog: &Catalog) -> Vec<(String, BTreeSet<AttrRef>)> {
    let find = |attrs: &[(String, BTreeSet<AttrRef>)], name: &str| {
        attrs
            .iter()
            .find(|(a, _)| a == name)
            .map(|(_, s)| s.clone())
            .expect("validated query references known attributes")
    };
    match expr {
        Expr::Scan(rel) => catalog
            .get(rel)
            .expect("validated query scans known relations")
            .attribute_names()
            .map(|a| (a.to_string(), BTreeSet::from([AttrRef::new(rel.as_str(), a)])))
            .collect(),
        Expr::Select { input, .. } => lineage(input, catalog),
        Expr::Project { attrs, input } => {
            let inner = lineage(input, catalog);
            attrs.iter().map(|a| (a.clone(), find(&inner, a))).collect()
        }
        Expr::Join { left, right, .. } => {
            let mut out = lineage(left, catalog);
            out.extend(lineage(right, catalog));
            out
        }
        Expr::Aggregate { group_by, func, target, input } => {
            let inner = lineage(input, catalog);
            let mut out: Vec<_> = group_by.iter().map(|a| (a.clone(), find(&inner, a))).collect();
            let sources = target.as_ref().map(|t| find(&inner, t)).unwrap_or_default();
            out.push((aggregate_output_name(*func, target.as_deref()), sources));
            out
        }
    }
}
