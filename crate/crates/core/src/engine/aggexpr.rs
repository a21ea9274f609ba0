use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::polynomial::Polynomial;
use crate::query::AggFn;
use crate::relmodel::{Decimal, Value};

/// One summand of an unevaluated aggregation: a provenance annotation paired
/// with the value it contributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AggTerm {
    pub annotation: Polynomial,
    pub value: Value,
}

/// An aggregation kept as the formal sum of its terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AggExpr {
    pub func: AggFn,
    pub terms: Vec<AggTerm>,
}

impl AggExpr {
    /// Sorts terms by annotation so the order follows source tuple order.
    pub fn new(func: AggFn, mut terms: Vec<AggTerm>) -> Self {
        terms.sort_by(|a, b| a.annotation.cmp(&b.annotation).then_with(|| a.value.cmp(&b.value)));
        AggExpr { func, terms }
    }

    /// Evaluates the aggregation. `None` when a term value is not a number
    /// (e.g. after generalization).
    pub fn evaluate(&self) -> Option<Value> {
        aggregate_values(self.func, self.terms.iter().map(|t| &t.value))
    }
}

/// Applies `func` to the given values. Nulls are skipped; an empty input
/// yields Null except for COUNT, which counts every input.
pub fn aggregate_values<'a>(func: AggFn, values: impl IntoIterator<Item = &'a Value>) -> Option<Value> {
    let values: Vec<&Value> = values.into_iter().collect();
    if func == AggFn::Count {
        return Some(Value::Num(Decimal::from_int(values.len() as i64)));
    }
    let mut nums = Vec::with_capacity(values.len());
    for v in values {
        match v {
            Value::Num(d) => nums.push(*d),
            Value::Null => {}
            Value::Txt(_) => return None,
        }
    }
    if nums.is_empty() {
        return Some(Value::Null);
    }
    let d = match func {
        AggFn::Sum => nums.iter().copied().sum(),
        AggFn::Avg => nums.iter().copied().sum::<Decimal>().div_count(nums.len() as u64),
        AggFn::Min => *nums.iter().min().expect("non-empty"),
        AggFn::Max => *nums.iter().max().expect("non-empty"),
        AggFn::Count => unreachable!(),
    };
    Some(Value::Num(d))
}

fn write_term_value(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Num(d) => write!(f, "{d}"),
        Value::Txt(s) => f.write_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Null => f.write_str("null"),
    }
}

/// `AVG[(t[Grades/0],1.0),(t[Grades/1],1.3)]`; text values are quoted.
impl fmt::Display for AggExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.func.tag())?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},", t.annotation)?;
            write_term_value(f, &t.value)?;
            f.write_str(")")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed aggregation expression `{input}`: {reason}")]
pub struct AggExprParseError {
    pub input: String,
    pub reason: String,
}

impl FromStr for AggExpr {
    type Err = AggExprParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| AggExprParseError { input: s.to_string(), reason: reason.to_string() };
        let s = s.trim();
        let (tag, rest) = s.split_once('[').ok_or_else(|| fail("missing `[`"))?;
        let func = AggFn::ALL.into_iter().find(|f| f.tag() == tag).ok_or_else(|| fail("unknown function"))?;
        let body = rest.strip_suffix(']').ok_or_else(|| fail("missing `]`"))?;

        let mut terms = Vec::new();
        let mut rest = body;
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or_else(|| fail("expected `(`"))?;
            let (poly, after) = inner.split_once(',').ok_or_else(|| fail("expected `,` in term"))?;
            let annotation: Polynomial = poly.parse().map_err(|_| fail("bad annotation"))?;
            let (value, after) = if after.starts_with('"') {
                let end = closing_quote(after).ok_or_else(|| fail("unterminated string"))?;
                let text: String = serde_json::from_str(&after[..=end]).map_err(|_| fail("bad string"))?;
                (Value::Txt(text), &after[end + 1..])
            } else {
                let end = after.find(')').ok_or_else(|| fail("expected `)`"))?;
                let raw = &after[..end];
                let v = if raw == "null" {
                    Value::Null
                } else {
                    Value::Num(raw.parse().map_err(|_| fail("bad number"))?)
                };
                (v, &after[end..])
            };
            let after = after.strip_prefix(')').ok_or_else(|| fail("expected `)`"))?;
            terms.push(AggTerm { annotation, value });
            rest = match after.strip_prefix(',') {
                Some(r) if !r.is_empty() => r,
                Some(_) => return Err(fail("trailing `,`")),
                None if after.is_empty() => after,
                None => return Err(fail("expected `,` between terms")),
            };
        }
        Ok(AggExpr { func, terms })
    }
}

/// Byte index of the quote closing the JSON string starting at index 0.
fn closing_quote(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some(i),
            _ => i += 1,
        }
    }
    None
}
