use std::fmt;

use crate::relmodel::Value;

/// Aggregate functions. One per aggregation node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFn {
    Avg,
    Sum,
    Count,
    Min,
    Max,
}

impl AggFn {
    pub const ALL: [AggFn; 5] = [AggFn::Avg, AggFn::Sum, AggFn::Count, AggFn::Min, AggFn::Max];

    /// Lowercase name used in queries and output attribute names.
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Avg => "avg",
            AggFn::Sum => "sum",
            AggFn::Count => "count",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }

    /// Uppercase tag used in serialized aggregation expressions.
    pub fn tag(self) -> &'static str {
        match self {
            AggFn::Avg => "AVG",
            AggFn::Sum => "SUM",
            AggFn::Count => "COUNT",
            AggFn::Min => "MIN",
            AggFn::Max => "MAX",
        }
    }

    pub fn from_name(s: &str) -> Option<AggFn> {
        AggFn::ALL.into_iter().find(|f| f.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Compares two values; any Null operand makes the comparison false.
    pub fn holds(self, left: &Value, right: &Value) -> bool {
        use std::cmp::Ordering::*;
        let ord = match (left, right) {
            (Value::Num(a), Value::Num(b)) => a.cmp(b),
            (Value::Txt(a), Value::Txt(b)) => a.cmp(b),
            _ => return false,
        };
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Attr(String),
    Const(Value),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub attr: String,
    pub op: CmpOp,
    pub rhs: Operand,
}

/// A conjunction of comparisons.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub conjuncts: Vec<Comparison>,
}

/// Relational algebra over named relations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Scan(String),
    Select { predicate: Predicate, input: Box<Expr> },
    Project { attrs: Vec<String>, input: Box<Expr> },
    /// Equi-join; each pair names a left-input and a right-input attribute.
    Join { left: Box<Expr>, right: Box<Expr>, on: Vec<(String, String)> },
    Aggregate { group_by: Vec<String>, func: AggFn, target: Option<String>, input: Box<Expr> },
}

impl Expr {
    pub fn scan(rel: impl Into<String>) -> Expr {
        Expr::Scan(rel.into())
    }

    pub fn select(predicate: Predicate, input: Expr) -> Expr {
        Expr::Select { predicate, input: Box::new(input) }
    }

    pub fn project<S: Into<String>>(attrs: impl IntoIterator<Item = S>, input: Expr) -> Expr {
        Expr::Project { attrs: attrs.into_iter().map(Into::into).collect(), input: Box::new(input) }
    }

    pub fn join<S: Into<String>>(on: impl IntoIterator<Item = (S, S)>, left: Expr, right: Expr) -> Expr {
        Expr::Join {
            left: Box::new(left),
            right: Box::new(right),
            on: on.into_iter().map(|(l, r)| (l.into(), r.into())).collect(),
        }
    }

    pub fn aggregate<S: Into<String>>(
        group_by: impl IntoIterator<Item = S>,
        func: AggFn,
        target: Option<&str>,
        input: Expr,
    ) -> Expr {
        Expr::Aggregate {
            group_by: group_by.into_iter().map(Into::into).collect(),
            func,
            target: target.map(str::to_string),
            input: Box::new(input),
        }
    }

    /// Relation names scanned by this expression, left to right, without
    /// repetition.
    pub fn scanned_relations(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_scans(&mut |r| {
            if !out.contains(&r) {
                out.push(r);
            }
        });
        out
    }

    fn visit_scans<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Scan(r) => f(r),
            Expr::Select { input, .. } | Expr::Project { input, .. } | Expr::Aggregate { input, .. } => {
                input.visit_scans(f)
            }
            Expr::Join { left, right, .. } => {
                left.visit_scans(f);
                right.visit_scans(f);
            }
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Expr::Aggregate { .. })
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[String]) -> fmt::Result {
    f.write_str(&items.join(", "))
}

fn write_value(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    match v {
        Value::Num(d) => write!(f, "{d}"),
        Value::Txt(s) => write!(f, "'{}'", s.replace('\'', "''")),
        Value::Null => f.write_str("null"),
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.attr, self.op.symbol())?;
        match &self.rhs {
            Operand::Attr(a) => f.write_str(a),
            Operand::Const(v) => write_value(f, v),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" and ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Canonical concrete syntax; `parse` inverts it exactly.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Scan(r) => f.write_str(r),
            Expr::Select { predicate, input } => write!(f, "sigma[{predicate}]({input})"),
            Expr::Project { attrs, input } => {
                f.write_str("pi[")?;
                write_list(f, attrs)?;
                write!(f, "]({input})")
            }
            Expr::Join { left, right, on } => {
                f.write_str("join[")?;
                for (i, (l, r)) in on.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l} = {r}")?;
                }
                write!(f, "]({left}, {right})")
            }
            Expr::Aggregate { group_by, func, target, input } => {
                f.write_str("agg[")?;
                write_list(f, group_by)?;
                write!(f, "; {}({})]({input})", func.name(), target.as_deref().unwrap_or(""))
            }
        }
    }
}

/// The canonical text of an expression.
pub fn print_expr(expr: &Expr) -> String {
    expr.to_string()
}
