//! The query language: AST, parser, canonical printer and validation.

mod ast;
mod parser;
mod validate;

pub use ast::{print_expr, AggFn, CmpOp, Comparison, Expr, Operand, Predicate};
pub use parser::{parse, SyntaxError, RESERVED};
pub use validate::{aggregate_output_name, validate, ValidatedQuery, ValidationError, RESULT_RELATION};
