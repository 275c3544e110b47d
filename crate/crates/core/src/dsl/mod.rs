//! Expression language and definition files.

pub mod definition;
pub mod expr;

pub use definition::{parse_family_file, DefinitionError, DefinitionKind, FamilyDefinition, ParameterDecl};
pub use expr::{canonical_print, eval_expression, parse_expression, BinOp, EvalError, Expr, Func, ParseError};
