//! Syntax: abstract syntax trees, the `.ni` concrete grammar, substitution
//! and evaluation-context decomposition.

pub mod ast;
pub mod ctx;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod subst;

pub use ast::{BinOpKind, Binder, Expr, ExprKind, FnAnnot, Name, Span, Val};
pub use ctx::{decompose, fill, Decomposition, EvalCtx, Frame};
pub use parser::{parse_expr, parse_program, parse_type, ParseError};
pub use pretty::{pretty_expr, pretty_program, pretty_val};
pub use subst::subst;
