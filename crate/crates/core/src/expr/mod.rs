//! Text front end for Hamiltonians and Koopmanians.
//!
//! ```text
//! expr     = term , { ( "+" | "-" ) , term } ;
//! term     = unary , { ( "*" | "/" ) , unary } ;
//! unary    = ( "-" | "+" ) , unary | power ;
//! power    = atom , [ "^" , exponent ] ;
//! exponent = integer | "(" , [ "-" ] , integer , ")" ;
//! atom     = number | identifier | "(" , expr , ")" ;
//! number   = digits , [ "." , digits ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ] ;
//! identifier = letter , { letter | digit | "_" } ;
//! ```
//!
//! Identifiers `q p x y p_x p_y` are generators and `i` is the imaginary
//! unit; every other identifier is a parameter. A divisor must be a number or
//! a parameter. Multiplication is always written with `*`.

mod lexer;
mod lower;
mod parser;

pub use lower::{lower, LowerError, ParameterBinding};
pub use parser::{parse, ParseError};

use crate::algebra::{Coeff, Generator};

/// Byte range `[start, end)` into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Exact numeric literal, or the imaginary unit.
    Constant(Coeff),
    Parameter(String),
    Generator(Generator),
    Negate(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Multiply(Box<Expr>, Box<Expr>),
    /// Division by a number or parameter.
    Divide(Box<Expr>, Box<Expr>),
    Power(Box<Expr>, u32),
}

/// Parsed expression tree; every node carries the span it was parsed from.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: NodeKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            NodeKind::Constant(_) | NodeKind::Parameter(_) | NodeKind::Generator(_) => vec![],
            NodeKind::Negate(a) | NodeKind::Power(a, _) => vec![a],
            NodeKind::Add(a, b) | NodeKind::Multiply(a, b) | NodeKind::Divide(a, b) => vec![a, b],
        }
    }

    /// Compact s-expression form, handy in tests: `add(mul(y,p_x),neg(mul(x,p_y)))`.
    pub fn sexpr(&self) -> String {
        match &self.kind {
            NodeKind::Constant(c) => crate::algebra::coeff::format_coeff(c),
            NodeKind::Parameter(name) => name.clone(),
            NodeKind::Generator(g) => g.name().to_string(),
            NodeKind::Negate(a) => format!("neg({})", a.sexpr()),
            NodeKind::Add(a, b) => format!("add({},{})", a.sexpr(), b.sexpr()),
            NodeKind::Multiply(a, b) => format!("mul({},{})", a.sexpr(), b.sexpr()),
            NodeKind::Divide(a, b) => format!("div({},{})", a.sexpr(), b.sexpr()),
            NodeKind::Power(a, e) => format!("pow({},{e})", a.sexpr()),
        }
    }

    /// Parameter names in first-occurrence order.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_parameters(&mut out);
        out
    }

    fn collect_parameters(&self, out: &mut Vec<String>) {
        if let NodeKind::Parameter(name) = &self.kind {
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        for child in self.children() {
            child.collect_parameters(out);
        }
    }
}

/// 1-based line and column of a byte offset.
pub fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

/// Parses and lowers in one call.
pub fn parse_polynomial(
    source: &str,
    params: &ParameterBinding,
) -> Result<crate::algebra::OperatorPolynomial, ExprError> {
    let ast = parse(source)?;
    Ok(lower(&ast, params)?)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("abc", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }
}
