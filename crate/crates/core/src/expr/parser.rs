use std::fmt;

use num::{ToPrimitive, Zero};

use super::lexer::{tokenize, LexError, Spanned, Token};
use super::{line_column, Expr, NodeKind, Span};
use crate::algebra::{coeff, Generator};

const MAX_DEPTH: usize = 256;
const MAX_EXPONENT: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnknownCharacter(char),
    InvalidNumber,
    UnexpectedToken(String),
    UnexpectedEnd,
    ImplicitMultiplication,
    NegativeExponent,
    InvalidExponent,
    InvalidDivisor,
    TooDeep,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyInput => f.write_str("empty input"),
            ParseErrorKind::UnknownCharacter(c) => write!(f, "unknown character `{c}`"),
            ParseErrorKind::InvalidNumber => f.write_str("malformed number"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::ImplicitMultiplication => f.write_str("implicit multiplication is not allowed, write `*`"),
            ParseErrorKind::NegativeExponent => f.write_str("negative exponent"),
            ParseErrorKind::InvalidExponent => {
                write!(f, "exponent must be an integer between 0 and {MAX_EXPONENT}")
            }
            ParseErrorKind::InvalidDivisor => f.write_str("can only divide by a number or a parameter"),
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH} levels"),
        }
    }
}

/// Syntax error located at a byte offset, with 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl ParseError {
    fn at(source: &str, offset: usize, kind: ParseErrorKind) -> Self {
        let (line, column) = line_column(source, offset);
        Self { kind, offset, line, column }
    }
}

/// Parses an expression with precedence `^` > unary minus > `*` `/` > `+` `-`.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source).map_err(|e| match e {
        LexError::UnknownCharacter(c, at) => ParseError::at(source, at, ParseErrorKind::UnknownCharacter(c)),
        LexError::BadNumber(span) => ParseError::at(source, span.start, ParseErrorKind::InvalidNumber),
    })?;
    if tokens.is_empty() {
        return Err(ParseError::at(source, 0, ParseErrorKind::EmptyInput));
    }
    let mut parser = Parser { source, tokens, pos: 0, depth: 0 };
    let expr = parser.expr()?;
    if let Some(next) = parser.peek() {
        let kind = match next.token {
            Token::Ident(_) | Token::Number(_) | Token::LParen => ParseErrorKind::ImplicitMultiplication,
            _ => ParseErrorKind::UnexpectedToken(parser.text(next.span).to_string()),
        };
        return Err(ParseError::at(source, next.span.start, kind));
    }
    Ok(expr)
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<Spanned>,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn text(&self, span: Span) -> &'a str {
        &self.source[span.start..span.end]
    }

    fn bump(&mut self) -> Option<Spanned> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let offset = self.peek().map_or(self.source.len(), |t| t.span.start);
        ParseError::at(self.source, offset, kind)
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => self.error_here(ParseErrorKind::UnexpectedToken(self.text(t.span).to_string())),
            None => self.error_here(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn descend(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error_here(ParseErrorKind::TooDeep));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.descend()?;
        let mut lhs = self.term()?;
        while let Some(op) = self.peek().map(|t| t.token.clone()) {
            let negate = match op {
                Token::Plus => false,
                Token::Minus => true,
                _ => break,
            };
            let op_span = self.bump().unwrap().span;
            let rhs = self.term()?;
            let rhs = if negate {
                let span = op_span.join(rhs.span);
                Expr::new(NodeKind::Negate(Box::new(rhs)), span)
            } else {
                rhs
            };
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(NodeKind::Add(Box::new(lhs), Box::new(rhs)), span);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek().map(|t| t.token.clone()) {
            match op {
                Token::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    let span = lhs.span.join(rhs.span);
                    lhs = Expr::new(NodeKind::Multiply(Box::new(lhs), Box::new(rhs)), span);
                }
                Token::Slash => {
                    self.bump();
                    let divisor = self.divisor()?;
                    let span = lhs.span.join(divisor.span);
                    lhs = Expr::new(NodeKind::Divide(Box::new(lhs), Box::new(divisor)), span);
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn divisor(&mut self) -> Result<Expr, ParseError> {
        let offset = self.peek().map_or(self.source.len(), |t| t.span.start);
        let atom = self.power()?;
        match &atom.kind {
            NodeKind::Constant(c) if c.im.is_zero() => Ok(atom),
            NodeKind::Parameter(_) => Ok(atom),
            _ => Err(ParseError::at(self.source, offset, ParseErrorKind::InvalidDivisor)),
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().map(|t| (t.token.clone(), t.span)) {
            Some((Token::Minus, span)) => {
                self.bump();
                self.descend()?;
                let inner = self.unary()?;
                self.depth -= 1;
                let span = span.join(inner.span);
                Ok(Expr::new(NodeKind::Negate(Box::new(inner)), span))
            }
            Some((Token::Plus, _)) => {
                self.bump();
                self.descend()?;
                let inner = self.unary();
                self.depth -= 1;
                inner
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !matches!(self.peek().map(|t| &t.token), Some(Token::Caret)) {
            return Ok(base);
        }
        self.bump();
        let (exponent, end) = self.exponent()?;
        let span = Span::new(base.span.start, end);
        Ok(Expr::new(NodeKind::Power(Box::new(base), exponent), span))
    }

    fn exponent(&mut self) -> Result<(u32, usize), ParseError> {
        let start = self.peek().map_or(self.source.len(), |t| t.span.start);
        let parenthesized = matches!(self.peek().map(|t| &t.token), Some(Token::LParen));
        if parenthesized {
            self.bump();
        }
        let negative = parenthesized && matches!(self.peek().map(|t| &t.token), Some(Token::Minus));
        if negative {
            self.bump();
        }
        let Some(Spanned { token: Token::Number(value), span }) = self.peek().cloned() else {
            return Err(self.unexpected());
        };
        self.bump();
        let mut end = span.end;
        if parenthesized {
            match self.bump() {
                Some(Spanned { token: Token::RParen, span }) => end = span.end,
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.unexpected());
                }
            }
        }
        if negative && !value.is_zero() {
            return Err(ParseError::at(self.source, start, ParseErrorKind::NegativeExponent));
        }
        let exponent = value
            .is_integer()
            .then(|| value.to_integer().to_u32())
            .flatten()
            .filter(|&e| e <= MAX_EXPONENT)
            .ok_or_else(|| ParseError::at(self.source, start, ParseErrorKind::InvalidExponent))?;
        Ok((exponent, end))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(Spanned { token, span }) = self.peek().cloned() else {
            return Err(self.error_here(ParseErrorKind::UnexpectedEnd));
        };
        match token {
            Token::Number(value) => {
                self.bump();
                Ok(Expr::new(NodeKind::Constant(coeff::real(value)), span))
            }
            Token::Ident(name) => {
                self.bump();
                let kind = if name == "i" {
                    NodeKind::Constant(coeff::imag_unit())
                } else if let Some(g) = Generator::from_name(&name) {
                    NodeKind::Generator(g)
                } else {
                    NodeKind::Parameter(name)
                };
                Ok(Expr::new(kind, span))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                match self.peek() {
                    Some(Spanned { token: Token::RParen, span: close }) => {
                        let close = *close;
                        self.bump();
                        Ok(Expr::new(inner.kind, span.join(close)))
                    }
                    _ => Err(self.unexpected()),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind_of(source: &str) -> ParseErrorKind {
        parse(source).unwrap_err().kind
    }

    #[test]
    fn harmonic_liouvillian_shape() {
        let ast = parse("y*p_x - x*p_y").unwrap();
        assert_eq!(ast.sexpr(), "add(mul(y,p_x),neg(mul(x,p_y)))");
        assert_eq!(ast.span, Span::new(0, 13));
    }

    #[test]
    fn single_generator() {
        let ast = parse("q").unwrap();
        assert_eq!(ast.kind, NodeKind::Generator(Generator::Q));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-q^2").unwrap().sexpr(), "neg(pow(q,2))");
        assert_eq!(parse("a*b + c").unwrap().sexpr(), "add(mul(a,b),c)");
        assert_eq!(parse("1/3*q").unwrap().sexpr(), "mul(div(1,3),q)");
        assert_eq!(parse("(q+p)^2").unwrap().sexpr(), "pow(add(q,p),2)");
        assert_eq!(parse("2*i").unwrap().sexpr(), "mul(2,i)");
        assert_eq!(parse("q - -p").unwrap().sexpr(), "add(q,neg(neg(p)))");
    }

    #[test]
    fn negative_exponent_is_rejected() {
        let err = parse("q^(-1)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NegativeExponent);
        assert_eq!((err.line, err.column), (1, 3));
        assert_eq!(kind_of("q^1.5"), ParseErrorKind::InvalidExponent);
        assert!(parse("q^(-0)").is_ok());
    }

    #[test]
    fn error_cases_are_located() {
        assert_eq!(kind_of(""), ParseErrorKind::EmptyInput);
        assert_eq!(kind_of("   "), ParseErrorKind::EmptyInput);
        assert_eq!(kind_of("q $ p"), ParseErrorKind::UnknownCharacter('$'));
        assert_eq!(kind_of("2q"), ParseErrorKind::ImplicitMultiplication);
        assert_eq!(kind_of("q/p"), ParseErrorKind::InvalidDivisor);
        assert_eq!(kind_of("q/i"), ParseErrorKind::InvalidDivisor);
        assert_eq!(kind_of("q +"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind_of("(q"), ParseErrorKind::UnexpectedEnd);
        assert_eq!(kind_of("q)"), ParseErrorKind::UnexpectedToken(")".into()));
        assert_eq!(kind_of("q^2^3"), ParseErrorKind::UnexpectedToken("^".into()));
        let err = parse("q +\n  * p").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let source = format!("{}q{}", "(".repeat(10_000), ")".repeat(10_000));
        assert_eq!(kind_of(&source), ParseErrorKind::TooDeep);
        let minus = format!("{}q", "-".repeat(10_000));
        assert_eq!(kind_of(&minus), ParseErrorKind::TooDeep);
    }

    #[test]
    fn spans_stay_inside_source() {
        fn check(e: &Expr, len: usize) {
            assert!(e.span.start <= e.span.end && e.span.end <= len);
            for c in e.children() {
                check(c, len);
            }
        }
        let source = " (q^2 + p^2)/2 + k*q*x ";
        check(&parse(source).unwrap(), source.len());
    }
}
