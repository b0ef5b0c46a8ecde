use num::rational::BigRational;

use super::Span;
use crate::algebra::coeff;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Token {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Spanned {
    pub token: Token,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LexError {
    UnknownCharacter(char, usize),
    BadNumber(Span),
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Spanned>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        if b.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let single = match b {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(token) = single {
            pos += 1;
            tokens.push(Spanned { token, span: Span::new(start, pos) });
            continue;
        }
        if b.is_ascii_digit() || b == b'.' {
            pos = scan_number(bytes, pos);
            let span = Span::new(start, pos);
            let value = coeff::parse_decimal(&source[start..pos]).ok_or(LexError::BadNumber(span))?;
            tokens.push(Spanned { token: Token::Number(value), span });
            continue;
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            tokens.push(Spanned { token: Token::Ident(source[start..pos].to_string()), span: Span::new(start, pos) });
            continue;
        }
        let ch = source[start..].chars().next().unwrap();
        return Err(LexError::UnknownCharacter(ch, start));
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
        pos += 1;
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut look = pos + 1;
        if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
            look += 1;
        }
        if look < bytes.len() && bytes[look].is_ascii_digit() {
            pos = look;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
        }
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underscore_identifiers_are_single_tokens() {
        let tokens = tokenize("y*p_x").unwrap();
        assert_eq!(tokens.len(), 3);
        assert_eq!(tokens[2].token, Token::Ident("p_x".into()));
        assert_eq!(tokens[2].span, Span::new(2, 5));
    }

    #[test]
    fn numbers_with_exponents() {
        let tokens = tokenize("1.5e-3").unwrap();
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].token, Token::Number(coeff::rational(3, 2000)));
    }

    #[test]
    fn unknown_character() {
        assert_eq!(tokenize("q # p"), Err(LexError::UnknownCharacter('#', 2)));
        assert!(matches!(tokenize("1.2.3"), Err(LexError::BadNumber(_))));
    }
}
