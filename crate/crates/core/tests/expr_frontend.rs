use hybridlab::algebra::coeff::rational;
use hybridlab::expr::{lower, parse, parse_polynomial, ParameterBinding};
use hybridlab::{Monomial, OperatorPolynomial};
use num::Complex;
use proptest::prelude::*;

fn polynomial() -> impl Strategy<Value = OperatorPolynomial> {
    let monomial = prop::array::uniform6(0u32..=2).prop_map(Monomial);
    let coefficient = (-9i64..=9, 1i64..=7, -3i64..=3, 1i64..=4)
        .prop_map(|(a, b, c, d)| Complex::new(rational(a, b), rational(c, d)));
    prop::collection::vec((monomial, coefficient), 0..6).prop_map(OperatorPolynomial::from_terms)
}

/// Token soup over the grammar's alphabet plus a few foreign characters.
fn soup() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        "q", "p", "x", "y", "p_x", "p_y", "i", "k", "2", "0.5", "1e3", "+", "-", "*", "/", "^", "(", ")", " ", "\n",
        "$", ".", "_", "3q",
    ]);
    prop::collection::vec(pieces, 0..24).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rendering_round_trips(p in polynomial()) {
        let text = p.to_string();
        let again = parse_polynomial(&text, &ParameterBinding::new()).unwrap();
        prop_assert_eq!(again, p, "{}", text);
    }

    #[test]
    fn lowering_is_additive(a in polynomial(), b in polynomial()) {
        let params = ParameterBinding::new();
        let sum = parse_polynomial(&format!("({a}) + ({b})"), &params).unwrap();
        prop_assert_eq!(sum, &a + &b);
    }

    #[test]
    fn parsing_is_total(source in soup()) {
        match parse(&source) {
            Ok(ast) => {
                prop_assert!(ast.span.end <= source.len());
                let params = ParameterBinding::new().with("k", 0.5).unwrap();
                let _ = lower(&ast, &params);
            }
            Err(e) => {
                prop_assert!(e.offset <= source.len());
                prop_assert!(e.line >= 1 && e.column >= 1);
            }
        }
    }
}

#[test]
fn published_examples() {
    assert_eq!(parse("y*p_x - x*p_y").unwrap().sexpr(), "add(mul(y,p_x),neg(mul(x,p_y)))");
    assert_eq!(parse("q").unwrap().sexpr(), "q");
    let error = parse("q^(-1)").unwrap_err();
    assert_eq!(error.to_string(), "1:3: negative exponent");
    assert_eq!(parse("2q").unwrap_err().to_string(), "1:2: implicit multiplication is not allowed, write `*`");
    assert_eq!(parse("").unwrap_err().to_string(), "1:1: empty input");
    assert_eq!(parse("q +\n $").unwrap_err().to_string(), "2:2: unknown character `$`");
    assert!(parse("q/x").is_err());
}
