use std::collections::BTreeMap;

use num::{One, Zero};

use super::{Expr, NodeKind};
use crate::algebra::{coeff, Coeff, Generator, OperatorPolynomial};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero (`{0}` is zero)")]
    DivisionByZero(String),
    #[error("`{0}` is not a valid parameter name")]
    InvalidParameterName(String),
    #[error("parameter value for `{0}` is not finite")]
    NonFiniteValue(String),
}

/// Values for the named parameters of an expression (for example the coupling `k`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterBinding {
    values: BTreeMap<String, Coeff>,
}

impl ParameterBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Coeff) -> Result<(), LowerError> {
        if !is_parameter_name(name) {
            return Err(LowerError::InvalidParameterName(name.to_string()));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    /// Binds a real value; `0.2` is stored as the exact rational `1/5`.
    pub fn insert_f64(&mut self, name: &str, value: f64) -> Result<(), LowerError> {
        let exact = coeff::coeff_from_f64(value).ok_or_else(|| LowerError::NonFiniteValue(name.to_string()))?;
        self.insert(name, exact)
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self, LowerError> {
        self.insert_f64(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Coeff> {
        self.values.get(name)
    }
}

fn is_parameter_name(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "i"
        && Generator::from_name(name).is_none()
}

/// Lowers an AST to a normal-ordered polynomial. Products are formed left to
/// right with [`OperatorPolynomial::multiply`], so operator order in the text
/// is respected.
pub fn lower(ast: &Expr, params: &ParameterBinding) -> Result<OperatorPolynomial, LowerError> {
    Ok(match &ast.kind {
        NodeKind::Constant(c) => OperatorPolynomial::constant(c.clone()),
        NodeKind::Parameter(name) => OperatorPolynomial::constant(parameter(name, params)?),
        NodeKind::Generator(g) => OperatorPolynomial::generator(*g),
        NodeKind::Negate(a) => -lower(a, params)?,
        NodeKind::Add(a, b) => &lower(a, params)? + &lower(b, params)?,
        NodeKind::Multiply(a, b) => lower(a, params)?.multiply(&lower(b, params)?),
        NodeKind::Divide(a, b) => {
            let divisor = match &b.kind {
                NodeKind::Constant(c) => c.clone(),
                NodeKind::Parameter(name) => parameter(name, params)?,
                _ => unreachable!("parser only admits numbers and parameters as divisors"),
            };
            if divisor.is_zero() {
                return Err(LowerError::DivisionByZero(b.sexpr()));
            }
            lower(a, params)?.scale(&(Coeff::one() / divisor))
        }
        NodeKind::Power(a, e) => lower(a, params)?.pow(*e),
    })
}

fn parameter(name: &str, params: &ParameterBinding) -> Result<Coeff, LowerError> {
    params.get(name).cloned().ok_or_else(|| LowerError::UnboundParameter(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::algebra::coeff::{imag_unit, rational, real};
    use crate::algebra::Monomial;

    fn lower_str(source: &str, params: &ParameterBinding) -> Result<OperatorPolynomial, LowerError> {
        lower(&parse(source).unwrap(), params)
    }

    #[test]
    fn coupled_oscillator_hamiltonian() {
        let params = ParameterBinding::new().with("k", 0.2).unwrap();
        let h = lower_str("(q^2+p^2)/2 + (x^2+y^2)/2 + k*q*x", &params).unwrap();
        assert_eq!(h.len(), 5);
        let qx = Monomial([1, 0, 1, 0, 0, 0]);
        assert_eq!(h.coefficient(&qx), real(rational(1, 5)));
        assert_eq!(h.coefficient(&Monomial::power(Generator::Y, 2)), real(rational(1, 2)));
    }

    #[test]
    fn p_q_lowers_through_ccr() {
        let pq = lower_str("p*q", &ParameterBinding::new()).unwrap();
        let expected = OperatorPolynomial::from_terms([
            (Monomial([1, 1, 0, 0, 0, 0]), Coeff::one()),
            (Monomial::ONE, -imag_unit()),
        ]);
        assert_eq!(pq, expected);
    }

    #[test]
    fn zero_literal() {
        assert!(lower_str("0", &ParameterBinding::new()).unwrap().is_zero());
        assert!(lower_str("q - q", &ParameterBinding::new()).unwrap().is_zero());
    }

    #[test]
    fn unbound_parameter_is_named() {
        assert_eq!(lower_str("k*q*x", &ParameterBinding::new()), Err(LowerError::UnboundParameter("k".into())));
    }

    #[test]
    fn division_by_parameter_and_zero() {
        let params = ParameterBinding::new().with("m", 4.0).unwrap().with("z", 0.0).unwrap();
        let h = lower_str("p^2/m", &params).unwrap();
        assert_eq!(h.coefficient(&Monomial::power(Generator::P, 2)), real(rational(1, 4)));
        assert!(matches!(lower_str("q/z", &params), Err(LowerError::DivisionByZero(_))));
        assert!(matches!(lower_str("q/0", &params), Err(LowerError::DivisionByZero(_))));
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        let value = lower_str("i^2", &ParameterBinding::new()).unwrap();
        assert_eq!(value, OperatorPolynomial::constant(coeff::from_int(-1)));
    }

    #[test]
    fn parameter_names_are_checked() {
        let mut params = ParameterBinding::new();
        assert!(params.insert_f64("p_x", 1.0).is_err());
        assert!(params.insert_f64("i", 1.0).is_err());
        assert!(params.insert_f64("2k", 1.0).is_err());
        assert!(params.insert_f64("k", f64::INFINITY).is_err());
        assert!(params.insert_f64("omega_1", 1.0).is_ok());
    }
}
