//! The coupled-oscillator benchmark `H = (q^2 + p^2 + x^2 + y^2)/2 + k q x`.

use crate::algebra::{self, AlgebraError, OperatorPolynomial};
use crate::expr::{parse_polynomial, ParameterBinding};

/// Both oscillators with bilinear coupling `k q x`.
pub const COUPLED_HAMILTONIAN: &str = "(q^2 + p^2)/2 + (x^2 + y^2)/2 + k*q*x";

/// Free quantum oscillator.
pub const QUANTUM_ENERGY: &str = "(q^2 + p^2)/2";

/// Liouvillian of the free classical oscillator.
pub const HARMONIC_LIOUVILLIAN: &str = "y*p_x - x*p_y";

pub fn coupling(k: f64) -> ParameterBinding {
    ParameterBinding::new().with("k", k).expect("finite coupling")
}

/// Total Hamiltonian for coupling `k` (exact: `0.2` becomes `1/5`).
pub fn coupled_hamiltonian(k: f64) -> OperatorPolynomial {
    parse_polynomial(COUPLED_HAMILTONIAN, &coupling(k)).expect("benchmark Hamiltonian parses")
}

/// `(q^2+p^2)/2 + y p_x - x p_y - k q p_y`.
pub fn hybrid_koopmanian(k: f64) -> OperatorPolynomial {
    algebra::hybridize(&coupled_hamiltonian(k)).expect("benchmark Hamiltonian hybridizes")
}

pub fn quantum_energy() -> OperatorPolynomial {
    parse_polynomial(QUANTUM_ENERGY, &ParameterBinding::new()).expect("quantum energy parses")
}

pub fn harmonic_liouvillian() -> OperatorPolynomial {
    parse_polynomial(HARMONIC_LIOUVILLIAN, &ParameterBinding::new()).expect("liouvillian parses")
}

/// Koopmanizes a classical Hamiltonian given as text.
pub fn liouvillian_of(source: &str, params: &ParameterBinding) -> Result<OperatorPolynomial, BenchmarkError> {
    let h = parse_polynomial(source, params)?;
    Ok(algebra::koopmanize(&h)?)
}

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hybrid_koopmanian_renders_canonically() {
        assert_eq!(hybrid_koopmanian(0.2).to_string(), "0.5*q^2 - 0.2*q*p_y + 0.5*p^2 - x*p_y + y*p_x");
        assert_eq!(hybrid_koopmanian(0.0).len(), 4);
    }

    #[test]
    fn harmonic_liouvillian_is_koopmanized_energy() {
        let l = liouvillian_of("(x^2+y^2)/2", &ParameterBinding::new()).unwrap();
        assert_eq!(l, harmonic_liouvillian());
    }
}
