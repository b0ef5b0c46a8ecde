//! Exact operator algebra over the canonical generators.
//!
//! The algebra is generated by `q, p, x, y, p_x, p_y` with
//! `[q,p] = [x,p_x] = [y,p_y] = i` (units with ħ = 1) and every other pair
//! commuting. Polynomials are stored normal-ordered with exact rational
//! complex coefficients, so all derived identities hold with no tolerance.

pub mod coeff;
mod generator;
mod polynomial;

pub use coeff::Coeff;
pub use generator::Generator;
pub use polynomial::{Monomial, OperatorPolynomial};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("expected a classical function of q, p, x, y but found shift operator in `{0}`")]
    ShiftOperatorPresent(String),
    #[error("monomial `{0}` couples the quantum momentum p to the classical variables")]
    UnsupportedMixing(String),
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &OperatorPolynomial, b: &OperatorPolynomial) -> OperatorPolynomial {
    &a.multiply(b) - &b.multiply(a)
}

/// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]]`; zero in any associative algebra.
pub fn jacobi_residual(a: &OperatorPolynomial, b: &OperatorPolynomial, c: &OperatorPolynomial) -> OperatorPolynomial {
    let first = commutator(a, &commutator(b, c));
    let second = commutator(b, &commutator(c, a));
    let third = commutator(c, &commutator(a, b));
    &(&first + &second) + &third
}

/// Certificate that no interaction term `K_i` can give both `[p, K_i] = -k x`
/// and `[y, K_i] = -k q` while `[y, p] = 0`.
///
/// Substituting those targets into the Jacobi identity for `(y, p, K_i)`
/// leaves `[y, -k x] + [p, k q]`, which would have to vanish. It evaluates to
/// the constant `-i k`, so the obstruction is present exactly when `k != 0`.
pub fn nogo_witness(k: &Coeff) -> OperatorPolynomial {
    let kc = OperatorPolynomial::constant(k.clone());
    let y = OperatorPolynomial::generator(Generator::Y);
    let p = OperatorPolynomial::generator(Generator::P);
    let minus_kx = -&kc.multiply(&Generator::X.into());
    let kq = kc.multiply(&Generator::Q.into());
    &commutator(&y, &minus_kx) + &commutator(&p, &kq)
}

fn require_classical_function(h: &OperatorPolynomial) -> Result<(), AlgebraError> {
    if h.has_shift() {
        return Err(AlgebraError::ShiftOperatorPresent(h.to_string()));
    }
    Ok(())
}

/// Formal partial derivative, monomial by monomial.
pub fn partial_derivative(h: &OperatorPolynomial, v: Generator) -> Result<OperatorPolynomial, AlgebraError> {
    require_classical_function(h)?;
    let mut out = OperatorPolynomial::zero();
    for (m, c) in h.terms() {
        let e = m.exponent(v);
        if e == 0 {
            continue;
        }
        let mut lowered = *m;
        lowered.0[v.slot()] -= 1;
        out.add_term(lowered, c * coeff::from_int(e as i64));
    }
    Ok(out)
}

/// Liouvillian of a classical function: `(dH/dy) p_x - (dH/dx) p_y`, with the
/// derivative factors written to the left of the shift operators.
pub fn koopmanize(h: &OperatorPolynomial) -> Result<OperatorPolynomial, AlgebraError> {
    let dh_dy = partial_derivative(h, Generator::Y)?;
    let dh_dx = partial_derivative(h, Generator::X)?;
    let px = OperatorPolynomial::generator(Generator::Px);
    let py = OperatorPolynomial::generator(Generator::Py);
    Ok(&dh_dy.multiply(&px) - &dh_dx.multiply(&py))
}

/// The pieces of a total Hamiltonian, split by which generators each monomial uses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HamiltonianParts {
    /// Monomials in `q`, `p` only (constants land here).
    pub quantum: OperatorPolynomial,
    /// Monomials in `x`, `y` only.
    pub classical: OperatorPolynomial,
    /// Monomials mixing `q` with `x`, `y`.
    pub interaction: OperatorPolynomial,
}

pub fn split_hamiltonian(h: &OperatorPolynomial) -> Result<HamiltonianParts, AlgebraError> {
    require_classical_function(h)?;
    let mut parts = HamiltonianParts::default();
    for (m, c) in h.terms() {
        let quantum = m.contains(Generator::Q) || m.contains(Generator::P);
        let classical = m.contains(Generator::X) || m.contains(Generator::Y);
        let target = match (quantum, classical) {
            (_, false) => &mut parts.quantum,
            (false, true) => &mut parts.classical,
            (true, true) if m.contains(Generator::P) => return Err(AlgebraError::UnsupportedMixing(m.to_string())),
            (true, true) => &mut parts.interaction,
        };
        target.add_term(*m, c.clone());
    }
    Ok(parts)
}

/// Koopmanian of a hybrid system: the quantum part is kept as an operator,
/// the classical and interaction parts are replaced by their Liouvillian.
pub fn hybridize(h_total: &OperatorPolynomial) -> Result<OperatorPolynomial, AlgebraError> {
    let parts = split_hamiltonian(h_total)?;
    let koopman = koopmanize(&(&parts.classical + &parts.interaction))?;
    Ok(&parts.quantum + &koopman)
}

/// `dX/dt = -i [X, K]`.
pub fn heisenberg_rhs(x_op: &OperatorPolynomial, k_op: &OperatorPolynomial) -> OperatorPolynomial {
    commutator(x_op, k_op).scale(&-coeff::imag_unit())
}

/// Heisenberg right-hand side for every basis generator, in basis order.
pub fn heisenberg_system(k_op: &OperatorPolynomial) -> Vec<(Generator, OperatorPolynomial)> {
    Generator::BASIS.into_iter().map(|g| (g, heisenberg_rhs(&g.into(), k_op))).collect()
}

/// Renders a Heisenberg system as `dg/dt = rhs` lines.
pub fn format_equations(system: &[(Generator, OperatorPolynomial)]) -> String {
    system.iter().map(|(g, rhs)| format!("d{g}/dt = {rhs}\n")).collect()
}
