use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num::complex::Complex64;
use num::{One, Zero};

use super::coeff::{self, Coeff, SignedCoeff};
use super::generator::Generator;

/// Normal-ordered product `q^a p^b x^c p_x^d y^e p_y^g`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub [u32; 6]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; 6]);

    pub fn generator(g: Generator) -> Monomial {
        Monomial::power(g, 1)
    }

    pub fn power(g: Generator, exponent: u32) -> Monomial {
        let mut e = [0; 6];
        e[g.slot()] = exponent;
        Monomial(e)
    }

    pub fn exponent(&self, g: Generator) -> u32 {
        self.0[g.slot()]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn contains(&self, g: Generator) -> bool {
        self.exponent(g) > 0
    }

    /// Generators with nonzero exponent, in normal order.
    pub fn support(&self) -> impl Iterator<Item = (Generator, u32)> + '_ {
        Generator::NORMAL_ORDER.into_iter().map(|g| (g, self.exponent(g))).filter(|&(_, e)| e > 0)
    }

    pub fn has_shift(&self) -> bool {
        self.contains(Generator::Px) || self.contains(Generator::Py)
    }

    /// Value with every generator replaced by a commuting number, indexed by
    /// [`Generator::BASIS`].
    pub fn eval_commuting(&self, values: &[f64; 6]) -> f64 {
        self.support().map(|(g, e)| values[g.basis_index()].powi(e as i32)).product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return f.write_str("1");
        }
        // Basis order keeps each position left of its conjugate momentum, and
        // factors from different pairs commute.
        let mut first = true;
        for (g, e) in Generator::BASIS.into_iter().map(|g| (g, self.exponent(g))).filter(|&(_, e)| e > 0) {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{g}")?;
            } else {
                write!(f, "{g}^{e}")?;
            }
        }
        Ok(())
    }
}

impl serde::Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Complex-coefficient polynomial in the canonical generators, kept in normal order.
///
/// Zero coefficients are never stored. Products go through [`OperatorPolynomial::multiply`],
/// which applies the canonical commutation relations `[q,p] = [x,p_x] = [y,p_y] = i`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorPolynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(value: Coeff) -> Self {
        Self::term(Monomial::ONE, value)
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn generator(g: Generator) -> Self {
        Self::term(Monomial::generator(g), Coeff::one())
    }

    pub fn term(monomial: Monomial, value: Coeff) -> Self {
        let mut poly = Self::zero();
        poly.add_term(monomial, value);
        poly
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Self {
        let mut poly = Self::zero();
        for (m, c) in terms {
            poly.add_term(m, c);
        }
        poly
    }

    pub fn add_term(&mut self, monomial: Monomial, value: Coeff) {
        if value.is_zero() {
            return;
        }
        match self.terms.entry(monomial) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(value);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += value;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending exponent-vector order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> Coeff {
        self.terms.get(monomial).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn contains(&self, g: Generator) -> bool {
        self.terms.keys().any(|m| m.contains(g))
    }

    pub fn has_shift(&self) -> bool {
        self.terms.keys().any(Monomial::has_shift)
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(coeff::is_real)
    }

    pub fn scale(&self, factor: &Coeff) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (*m, c * factor)))
    }

    /// Keeps the terms whose monomial satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        Self::from_terms(self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, c.clone())))
    }

    /// Associative product under the canonical commutation relations.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let coefficient = ca * cb;
                for (m, c) in multiply_monomials(ma, mb) {
                    out.add_term(m, c * &coefficient);
                }
            }
        }
        out
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..exponent {
            acc = acc.multiply(self);
        }
        acc
    }

    /// Value with generators replaced by commuting numbers (basis order).
    pub fn eval_commuting(&self, values: &[f64; 6]) -> Complex64 {
        self.terms.iter().map(|(m, c)| coeff::to_complex64(c) * m.eval_commuting(values)).sum()
    }
}

/// Normal-orders `ma * mb`.
///
/// Pairs of different degrees of freedom commute, so each canonical pair is
/// reordered independently with
/// `P^b X^c = sum_j j! C(b,j) C(c,j) (-i)^j X^(c-j) P^(b-j)`.
fn multiply_monomials(ma: &Monomial, mb: &Monomial) -> Vec<(Monomial, Coeff)> {
    let mut partial: Vec<(Monomial, Coeff)> = vec![(Monomial::ONE, Coeff::one())];
    for pair in 0..3 {
        let (xs, ps) = (2 * pair, 2 * pair + 1);
        let (a, b) = (ma.0[xs], ma.0[ps]);
        let (c, d) = (mb.0[xs], mb.0[ps]);
        let mut expansions = Vec::new();
        for j in 0..=b.min(c) {
            let weight = factorial(j) * binomial(b, j) * binomial(c, j);
            let value = coeff::neg_i_pow(j) * coeff::from_int(weight as i64);
            expansions.push((a + c - j, b + d - j, value));
        }
        let mut next = Vec::with_capacity(partial.len() * expansions.len());
        for (m, value) in &partial {
            for (xe, pe, w) in &expansions {
                let mut e = m.0;
                e[xs] = *xe;
                e[ps] = *pe;
                next.push((Monomial(e), value * w));
            }
        }
        partial = next;
    }
    partial
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl fmt::Display for OperatorPolynomial {
    /// Canonical rendering: terms sorted by exponent vector, lexicographically
    /// descending, so higher powers of earlier generators come first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (index, (m, c)) in self.terms.iter().rev().enumerate() {
            let (negative, body) = match coeff::classify(c) {
                SignedCoeff::Real { negative, magnitude } => {
                    let text = if magnitude.is_one() && !m.is_constant() {
                        String::new()
                    } else {
                        coeff::format_rational(&magnitude)
                    };
                    (negative, text)
                }
                SignedCoeff::Imaginary { negative, magnitude } => {
                    let text = if magnitude.is_one() {
                        "i".to_string()
                    } else {
                        format!("{}*i", coeff::format_rational(&magnitude))
                    };
                    (negative, text)
                }
                SignedCoeff::Complex => (false, coeff::format_coeff(c)),
            };
            match (index, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            match (body.is_empty(), m.is_constant()) {
                (true, _) => write!(f, "{m}")?,
                (false, true) => f.write_str(&body)?,
                (false, false) => write!(f, "{body}*{m}")?,
            }
        }
        Ok(())
    }
}

impl Add for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(mut self, rhs: OperatorPolynomial) -> OperatorPolynomial {
        self += &rhs;
        self
    }
}

impl AddAssign<&OperatorPolynomial> for OperatorPolynomial {
    fn add_assign(&mut self, rhs: &OperatorPolynomial) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl Neg for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> OperatorPolynomial {
        OperatorPolynomial::from_terms(self.terms.iter().map(|(m, c)| (*m, -c.clone())))
    }
}

impl Neg for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> OperatorPolynomial {
        -&self
    }
}

impl Sub for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self + &(-rhs)
    }
}

impl Sub for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(self, rhs: OperatorPolynomial) -> OperatorPolynomial {
        &self - &rhs
    }
}

impl Mul for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: &OperatorPolynomial) -> OperatorPolynomial {
        self.multiply(rhs)
    }
}

impl Mul for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: OperatorPolynomial) -> OperatorPolynomial {
        self.multiply(&rhs)
    }
}

impl From<Generator> for OperatorPolynomial {
    fn from(g: Generator) -> Self {
        OperatorPolynomial::generator(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::coeff::{from_int, imag_unit, rational, real};
    use Generator::*;

    fn g(gen: Generator) -> OperatorPolynomial {
        OperatorPolynomial::generator(gen)
    }

    #[test]
    fn p_times_q_normal_orders_with_ccr() {
        // pq = qp - i
        let expected = &(&g(Q) * &g(P)) - &OperatorPolynomial::constant(imag_unit());
        assert_eq!(g(P).multiply(&g(Q)), expected);
        assert_eq!(expected.to_string(), "q*p - i");
    }

    #[test]
    fn commuting_generators_just_concatenate() {
        let xy = g(X).multiply(&g(Y));
        assert_eq!(xy.len(), 1);
        assert_eq!(xy.to_string(), "x*y");
        assert_eq!(g(Y).multiply(&g(X)), xy);
        assert_eq!(g(Q).multiply(&g(Q)).to_string(), "q^2");
        assert_eq!(g(P).multiply(&g(X)), g(X).multiply(&g(P)));
    }

    #[test]
    fn p_squared_q_squared_reordering() {
        // p^2 q^2 = q^2 p^2 - 4i q p - 2, by expanding twice with pq = qp - i.
        let lhs = g(P).pow(2).multiply(&g(Q).pow(2));
        let expected = OperatorPolynomial::from_terms([
            (Monomial([2, 2, 0, 0, 0, 0]), from_int(1)),
            (Monomial([1, 1, 0, 0, 0, 0]), -imag_unit() * from_int(4)),
            (Monomial::ONE, from_int(-2)),
        ]);
        assert_eq!(lhs, expected);
    }

    #[test]
    fn zero_terms_are_dropped() {
        let a = &g(X) - &g(X);
        assert!(a.is_zero());
        assert_eq!(a.to_string(), "0");
    }

    #[test]
    fn display_orders_terms_descending() {
        let poly = OperatorPolynomial::from_terms([
            (Monomial::generator(Py), real(rational(-1, 5))),
            (Monomial::generator(Q), from_int(-1)),
        ]);
        assert_eq!(poly.to_string(), "-q - 0.2*p_y");
    }

    #[test]
    fn degree_never_exceeds_sum() {
        let a = &g(P).pow(3) + &g(X);
        let b = &g(Q).pow(2) + &g(Px);
        assert!(a.multiply(&b).degree() <= a.degree() + b.degree());
    }
}
