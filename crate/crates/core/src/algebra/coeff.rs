//! Exact complex-rational coefficients.

use std::fmt::Write as _;

use num::bigint::{BigInt, Sign};
use num::complex::{Complex, Complex64};
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};

/// Complex number with exact rational real and imaginary parts.
pub type Coeff = Complex<BigRational>;

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn real(value: BigRational) -> Coeff {
    Complex::new(value, BigRational::zero())
}

pub fn from_int(value: i64) -> Coeff {
    real(BigRational::from_integer(BigInt::from(value)))
}

pub fn imag_unit() -> Coeff {
    Complex::new(BigRational::zero(), BigRational::one())
}

/// `(-i)^power`.
pub fn neg_i_pow(power: u32) -> Coeff {
    match power % 4 {
        0 => from_int(1),
        1 => -imag_unit(),
        2 => from_int(-1),
        _ => imag_unit(),
    }
}

/// Parses a decimal literal such as `0.2`, `12`, `1.5e-3` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

/// Exact rational equal to the shortest decimal that round-trips `value`
/// (so `0.2_f64` becomes exactly `1/5`). Non-finite input yields `None`.
pub fn rational_from_f64(value: f64) -> Option<BigRational> {
    if !value.is_finite() {
        return None;
    }
    parse_decimal(&format!("{value:e}"))
}

pub fn coeff_from_f64(value: f64) -> Option<Coeff> {
    rational_from_f64(value).map(real)
}

pub fn coeff_from_complex64(value: Complex64) -> Option<Coeff> {
    Some(Complex::new(rational_from_f64(value.re)?, rational_from_f64(value.im)?))
}

pub fn to_complex64(value: &Coeff) -> Complex64 {
    Complex64::new(rational_to_f64(&value.re), rational_to_f64(&value.im))
}

pub fn rational_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn is_real(value: &Coeff) -> bool {
    value.im.is_zero()
}

/// Renders a rational as a terminating decimal when possible, otherwise as `n/d`.
pub fn format_rational(value: &BigRational) -> String {
    let mut out = String::new();
    if value.is_negative() {
        out.push('-');
    }
    let abs = value.abs();
    let denom = abs.denom().clone();
    let (twos, fives, rest) = split_two_five(&denom);
    if !rest.is_one() {
        write!(out, "{}/{}", abs.numer(), abs.denom()).unwrap();
        return out;
    }
    let places = twos.max(fives);
    let scaled = abs.numer() * num::pow(BigInt::from(10), places as usize) / &denom;
    let digits = scaled.to_string();
    if places == 0 {
        out.push_str(&digits);
        return out;
    }
    let padded = format!("{digits:0>width$}", width = places as usize + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places as usize);
    write!(out, "{int_part}.{frac_part}").unwrap();
    out
}

fn split_two_five(denom: &BigInt) -> (u32, u32, BigInt) {
    let mut rest = denom.clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0;
    let mut fives = 0;
    while !rest.is_zero() && rest.is_multiple_of(&two) {
        rest /= &two;
        twos += 1;
    }
    while !rest.is_zero() && rest.is_multiple_of(&five) {
        rest /= &five;
        fives += 1;
    }
    if rest.sign() == Sign::Minus {
        rest = -rest;
    }
    (twos, fives, rest)
}

/// How a coefficient prints in front of a monomial.
pub(crate) enum SignedCoeff {
    /// Coefficient is a positive real (`negative == false`) or negative real.
    Real { negative: bool, magnitude: BigRational },
    /// Purely imaginary: `±magnitude*i`.
    Imaginary { negative: bool, magnitude: BigRational },
    /// Both parts nonzero, rendered parenthesized.
    Complex,
}

pub(crate) fn classify(value: &Coeff) -> SignedCoeff {
    if value.im.is_zero() {
        SignedCoeff::Real { negative: value.re.is_negative(), magnitude: value.re.abs() }
    } else if value.re.is_zero() {
        SignedCoeff::Imaginary { negative: value.im.is_negative(), magnitude: value.im.abs() }
    } else {
        SignedCoeff::Complex
    }
}

/// Parenthesized rendering of a general complex coefficient, e.g. `(0.5 - 1/3*i)`.
pub fn format_coeff(value: &Coeff) -> String {
    match classify(value) {
        SignedCoeff::Real { .. } => format_rational(&value.re),
        SignedCoeff::Imaginary { negative, magnitude } => {
            let sign = if negative { "-" } else { "" };
            if magnitude.is_one() {
                format!("{sign}i")
            } else {
                format!("{sign}{}*i", format_rational(&magnitude))
            }
        }
        SignedCoeff::Complex => {
            let sign = if value.im.is_negative() { '-' } else { '+' };
            let im = value.im.abs();
            let im_text = if im.is_one() { "i".to_string() } else { format!("{}*i", format_rational(&im)) };
            format!("({} {sign} {im_text})", format_rational(&value.re))
        }
    }
}
