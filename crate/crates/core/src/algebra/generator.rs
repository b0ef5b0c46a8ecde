use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the six canonical generators of the hybrid algebra.
///
/// `q`, `p` belong to the quantum oscillator; `x`, `y` are the classical
/// canonical variables acting as commuting multiplication operators; `p_x`,
/// `p_y` are the KvN shift and boost operators `-i d/dx`, `-i d/dy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "p_x")]
    Px,
    #[serde(rename = "p_y")]
    Py,
}

impl Generator {
    /// Dynamics basis order used by every matrix and report.
    pub const BASIS: [Generator; 6] =
        [Generator::Q, Generator::P, Generator::X, Generator::Y, Generator::Px, Generator::Py];

    /// Generators in monomial normal order `q p x p_x y p_y`.
    pub const NORMAL_ORDER: [Generator; 6] =
        [Generator::Q, Generator::P, Generator::X, Generator::Px, Generator::Y, Generator::Py];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Q => "q",
            Generator::P => "p",
            Generator::X => "x",
            Generator::Y => "y",
            Generator::Px => "p_x",
            Generator::Py => "p_y",
        }
    }

    pub fn from_name(name: &str) -> Option<Generator> {
        Self::BASIS.into_iter().find(|g| g.name() == name)
    }

    /// Position of this generator in the normal-ordered exponent vector.
    pub fn slot(self) -> usize {
        match self {
            Generator::Q => 0,
            Generator::P => 1,
            Generator::X => 2,
            Generator::Px => 3,
            Generator::Y => 4,
            Generator::Py => 5,
        }
    }

    pub fn from_slot(slot: usize) -> Generator {
        Self::NORMAL_ORDER[slot]
    }

    /// Index in [`Generator::BASIS`].
    pub fn basis_index(self) -> usize {
        Self::BASIS.iter().position(|&g| g == self).unwrap()
    }

    /// The partner `g'` with `[g, g'] = ±i`.
    pub fn conjugate(self) -> Generator {
        match self {
            Generator::Q => Generator::P,
            Generator::P => Generator::Q,
            Generator::X => Generator::Px,
            Generator::Px => Generator::X,
            Generator::Y => Generator::Py,
            Generator::Py => Generator::Y,
        }
    }

    /// `true` for the left member of each canonical pair (`[g, conjugate] = +i`).
    pub fn is_position(self) -> bool {
        matches!(self, Generator::Q | Generator::X | Generator::Y)
    }

    /// Shift and boost operators are not observable.
    pub fn is_observable(self) -> bool {
        !matches!(self, Generator::Px | Generator::Py)
    }

    pub fn is_shift(self) -> bool {
        !self.is_observable()
    }

    /// Classical phase-space coordinates `x`, `y`.
    pub fn is_classical(self) -> bool {
        matches!(self, Generator::X | Generator::Y)
    }

    /// Quantum canonical pair `q`, `p`.
    pub fn is_quantum(self) -> bool {
        matches!(self, Generator::Q | Generator::P)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
