//! Hybrid classical-quantum dynamics in the Koopman-von Neumann picture.
//!
//! A classical oscillator `(x, y)` is represented on a Hilbert space of
//! phase-space wave functions and coupled to a quantum oscillator `(q, p)`.
//! The crate provides
//!
//! * [`algebra`]: exact normal-ordered operator polynomials, commutators,
//!   koopmanization and Heisenberg right-hand sides;
//! * [`expr`]: a small text syntax for Hamiltonians and Koopmanians;
//! * [`moments`]: linear Heisenberg dynamics of first and second moments,
//!   spectra with Jordan structure, and secular-growth detection;
//! * [`grid`]: split-operator evolution of `psi(x, y, q)` on a periodic grid;
//! * [`observables`]: finite density matrices and purification of diagonal states.

pub mod algebra;
pub mod benchmark;
pub mod expr;
pub mod grid;
pub mod moments;
pub mod observables;

pub use algebra::{Generator, Monomial, OperatorPolynomial};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/operator-algebra.md")]
    mod operator_algebra {}
    #[doc = include_str!("../../../book/src/moment-dynamics.md")]
    mod moment_dynamics {}
    #[doc = include_str!("../../../book/src/phase-space-grid.md")]
    mod phase_space_grid {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
