//! Heisenberg-picture dynamics for quadratic Koopmanians.
//!
//! When every commutator `-i[v, K]` of a basis generator `v` is affine in the
//! generators, the operators evolve linearly: `dv/dt = G v + c`. First and
//! symmetrized second moments then close exactly, and the Jordan structure of
//! `G` decides whether amplitudes stay bounded.

mod envelope;
mod spectrum;

pub use envelope::{fit_envelope, fit_envelope_with_period, spectral_peaks, EnvelopeFit};
pub use spectrum::{classify_spectrum, EigenCluster, SpectrumReport, DEFAULT_CLUSTER_TOLERANCE};

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use thiserror::Error;

use crate::algebra::{self, coeff, AlgebraError, Generator, OperatorPolynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("d{generator}/dt = {residual} leaves the affine span of the generators")]
    NonlinearDynamics { generator: Generator, residual: String },
    #[error("d{generator}/dt has a complex coefficient: {rhs}")]
    ComplexDynamics { generator: Generator, rhs: String },
    #[error("generator {0} is not part of the basis")]
    OutsideBasis(Generator),
    #[error("observable has degree {0}, at most 2 is supported")]
    DegreeTooHigh(u32),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("basis mismatch between generator matrix and moment state")]
    BasisMismatch,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Linear dynamics `d<v>/dt = G <v> + c` over a labelled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    pub basis: Vec<Generator>,
    pub matrix: DMatrix<f64>,
    pub affine: DVector<f64>,
}

impl GeneratorMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, g: Generator) -> Option<usize> {
        self.basis.iter().position(|&b| b == g)
    }

    /// Entry `G[row, col]` addressed by generator.
    pub fn entry(&self, row: Generator, col: Generator) -> f64 {
        match (self.index_of(row), self.index_of(col)) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            _ => 0.0,
        }
    }

    /// Builds the matrix from one right-hand side per basis element.
    fn from_rhs(basis: Vec<Generator>, rows: Vec<(Generator, OperatorPolynomial)>) -> Result<Self, DynamicsError> {
        let n = basis.len();
        let mut matrix = DMatrix::zeros(n, n);
        let mut affine = DVector::zeros(n);
        for (row, (g, rhs)) in rows.iter().enumerate() {
            if !rhs.has_real_coefficients() {
                return Err(DynamicsError::ComplexDynamics { generator: *g, rhs: rhs.to_string() });
            }
            let nonlinear = rhs.filter(|m| m.degree() > 1);
            if !nonlinear.is_zero() {
                return Err(DynamicsError::NonlinearDynamics { generator: *g, residual: nonlinear.to_string() });
            }
            for (m, c) in rhs.terms() {
                let value = coeff::rational_to_f64(&c.re);
                if m.is_constant() {
                    affine[row] = value;
                    continue;
                }
                let (var, _) = m.support().next().unwrap();
                let col = basis.iter().position(|&b| b == var).ok_or(DynamicsError::OutsideBasis(var))?;
                matrix[(row, col)] = value;
            }
        }
        Ok(Self { basis, matrix, affine })
    }
}

/// Reads the generator matrix off the Heisenberg equations of `k_op`.
pub fn derive_generator(k_op: &OperatorPolynomial) -> Result<GeneratorMatrix, DynamicsError> {
    GeneratorMatrix::from_rhs(Generator::BASIS.to_vec(), algebra::heisenberg_system(k_op))
}

/// Hamilton's equations for a function of `q, p, x, y` treated as two
/// canonical pairs `(q, p)` and `(x, y)`. For quadratic `h` these coincide
/// with the quantum Heisenberg equations of the same Hamiltonian.
pub fn hamiltonian_generator(h: &OperatorPolynomial) -> Result<GeneratorMatrix, DynamicsError> {
    use Generator::*;
    let d = |v| algebra::partial_derivative(h, v);
    let rows = vec![(Q, d(P)?), (P, -d(Q)?), (X, d(Y)?), (Y, -d(X)?)];
    GeneratorMatrix::from_rhs(vec![Q, P, X, Y], rows)
}

/// `e^{G t}` by scaling and squaring.
pub fn matrix_exponential(g: &GeneratorMatrix, t: f64) -> DMatrix<f64> {
    (&g.matrix * t).exp()
}

/// `[[G, c], [0, 0]]`, so that the affine flow becomes linear in `(v, 1)`.
fn augmented(g: &GeneratorMatrix) -> DMatrix<f64> {
    let n = g.dim();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&g.matrix);
    a.view_mut((0, n), (n, 1)).copy_from(&g.affine);
    a
}

/// Mean vector `m = <v>` and symmetrized second moments `S_ij = <(v_i v_j + v_j v_i)/2>`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub basis: Vec<Generator>,
    pub mean: DVector<f64>,
    pub second: DMatrix<f64>,
}

impl MomentState {
    /// Zero mean and `S = I/2`: oscillator ground-state widths for `q, p` and a
    /// matching Gaussian for the classical variables and their shifts.
    pub fn vacuum(basis: &[Generator]) -> Self {
        let n = basis.len();
        Self { basis: basis.to_vec(), mean: DVector::zeros(n), second: DMatrix::identity(n, n) * 0.5 }
    }

    pub fn new(basis: &[Generator], mean: DVector<f64>, second: DMatrix<f64>) -> Self {
        Self { basis: basis.to_vec(), mean, second }
    }

    pub fn index_of(&self, g: Generator) -> Option<usize> {
        self.basis.iter().position(|&b| b == g)
    }

    pub fn mean_of(&self, g: Generator) -> f64 {
        self.index_of(g).map_or(0.0, |i| self.mean[i])
    }

    pub fn second_of(&self, a: Generator, b: Generator) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.second[(i, j)],
            _ => 0.0,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.second - &self.mean * self.mean.transpose()
    }

    /// Largest `|S - S^T|` entry.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.second - self.second.transpose()).amax()
    }
}

/// Exact moment flow: `m(t) = M m0 + d`, `S(t) = M S0 M^T + ...` with
/// `M = e^{Gt}`, computed through the augmented matrix so the affine drive is
/// handled exactly.
pub fn propagate_moments(g: &GeneratorMatrix, s0: &MomentState, t: f64) -> Result<MomentState, DynamicsError> {
    if g.basis != s0.basis {
        return Err(DynamicsError::BasisMismatch);
    }
    let n = g.dim();
    let flow = (augmented(g) * t).exp();
    let mut state = DMatrix::zeros(n + 1, n + 1);
    state.view_mut((0, 0), (n, n)).copy_from(&s0.second);
    state.view_mut((0, n), (n, 1)).copy_from(&s0.mean);
    state.view_mut((n, 0), (1, n)).copy_from(&s0.mean.transpose());
    state[(n, n)] = 1.0;
    let evolved = &flow * state * flow.transpose();
    let second = evolved.view((0, 0), (n, n)).into_owned();
    let second = (&second + second.transpose()) * 0.5;
    Ok(MomentState {
        basis: s0.basis.clone(),
        mean: evolved.view((0, n), (n, 1)).into_owned().column(0).into_owned(),
        second,
    })
}

/// `<K>` for a polynomial of degree at most 2, including the imaginary part.
///
/// A normal-ordered product `a b` equals its symmetrization plus `[a, b]/2`,
/// which is `i/2` for a conjugate pair and zero otherwise.
pub fn quadratic_expectation_complex(k_op: &OperatorPolynomial, s: &MomentState) -> Result<Complex64, DynamicsError> {
    let degree = k_op.degree();
    if degree > 2 {
        return Err(DynamicsError::DegreeTooHigh(degree));
    }
    let index = |g: Generator| s.index_of(g).ok_or(DynamicsError::OutsideBasis(g));
    let mut total = Complex64::new(0.0, 0.0);
    for (m, c) in k_op.terms() {
        let c = coeff::to_complex64(c);
        let factors: Vec<Generator> = m.support().flat_map(|(g, e)| std::iter::repeat_n(g, e as usize)).collect();
        let value = match factors.as_slice() {
            [] => Complex64::new(1.0, 0.0),
            [a] => Complex64::new(s.mean[index(*a)?], 0.0),
            [a, b] => {
                let sym = s.second[(index(*a)?, index(*b)?)];
                let correction = if a.is_position() && a.conjugate() == *b { 0.5 } else { 0.0 };
                Complex64::new(sym, correction)
            }
            _ => unreachable!(),
        };
        total += c * value;
    }
    Ok(total)
}

/// Real part of `<K>`; see [`quadratic_expectation_complex`].
pub fn quadratic_expectation(k_op: &OperatorPolynomial, s: &MomentState) -> Result<f64, DynamicsError> {
    quadratic_expectation_complex(k_op, s).map(|v| v.re)
}

/// Moments sampled at each of `times`.
pub fn moment_trajectory(
    g: &GeneratorMatrix,
    s0: &MomentState,
    times: &[f64],
) -> Result<Vec<MomentState>, DynamicsError> {
    times.iter().map(|&t| propagate_moments(g, s0, t)).collect()
}

/// The `(q, p)` rows never reference `(x, y, p_x, p_y)` and vice versa.
pub fn quantum_block_decoupled(g: &GeneratorMatrix) -> bool {
    let quantum = |gen: Generator| gen.is_quantum();
    g.basis.iter().enumerate().all(|(i, &row)| {
        g.basis.iter().enumerate().all(|(j, &col)| quantum(row) == quantum(col) || g.matrix[(i, j)] == 0.0)
    })
}

/// Convenience: the monomial `a*b` as a polynomial with unit coefficient.
pub fn product_observable(a: Generator, b: Generator) -> OperatorPolynomial {
    OperatorPolynomial::generator(a).multiply(&OperatorPolynomial::generator(b))
}
