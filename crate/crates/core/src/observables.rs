//! Finite density matrices: expectation values `tr(rho A)`, variances,
//! validation, and purification of diagonal (classical) states.
//!
//! Measurement statistics only fix the diagonal of a density matrix in the
//! eigenbasis of the measured observables. [`purify_diagonal`] completes the
//! diagonal to the rank-1 state `rho_mn = sqrt(rho_mm rho_nn)`, which gives the
//! same statistics for every observable diagonal in that basis.

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::OperatorPolynomial;

/// Largest tolerated `|rho - rho^dagger|` entry.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
/// Largest tolerated `|tr rho - 1|`.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Smallest tolerated eigenvalue.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Largest tolerated `|A - A^dagger|` entry of an observable.
pub const OBSERVABLE_HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("observable is not Hermitian (residual {0:e})")]
    NonHermitianObservable(f64),
    #[error("not a density matrix: hermiticity residual {}, trace deviation {}, min eigenvalue {}", .0.hermiticity_residual, .0.trace_deviation, .0.min_eigenvalue)]
    InvalidDensity(Box<DensityValidation>),
    #[error("not a probability distribution: {0}")]
    InvalidDistribution(String),
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDensity {
    matrix: DMatrix<Complex64>,
}

impl FiniteDensity {
    /// Checks the matrix against the density-matrix tolerances.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self, ObservableError> {
        let report = validate_density(&matrix);
        if !report.pass {
            return Err(ObservableError::InvalidDensity(Box::new(report)));
        }
        Ok(Self { matrix })
    }

    /// `I / d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0) }
    }

    /// `psi psi^dagger` for a unit vector.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self, ObservableError> {
        Self::new(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let hermitian = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut values: Vec<f64> = hermitian.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Nonnegative probabilities summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalDistribution {
    probabilities: Vec<f64>,
}

impl DiagonalDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, ObservableError> {
        if probabilities.is_empty() {
            return Err(ObservableError::InvalidDistribution("no entries".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(ObservableError::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ObservableError::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `sum_m p_m a_m` for a diagonal observable with entries `a_m`.
    pub fn mean(&self, diagonal: &[f64]) -> Result<f64, ObservableError> {
        if diagonal.len() != self.len() {
            return Err(ObservableError::DimensionMismatch(format!(
                "{} observable entries for {} outcomes",
                diagonal.len(),
                self.len()
            )));
        }
        Ok(self.probabilities.iter().zip(diagonal).map(|(p, a)| p * a).sum())
    }
}

/// Rank-1 completion of a diagonal state.
#[derive(Clone, Debug, PartialEq)]
pub struct Purification {
    /// `psi_m = sqrt(rho_mm)`, with all phases chosen nonnegative real.
    pub state: DVector<Complex64>,
    pub density: FiniteDensity,
}

/// `psi_m = sqrt(rho_mm)` and `rho = psi psi^dagger`, so that
/// `rho_mn = sqrt(rho_mm rho_nn)`.
pub fn purify_diagonal(d: &DiagonalDistribution) -> Purification {
    let state = DVector::from_iterator(d.len(), d.probabilities().iter().map(|p| Complex64::new(p.sqrt(), 0.0)));
    let density = FiniteDensity { matrix: &state * state.adjoint() };
    Purification { state, density }
}

/// `tr(rho A)` with the imaginary part kept as a sanity residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: f64,
    pub imaginary: f64,
}

fn check_observable(rho: &FiniteDensity, a: &DMatrix<Complex64>) -> Result<(), ObservableError> {
    if a.nrows() != rho.dim() || a.ncols() != rho.dim() {
        return Err(ObservableError::DimensionMismatch(format!(
            "observable is {}x{}, density is {}x{}",
            a.nrows(),
            a.ncols(),
            rho.dim(),
            rho.dim()
        )));
    }
    let residual = hermiticity_residual(a);
    if residual > OBSERVABLE_HERMITICITY_TOLERANCE {
        return Err(ObservableError::NonHermitianObservable(residual));
    }
    Ok(())
}

/// `<A> = tr(rho A)`.
pub fn trace_expectation(rho: &FiniteDensity, a: &DMatrix<Complex64>) -> Result<TraceValue, ObservableError> {
    check_observable(rho, a)?;
    let t = (rho.matrix() * a).trace();
    Ok(TraceValue { value: t.re, imaginary: t.im })
}

/// `tr(rho A^2) - tr(rho A)^2`.
pub fn variance(rho: &FiniteDensity, a: &DMatrix<Complex64>) -> Result<f64, ObservableError> {
    check_observable(rho, a)?;
    let mean = (rho.matrix() * a).trace().re;
    let square = (rho.matrix() * a * a).trace().re;
    Ok(square - mean * mean)
}

/// Diagnostics of a candidate density matrix against the tolerances above.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValidation {
    pub dimension: usize,
    pub square: bool,
    pub hermiticity_residual: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub hermitian: bool,
    pub unit_trace: bool,
    pub positive: bool,
    pub pass: bool,
}

/// Always returns a report; `pass` is the conjunction of the three checks.
pub fn validate_density(rho: &DMatrix<Complex64>) -> DensityValidation {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return DensityValidation {
            dimension: rho.nrows(),
            square: false,
            hermiticity_residual: f64::NAN,
            trace_deviation: f64::NAN,
            min_eigenvalue: f64::NAN,
            hermitian: false,
            unit_trace: false,
            positive: false,
            pass: false,
        };
    }
    let hermiticity_residual = hermiticity_residual(rho);
    let trace = rho.trace();
    let trace_deviation = (trace - Complex64::new(1.0, 0.0)).norm();
    let min_eigenvalue = hermitian_eigenvalues(rho)[0];
    let hermitian = hermiticity_residual <= HERMITICITY_TOLERANCE;
    let unit_trace = trace_deviation <= TRACE_TOLERANCE;
    let positive = min_eigenvalue >= EIGENVALUE_FLOOR;
    DensityValidation {
        dimension: rho.nrows(),
        square: true,
        hermiticity_residual,
        trace_deviation,
        min_eigenvalue,
        hermitian,
        unit_trace,
        positive,
        pass: hermitian && unit_trace && positive,
    }
}

/// Whether `a` is measurable on the classical subsystem: by default the
/// operators diagonal in `(x, y)`, i.e. free of the shifts `p_x`, `p_y`.
pub fn classically_measurable(a: &OperatorPolynomial) -> bool {
    !a.has_shift()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|v| Complex64::new(*v, 0.0))))
    }

    #[test]
    fn purify_point_mass_and_pair() {
        let p = purify_diagonal(&DiagonalDistribution::new(vec![1.0, 0.0, 0.0]).unwrap());
        assert_eq!(p.state.iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        let p = purify_diagonal(&DiagonalDistribution::new(vec![0.5, 0.5]).unwrap());
        assert!((p.state[0].re - 0.5f64.sqrt()).abs() < 1e-16);
        assert!((p.density.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn purify_uniform_is_rank_one() {
        let p = purify_diagonal(&DiagonalDistribution::new(vec![0.25; 4]).unwrap());
        assert!(p.density.matrix().iter().all(|z| (z.re - 0.25).abs() < 1e-15 && z.im == 0.0));
        let eig = p.density.eigenvalues();
        assert!(eig[2].abs() < 1e-12);
        assert!((eig[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_and_variance() {
        let z = diag(&[1.0, -1.0]);
        let mixed = FiniteDensity::maximally_mixed(2);
        assert!((trace_expectation(&mixed, &DMatrix::identity(2, 2)).unwrap().value - 1.0).abs() < 1e-15);
        assert!((variance(&mixed, &z).unwrap() - 1.0).abs() < 1e-15);
        let purified = purify_diagonal(&DiagonalDistribution::new(vec![0.5, 0.5]).unwrap()).density;
        assert!(trace_expectation(&purified, &z).unwrap().value.abs() < 1e-15);
        assert!((variance(&purified, &z).unwrap() - 1.0).abs() < 1e-15);
        let eigenstate = purify_diagonal(&DiagonalDistribution::new(vec![0.0, 1.0]).unwrap()).density;
        assert_eq!(variance(&eigenstate, &z).unwrap(), 0.0);
    }

    #[test]
    fn observable_checks() {
        let rho = FiniteDensity::maximally_mixed(2);
        let mut a = diag(&[1.0, 2.0]);
        a[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(trace_expectation(&rho, &a), Err(ObservableError::NonHermitianObservable(_))));
        assert!(matches!(trace_expectation(&rho, &diag(&[1.0; 3])), Err(ObservableError::DimensionMismatch(_))));
    }

    #[test]
    fn validation_reports() {
        assert!(validate_density(FiniteDensity::maximally_mixed(3).matrix()).pass);
        let report = validate_density(&diag(&[0.45, 0.45]));
        assert!(!report.pass && !report.unit_trace && report.hermitian && report.positive);
        assert!((report.trace_deviation - 0.1).abs() < 1e-15);
        assert!(!validate_density(&diag(&[1.5, -0.5])).positive);
        assert!(!validate_density(&DMatrix::zeros(2, 3)).pass);
        assert!(matches!(FiniteDensity::new(diag(&[0.9])), Err(ObservableError::InvalidDensity(_))));
    }

    #[test]
    fn distribution_checks() {
        assert!(DiagonalDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiagonalDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(DiagonalDistribution::new(vec![]).is_err());
        let d = DiagonalDistribution::new(vec![0.2, 0.8]).unwrap();
        assert!((d.mean(&[1.0, 2.0]).unwrap() - 1.8).abs() < 1e-15);
    }
}
