use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use super::plan::{for_each_index, requirements};
use super::transform::Transforms;
use super::{AxisSpec, GridError, GridState, Representation};
use crate::algebra::{coeff, Monomial, OperatorPolynomial};

/// `<psi|A|psi>` split into the reported real value and the imaginary part,
/// which vanishes for Hermitian `A` up to quadrature error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub imaginary: f64,
}

/// Expectation value of a polynomial observable by quadrature.
///
/// Monomials that are diagonal in some mixed representation are summed
/// against `|psi|^2` there. Monomials needing both representations of an axis,
/// such as `q*p`, are applied to `psi` factor by factor in normal order.
pub fn grid_expectation(state: &GridState, a: &OperatorPolynomial) -> Result<Expectation, GridError> {
    let transforms = Transforms::new(state.spec(), 1);
    Sampler::new(state, &transforms).expectation(a)
}

/// Evaluates many observers on one state, reusing transformed copies.
pub(crate) struct Sampler<'a> {
    state: &'a GridState,
    transforms: &'a Transforms,
    /// `|psi|^2` in the representation keyed by its momentum-axis bit mask.
    densities: HashMap<usize, Vec<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(state: &'a GridState, transforms: &'a Transforms) -> Self {
        Self { state, transforms, densities: HashMap::new() }
    }

    pub fn expectation(&mut self, a: &OperatorPolynomial) -> Result<Expectation, GridError> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in a.terms() {
            total += coeff::to_complex64(c) * self.monomial(m)?;
        }
        Ok(Expectation { value: total.re, imaginary: total.im })
    }

    fn monomial(&mut self, m: &Monomial) -> Result<Complex64, GridError> {
        if m.is_constant() {
            return Ok(Complex64::new(self.state.norm(), 0.0));
        }
        match requirements(m, self.state.spec()) {
            Ok(needs) => Ok(Complex64::new(self.diagonal(m, &needs), 0.0)),
            Err(GridError::NonSplittableTerm(_)) => self.applied(m),
            Err(e) => Err(e),
        }
    }

    fn diagonal(&mut self, m: &Monomial, needs: &[Option<Representation>]) -> f64 {
        let spec = self.state.spec();
        let mask = needs
            .iter()
            .enumerate()
            .filter(|(_, n)| **n == Some(Representation::Momentum))
            .fold(0, |acc, (a, _)| acc | (1 << a));
        let (state, transforms) = (self.state, self.transforms);
        let density = self.densities.entry(mask).or_insert_with(|| {
            let mut data = state.amplitudes().to_vec();
            let mut scratch = Vec::new();
            for a in 0..spec.axes.len() {
                if mask & (1 << a) != 0 {
                    transforms.transform(&mut data, &mut scratch, a, Representation::Momentum);
                }
            }
            data.iter().map(|z| z.norm_sqr()).collect()
        });
        let weights: Vec<Option<Vec<f64>>> = spec
            .axes
            .iter()
            .zip(needs)
            .map(|(axis, need)| {
                let rep = (*need)?;
                let generator = match rep {
                    Representation::Position => axis.label.position(),
                    Representation::Momentum => axis.label.momentum(),
                };
                let e = m.exponent(generator) as i32;
                Some(axis.values(rep).iter().map(|v| v.powi(e)).collect())
            })
            .collect();
        let mut sum = 0.0;
        for_each_index(&spec.shape(), |flat, index| {
            let w: f64 = weights.iter().zip(index).filter_map(|(w, &i)| w.as_ref().map(|w| w[i])).product();
            sum += density[flat] * w;
        });
        sum * spec.cell_volume()
    }

    /// `<psi, m psi>` with the momentum factor of each axis applied before its position factor.
    fn applied(&self, m: &Monomial) -> Result<Complex64, GridError> {
        let spec = self.state.spec();
        let shape = spec.shape();
        let mut data = self.state.amplitudes().to_vec();
        let mut scratch = Vec::new();
        for (a, axis) in spec.axes.iter().enumerate() {
            let b = m.exponent(axis.label.momentum()) as i32;
            if b > 0 {
                self.transforms.transform(&mut data, &mut scratch, a, Representation::Momentum);
                scale_along(&mut data, &shape, a, &axis.momenta().iter().map(|k| k.powi(b)).collect::<Vec<_>>());
                self.transforms.transform(&mut data, &mut scratch, a, Representation::Position);
            }
            let e = m.exponent(axis.label.position()) as i32;
            if e > 0 {
                scale_along(&mut data, &shape, a, &axis.positions().iter().map(|z| z.powi(e)).collect::<Vec<_>>());
            }
        }
        for (g, _) in m.support() {
            spec.axis_of(g)?;
        }
        let sum: Complex64 = self.state.amplitudes().iter().zip(&data).map(|(a, b)| a.conj() * b).sum();
        Ok(sum * spec.cell_volume())
    }
}

fn scale_along(data: &mut [Complex64], shape: &[usize], axis: usize, factors: &[f64]) {
    let inner: usize = shape[axis + 1..].iter().product();
    let n = shape[axis];
    for (i, z) in data.iter_mut().enumerate() {
        *z *= factors[(i / inner) % n];
    }
}

/// Matrix of a polynomial in one axis' position and momentum on that axis'
/// grid points: `z^a p^b` becomes `diag(z^a) F^dagger diag(k^b) F` with `F`
/// the unitary DFT.
pub fn axis_operator(axis: &AxisSpec, a: &OperatorPolynomial) -> Result<DMatrix<Complex64>, GridError> {
    let (position, momentum) = (axis.label.position(), axis.label.momentum());
    let n = axis.points;
    let dft = DMatrix::from_fn(n, n, |m, j| {
        Complex64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (m * j) as f64 / n as f64)
    });
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    for (m, c) in a.terms() {
        if let Some((g, _)) = m.support().find(|(g, _)| *g != position && *g != momentum) {
            return Err(GridError::UnknownAxis(format!("{g} does not act on axis {}", axis.label)));
        }
        let e = m.exponent(position) as i32;
        let b = m.exponent(momentum) as i32;
        let diagonal = |values: Vec<f64>, power: i32| {
            DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                values.iter().map(|v| Complex64::new(v.powi(power), 0.0)),
            ))
        };
        let left = diagonal(axis.positions(), e);
        let middle = diagonal(axis.momenta(), b);
        let term = left * dft.adjoint() * middle * &dft;
        total += term * coeff::to_complex64(c);
    }
    Ok(total)
}
