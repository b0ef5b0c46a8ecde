//! Split-operator evolution of `psi(x, y, q)` on a periodic grid.
//!
//! The classical oscillator lives on the `(x, y)` axes as a Koopman-von
//! Neumann wave function with `|psi|^2 = f`; the quantum oscillator lives on
//! the `q` axis. Each axis is either in the position representation, where
//! `x`, `y` or `q` act by multiplication, or in the momentum representation,
//! where `p_x`, `p_y` or `p` do. A Koopmanian whose monomials never need both
//! representations of one axis is propagated exactly term group by term
//! group with Strang splitting.

mod io;
mod plan;
mod reference;
mod sample;
mod transform;

pub use io::{read_snapshot, write_snapshot, RunManifest};
pub use plan::{compile_splitting, evolve, Evolution, EvolveOptions, PropagatorPlan, SplitGroup, SplitTerm};
pub use reference::{characteristics_reference, period_residual, period_residual_over};
pub use sample::{axis_operator, grid_expectation, Expectation};

use std::fmt;

use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Generator;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("state does not fit in the box on axis {axis}: |mean| + 4 width = {reach} >= L = {half_extent}")]
    OutOfBox { axis: AxisLabel, reach: f64, half_extent: f64 },
    #[error("term {0} needs both representations of one axis")]
    NonSplittableTerm(String),
    #[error("term {0} has a complex coefficient")]
    NonHermitianTerm(String),
    #[error("unknown axis: {0}")]
    UnknownAxis(String),
    #[error("t_final = {t_final} is not a positive integer multiple of dt = {dt}")]
    StepMismatch { t_final: f64, dt: f64 },
    #[error("box overflow at t = {time}: mass {mass:e} within 2 cells of the {axis} boundary")]
    BoxOverflow { axis: AxisLabel, mass: f64, time: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

/// Grid axis, named after its position generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    X,
    Y,
    Q,
}

impl AxisLabel {
    pub fn name(self) -> &'static str {
        match self {
            AxisLabel::X => "x",
            AxisLabel::Y => "y",
            AxisLabel::Q => "q",
        }
    }

    pub fn from_name(name: &str) -> Option<AxisLabel> {
        match name {
            "x" => Some(AxisLabel::X),
            "y" => Some(AxisLabel::Y),
            "q" => Some(AxisLabel::Q),
            _ => None,
        }
    }

    /// Multiplication operator on this axis.
    pub fn position(self) -> Generator {
        match self {
            AxisLabel::X => Generator::X,
            AxisLabel::Y => Generator::Y,
            AxisLabel::Q => Generator::Q,
        }
    }

    /// `-i d/dz` on this axis.
    pub fn momentum(self) -> Generator {
        self.position().conjugate()
    }

    /// Axis on which `g` acts.
    pub fn of(g: Generator) -> AxisLabel {
        let position = if g.is_position() { g } else { g.conjugate() };
        match position {
            Generator::X => AxisLabel::X,
            Generator::Y => AxisLabel::Y,
            _ => AxisLabel::Q,
        }
    }
}

impl fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Representation in which an axis is currently stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Position,
    Momentum,
}

/// One periodic axis: `N` points on `[-L, L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub label: AxisLabel,
    pub half_extent: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(label: AxisLabel, half_extent: f64, points: usize) -> Self {
        Self { label, half_extent, points }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    pub fn momentum_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_extent
    }

    pub fn position_at(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    /// Wave number of FFT bin `i`, so `0, dk, ..., (N/2 - 1) dk, -N/2 dk, ..., -dk`.
    pub fn momentum_at(&self, i: usize) -> f64 {
        let n = self.points as i64;
        let m = if (i as i64) < n / 2 { i as i64 } else { i as i64 - n };
        m as f64 * self.momentum_spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.position_at(i)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.momentum_at(i)).collect()
    }

    /// Coordinate values of `g` (this axis' position or momentum) per grid index.
    fn values(&self, representation: Representation) -> Vec<f64> {
        match representation {
            Representation::Position => self.positions(),
            Representation::Momentum => self.momenta(),
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        if !(self.half_extent > 0.0 && self.half_extent.is_finite()) {
            return Err(GridError::InvalidSpec(format!("axis {}: L must be positive", self.label)));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(GridError::InvalidSpec(format!(
                "axis {}: N = {} must be a power of two and at least 8",
                self.label, self.points
            )));
        }
        Ok(())
    }
}

/// Ordered axes of a grid; data are stored row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Result<Self, GridError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(GridError::InvalidSpec("between one and three axes are required".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|b| b.label == a.label) {
                return Err(GridError::InvalidSpec(format!("axis {} appears twice", a.label)));
            }
        }
        Ok(Self { axes })
    }

    /// The same `N` and `L` on every listed axis.
    pub fn uniform(labels: &[AxisLabel], points: usize, half_extent: f64) -> Result<Self, GridError> {
        Self::new(labels.iter().map(|&l| AxisSpec::new(l, half_extent, points)).collect())
    }

    /// Axes `(x, y, q)` for the hybrid benchmark.
    pub fn hybrid(points: usize, half_extent: f64) -> Result<Self, GridError> {
        Self::uniform(&[AxisLabel::X, AxisLabel::Y, AxisLabel::Q], points, half_extent)
    }

    /// Axes `(x, y)` for a purely classical run.
    pub fn classical(points: usize, half_extent: f64) -> Result<Self, GridError> {
        Self::uniform(&[AxisLabel::X, AxisLabel::Y], points, half_extent)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(AxisSpec::spacing).product()
    }

    pub fn axis_index(&self, label: AxisLabel) -> Option<usize> {
        self.axes.iter().position(|a| a.label == label)
    }

    pub fn axis(&self, label: AxisLabel) -> Option<&AxisSpec> {
        self.axes.iter().find(|a| a.label == label)
    }

    pub(crate) fn axis_of(&self, g: Generator) -> Result<usize, GridError> {
        let label = AxisLabel::of(g);
        self.axis_index(label)
            .ok_or_else(|| GridError::UnknownAxis(format!("{g} acts on axis {label}, which this grid lacks")))
    }
}

/// Complex amplitudes over a grid in the position representation,
/// normalized so that `sum |psi|^2 dV = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    spec: GridSpec,
    data: Vec<Complex64>,
    initial_norm: f64,
}

impl GridState {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(spec: GridSpec, data: Vec<Complex64>) -> Result<Self, GridError> {
        if data.len() != spec.len() {
            return Err(GridError::DimensionMismatch(format!(
                "{} amplitudes for a grid of {} points",
                data.len(),
                spec.len()
            )));
        }
        let mut state = Self { spec, data, initial_norm: 0.0 };
        state.initial_norm = state.norm();
        Ok(state)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.data
    }

    /// `sum |psi|^2 dV`.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spec.cell_volume()
    }

    /// Norm recorded when the state was built.
    pub fn initial_norm(&self) -> f64 {
        self.initial_norm
    }

    /// `|norm - initial norm|`.
    pub fn norm_drift(&self) -> f64 {
        (self.norm() - self.initial_norm).abs()
    }

    pub fn normalize(&mut self) {
        let scale = 1.0 / self.norm().sqrt();
        self.data.iter_mut().for_each(|a| *a *= scale);
        self.initial_norm = self.norm();
    }

    /// `<self, other> = sum conj(self) other dV`.
    pub fn inner(&self, other: &GridState) -> Result<Complex64, GridError> {
        if self.spec != other.spec {
            return Err(GridError::DimensionMismatch("states live on different grids".into()));
        }
        let sum: Complex64 = self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum();
        Ok(sum * self.spec.cell_volume())
    }

    /// `|<self, other>|^2` for normalized states.
    pub fn fidelity(&self, other: &GridState) -> Result<f64, GridError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `||self - other||` in the grid `L^2` norm.
    pub fn distance(&self, other: &GridState) -> Result<f64, GridError> {
        if self.spec != other.spec {
            return Err(GridError::DimensionMismatch("states live on different grids".into()));
        }
        let sum: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((sum * self.spec.cell_volume()).sqrt())
    }
}

/// Product of per-axis Gaussians `exp(-(z - mean)^2 / (4 width^2))`, so that
/// `|psi|^2` has standard deviation `width` on each axis. On the classical
/// axes this is `sqrt(f)` for a Gaussian phase-space density; on `q` it is a
/// minimum-uncertainty packet when `width = 1/sqrt(2)`.
pub fn gaussian_state(spec: &GridSpec, means: &[f64], widths: &[f64]) -> Result<GridState, GridError> {
    let n = spec.axes.len();
    if means.len() != n || widths.len() != n {
        return Err(GridError::DimensionMismatch(format!(
            "{} means and {} widths for {n} axes",
            means.len(),
            widths.len()
        )));
    }
    let mut factors = Vec::with_capacity(n);
    for ((axis, &mean), &width) in spec.axes.iter().zip(means).zip(widths) {
        if width.is_nan() || width <= 0.0 {
            return Err(GridError::InvalidSpec(format!("axis {}: width must be positive", axis.label)));
        }
        let reach = mean.abs() + 4.0 * width;
        if reach >= axis.half_extent {
            return Err(GridError::OutOfBox { axis: axis.label, reach, half_extent: axis.half_extent });
        }
        let factor: Vec<f64> =
            axis.positions().iter().map(|z| (-(z - mean).powi(2) / (4.0 * width * width)).exp()).collect();
        factors.push(factor);
    }
    let shape = spec.shape();
    let data = (0..spec.len())
        .map(|flat| {
            let value: f64 = multi_index(flat, &shape).iter().zip(&factors).map(|(&i, f)| f[i]).product();
            Complex64::new(value, 0.0)
        })
        .collect();
    let mut state = GridState::from_amplitudes(spec.clone(), data)?;
    state.normalize();
    Ok(state)
}

/// Row-major multi-index of a flat offset.
pub(crate) fn multi_index(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut index = vec![0; shape.len()];
    for (slot, &n) in index.iter_mut().zip(shape).rev() {
        *slot = flat % n;
        flat /= n;
    }
    index
}

/// A real density over a subset of the grid axes; `sum values * dV = 1` for a
/// normalized state.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub axes: Vec<AxisSpec>,
    pub values: Vec<f64>,
}

impl Marginal {
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(AxisSpec::spacing).product()
    }

    /// `sum values * dV`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `sum |self - other| dV`.
    pub fn l1_distance(&self, other: &Marginal) -> Result<f64, GridError> {
        if self.axes != other.axes {
            return Err(GridError::DimensionMismatch("marginals live on different axes".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_volume())
    }

    pub fn labels(&self) -> Vec<AxisLabel> {
        self.axes.iter().map(|a| a.label).collect()
    }
}

/// `|psi|^2` integrated over every axis not in `keep`. Kept axes stay in grid order.
pub fn marginal_density(state: &GridState, keep: &[AxisLabel]) -> Result<Marginal, GridError> {
    let spec = state.spec();
    for (i, label) in keep.iter().enumerate() {
        if spec.axis_index(*label).is_none() {
            return Err(GridError::UnknownAxis(format!("axis {label} is not part of the grid")));
        }
        if keep[..i].contains(label) {
            return Err(GridError::UnknownAxis(format!("axis {label} requested twice")));
        }
    }
    let kept: Vec<usize> = (0..spec.axes.len()).filter(|&i| keep.contains(&spec.axes[i].label)).collect();
    let axes: Vec<AxisSpec> = kept.iter().map(|&i| spec.axes[i]).collect();
    let dropped_volume: f64 = spec.axes.iter().filter(|a| !keep.contains(&a.label)).map(AxisSpec::spacing).product();
    let kept_shape: Vec<usize> = axes.iter().map(|a| a.points).collect();
    let shape = spec.shape();
    let mut values = vec![0.0; kept_shape.iter().product()];
    for (flat, a) in state.amplitudes().iter().enumerate() {
        let index = multi_index(flat, &shape);
        let target = kept.iter().fold(0, |acc, &axis| acc * shape[axis] + index[axis]);
        values[target] += a.norm_sqr();
    }
    values.iter_mut().for_each(|v| *v *= dropped_volume);
    Ok(Marginal { axes, values })
}

/// Probability within two cells of either face of each axis, in the position representation.
pub fn boundary_mass(state: &GridState) -> Vec<(AxisLabel, f64)> {
    let spec = state.spec();
    let shape = spec.shape();
    let mut mass = vec![0.0; shape.len()];
    for (flat, a) in state.amplitudes().iter().enumerate() {
        let index = multi_index(flat, &shape);
        for (axis, &i) in index.iter().enumerate() {
            if i < 2 || i + 2 >= shape[axis] {
                mass[axis] += a.norm_sqr();
            }
        }
    }
    let volume = spec.cell_volume();
    spec.axes.iter().zip(mass).map(|(a, m)| (a.label, m * volume)).collect()
}

/// Reduced density matrix of the quantum axis on its grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub axis: AxisSpec,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let hermitian = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = hermitian.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Diagonal `rho_ii`: the probability of grid cell `i`.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }
}

/// `rho_ij = sum_c psi(c, q_i) conj(psi(c, q_j)) dA dq` over the classical
/// cells `c`, so that `tr rho = 1`.
pub fn reduced_quantum_density(state: &GridState) -> Result<DensityMatrix, GridError> {
    let spec = state.spec();
    let q = spec.axis_index(AxisLabel::Q).ok_or_else(|| GridError::UnknownAxis("the grid has no q axis".into()))?;
    let axis = spec.axes[q];
    let nq = axis.points;
    let rest = spec.len() / nq;
    let shape = spec.shape();
    let mut columns = DMatrix::<Complex64>::zeros(nq, rest);
    for (flat, a) in state.amplitudes().iter().enumerate() {
        let index = multi_index(flat, &shape);
        let other = (0..shape.len()).filter(|&i| i != q).fold(0, |acc, i| acc * shape[i] + index[i]);
        columns[(index[q], other)] = *a;
    }
    let scale = Complex64::new(spec.cell_volume(), 0.0);
    let matrix = &columns * columns.adjoint() * scale;
    Ok(DensityMatrix { axis, matrix })
}
