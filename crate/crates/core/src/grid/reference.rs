use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{compile_splitting, gaussian_state, AxisLabel, GridError, GridSpec, Marginal};
use crate::algebra::{self, Generator, OperatorPolynomial};
use crate::benchmark;

/// Fixed Runge-Kutta step used to trace characteristics.
const RK_STEP: f64 = 0.01;

/// Transports a classical density along Hamilton's flow:
/// `f(z, t) = f0(Phi_{-t}(z))`, with the backward flow integrated by
/// classical fourth-order Runge-Kutta and `f0` interpolated bicubically
/// (periodic Catmull-Rom) between grid points.
pub fn characteristics_reference(
    f0: &Marginal,
    h_classical: &OperatorPolynomial,
    t: f64,
) -> Result<Marginal, GridError> {
    if f0.labels() != [AxisLabel::X, AxisLabel::Y] {
        return Err(GridError::UnknownAxis("characteristics need a density on the axes (x, y)".into()));
    }
    if [Generator::Q, Generator::P, Generator::Px, Generator::Py].iter().any(|&g| h_classical.contains(g)) {
        return Err(GridError::UnknownAxis(format!("Hamiltonian {h_classical} must depend on x and y only")));
    }
    let derivative = |v| algebra::partial_derivative(h_classical, v).expect("no shift generators");
    let (dh_dx, dh_dy) = (derivative(Generator::X), derivative(Generator::Y));
    let velocity = |x: f64, y: f64| {
        let mut values = [0.0; 6];
        values[Generator::X.basis_index()] = x;
        values[Generator::Y.basis_index()] = y;
        (dh_dy.eval_commuting(&values).re, -dh_dx.eval_commuting(&values).re)
    };

    let steps = ((t.abs() / RK_STEP).ceil() as usize).max(1);
    let h = -t / steps as f64;
    let (ax, ay) = (f0.axes[0], f0.axes[1]);
    let mut values = Vec::with_capacity(f0.values.len());
    for i in 0..ax.points {
        for j in 0..ay.points {
            let (mut x, mut y) = (ax.position_at(i), ay.position_at(j));
            if t != 0.0 {
                for _ in 0..steps {
                    let k1 = velocity(x, y);
                    let k2 = velocity(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
                    let k3 = velocity(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
                    let k4 = velocity(x + h * k3.0, y + h * k3.1);
                    x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                    y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                }
            }
            values.push(interpolate(f0, x, y));
        }
    }
    Ok(Marginal { axes: f0.axes.clone(), values })
}

fn catmull_rom(p: [f64; 4], s: f64) -> f64 {
    0.5 * (2.0 * p[1]
        + (p[2] - p[0]) * s
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * s * s
        + (3.0 * (p[1] - p[2]) + p[3] - p[0]) * s * s * s)
}

fn interpolate(f: &Marginal, x: f64, y: f64) -> f64 {
    let (ax, ay) = (f.axes[0], f.axes[1]);
    let (nx, ny) = (ax.points as i64, ay.points as i64);
    let u = (x + ax.half_extent) / ax.spacing();
    let v = (y + ay.half_extent) / ay.spacing();
    let (i0, j0) = (u.floor() as i64, v.floor() as i64);
    let (s, r) = (u - i0 as f64, v - j0 as f64);
    let at = |i: i64, j: i64| f.values[(i.rem_euclid(nx) * ny + j.rem_euclid(ny)) as usize];
    let mut rows = [0.0; 4];
    for (di, row) in rows.iter_mut().enumerate() {
        let i = i0 - 1 + di as i64;
        *row = catmull_rom([at(i, j0 - 1), at(i, j0), at(i, j0 + 1), at(i, j0 + 2)], r);
    }
    catmull_rom(rows, s)
}

/// [`period_residual_over`] for a single period.
pub fn period_residual(spec: &GridSpec, dt: f64) -> Result<f64, GridError> {
    period_residual_over(spec, dt, 1)
}

/// `||U(2 pi periods) psi - psi||` under the harmonic Liouvillian
/// `y p_x - x p_y` for a Gaussian centred at `(2, 0)` with widths
/// `1/sqrt(2)`. The Liouvillian has an integer spectrum, so the exact
/// propagator is the identity and the residual is pure splitting and
/// discretization error.
pub fn period_residual_over(spec: &GridSpec, dt: f64, periods: u32) -> Result<f64, GridError> {
    if spec.axes.len() != 2 || spec.axis_index(AxisLabel::X).is_none() || spec.axis_index(AxisLabel::Y).is_none() {
        return Err(GridError::InvalidSpec("the period check runs on the classical axes (x, y)".into()));
    }
    let span = 2.0 * PI * periods as f64;
    let steps = (span / dt).round();
    if !(steps >= 1.0 && (span / dt - steps).abs() <= 1e-9 * steps) {
        return Err(GridError::StepMismatch { t_final: span, dt });
    }
    let means: Vec<f64> = spec.axes.iter().map(|a| if a.label == AxisLabel::X { 2.0 } else { 0.0 }).collect();
    let start = gaussian_state(spec, &means, &[FRAC_1_SQRT_2; 2])?;
    let plan = compile_splitting(&benchmark::harmonic_liouvillian(), spec, dt)?;
    let mut state = start.clone();
    plan.advance(&mut state, steps as usize)?;
    state.distance(&start)
}
