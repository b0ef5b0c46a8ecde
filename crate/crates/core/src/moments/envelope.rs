use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DynamicsError;

const MIN_SAMPLES: usize = 32;
const MIN_PERIODS: usize = 10;
const RELATIVE_RESIDUAL_LIMIT: f64 = 0.01;

/// Polynomial model of an oscillation amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// 0 bounded, 1 linear growth, 2 quadratic growth.
    pub degree: usize,
    /// Ascending powers of `t`.
    pub coefficients: Vec<f64>,
    /// `||residual|| / ||envelope||` of the selected fit.
    pub residual: f64,
    /// Number of envelope samples used in the fit.
    pub samples: usize,
}

/// [`fit_envelope_with_period`] for unit-frequency oscillations.
pub fn fit_envelope(times: &[f64], values: &[f64]) -> Result<EnvelopeFit, DynamicsError> {
    fit_envelope_with_period(times, values, 2.0 * PI)
}

/// Amplitude growth law of an oscillating series.
///
/// The envelope is the largest `|value|` in each consecutive window of one
/// period. The first window is dropped as a transient. Polynomials of degree
/// 0, 1 and 2 are fitted by least squares and the lowest degree whose relative
/// residual is below 1% wins; if none is, degree 2 is reported with its residual.
pub fn fit_envelope_with_period(times: &[f64], values: &[f64], period: f64) -> Result<EnvelopeFit, DynamicsError> {
    if times.len() != values.len() {
        return Err(DynamicsError::InsufficientData("times and values differ in length".into()));
    }
    if times.len() < MIN_SAMPLES {
        return Err(DynamicsError::InsufficientData(format!("{} samples, need at least {MIN_SAMPLES}", times.len())));
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let windows = (span / period).floor() as usize;
    if windows < MIN_PERIODS {
        return Err(DynamicsError::InsufficientData(format!(
            "series spans {:.2} periods, need at least {MIN_PERIODS}",
            span / period
        )));
    }

    let mut peak_t = Vec::with_capacity(windows);
    let mut peak_v = Vec::with_capacity(windows);
    for w in 1..windows {
        let (lo, hi) = (t0 + w as f64 * period, t0 + (w + 1) as f64 * period);
        let best = times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= lo && **t < hi)
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        if let Some((t, v)) = best {
            peak_t.push(*t);
            peak_v.push(v.abs());
        }
    }
    if peak_t.len() < 3 {
        return Err(DynamicsError::InsufficientData("sampling too coarse to resolve the envelope".into()));
    }

    let norm = peak_v.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut last = None;
    for degree in 0..=2 {
        let (coefficients, residual) = least_squares(&peak_t, &peak_v, degree);
        let relative = if norm > 0.0 { residual / norm } else { 0.0 };
        let fit = EnvelopeFit { degree, coefficients, residual: relative, samples: peak_t.len() };
        if relative < RELATIVE_RESIDUAL_LIMIT {
            return Ok(fit);
        }
        last = Some(fit);
    }
    Ok(last.unwrap())
}

fn least_squares(t: &[f64], y: &[f64], degree: usize) -> (Vec<f64>, f64) {
    let design = DMatrix::from_fn(t.len(), degree + 1, |i, j| t[i].powi(j as i32));
    let rhs = DVector::from_column_slice(y);
    let solution = design.clone().svd(true, true).solve(&rhs, 1e-14).expect("SVD computed with both factors");
    let residual = (&design * &solution - rhs).norm();
    (solution.iter().copied().collect(), residual)
}

/// Angular frequencies of the `count` strongest local maxima of the DFT of a
/// uniformly sampled series, with the bin width `2 pi / (n dt)`.
pub fn spectral_peaks(values: &[f64], dt: f64, count: usize) -> (Vec<f64>, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut buffer: Vec<Complex64> = values.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buffer);
    let half: Vec<f64> = buffer[..n / 2].iter().map(|c| c.norm()).collect();
    let mut maxima: Vec<(usize, f64)> = (1..half.len().saturating_sub(1))
        .filter(|&i| half[i] > half[i - 1] && half[i] >= half[i + 1])
        .map(|i| (i, half[i]))
        .collect();
    maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
    let bin = 2.0 * PI / (n as f64 * dt);
    let mut peaks: Vec<f64> = maxima.iter().take(count).map(|&(i, _)| i as f64 * bin).collect();
    peaks.sort_by(f64::total_cmp);
    (peaks, bin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let times: Vec<f64> = (0..=10_000).map(|i| i as f64 * 0.01).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        (times, values)
    }

    #[test]
    fn bounded_linear_quadratic() {
        let (t, v) = series(f64::sin);
        assert_eq!(fit_envelope(&t, &v).unwrap().degree, 0);
        let (t, v) = series(|t| t * t.sin());
        let fit = fit_envelope(&t, &v).unwrap();
        assert_eq!(fit.degree, 1);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-2);
        let (t, v) = series(|t| t * t * t.sin());
        assert_eq!(fit_envelope(&t, &v).unwrap().degree, 2);
    }

    #[test]
    fn short_series_is_rejected() {
        let (t, v) = series(f64::sin);
        assert!(matches!(fit_envelope(&t[..20], &v[..20]), Err(DynamicsError::InsufficientData(_))));
        assert!(matches!(fit_envelope(&t[..3000], &v[..3000]), Err(DynamicsError::InsufficientData(_))));
    }

    #[test]
    fn two_tone_peaks() {
        let dt = 0.1;
        let v: Vec<f64> = (0..2000).map(|i| (1.3 * i as f64 * dt).cos() + (0.7 * i as f64 * dt).cos()).collect();
        let (peaks, bin) = spectral_peaks(&v, dt, 2);
        assert!((peaks[0] - 0.7).abs() <= bin);
        assert!((peaks[1] - 1.3).abs() <= bin);
    }
}
