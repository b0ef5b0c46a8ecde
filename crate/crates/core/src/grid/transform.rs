use std::fmt;
use std::sync::Arc;

use num::complex::Complex64;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, Representation};

/// Unitary per-axis DFTs plus the worker pool they run on.
///
/// Only elementwise work and independent FFT lines are spread over threads,
/// so results do not depend on the thread count.
#[derive(Clone)]
pub(crate) struct Transforms {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    pool: Arc<ThreadPool>,
    threads: usize,
}

impl fmt::Debug for Transforms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transforms").field("shape", &self.shape).field("threads", &self.threads).finish()
    }
}

impl Transforms {
    pub fn new(spec: &GridSpec, threads: usize) -> Self {
        let threads = threads.max(1);
        let mut planner = FftPlanner::new();
        let shape = spec.shape();
        Self {
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
            shape,
            pool: Arc::new(ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")),
            threads,
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Moves `axis` of `data` into representation `to`, assuming it is in the other one.
    pub fn transform(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>, axis: usize, to: Representation) {
        let n = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let fft = match to {
            Representation::Momentum => &self.forward[axis],
            Representation::Position => &self.inverse[axis],
        };
        let scale = 1.0 / (n as f64).sqrt();
        self.pool.install(|| {
            if inner == 1 {
                data.par_chunks_mut(n).for_each_init(
                    || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                    |work, line| {
                        fft.process_with_scratch(line, work);
                        line.iter_mut().for_each(|z| *z *= scale);
                    },
                );
                return;
            }
            // Gather lines of `axis` into contiguous rows, transform, scatter back.
            scratch.resize(data.len(), Complex64::new(0.0, 0.0));
            let block = n * inner;
            let source: &[Complex64] = data;
            scratch.par_chunks_mut(n).enumerate().for_each(|(line, row)| {
                let (outer, column) = (line / inner, line % inner);
                let base = outer * block + column;
                for (r, slot) in row.iter_mut().enumerate() {
                    *slot = source[base + r * inner];
                }
            });
            scratch.par_chunks_mut(n).for_each_init(
                || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                |work, line| {
                    fft.process_with_scratch(line, work);
                    line.iter_mut().for_each(|z| *z *= scale);
                },
            );
            let lines: &[Complex64] = scratch;
            data.par_chunks_mut(inner).enumerate().for_each(|(row, out)| {
                let (outer, r) = (row / n, row % n);
                for (column, slot) in out.iter_mut().enumerate() {
                    *slot = lines[(outer * inner + column) * n + r];
                }
            });
        });
    }

    /// `data *= phase`, elementwise.
    pub fn multiply(&self, data: &mut [Complex64], phase: &[Complex64]) {
        const CHUNK: usize = 4096;
        self.pool.install(|| {
            data.par_chunks_mut(CHUNK).zip(phase.par_chunks(CHUNK)).for_each(|(d, p)| {
                d.iter_mut().zip(p).for_each(|(a, b)| *a *= b);
            });
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AxisLabel, GridSpec};

    fn sample(len: usize) -> Vec<Complex64> {
        (0..len).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect()
    }

    #[test]
    fn round_trip_every_axis() {
        let spec = GridSpec::uniform(&[AxisLabel::X, AxisLabel::Y, AxisLabel::Q], 8, 4.0).unwrap();
        let transforms = Transforms::new(&spec, 2);
        let original = sample(spec.len());
        let mut scratch = Vec::new();
        for axis in 0..3 {
            let mut data = original.clone();
            transforms.transform(&mut data, &mut scratch, axis, Representation::Momentum);
            let energy: f64 = data.iter().map(|z| z.norm_sqr()).sum();
            let expected: f64 = original.iter().map(|z| z.norm_sqr()).sum();
            assert!((energy - expected).abs() < 1e-12 * expected);
            transforms.transform(&mut data, &mut scratch, axis, Representation::Position);
            let error = data.iter().zip(&original).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(error < 1e-14, "axis {axis}: {error}");
        }
    }

    #[test]
    fn middle_axis_matches_direct_dft() {
        let spec = GridSpec::uniform(&[AxisLabel::X, AxisLabel::Y, AxisLabel::Q], 8, 4.0).unwrap();
        let transforms = Transforms::new(&spec, 1);
        let original = sample(spec.len());
        let mut data = original.clone();
        transforms.transform(&mut data, &mut Vec::new(), 1, Representation::Momentum);
        let (a, c, k) = (3, 5, 2);
        let direct: Complex64 = (0..8)
            .map(|j| {
                let angle = -2.0 * std::f64::consts::PI * (j * k) as f64 / 8.0;
                original[a * 64 + j * 8 + c] * Complex64::from_polar(1.0, angle)
            })
            .sum::<Complex64>()
            / 8f64.sqrt();
        assert!((data[a * 64 + k * 8 + c] - direct).norm() < 1e-14);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = GridSpec::uniform(&[AxisLabel::X, AxisLabel::Y, AxisLabel::Q], 16, 4.0).unwrap();
        let mut one = sample(spec.len());
        let mut four = one.clone();
        let mut scratch = Vec::new();
        for axis in 0..3 {
            Transforms::new(&spec, 1).transform(&mut one, &mut scratch, axis, Representation::Momentum);
            Transforms::new(&spec, 4).transform(&mut four, &mut scratch, axis, Representation::Momentum);
        }
        assert_eq!(one, four);
    }
}
