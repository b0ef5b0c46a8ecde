use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GeneratorMatrix;

/// Eigenvalues here are O(1), so this sits far above rounding noise and far
/// below the coupling-induced splittings of interest.
pub const DEFAULT_CLUSTER_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub re: f64,
    pub im: f64,
    pub algebraic: usize,
    pub geometric: usize,
    /// Size of the largest Jordan block.
    pub jordan_chain: usize,
}

impl EigenCluster {
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_defective(&self) -> bool {
        self.jordan_chain > 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub basis: Vec<crate::algebra::Generator>,
    pub tolerance: f64,
    pub clusters: Vec<EigenCluster>,
    /// Clusters whose multiplicities could not be confirmed at `tolerance`.
    pub warnings: Vec<String>,
}

impl SpectrumReport {
    pub fn total_multiplicity(&self) -> usize {
        self.clusters.iter().map(|c| c.algebraic).sum()
    }

    /// Trajectories of `e^{Gt}` stay bounded iff every eigenvalue is on the
    /// imaginary axis and none is defective.
    pub fn bounded(&self) -> bool {
        self.clusters.iter().all(|c| c.re.abs() <= self.tolerance.sqrt() && !c.is_defective())
    }

    /// Defective eigenvalues on the imaginary axis: resonant, polynomial-in-time growth.
    pub fn secular(&self) -> bool {
        self.clusters.iter().any(|c| c.re.abs() <= self.tolerance.sqrt() && c.is_defective())
    }

    pub fn find(&self, eigenvalue: Complex64, radius: f64) -> Option<&EigenCluster> {
        self.clusters.iter().find(|c| (c.eigenvalue() - eigenvalue).norm() <= radius)
    }

    /// One line per cluster, e.g. `+1.000000i  alg 3  geo 1  chain 3`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.clusters {
            out.push_str(&format!(
                "{:+.9}{:+.9}i  algebraic {}  geometric {}  jordan chain {}\n",
                c.re, c.im, c.algebraic, c.geometric, c.jordan_chain
            ));
        }
        let verdict = if self.bounded() {
            "bounded"
        } else if self.secular() {
            "secular growth"
        } else {
            "unbounded"
        };
        out.push_str(&format!("dynamics: {verdict}\n"));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// Eigenvalue clusters of `G` with algebraic and geometric multiplicities and
/// the longest Jordan chain.
///
/// A Jordan block of size m splits its computed eigenvalues by roughly
/// `eps^(1/m)`, far more than `tol`, so clusters are formed coarsely first and
/// then confirmed: the cluster mean `lambda` is accurate to rounding, and a
/// genuine cluster of size `a` has `nullity((G - lambda I)^a) = a` at `tol`.
/// Clusters that fail the check are split with a smaller linking radius.
pub fn classify_spectrum(g: &GeneratorMatrix, tol: f64) -> SpectrumReport {
    assert!(tol > 0.0, "clustering tolerance must be positive");
    let n = g.dim();
    let eigenvalues = eigenvalues(&g.matrix);
    let scale = g.matrix.amax().max(1.0);
    let complex = g.matrix.map(|v| Complex64::new(v, 0.0));
    let radius = tol.powf(1.0 / n.max(1) as f64).max(tol) * scale;

    let mut clusters = Vec::new();
    let mut warnings = Vec::new();
    let mut pending = vec![(eigenvalues, radius)];
    while let Some((values, radius)) = pending.pop() {
        for group in link(&values, radius) {
            let members: Vec<Complex64> = group.iter().map(|&i| values[i]).collect();
            let mean = refine_center(&complex, members.iter().sum::<Complex64>() / members.len() as f64, members.len());
            let shifted = shift(&complex, mean);
            let confirmed = nullity(&power(&shifted, members.len()), tol, members.len()) == members.len();
            if !confirmed && members.len() > 1 && radius > tol * scale {
                pending.push((members, radius / 10.0));
                continue;
            }
            if !confirmed {
                warnings.push(format!(
                    "ill-conditioned cluster near {:.6}{:+.6}i (size {})",
                    mean.re,
                    mean.im,
                    members.len()
                ));
            }
            let algebraic = members.len();
            let geometric = nullity(&shifted, tol, 1).min(algebraic);
            let mut chain = algebraic;
            for m in 1..=algebraic {
                if nullity(&power(&shifted, m), tol, m) >= algebraic {
                    chain = m;
                    break;
                }
            }
            clusters.push(EigenCluster {
                re: clean(mean.re, tol),
                im: clean(mean.im, tol),
                algebraic,
                geometric,
                jordan_chain: chain,
            });
        }
    }
    clusters.sort_by(|a, b| b.im.total_cmp(&a.im).then(b.re.total_cmp(&a.re)));
    SpectrumReport { basis: g.basis.clone(), tolerance: tol, clusters, warnings }
}

/// Eigenvalues as roots of the characteristic polynomial.
///
/// The generators here are small and often defective, where QR iteration on
/// the Schur form converges very slowly; polynomial roots come back quickly
/// and the cluster centers are sharpened afterwards anyway.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    polynomial_roots(&characteristic_polynomial(m))
}

/// Coefficients `c_0..c_n` (ascending, monic) of `det(lambda I - m)`, by Faddeev-LeVerrier.
fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coefficients = vec![0.0; n + 1];
    coefficients[n] = 1.0;
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        acc = m * &acc;
        for i in 0..n {
            acc[(i, i)] += coefficients[n - k + 1];
        }
        coefficients[n - k] = -(m * &acc).trace() / k as f64;
    }
    coefficients
}

/// All roots of a monic polynomial by Aberth-Ehrlich iteration.
fn polynomial_roots(coefficients: &[f64]) -> Vec<Complex64> {
    let degree = coefficients.len() - 1;
    let bound = 1.0 + coefficients[..degree].iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / degree as f64))
        .collect();
    for _ in 0..1000 {
        let mut largest_step = 0.0_f64;
        for k in 0..degree {
            let z = roots[k];
            let (value, slope) = horner(coefficients, z);
            if value == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = value / slope;
            let repulsion: Complex64 = (0..degree).filter(|&j| j != k).map(|j| 1.0 / (z - roots[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                roots[k] -= step;
                largest_step = largest_step.max(step.norm());
            }
        }
        if largest_step <= 1e-15 * bound {
            break;
        }
    }
    roots
}

fn horner(coefficients: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut slope = Complex64::new(0.0, 0.0);
    for &c in coefficients.iter().rev() {
        slope = slope * z + value;
        value = value * z + c;
    }
    (value, slope)
}

/// Sharpens a cluster center to `tr(V^H G V) / a`, where `V` spans the
/// near-null space of `(G - lambda I)^a`. The invariant subspace is well
/// conditioned even when the individual eigenvalues are not.
fn refine_center(g: &DMatrix<Complex64>, mut lambda: Complex64, size: usize) -> Complex64 {
    let n = g.nrows();
    if size == n {
        return g.trace() / n as f64;
    }
    for _ in 0..3 {
        let svd = power(&shift(g, lambda), size).svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let basis = DMatrix::from_fn(n, size, |i, j| v_t[(order[j], i)].conj());
        lambda = (basis.adjoint() * g * &basis).trace() / size as f64;
    }
    lambda
}

fn clean(value: f64, tol: f64) -> f64 {
    if value.abs() < tol {
        0.0
    } else {
        value
    }
}

/// Single-linkage groups of points closer than `radius`.
fn link(values: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn shift(m: &DMatrix<Complex64>, lambda: Complex64) -> DMatrix<Complex64> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] -= lambda;
    }
    out
}

fn power(m: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Number of singular values of `m` below `tol * max(1, ||A||)^k`, where `m = A^k`.
fn nullity(m: &DMatrix<Complex64>, tol: f64, k: usize) -> usize {
    let singular = m.clone().svd(false, false).singular_values;
    let base = singular.iter().copied().fold(0.0_f64, f64::max).powf(1.0 / k as f64).max(1.0);
    let threshold = tol * base.powi(k as i32);
    singular.iter().filter(|&&s| s <= threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Generator;
    use crate::benchmark;
    use crate::moments::{derive_generator, hamiltonian_generator};
    use nalgebra::DVector;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn classical_normal_modes_are_simple() {
        let g = hamiltonian_generator(&benchmark::coupled_hamiltonian(0.2)).unwrap();
        let report = classify_spectrum(&g, DEFAULT_CLUSTER_TOLERANCE);
        assert_eq!(report.clusters.len(), 4);
        let expected = [1.2_f64.sqrt(), 0.8_f64.sqrt(), -(0.8_f64.sqrt()), -(1.2_f64.sqrt())];
        for (c, w) in report.clusters.iter().zip(expected) {
            assert!(close(c.im, w) && close(c.re, 0.0), "{c:?} vs {w}");
            assert_eq!((c.algebraic, c.geometric, c.jordan_chain), (1, 1, 1));
        }
        assert!(report.bounded());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn hybrid_has_defective_resonance() {
        let g = derive_generator(&benchmark::hybrid_koopmanian(0.2)).unwrap();
        let report = classify_spectrum(&g, DEFAULT_CLUSTER_TOLERANCE);
        assert_eq!(report.total_multiplicity(), 6);
        assert_eq!(report.clusters.len(), 2, "{}", report.summary());
        for c in &report.clusters {
            assert!(close(c.im.abs(), 1.0) && close(c.re, 0.0), "{c:?}");
            assert_eq!((c.algebraic, c.geometric, c.jordan_chain), (3, 1, 3));
        }
        assert!(report.secular());
        assert!(!report.bounded());
    }

    #[test]
    fn uncoupled_hybrid_is_diagonalizable() {
        let g = derive_generator(&benchmark::hybrid_koopmanian(0.0)).unwrap();
        let report = classify_spectrum(&g, DEFAULT_CLUSTER_TOLERANCE);
        assert_eq!(report.clusters.len(), 2);
        for c in &report.clusters {
            assert_eq!((c.algebraic, c.geometric, c.jordan_chain), (3, 3, 1));
        }
        assert!(report.bounded());
    }

    #[test]
    fn characteristic_polynomial_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(characteristic_polynomial(&m), vec![1.0, 0.0, 1.0]);
        let mut roots = eigenvalues(&m);
        roots.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((roots[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((roots[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn nilpotent_shear_is_unbounded() {
        let g = GeneratorMatrix {
            basis: vec![Generator::Q, Generator::P],
            matrix: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            affine: DVector::zeros(2),
        };
        let report = classify_spectrum(&g, DEFAULT_CLUSTER_TOLERANCE);
        assert_eq!(report.clusters.len(), 1);
        assert_eq!(report.clusters[0].jordan_chain, 2);
        assert!(!report.bounded());
    }
}
