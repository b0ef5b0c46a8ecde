use num::complex::Complex64;
use serde::Serialize;

use super::sample::Sampler;
use super::transform::Transforms;
use super::{boundary_mass, GridError, GridSpec, GridState, Representation};
use crate::algebra::{coeff, Monomial, OperatorPolynomial};

/// One monomial of the Koopmanian with its real coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitTerm {
    pub monomial: Monomial,
    pub coefficient: f64,
}

/// Terms applied together as one diagonal phase. `representation[a]` is
/// `None` when no term of the group touches axis `a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitGroup {
    pub representation: Vec<Option<Representation>>,
    pub terms: Vec<SplitTerm>,
}

impl SplitGroup {
    pub fn momentum_axes(&self) -> usize {
        self.representation.iter().filter(|r| **r == Some(Representation::Momentum)).count()
    }
}

/// Strang splitting of a Koopmanian into diagonal phase groups.
///
/// One step with groups `G1 .. Gm` applies
/// `G1(dt/2) .. G(m-1)(dt/2) Gm(dt) G(m-1)(dt/2) .. G1(dt/2)`, each factor
/// being `exp(-i dt theta)` with `theta` the group's symbol in its mixed
/// representation. Consecutive half steps of `G1` are fused.
#[derive(Clone, Debug)]
pub struct PropagatorPlan {
    spec: GridSpec,
    dt: f64,
    groups: Vec<SplitGroup>,
    /// Per group: the half-step and full-step phase arrays.
    phases: Vec<[Vec<Complex64>; 2]>,
    transforms: Transforms,
}

/// Which representation each axis needs for `m`.
pub(crate) fn requirements(m: &Monomial, spec: &GridSpec) -> Result<Vec<Option<Representation>>, GridError> {
    let mut needs = vec![None; spec.axes.len()];
    for (g, _) in m.support() {
        let axis = spec.axis_of(g)?;
        let rep = if g.is_position() { Representation::Position } else { Representation::Momentum };
        match needs[axis] {
            Some(existing) if existing != rep => return Err(GridError::NonSplittableTerm(m.to_string())),
            _ => needs[axis] = Some(rep),
        }
    }
    Ok(needs)
}

/// Full representation encoded as a bit mask, bit `a` set for momentum on axis `a`.
fn compatible(needs: &[Option<Representation>], mask: usize) -> bool {
    needs.iter().enumerate().all(|(a, need)| match need {
        None => true,
        Some(Representation::Position) => mask & (1 << a) == 0,
        Some(Representation::Momentum) => mask & (1 << a) != 0,
    })
}

/// Calls `f(flat, index)` for every grid point in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut index = vec![0; shape.len()];
    for flat in 0..total {
        f(flat, &index);
        for a in (0..shape.len()).rev() {
            index[a] += 1;
            if index[a] < shape[a] {
                break;
            }
            index[a] = 0;
        }
    }
}

/// Splits `k_op` into the fewest groups of terms that are simultaneously
/// diagonal, and tabulates their phases for time step `dt`.
///
/// Groups are ordered by how many axes they need in momentum representation,
/// so position-diagonal terms come first and momentum-diagonal terms last.
pub fn compile_splitting(k_op: &OperatorPolynomial, spec: &GridSpec, dt: f64) -> Result<PropagatorPlan, GridError> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(GridError::InvalidSpec(format!("time step {dt} must be finite and nonzero")));
    }
    let mut terms = Vec::new();
    for (m, c) in k_op.terms() {
        if !coeff::is_real(c) {
            return Err(GridError::NonHermitianTerm(format!("{} * {m}", coeff::format_coeff(c))));
        }
        let needs = requirements(m, spec)?;
        terms.push((SplitTerm { monomial: *m, coefficient: coeff::to_complex64(c).re }, needs));
    }

    let reps = 1usize << spec.axes.len();
    let cover = (1usize..1 << reps)
        .filter(|subset| {
            terms.iter().all(|(_, needs)| (0..reps).any(|r| subset & (1 << r) != 0 && compatible(needs, r)))
        })
        .min_by_key(|subset| (subset.count_ones(), *subset))
        .unwrap_or(1);

    let mut groups: Vec<(usize, SplitGroup)> = Vec::new();
    for (term, needs) in terms {
        let rep = (0..reps).find(|r| cover & (1 << r) != 0 && compatible(&needs, *r)).expect("cover");
        let slot = match groups.iter().position(|(r, _)| *r == rep) {
            Some(slot) => slot,
            None => {
                let representation = vec![None; spec.axes.len()];
                groups.push((rep, SplitGroup { representation, terms: Vec::new() }));
                groups.len() - 1
            }
        };
        let group = &mut groups[slot].1;
        for (a, need) in needs.iter().enumerate() {
            if need.is_some() {
                group.representation[a] = *need;
            }
        }
        group.terms.push(term);
    }
    groups.sort_by_key(|(rep, g)| (g.momentum_axes(), *rep));
    let groups: Vec<SplitGroup> = groups.into_iter().map(|(_, g)| g).collect();

    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut plan = PropagatorPlan {
        spec: spec.clone(),
        dt,
        phases: Vec::new(),
        groups,
        transforms: Transforms::new(spec, threads),
    };
    plan.tabulate_phases();
    Ok(plan)
}

impl PropagatorPlan {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn groups(&self) -> &[SplitGroup] {
        &self.groups
    }

    pub fn threads(&self) -> usize {
        self.transforms.threads()
    }

    /// Runs transforms and phase products on `threads` workers; `1` is the
    /// single-threaded deterministic mode. Results are identical for any
    /// thread count because every reduction runs sequentially.
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.transforms = Transforms::new(&self.spec, threads);
        self
    }

    /// The same splitting with step `-dt`, which undoes [`advance`](Self::advance).
    pub fn reversed(&self) -> Self {
        let mut plan = self.clone();
        plan.dt = -self.dt;
        for pair in &mut plan.phases {
            for phase in pair.iter_mut() {
                phase.iter_mut().for_each(|z| *z = z.conj());
            }
        }
        plan
    }

    pub(crate) fn transforms(&self) -> &Transforms {
        &self.transforms
    }

    fn tabulate_phases(&mut self) {
        let shape = self.spec.shape();
        let mut phases = Vec::with_capacity(self.groups.len());
        for group in &self.groups {
            let mut theta = vec![0.0; self.spec.len()];
            for term in &group.terms {
                let factors: Vec<Option<Vec<f64>>> = self
                    .spec
                    .axes
                    .iter()
                    .zip(&group.representation)
                    .map(|(axis, rep)| {
                        let rep = (*rep)?;
                        let generator = match rep {
                            Representation::Position => axis.label.position(),
                            Representation::Momentum => axis.label.momentum(),
                        };
                        let e = term.monomial.exponent(generator) as i32;
                        (e > 0).then(|| axis.values(rep).iter().map(|v| v.powi(e)).collect())
                    })
                    .collect();
                for_each_index(&shape, |flat, index| {
                    let value: f64 = factors.iter().zip(index).filter_map(|(f, &i)| f.as_ref().map(|f| f[i])).product();
                    theta[flat] += term.coefficient * value;
                });
            }
            let phase = |fraction: f64| -> Vec<Complex64> {
                theta.iter().map(|&t| Complex64::from_polar(1.0, -t * self.dt * fraction)).collect()
            };
            phases.push([phase(0.5), phase(1.0)]);
        }
        self.phases = phases;
    }

    fn apply(
        &self,
        data: &mut [Complex64],
        scratch: &mut Vec<Complex64>,
        current: &mut [Representation],
        group: usize,
        full: bool,
    ) {
        for (axis, need) in self.groups[group].representation.iter().enumerate() {
            if let Some(need) = *need {
                if current[axis] != need {
                    self.transforms.transform(data, scratch, axis, need);
                    current[axis] = need;
                }
            }
        }
        self.transforms.multiply(data, &self.phases[group][full as usize]);
    }

    /// Applies `steps` Strang steps in place; the state ends in the position representation.
    pub fn advance(&self, state: &mut GridState, steps: usize) -> Result<(), GridError> {
        if state.spec() != &self.spec {
            return Err(GridError::DimensionMismatch("state and plan use different grids".into()));
        }
        let m = self.groups.len();
        if steps == 0 || m == 0 {
            return Ok(());
        }
        let mut current = vec![Representation::Position; self.spec.axes.len()];
        let mut scratch = Vec::new();
        let data = state.amplitudes_mut();
        if m == 1 {
            for _ in 0..steps {
                self.apply(data, &mut scratch, &mut current, 0, true);
            }
        } else {
            self.apply(data, &mut scratch, &mut current, 0, false);
            for step in 0..steps {
                for g in 1..m - 1 {
                    self.apply(data, &mut scratch, &mut current, g, false);
                }
                self.apply(data, &mut scratch, &mut current, m - 1, true);
                for g in (1..m - 1).rev() {
                    self.apply(data, &mut scratch, &mut current, g, false);
                }
                self.apply(data, &mut scratch, &mut current, 0, step + 1 < steps);
            }
        }
        for (axis, rep) in current.iter_mut().enumerate() {
            if *rep == Representation::Momentum {
                self.transforms.transform(data, &mut scratch, axis, Representation::Position);
                *rep = Representation::Position;
            }
        }
        Ok(())
    }
}

/// Sampling and safety settings for [`evolve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Observers are recorded every `stride` steps and at the final step.
    pub stride: usize,
    /// Abort when the mass within two cells of any box face exceeds this.
    pub overflow_threshold: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { stride: 1, overflow_threshold: Some(1e-6) }
    }
}

/// Observer time series of an [`evolve`] run and its final state.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub times: Vec<f64>,
    /// `values[s][o]`: observer `o` at sample `s`.
    pub values: Vec<Vec<f64>>,
    /// Largest `|Im <A>|` seen for any observer.
    pub imaginary: f64,
    /// `sum |psi|^2 dV` at each sample.
    pub norms: Vec<f64>,
    pub state: GridState,
    pub steps: usize,
}

impl Evolution {
    /// Time series of observer `o`.
    pub fn column(&self, o: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[o]).collect()
    }

    /// Largest deviation of the norm from its initial value.
    pub fn norm_drift(&self) -> f64 {
        let first = self.norms[0];
        self.norms.iter().fold(0.0, |m, n| m.max((n - first).abs()))
    }
}

/// Evolves `state` to `t_final` (an integer number of plan steps), sampling
/// `<A>` for every observer at `t = 0`, every `stride` steps, and at the end.
pub fn evolve(
    mut state: GridState,
    plan: &PropagatorPlan,
    t_final: f64,
    observers: &[OperatorPolynomial],
    options: EvolveOptions,
) -> Result<Evolution, GridError> {
    let ratio = t_final / plan.dt();
    let steps = ratio.round();
    if !(steps >= 1.0 && (ratio - steps).abs() <= 1e-9 * steps) {
        return Err(GridError::StepMismatch { t_final, dt: plan.dt() });
    }
    let steps = steps as usize;
    let stride = options.stride.max(1);
    let mut run = Evolution {
        times: Vec::new(),
        values: Vec::new(),
        imaginary: 0.0,
        norms: Vec::new(),
        state: state.clone(),
        steps,
    };
    let mut done = 0;
    loop {
        let time = done as f64 * plan.dt();
        if let Some(threshold) = options.overflow_threshold {
            if let Some((axis, mass)) = boundary_mass(&state).into_iter().find(|(_, mass)| *mass > threshold) {
                return Err(GridError::BoxOverflow { axis, mass, time });
            }
        }
        let mut sampler = Sampler::new(&state, plan.transforms());
        let mut row = Vec::with_capacity(observers.len());
        for a in observers {
            let e = sampler.expectation(a)?;
            run.imaginary = run.imaginary.max(e.imaginary.abs());
            row.push(e.value);
        }
        run.times.push(time);
        run.values.push(row);
        run.norms.push(state.norm());
        if done == steps {
            break;
        }
        let chunk = stride.min(steps - done);
        plan.advance(&mut state, chunk)?;
        done += chunk;
    }
    run.state = state;
    Ok(run)
}
