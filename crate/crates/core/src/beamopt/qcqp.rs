//! Pattern quadratic programs: the shared problem container, the projected
//! block-ascent solver, and the exhaustive quantized-grid oracle.
//!
//! The optimization variable is the holographic pattern ψ ∈ [0, 1]^N under
//! the per-row leakage caps; objective and side constraints are real
//! symmetric quadratic forms `ψᵀQψ`, typically assembled from complex field
//! correlations `|cᵀψ|² = ψᵀ·Re(c̄·cᵀ)·ψ`.

use crate::beamopt::engine::{
    ascend, penalized_ascend, Ascent, AscentOptions, PatternFeasibleSet, PenaltySchedule,
    SlackConstraint,
};
use crate::beamopt::report::{Feasibility, Solution, SolveReport};
use crate::error::Error;
use crate::rhs::{ApertureWindow, HolographicPattern, RhsConfig};
use crate::rng;
use crate::scalar::{lit, Cplx, Real};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `ψᵀQψ ≥ bound`.
    Ge,
    /// `ψᵀQψ ≤ bound`.
    Le,
}

/// One quadratic side constraint.
#[derive(Debug, Clone)]
pub struct QuadConstraint<T: Real> {
    pub form: DMatrix<T>,
    pub sense: Sense,
    pub bound: T,
}

impl<T: Real> QuadConstraint<T> {
    /// Normalized slack, non-negative iff satisfied. Infinite bounds make
    /// the constraint vacuous.
    pub fn slack(&self, psi: &DVector<T>) -> T {
        let scale = T::ONE.max(self.bound.abs());
        if self.bound == T::INFINITY {
            return match self.sense {
                Sense::Le => T::INFINITY,
                Sense::Ge => -T::INFINITY,
            };
        }
        if self.bound == -T::INFINITY {
            return match self.sense {
                Sense::Le => -T::INFINITY,
                Sense::Ge => T::INFINITY,
            };
        }
        let value = quad_value(&self.form, psi);
        match self.sense {
            Sense::Ge => (value - self.bound) / scale,
            Sense::Le => (self.bound - value) / scale,
        }
    }

    fn slack_gradient(&self, psi: &DVector<T>) -> DVector<T> {
        if self.bound.abs() == T::INFINITY {
            return DVector::from_element(psi.len(), T::ZERO);
        }
        let scale = T::ONE.max(self.bound.abs());
        let g = quad_gradient(&self.form, psi);
        match self.sense {
            Sense::Ge => g.map(|v| v / scale),
            Sense::Le => g.map(|v| -v / scale),
        }
    }
}

/// Pattern QCQP: maximize `ψᵀQψ` over the box and leakage caps, subject to
/// quadratic side constraints.
#[derive(Debug, Clone)]
pub struct QcqpSpec<T: Real> {
    pub cfg: RhsConfig<T>,
    pub window: ApertureWindow,
    pub objective: DMatrix<T>,
    pub constraints: Vec<QuadConstraint<T>>,
}

impl<T: Real> QcqpSpec<T> {
    pub fn new(cfg: RhsConfig<T>, window: ApertureWindow, objective: DMatrix<T>) -> Self {
        QcqpSpec {
            cfg,
            window,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, form: DMatrix<T>, sense: Sense, bound: T) -> Self {
        self.constraints.push(QuadConstraint { form, sense, bound });
        self
    }

    pub fn dim(&self) -> usize {
        self.cfg.element_count()
    }

    pub fn objective_value(&self, psi: &DVector<T>) -> T {
        quad_value(&self.objective, psi)
    }

    /// Minimum normalized slack across side constraints (+∞ when none).
    pub fn min_constraint_slack(&self, psi: &DVector<T>) -> T {
        self.constraints
            .iter()
            .map(|c| c.slack(psi))
            .fold(T::INFINITY, T::min)
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.window.validate(&self.cfg)?;
        let n = self.dim();
        if self.objective.nrows() != n || self.objective.ncols() != n {
            return Err(Error::argument("objective form must be N×N"));
        }
        for c in &self.constraints {
            if c.form.nrows() != n || c.form.ncols() != n {
                return Err(Error::argument("constraint form must be N×N"));
            }
        }
        Ok(())
    }
}

/// `ψᵀQψ` for a symmetric form.
pub fn quad_value<T: Real>(q: &DMatrix<T>, psi: &DVector<T>) -> T {
    let mut acc = T::ZERO;
    for j in 0..q.ncols() {
        let pj = psi[j];
        if pj == T::ZERO {
            continue;
        }
        let mut col = T::ZERO;
        for i in 0..q.nrows() {
            col += psi[i] * q[(i, j)];
        }
        acc += col * pj;
    }
    acc
}

/// Gradient `(Q + Qᵀ)ψ = 2Qψ` of a symmetric form.
pub fn quad_gradient<T: Real>(q: &DMatrix<T>, psi: &DVector<T>) -> DVector<T> {
    let mut g = DVector::from_element(psi.len(), T::ZERO);
    for j in 0..q.ncols() {
        let pj = psi[j];
        if pj == T::ZERO {
            continue;
        }
        for i in 0..q.nrows() {
            g[i] += lit::<T>(2.0) * q[(i, j)] * pj;
        }
    }
    g
}

/// The real symmetric form of `|cᵀψ|²` for real ψ: `Re(c̄·cᵀ)`.
pub fn correlation_form<T: Real>(c: &DVector<Cplx<T>>) -> DMatrix<T> {
    let n = c.len();
    DMatrix::from_fn(n, n, |i, j| (c[i].conj() * c[j]).re)
}

/// Adds `weight·Re(c̄·cᵀ)` into an accumulator form.
pub fn add_correlation_form<T: Real>(acc: &mut DMatrix<T>, c: &DVector<Cplx<T>>, weight: T) {
    for i in 0..c.len() {
        for j in 0..c.len() {
            acc[(i, j)] += weight * (c[i].conj() * c[j]).re;
        }
    }
}

/// Solver controls shared by the pattern optimizers.
#[derive(Debug, Clone)]
pub struct SolveOptions<T: Real> {
    pub ascent: AscentOptions<T>,
    pub penalty: PenaltySchedule<T>,
    /// Extra deterministic starting points tried before the random restarts.
    pub warm_starts: Vec<DVector<T>>,
    /// Exit feasibility tolerance on normalized constraint slack.
    pub tol: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            ascent: AscentOptions::default(),
            penalty: PenaltySchedule::default(),
            warm_starts: Vec::new(),
            tol: lit(1e-6),
        }
    }
}

pub(crate) struct RestartResult<T: Real> {
    pub index: usize,
    pub psi: DVector<T>,
    pub objective: T,
    pub trace: Vec<T>,
    pub iterates: Vec<DVector<T>>,
    pub feasible: bool,
    pub found_start: bool,
}

/// Solves the pattern QCQP by best-of-restarts projected ascent with
/// penalty-handled side constraints; deterministic for a given seed.
pub fn solve_pattern_qcqp<T: Real>(
    spec: &QcqpSpec<T>,
    restarts: usize,
    seed: u64,
    opts: &SolveOptions<T>,
) -> Result<SolveReport<T>> {
    solve_pattern_qcqp_full(spec, restarts, seed, opts).map(|(report, _)| report)
}

/// Like [`solve_pattern_qcqp`] but also returns every accepted iterate of
/// every restart as a pattern, for feasibility audits.
pub fn solve_pattern_qcqp_with_iterates<T: Real>(
    spec: &QcqpSpec<T>,
    restarts: usize,
    seed: u64,
    opts: &SolveOptions<T>,
) -> Result<(SolveReport<T>, Vec<HolographicPattern<T>>)> {
    let mut rec = opts.clone();
    rec.ascent.record_iterates = true;
    let (report, results) = solve_pattern_qcqp_full(spec, restarts, seed, &rec)?;
    let mut collected = Vec::new();
    for r in results {
        collected.extend(
            r.iterates
                .into_iter()
                .map(|v| HolographicPattern::new(v.iter().copied().collect())),
        );
    }
    Ok((report, collected))
}

fn solve_pattern_qcqp_full<T: Real>(
    spec: &QcqpSpec<T>,
    restarts: usize,
    seed: u64,
    opts: &SolveOptions<T>,
) -> Result<(SolveReport<T>, Vec<RestartResult<T>>)> {
    spec.validate()?;
    let restarts = restarts.max(1);
    let feasible_set = PatternFeasibleSet::new(&spec.cfg, &spec.window);

    // Deterministic warm starts from the dominant eigenvector of the
    // objective form (both sign patterns), after the user-provided ones.
    let mut opts = opts.clone();
    for v in eigen_starts(&spec.objective) {
        opts.warm_starts.push(v);
    }
    let opts = &opts;

    // Random restarts come first; warm starts are appended as extra runs.
    let warm_base = restarts;
    let run_one = |index: usize| -> RestartResult<T> {
        let mut g = rng::child(seed, index as u64);
        let project = |psi: &mut DVector<T>| feasible_set.project(psi);

        // Feasibility phase: lift the minimum constraint slack above zero
        // from a candidate start.
        let seek_feasible = |x0: DVector<T>| -> (DVector<T>, bool) {
            if spec.constraints.is_empty() {
                return (x0, true);
            }
            if spec.min_constraint_slack(&x0) >= T::ZERO {
                return (x0, true);
            }
            let min_slack = |v: &DVector<T>| spec.min_constraint_slack(v);
            let min_slack_grad = |v: &DVector<T>| {
                let (mut best, mut arg) = (T::INFINITY, 0usize);
                for (i, c) in spec.constraints.iter().enumerate() {
                    let s = c.slack(v);
                    if s < best {
                        best = s;
                        arg = i;
                    }
                }
                spec.constraints[arg].slack_gradient(v)
            };
            let feas = ascend(
                &Ascent {
                    objective: &min_slack,
                    gradient: &min_slack_grad,
                    project: &project,
                    guard: None,
                },
                x0,
                &opts.ascent,
            );
            let ok = feas.objective >= T::ZERO;
            (feas.x, ok)
        };

        let (x0, found_start) = if index >= warm_base {
            let mut w = opts.warm_starts[index - warm_base].clone();
            project(&mut w);
            seek_feasible(w)
        } else {
            // Up to 10 random draws looking for a feasible start.
            let draws = if spec.constraints.is_empty() { 1 } else { 10 };
            let mut picked = None;
            for _ in 0..draws {
                let mut x0 = DVector::from_fn(spec.dim(), |_, _| rng::uniform::<T>(&mut g));
                project(&mut x0);
                let (x, ok) = seek_feasible(x0);
                if ok {
                    picked = Some((x, true));
                    break;
                }
                if picked.is_none() {
                    picked = Some((x, false));
                }
            }
            picked.expect("at least one draw")
        };

        let objective = |v: &DVector<T>| spec.objective_value(v);
        let gradient = |v: &DVector<T>| quad_gradient(&spec.objective, v);
        let slacks: Vec<_> = spec
            .constraints
            .iter()
            .map(|c| {
                (
                    move |v: &DVector<T>| c.slack(v),
                    move |v: &DVector<T>| c.slack_gradient(v),
                )
            })
            .collect();
        let constraint_fns: Vec<SlackConstraint<'_, T>> = slacks
            .iter()
            .map(|(s, gr)| SlackConstraint {
                slack: s,
                gradient: gr,
            })
            .collect();
        let outcome = penalized_ascend(
            &objective,
            &gradient,
            &constraint_fns,
            &project,
            x0,
            &opts.ascent,
            &opts.penalty,
        );
        let feasible = spec.min_constraint_slack(&outcome.x) >= -opts.tol;
        RestartResult {
            index,
            psi: outcome.x,
            objective: outcome.objective,
            trace: outcome.trace,
            iterates: outcome.iterates,
            feasible,
            found_start,
        }
    };

    let total = restarts + opts.warm_starts.len();
    let results: Vec<RestartResult<T>> = (0..total).into_par_iter().map(run_one).collect();

    let any_start = results.iter().any(|r| r.found_start);
    if !any_start {
        return Err(Error::infeasible(format!(
            "no feasible starting point found in {} projection attempts",
            10 * total
        )));
    }
    let best = results
        .iter()
        .filter(|r| r.feasible)
        .max_by(|a, b| {
            a.objective
                .partial_cmp(&b.objective)
                .unwrap()
                .then(b.index.cmp(&a.index))
        })
        .ok_or_else(|| Error::infeasible("no restart reached the constraint set"))?;

    let pattern = HolographicPattern::new(best.psi.iter().copied().collect());
    let min_leak =
        crate::rhs::leakage_margins(&spec.cfg, &pattern, &spec.window)?
            .into_iter()
            .fold(T::INFINITY, T::min);
    let report = SolveReport {
        solution: Solution {
            pattern,
            digital: None,
            window: spec.window.clone(),
        },
        objective: best.objective,
        objective_trace: best.trace.clone(),
        feasibility: Feasibility {
            min_leakage_slack: min_leak,
            min_constraint_slack: spec.min_constraint_slack(&best.psi),
        },
        seed,
        restarts_used: total,
    };
    Ok((report, results))
}

/// Deterministic starts spanning the top-two eigendirections of a symmetric
/// form. Correlation objectives `Re(c̄·cᵀ)` have their mass in a 2-D
/// eigenspace (the real and imaginary parts of c); sweeping an angle grid
/// through it and keeping the positive parts covers the phase family of
/// near-optimal amplitude profiles.
fn eigen_starts<T: Real>(q: &DMatrix<T>) -> Vec<DVector<T>> {
    let n = q.nrows();
    let power_iter = |m: &DMatrix<T>| -> Option<(DVector<T>, T)> {
        let mut v = DVector::from_element(n, T::ONE / lit::<T>(n as f64).sqrt());
        let mut lambda = T::ZERO;
        for _ in 0..100 {
            let w = m * &v;
            let norm = w.norm();
            if norm <= T::ZERO || !norm.is_finite() {
                return None;
            }
            lambda = v.dot(&w);
            v = w.unscale(norm);
        }
        Some((v, lambda))
    };
    let Some((v1, l1)) = power_iter(q) else {
        return Vec::new();
    };
    let deflated = q - DMatrix::from_fn(n, n, |i, j| v1[i] * v1[j] * l1);
    let v2 = power_iter(&deflated).map(|(v, _)| v);

    let mut starts = Vec::new();
    let mut push_parts = |v: &DVector<T>| {
        for sign in [T::ONE, -T::ONE] {
            let part = v.map(|x| (x * sign).max(T::ZERO));
            let peak = part.max();
            if peak > T::ZERO {
                starts.push(part.unscale(peak));
            }
        }
    };
    match v2 {
        None => push_parts(&v1),
        Some(v2) => {
            for k in 0..4 {
                let alpha = T::pi() * lit::<T>(k as f64) / lit(4.0);
                let mix = DVector::from_fn(n, |i, _| {
                    v1[i] * alpha.cos() + v2[i] * alpha.sin()
                });
                push_parts(&mix);
            }
        }
    }
    starts
}

/// Brute-force oracle outcome.
#[derive(Debug, Clone)]
pub enum BruteForce<T: Real> {
    /// Exact optimum over the quantized grid.
    Optimal {
        pattern: HolographicPattern<T>,
        value: T,
        evaluated: usize,
    },
    /// Every grid point violates a constraint.
    NoFeasiblePoint { evaluated: usize },
}

/// Exhaustively enumerates the quantized amplitude grid
/// `{0, 1/(levels−1), …, 1}^N` and returns the exact constrained optimum.
pub fn brute_force_oracle<T: Real>(
    spec: &QcqpSpec<T>,
    levels: usize,
    max_vars: usize,
) -> Result<BruteForce<T>> {
    spec.validate()?;
    if levels < 2 {
        return Err(Error::argument("need at least 2 quantization levels"));
    }
    let n = spec.dim();
    let cap = max_vars.min(8);
    if n > cap {
        return Err(Error::argument(format!(
            "refusing brute force over {n} variables (cap {cap})"
        )));
    }
    let feasible_set = PatternFeasibleSet::new(&spec.cfg, &spec.window);
    let step = T::ONE / lit::<T>((levels - 1) as f64);
    let mut indices = vec![0usize; n];
    let mut best: Option<(DVector<T>, T)> = None;
    let mut evaluated = 0usize;
    loop {
        let psi = DVector::from_fn(n, |i, _| lit::<T>(indices[i] as f64) * step);
        evaluated += 1;
        let leak_ok = feasible_set.min_slack(&psi) >= -crate::rhs::leakage_tolerance::<T>();
        let cons_ok = spec.min_constraint_slack(&psi) >= -lit::<T>(1e-9);
        if leak_ok && cons_ok {
            let value = spec.objective_value(&psi);
            let better = match &best {
                None => true,
                Some((_, b)) => value > *b,
            };
            if better {
                best = Some((psi, value));
            }
        }
        // Advance the mixed-radix counter.
        let mut k = 0;
        loop {
            if k == n {
                let result = match best {
                    Some((psi, value)) => BruteForce::Optimal {
                        pattern: HolographicPattern::new(psi.iter().copied().collect()),
                        value,
                        evaluated,
                    },
                    None => BruteForce::NoFeasiblePoint { evaluated },
                };
                return Ok(result);
            }
            indices[k] += 1;
            if indices[k] < levels {
                break;
            }
            indices[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{steering, Direction};

    fn unit_qcqp(n: usize) -> QcqpSpec<f64> {
        let wavelength = 0.0125;
        let cfg = RhsConfig::linear(n, wavelength / 3.0, wavelength);
        let window = ApertureWindow::full(&cfg);
        let f = crate::rhs::build_propagation_matrix(&cfg).unwrap();
        let a = steering(n, cfg.element_spacing, wavelength, 0.25, None);
        let c = DVector::from_fn(n, |i, _| a[i] * f[(i, 0)]);
        QcqpSpec::new(cfg, window, correlation_form(&c))
    }

    #[test]
    fn single_element_saturates_box() {
        // Maximize |a·m|² with one element: ψ = 1 is optimal (η ≤ 1).
        let spec = unit_qcqp(1);
        let report = solve_pattern_qcqp(&spec, 2, 3, &SolveOptions::default()).unwrap();
        assert!((report.solution.pattern.amplitudes[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_constraint_leaves_solution_unchanged() {
        let spec = unit_qcqp(6);
        let base = solve_pattern_qcqp(&spec, 4, 11, &SolveOptions::default()).unwrap();
        let relaxed = spec
            .clone()
            .with_constraint(DMatrix::identity(6, 6), Sense::Le, f64::INFINITY);
        let same = solve_pattern_qcqp(&relaxed, 4, 11, &SolveOptions::default()).unwrap();
        assert_eq!(
            base.solution.pattern.amplitudes,
            same.solution.pattern.amplitudes
        );
        assert_eq!(base.objective, same.objective);
    }

    #[test]
    fn traces_monotone_and_feasible() {
        let spec = unit_qcqp(8);
        let report = solve_pattern_qcqp(&spec, 4, 5, &SolveOptions::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(report.feasibility.min_leakage_slack >= -1e-9);
        assert!(report.solution.pattern.in_box());
    }

    #[test]
    fn seed_determinism() {
        let spec = unit_qcqp(10);
        let a = solve_pattern_qcqp(&spec, 6, 42, &SolveOptions::default()).unwrap();
        let b = solve_pattern_qcqp(&spec, 6, 42, &SolveOptions::default()).unwrap();
        assert_eq!(a.solution.pattern.amplitudes, b.solution.pattern.amplitudes);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn infeasible_floor_detected() {
        // SNR floor far above anything achievable.
        let spec = unit_qcqp(4);
        let c = {
            let n = 4;
            let a = steering(n, spec.cfg.element_spacing, spec.cfg.wavelength, -0.4, None);
            let f = crate::rhs::build_propagation_matrix(&spec.cfg).unwrap();
            DVector::from_fn(n, |i, _| a[i] * f[(i, 0)])
        };
        let hard = spec
            .clone()
            .with_constraint(correlation_form(&c), Sense::Ge, 1e9);
        let err = solve_pattern_qcqp(&hard, 2, 7, &SolveOptions::default());
        assert!(matches!(err, Err(Error::Infeasible(_))), "{err:?}");
    }

    #[test]
    fn oracle_counts_candidates() {
        let spec = unit_qcqp(1);
        match brute_force_oracle(&spec, 2, 8).unwrap() {
            BruteForce::Optimal { evaluated, .. } => assert_eq!(evaluated, 2),
            _ => panic!("expected optimum"),
        }
        let spec4 = unit_qcqp(4);
        match brute_force_oracle(&spec4, 5, 8).unwrap() {
            BruteForce::Optimal { evaluated, .. } => assert_eq!(evaluated, 625),
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn oracle_reports_infeasible_grid() {
        let spec = unit_qcqp(2)
            .with_constraint(DMatrix::identity(2, 2), Sense::Ge, 50.0);
        match brute_force_oracle(&spec, 3, 8).unwrap() {
            BruteForce::NoFeasiblePoint { evaluated } => assert_eq!(evaluated, 9),
            _ => panic!("expected no feasible point"),
        }
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let spec = unit_qcqp(9);
        assert!(brute_force_oracle(&spec, 2, 8).is_err());
    }

    #[test]
    fn solver_then_quantize_tracks_oracle_small() {
        // Spot-check the oracle-dominance property on one instance; the
        // acceptance suite sweeps 50.
        let spec = unit_qcqp(4);
        let report = solve_pattern_qcqp(&spec, 16, 9, &SolveOptions::default()).unwrap();
        let quantized =
            crate::rhs::quantize_pattern(&report.solution.pattern, 5).unwrap();
        let psi = DVector::from_vec(quantized.amplitudes.clone());
        let qval = spec.objective_value(&psi);
        match brute_force_oracle(&spec, 5, 8).unwrap() {
            BruteForce::Optimal { value, .. } => {
                assert!(qval >= 0.98 * value, "{qval} vs oracle {value}");
            }
            _ => panic!("expected optimum"),
        }
        let _ = Direction::<f64>::broadside();
    }
}
