//! Monotone projected-ascent engine.
//!
//! All optimizers in this crate are built on one primitive: backtracking
//! projected gradient ascent. Each iteration proposes `P(x + t·∇f)` and
//! halves `t` until the objective does not decrease, so accepted traces are
//! non-decreasing by construction. Constraints beyond the box and the
//! per-row leakage caps (which the projection enforces directly) are handled
//! by a quadratic penalty with a geometric schedule.

use crate::rhs::{ApertureWindow, RhsConfig};
use crate::scalar::{lit, Real};
use nalgebra::DVector;

/// Convergence controls: stop when the relative objective change stays below
/// `rel_tol` for `stall_iters` consecutive iterations, or after `max_iters`.
#[derive(Debug, Clone, Copy)]
pub struct AscentOptions<T: Real> {
    pub max_iters: usize,
    pub rel_tol: T,
    pub stall_iters: usize,
    /// Record the pattern at every accepted iterate.
    pub record_iterates: bool,
}

impl<T: Real> Default for AscentOptions<T> {
    fn default() -> Self {
        AscentOptions {
            max_iters: 500,
            rel_tol: lit(1e-6),
            stall_iters: 3,
            record_iterates: false,
        }
    }
}

/// Result of one ascent run.
#[derive(Debug, Clone)]
pub struct AscentOutcome<T: Real> {
    pub x: DVector<T>,
    pub objective: T,
    /// Objective at the start point and after every accepted step.
    pub trace: Vec<T>,
    /// Accepted iterates, present when requested.
    pub iterates: Vec<DVector<T>>,
}

/// A differentiable objective with a feasibility projection.
pub struct Ascent<'a, T: Real> {
    pub objective: &'a dyn Fn(&DVector<T>) -> T,
    pub gradient: &'a dyn Fn(&DVector<T>) -> DVector<T>,
    pub project: &'a dyn Fn(&mut DVector<T>),
    /// Secondary value that accepted steps must also not decrease. Used to
    /// keep the reported (unpenalized) trace monotone during penalty runs.
    pub guard: Option<&'a dyn Fn(&DVector<T>) -> T>,
}

/// Runs monotone projected gradient ascent from `x0` (projected first).
pub fn ascend<T: Real>(problem: &Ascent<'_, T>, x0: DVector<T>, opts: &AscentOptions<T>) -> AscentOutcome<T> {
    let mut x = x0;
    (problem.project)(&mut x);
    let mut fx = (problem.objective)(&x);
    let mut gx = problem.guard.map(|g| g(&x));
    let mut trace = vec![fx];
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(x.clone());
    }

    let mut step = T::ONE;
    let mut stalled = 0usize;
    let tiny = lit::<T>(1e-18);

    for iter in 0..opts.max_iters {
        let grad = (problem.gradient)(&x);
        let gnorm = grad.norm();
        if gnorm == T::ZERO {
            break;
        }
        if iter == 0 {
            step = (T::ONE + x.norm()) / (T::ONE + gnorm);
        }

        let evaluate = |t: T| -> (DVector<T>, T) {
            let mut cand = &x + grad.map(|g| g * t);
            (problem.project)(&mut cand);
            let fc = (problem.objective)(&cand);
            (cand, fc)
        };

        // A candidate is admissible when neither the objective nor the
        // guard value decreases relative to the incumbent.
        let fx_now = fx;
        let gx_now = gx;
        let admissible = move |cand: &DVector<T>, fc: T| -> Option<Option<T>> {
            if fc < fx_now {
                return None;
            }
            match (problem.guard, gx_now) {
                (Some(g), Some(gv)) => {
                    let gc = g(cand);
                    if gc >= gv {
                        Some(Some(gc))
                    } else {
                        None
                    }
                }
                _ => Some(None),
            }
        };

        // Backtrack until the step is admissible, then forward-track: keep
        // doubling while that still improves. The forward phase matters for
        // convex objectives whose optimum sits on the feasible boundary.
        let mut accepted = false;
        let mut t = step;
        while t > tiny {
            let (cand, fc) = evaluate(t);
            if let Some(gc) = admissible(&cand, fc) {
                let mut best = (cand, fc, gc);
                let mut td = t;
                for _ in 0..40 {
                    let t2 = td * lit(2.0);
                    let (c2, f2) = evaluate(t2);
                    if f2 < best.1 {
                        break;
                    }
                    match admissible(&c2, f2) {
                        Some(g2) => {
                            best = (c2, f2, g2);
                            td = t2;
                        }
                        None => break,
                    }
                }
                let (cand, fc, gc) = best;
                let denom = T::ONE.max(fx.abs());
                let improvement = (fc - fx) / denom;
                x = cand;
                fx = fc;
                if let Some(g) = gc {
                    gx = Some(g);
                }
                trace.push(fx);
                if opts.record_iterates {
                    iterates.push(x.clone());
                }
                stalled = if improvement < opts.rel_tol { stalled + 1 } else { 0 };
                step = td;
                accepted = true;
                break;
            }
            t *= lit(0.5);
        }
        if !accepted || stalled >= opts.stall_iters {
            break;
        }
    }

    AscentOutcome {
        objective: fx,
        x,
        trace,
        iterates,
    }
}

/// One inequality constraint in slack form: feasible iff `slack(x) ≥ 0`.
pub struct SlackConstraint<'a, T: Real> {
    pub slack: &'a dyn Fn(&DVector<T>) -> T,
    pub gradient: &'a dyn Fn(&DVector<T>) -> DVector<T>,
}

/// Penalty schedule: coefficient grows by `growth` each round.
#[derive(Debug, Clone, Copy)]
pub struct PenaltySchedule<T: Real> {
    pub initial: T,
    pub growth: T,
    pub rounds: usize,
}

impl<T: Real> Default for PenaltySchedule<T> {
    fn default() -> Self {
        PenaltySchedule {
            initial: lit(100.0),
            growth: lit(10.0),
            rounds: 5,
        }
    }
}

/// Maximizes `objective` subject to `slack_i(x) ≥ 0` via quadratic penalties
/// `f − ρ·Σ max(0, −slack)²` with ρ on the geometric schedule.
///
/// The outcome's trace and objective refer to the *unpenalized* objective
/// over the final round, whose accepted steps may not decrease it (guard).
pub fn penalized_ascend<T: Real>(
    objective: &dyn Fn(&DVector<T>) -> T,
    gradient: &dyn Fn(&DVector<T>) -> DVector<T>,
    constraints: &[SlackConstraint<'_, T>],
    project: &dyn Fn(&mut DVector<T>),
    x0: DVector<T>,
    opts: &AscentOptions<T>,
    schedule: &PenaltySchedule<T>,
) -> AscentOutcome<T> {
    // Also with no constraints the run is split into the same number of
    // rounds: each round restarts the step-size heuristic, which helps
    // escape slow ridges, and keeps both paths comparable.
    let rounds = schedule.rounds.max(1);
    let mut x = x0;
    let mut all_iterates = Vec::new();
    let mut rho = schedule.initial;
    let mut last_outcome = None;
    for round in 0..rounds {
        let last = round + 1 == rounds;
        let rho_now = rho;
        let obj = move |v: &DVector<T>| -> T {
            let mut f = objective(v);
            for c in constraints {
                let s = (c.slack)(v);
                if s < T::ZERO {
                    f -= rho_now * s * s;
                }
            }
            f
        };
        let grad = move |v: &DVector<T>| -> DVector<T> {
            let mut g = gradient(v);
            for c in constraints {
                let s = (c.slack)(v);
                if s < T::ZERO {
                    let gs = (c.gradient)(v);
                    let w = -lit::<T>(2.0) * rho_now * s;
                    g += gs.map(|e| e * w);
                }
            }
            g
        };
        let mut round_opts = *opts;
        round_opts.record_iterates = opts.record_iterates || last;
        let problem = Ascent {
            objective: &obj,
            gradient: &grad,
            project,
            guard: if last { Some(objective) } else { None },
        };
        let outcome = ascend(&problem, x, &round_opts);
        x = outcome.x.clone();
        if opts.record_iterates {
            all_iterates.extend(outcome.iterates.iter().cloned());
        }
        if last {
            last_outcome = Some(outcome);
        }
        rho *= schedule.growth;
    }

    let fin = last_outcome.expect("at least one penalty round");
    let trace = fin.iterates.iter().map(objective).collect();
    AscentOutcome {
        objective: objective(&fin.x),
        x: fin.x,
        trace,
        iterates: all_iterates,
    }
}

/// Precomputed feasible-set description for a pattern block: the amplitude
/// box plus the per-row leakage ellipsoids of the active elements.
#[derive(Debug, Clone)]
pub struct PatternFeasibleSet<T: Real> {
    /// Masked per-element power weight η·d.
    pub eta: DVector<T>,
    /// Element indices grouped by row.
    pub rows: Vec<Vec<usize>>,
}

impl<T: Real> PatternFeasibleSet<T> {
    pub fn new(cfg: &RhsConfig<T>, window: &ApertureWindow) -> Self {
        let n = cfg.element_count();
        let mut eta = DVector::from_element(n, T::ZERO);
        let mut rows = vec![Vec::new(); cfg.rows];
        for i in 0..n {
            let (iy, iz) = (cfg.row_of(i), cfg.col_of(i));
            if window.contains(iy, iz) {
                eta[i] = cfg.eta(iy, iz);
            }
            rows[iy].push(i);
        }
        PatternFeasibleSet { eta, rows }
    }

    /// Projects onto box ∩ leakage: clamp to [0, 1], then scale each
    /// violating row uniformly by `1/√(Σψ²η)`.
    pub fn project(&self, psi: &mut DVector<T>) {
        for v in psi.iter_mut() {
            *v = v.clamp(T::ZERO, T::ONE);
        }
        for row in &self.rows {
            let mut used = T::ZERO;
            for &i in row {
                used += psi[i] * psi[i] * self.eta[i];
            }
            if used > T::ONE {
                let scale = T::ONE / used.sqrt();
                for &i in row {
                    psi[i] *= scale;
                }
            }
        }
    }

    /// Minimum per-row leakage slack of a pattern.
    pub fn min_slack(&self, psi: &DVector<T>) -> T {
        let mut min = T::ONE;
        for row in &self.rows {
            let mut used = T::ZERO;
            for &i in row {
                used += psi[i] * psi[i] * self.eta[i];
            }
            min = min.min(T::ONE - used);
        }
        min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhs::{leakage_margins, ApertureWindow, HolographicPattern, RhsConfig};
    use crate::rng;

    #[test]
    fn ascent_trace_monotone_on_quadratic() {
        // Maximize -(x-3)² over [0, 10]: trace non-decreasing toward 3.
        let obj = |x: &DVector<f64>| -(x[0] - 3.0).powi(2);
        let grad = |x: &DVector<f64>| DVector::from_element(1, -2.0 * (x[0] - 3.0));
        let project = |x: &mut DVector<f64>| x[0] = x[0].clamp(0.0, 10.0);
        let outcome = ascend(
            &Ascent {
                objective: &obj,
                gradient: &grad,
                project: &project,
                guard: None,
            },
            DVector::from_element(1, 9.5),
            &AscentOptions::default(),
        );
        assert!((outcome.x[0] - 3.0).abs() < 1e-4);
        for w in outcome.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn penalty_reaches_constrained_optimum() {
        // Maximize x over [0, 2] s.t. x ≤ 1: optimum 1 within 1e-3.
        let obj = |x: &DVector<f64>| x[0];
        let grad = |x: &DVector<f64>| DVector::from_element(x.len(), 1.0);
        let slack = |x: &DVector<f64>| 1.0 - x[0];
        let gslack = |x: &DVector<f64>| DVector::from_element(x.len(), -1.0);
        let project = |x: &mut DVector<f64>| x[0] = x[0].clamp(0.0, 2.0);
        let constraints = [SlackConstraint {
            slack: &slack,
            gradient: &gslack,
        }];
        let outcome = penalized_ascend(
            &obj,
            &grad,
            &constraints,
            &project,
            DVector::from_element(1, 0.1),
            &AscentOptions::default(),
            &PenaltySchedule {
                initial: 100.0,
                growth: 10.0,
                rounds: 5,
            },
        );
        assert!((outcome.x[0] - 1.0).abs() < 1e-3, "x = {}", outcome.x[0]);
        for w in outcome.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn projection_restores_feasibility() {
        let cfg = RhsConfig::<f64>::new(2, 25, 0.0125 / 3.0, 0.0125);
        let window = ApertureWindow::full(&cfg);
        let set = PatternFeasibleSet::new(&cfg, &window);
        let mut g = rng::root(1);
        for _ in 0..200 {
            let mut psi = DVector::from_fn(cfg.element_count(), |_, _| {
                rng::uniform::<f64>(&mut g) * 3.0 - 0.5
            });
            set.project(&mut psi);
            let pattern = HolographicPattern::new(psi.iter().copied().collect());
            assert!(pattern.in_box());
            let slack = leakage_margins(&cfg, &pattern, &window).unwrap();
            assert!(slack.iter().all(|&s| s >= -1e-9), "slack {slack:?}");
        }
    }
}
