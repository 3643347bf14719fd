//! Joint communication-and-sensing transmit beamforming.
//!
//! A BS drives an L-feed RHS through digital beamformers `B = [B_c | B_s]`
//! (U data streams, N_rad radar streams). The radar utility
//! `f_u = P_a − α₀·RMSC` is maximized by alternating optimization of the
//! digital and holographic blocks under user SINR floors, per-direction
//! beampattern bands, the feed power budget, and the leakage caps. Pattern
//! superposition (HDMA) weights live here too: the same objective restricted
//! to a weighted sum of per-direction holographic patterns.

use crate::beamopt::engine::{ascend, Ascent, AscentOptions, PatternFeasibleSet};
use crate::beamopt::fields::{
    pack_cmatrix, project_power, unpack_cmatrix, LinearField, SinrFields, UtilityFields,
};
use crate::beamopt::report::{Feasibility, Solution, SolveReport};
use crate::error::Error;
use crate::metrics::RadarUtilityConfig;
use crate::rhs::{
    build_propagation_matrix, leakage_margins, superpose_patterns, ApertureWindow,
    HolographicPattern, RhsConfig,
};
use crate::rng;
use crate::scalar::{czero, lit, Cplx, Real};
use crate::wavefield::planar_steering;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// A downlink user: channel to the RHS elements plus its SINR floor.
#[derive(Debug, Clone)]
pub struct JcasUser<T: Real> {
    pub channel: DVector<Cplx<T>>,
    pub sinr_floor: T,
}

/// Problem instance for [`jcas_transmit`].
#[derive(Debug, Clone)]
pub struct JcasProblem<T: Real> {
    pub cfg: RhsConfig<T>,
    pub window: ApertureWindow,
    pub users: Vec<JcasUser<T>>,
    pub radar: RadarUtilityConfig<T>,
    /// Radar stream count N_rad (defaults to L when 0).
    pub radar_streams: usize,
    /// Feed power budget P_t: ‖B‖² = P_t.
    pub power: T,
    /// Receiver noise power σ².
    pub noise: T,
}

impl<T: Real> JcasProblem<T> {
    fn radar_streams(&self) -> usize {
        if self.radar_streams == 0 {
            self.cfg.rows
        } else {
            self.radar_streams
        }
    }

    fn total_streams(&self) -> usize {
        self.users.len() + self.radar_streams()
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.window.validate(&self.cfg)?;
        self.radar.validate()?;
        if self.users.is_empty() && self.radar.directions.is_empty() {
            return Err(Error::argument("need at least one user or one target"));
        }
        for u in &self.users {
            if u.channel.len() != self.cfg.element_count() {
                return Err(Error::argument("user channel length mismatch"));
            }
        }
        if self.power <= T::ZERO || self.noise <= T::ZERO {
            return Err(Error::argument("power and noise must be positive"));
        }
        Ok(())
    }
}

/// Per-element complex weight of the masked surface response toward a
/// receive vector `v` (steering conjugate or channel): `v_n·d_n·F_{n,l(n)}`.
pub(crate) fn surface_row<T: Real>(
    cfg: &RhsConfig<T>,
    window: &ApertureWindow,
    f: &DMatrix<Cplx<T>>,
    v: &DVector<Cplx<T>>,
) -> Vec<Cplx<T>> {
    (0..cfg.element_count())
        .map(|n| {
            let l = cfg.row_of(n);
            v[n] * f[(n, l)].scale(window.mask(cfg, n))
        })
        .collect()
}

/// Fields over the pattern block for a fixed digital beamformer: for every
/// column k, `e_k(ψ) = Σ_n row_n·B_{l(n),k}·ψ_n`.
pub(crate) fn pattern_fields<T: Real>(
    cfg: &RhsConfig<T>,
    row: &[Cplx<T>],
    digital: &DMatrix<Cplx<T>>,
) -> Vec<LinearField<T>> {
    (0..digital.ncols())
        .map(|k| {
            let coeffs: Vec<Cplx<T>> = (0..cfg.element_count())
                .map(|n| row[n] * digital[(cfg.row_of(n), k)])
                .collect();
            LinearField::over_pattern(&coeffs)
        })
        .collect()
}

/// Fields over the packed digital block for a fixed pattern: per column k,
/// `e_k(B) = Σ_l g_l·B_{l,k}` with `g_l = Σ_{n∈row l} row_n·ψ_n`.
pub(crate) fn digital_fields<T: Real>(
    cfg: &RhsConfig<T>,
    row: &[Cplx<T>],
    psi: &DVector<T>,
    columns: usize,
) -> Vec<LinearField<T>> {
    let feeds = cfg.rows;
    let mut g = vec![czero::<T>(); feeds];
    for n in 0..cfg.element_count() {
        g[cfg.row_of(n)] += row[n].scale(psi[n]);
    }
    (0..columns)
        .map(|k| {
            let mut coeffs = vec![czero::<T>(); feeds * columns];
            for l in 0..feeds {
                coeffs[k * feeds + l] = g[l];
            }
            LinearField::over_complex(&coeffs)
        })
        .collect()
}

/// Which block is being optimized.
enum Block<'a, T: Real> {
    Pattern { digital: &'a DMatrix<Cplx<T>> },
    Digital { psi: &'a DVector<T> },
}

struct JcasEval<'a, T: Real> {
    problem: &'a JcasProblem<T>,
    f: &'a DMatrix<Cplx<T>>,
    steer_rows: Vec<Vec<Cplx<T>>>,
    user_rows: Vec<Vec<Cplx<T>>>,
}

impl<'a, T: Real> JcasEval<'a, T> {
    fn new(problem: &'a JcasProblem<T>, f: &'a DMatrix<Cplx<T>>) -> Self {
        let steer_rows = problem
            .radar
            .directions
            .iter()
            .map(|&d| {
                let a = planar_steering(&problem.cfg, d);
                surface_row(&problem.cfg, &problem.window, f, &a)
            })
            .collect();
        let user_rows = problem
            .users
            .iter()
            .map(|u| surface_row(&problem.cfg, &problem.window, f, &u.channel))
            .collect();
        JcasEval {
            problem,
            f,
            steer_rows,
            user_rows,
        }
    }

    /// Radar-utility fields for the active block.
    fn utility_fields(&self, block: &Block<'_, T>) -> UtilityFields<T> {
        let fields = self
            .steer_rows
            .iter()
            .map(|row| match block {
                Block::Pattern { digital } => pattern_fields(&self.problem.cfg, row, digital),
                Block::Digital { psi } => {
                    digital_fields(&self.problem.cfg, row, psi, self.problem.total_streams())
                }
            })
            .collect();
        UtilityFields {
            fields,
            alpha0: self.problem.radar.alpha0,
        }
    }

    /// SINR fields per user for the active block. Columns 0..U are data
    /// streams, the rest radar streams.
    fn sinr_fields(&self, block: &Block<'_, T>) -> Vec<SinrFields<T>> {
        let users = self.problem.users.len();
        let total = self.problem.total_streams();
        self.user_rows
            .iter()
            .enumerate()
            .map(|(u, row)| {
                let all: Vec<LinearField<T>> = match block {
                    Block::Pattern { digital } => pattern_fields(&self.problem.cfg, row, digital),
                    Block::Digital { psi } => {
                        digital_fields(&self.problem.cfg, row, psi, total)
                    }
                };
                let mut signal = None;
                let mut other_users = Vec::new();
                let mut radar = Vec::new();
                for (k, field) in all.into_iter().enumerate() {
                    if k == u {
                        signal = Some(field);
                    } else if k < users {
                        other_users.push(field);
                    } else {
                        radar.push(field);
                    }
                }
                SinrFields {
                    signal: signal.expect("user column present"),
                    other_users,
                    radar,
                    noise: self.problem.noise,
                    floor: self.problem.users[u].sinr_floor,
                }
            })
            .collect()
    }
}

/// Normalized band slacks `(P_j − γ^l_j·P_1)/P_t` and `(γ^u_j·P_1 − P_j)/P_t`
/// for j ≥ 2.
fn band_slacks<T: Real>(
    uf: &UtilityFields<T>,
    band: &[(T, T)],
    power: T,
    x: &DVector<T>,
) -> Vec<T> {
    if band.is_empty() {
        return Vec::new();
    }
    let p = uf.directional_powers(x);
    let mut slacks = Vec::new();
    for (j, &(lo, hi)) in band.iter().enumerate() {
        let pj = p[j + 1];
        slacks.push((pj - lo * p[0]) / power);
        slacks.push((hi * p[0] - pj) / power);
    }
    slacks
}

fn band_slack_gradients<T: Real>(
    uf: &UtilityFields<T>,
    band: &[(T, T)],
    power: T,
    x: &DVector<T>,
) -> Vec<DVector<T>> {
    if band.is_empty() {
        return Vec::new();
    }
    let dim = uf.fields[0][0].coeffs.len();
    // Per-direction power gradients.
    let mut pgrads = Vec::new();
    for row in &uf.fields {
        let mut g = DVector::from_element(dim, T::ZERO);
        for f in row {
            f.add_power_gradient(x, T::ONE, &mut g);
        }
        pgrads.push(g);
    }
    let mut grads = Vec::new();
    for (j, &(lo, hi)) in band.iter().enumerate() {
        let gj = &pgrads[j + 1];
        let g1 = &pgrads[0];
        grads.push(DVector::from_fn(dim, |p, _| (gj[p] - lo * g1[p]) / power));
        grads.push(DVector::from_fn(dim, |p, _| (hi * g1[p] - gj[p]) / power));
    }
    grads
}

/// One monotone penalized block ascent at a fixed penalty coefficient.
#[allow(clippy::too_many_arguments)]
fn block_step<T: Real>(
    objective: &dyn Fn(&DVector<T>) -> T,
    gradient: &dyn Fn(&DVector<T>) -> DVector<T>,
    slacks: &dyn Fn(&DVector<T>) -> Vec<T>,
    slack_grads: &dyn Fn(&DVector<T>) -> Vec<DVector<T>>,
    rho: T,
    project: &dyn Fn(&mut DVector<T>),
    x0: DVector<T>,
    opts: &AscentOptions<T>,
    guard: Option<&dyn Fn(&DVector<T>) -> T>,
) -> DVector<T> {
    let pen_obj = |v: &DVector<T>| -> T {
        let mut f = objective(v);
        for s in slacks(v) {
            if s < T::ZERO {
                f -= rho * s * s;
            }
        }
        f
    };
    let pen_grad = |v: &DVector<T>| -> DVector<T> {
        let mut g = gradient(v);
        let svals = slacks(v);
        if svals.iter().any(|&s| s < T::ZERO) {
            let sgrads = slack_grads(v);
            for (s, sg) in svals.iter().zip(&sgrads) {
                if *s < T::ZERO {
                    let w = -lit::<T>(2.0) * rho * *s;
                    g += sg.map(|e| e * w);
                }
            }
        }
        g
    };
    ascend(
        &Ascent {
            objective: &pen_obj,
            gradient: &pen_grad,
            project,
            guard,
        },
        x0,
        opts,
    )
    .x
}

struct JcasRestart<T: Real> {
    index: usize,
    psi: DVector<T>,
    digital: DMatrix<Cplx<T>>,
    utility: T,
    trace: Vec<T>,
    feasible: bool,
    min_slack: T,
    iterates: Vec<DVector<T>>,
}

/// Controls for the AO solvers.
#[derive(Debug, Clone)]
pub struct AoOptions<T: Real> {
    pub ascent: AscentOptions<T>,
    /// Penalty stages (coefficient ×10 per stage).
    pub penalty_rounds: usize,
    pub penalty_initial: T,
    /// AO block passes per penalty stage.
    pub ao_rounds: usize,
    pub tol: T,
    pub record_iterates: bool,
}

impl<T: Real> Default for AoOptions<T> {
    fn default() -> Self {
        AoOptions {
            ascent: AscentOptions {
                max_iters: 150,
                ..AscentOptions::default()
            },
            penalty_rounds: 5,
            penalty_initial: lit(100.0),
            ao_rounds: 4,
            tol: lit(1e-6),
            record_iterates: false,
        }
    }
}

/// Maximizes the radar utility over the digital and holographic beamformers
/// by alternating optimization, subject to user SINR floors, beampattern
/// band constraints, the power budget, and leakage feasibility.
pub fn jcas_transmit<T: Real>(
    problem: &JcasProblem<T>,
    restarts: usize,
    seed: u64,
    opts: &AoOptions<T>,
) -> Result<SolveReport<T>> {
    jcas_transmit_full(problem, restarts, seed, opts).map(|(r, _)| r)
}

/// Like [`jcas_transmit`], also returning every accepted pattern iterate.
pub fn jcas_transmit_with_iterates<T: Real>(
    problem: &JcasProblem<T>,
    restarts: usize,
    seed: u64,
    opts: &AoOptions<T>,
) -> Result<(SolveReport<T>, Vec<HolographicPattern<T>>)> {
    let mut rec = opts.clone();
    rec.record_iterates = true;
    let (report, results) = jcas_transmit_full(problem, restarts, seed, &rec)?;
    let mut patterns = Vec::new();
    for r in results {
        patterns.extend(
            r.iterates
                .into_iter()
                .map(|v| HolographicPattern::new(v.iter().copied().collect())),
        );
    }
    Ok((report, patterns))
}

fn jcas_transmit_full<T: Real>(
    problem: &JcasProblem<T>,
    restarts: usize,
    seed: u64,
    opts: &AoOptions<T>,
) -> Result<(SolveReport<T>, Vec<JcasRestart<T>>)> {
    problem.validate()?;
    let f = build_propagation_matrix(&problem.cfg)?;
    let eval = JcasEval::new(problem, &f);
    let feasible_set = PatternFeasibleSet::new(&problem.cfg, &problem.window);
    let n = problem.cfg.element_count();
    let total_streams = problem.total_streams();
    let feeds = problem.cfg.rows;

    let run_one = |index: usize| -> JcasRestart<T> {
        let mut g = rng::child(seed, index as u64);

        // Restart 0 starts from the superposed direction hologram; the rest
        // are random.
        let mut psi = if index == 0 && !problem.radar.directions.is_empty() {
            let patterns: Vec<HolographicPattern<T>> = problem
                .radar
                .directions
                .iter()
                .map(|&d| crate::rhs::pattern_for_direction(&problem.cfg, d).expect("valid cfg"))
                .collect();
            let weights = vec![T::ONE / lit::<T>(patterns.len() as f64); patterns.len()];
            let sp = superpose_patterns(&patterns, &weights).expect("non-empty");
            DVector::from_vec(sp.pattern.amplitudes)
        } else {
            DVector::from_fn(n, |_, _| rng::uniform::<T>(&mut g))
        };
        feasible_set.project(&mut psi);

        let mut digital = DMatrix::from_fn(feeds, total_streams, |_, _| {
            rng::complex_gaussian::<T>(&mut g)
        });
        let mut b_packed = pack_cmatrix(&digital);
        project_power(&mut b_packed, problem.power);
        digital = unpack_cmatrix(&b_packed, feeds, total_streams);

        let mut rho = opts.penalty_initial;
        let mut trace = Vec::new();
        let mut iterates = Vec::new();
        let true_utility = |psi: &DVector<T>, b: &DMatrix<Cplx<T>>| -> T {
            eval.utility_fields(&Block::Digital { psi }).utility(&pack_cmatrix(b)).0
        };

        for stage in 0..opts.penalty_rounds.max(1) {
            let last_stage = stage + 1 == opts.penalty_rounds.max(1);
            let mut prev = true_utility(&psi, &digital);
            if last_stage && trace.is_empty() {
                trace.push(prev);
            }
            for _round in 0..opts.ao_rounds.max(1) {
                // Pattern block.
                {
                    let block = Block::Pattern { digital: &digital };
                    let uf = eval.utility_fields(&block);
                    let sf = eval.sinr_fields(&block);
                    let objective = |v: &DVector<T>| uf.utility(v).0;
                    let gradient = |v: &DVector<T>| uf.utility_gradient(v);
                    let slacks = |v: &DVector<T>| {
                        let mut s: Vec<T> = sf.iter().map(|u| u.slack(v)).collect();
                        s.extend(band_slacks(&uf, &problem.radar.band, problem.power, v));
                        s
                    };
                    let slack_grads = |v: &DVector<T>| {
                        let mut gdt: Vec<DVector<T>> =
                            sf.iter().map(|u| u.slack_gradient(v)).collect();
                        gdt.extend(band_slack_gradients(
                            &uf,
                            &problem.radar.band,
                            problem.power,
                            v,
                        ));
                        gdt
                    };
                    let project = |v: &mut DVector<T>| feasible_set.project(v);
                    let guard = |v: &DVector<T>| uf.utility(v).0;
                    psi = block_step(
                        &objective,
                        &gradient,
                        &slacks,
                        &slack_grads,
                        rho,
                        &project,
                        psi,
                        &opts.ascent,
                        if last_stage { Some(&guard) } else { None },
                    );
                    if opts.record_iterates {
                        iterates.push(psi.clone());
                    }
                }
                // Digital block.
                {
                    let block = Block::Digital { psi: &psi };
                    let uf = eval.utility_fields(&block);
                    let sf = eval.sinr_fields(&block);
                    let objective = |v: &DVector<T>| uf.utility(v).0;
                    let gradient = |v: &DVector<T>| uf.utility_gradient(v);
                    let slacks = |v: &DVector<T>| {
                        let mut s: Vec<T> = sf.iter().map(|u| u.slack(v)).collect();
                        s.extend(band_slacks(&uf, &problem.radar.band, problem.power, v));
                        s
                    };
                    let slack_grads = |v: &DVector<T>| {
                        let mut gdt: Vec<DVector<T>> =
                            sf.iter().map(|u| u.slack_gradient(v)).collect();
                        gdt.extend(band_slack_gradients(
                            &uf,
                            &problem.radar.band,
                            problem.power,
                            v,
                        ));
                        gdt
                    };
                    let project = |v: &mut DVector<T>| project_power(v, problem.power);
                    let guard = |v: &DVector<T>| uf.utility(v).0;
                    let b0 = pack_cmatrix(&digital);
                    let b1 = block_step(
                        &objective,
                        &gradient,
                        &slacks,
                        &slack_grads,
                        rho,
                        &project,
                        b0,
                        &opts.ascent,
                        if last_stage { Some(&guard) } else { None },
                    );
                    digital = unpack_cmatrix(&b1, feeds, total_streams);
                }
                let now = true_utility(&psi, &digital);
                if last_stage {
                    trace.push(now);
                }
                if (now - prev).abs() <= opts.tol * T::ONE.max(prev.abs()) {
                    prev = now;
                    break;
                }
                prev = now;
            }
            rho *= lit(10.0);
        }

        // Exit feasibility.
        let block = Block::Digital { psi: &psi };
        let x = pack_cmatrix(&digital);
        let uf = eval.utility_fields(&block);
        let sf = eval.sinr_fields(&block);
        let mut min_slack = T::INFINITY;
        for u in &sf {
            min_slack = min_slack.min(u.slack(&x));
        }
        for s in band_slacks(&uf, &problem.radar.band, problem.power, &x) {
            min_slack = min_slack.min(s);
        }
        let utility = uf.utility(&x).0;
        JcasRestart {
            index,
            psi,
            digital,
            utility,
            trace,
            feasible: min_slack >= -opts.tol,
            min_slack,
            iterates,
        }
    };

    let results: Vec<JcasRestart<T>> = (0..restarts.max(1)).into_par_iter().map(run_one).collect();
    let best = results
        .iter()
        .filter(|r| r.feasible)
        .max_by(|a, b| {
            a.utility
                .partial_cmp(&b.utility)
                .unwrap()
                .then(b.index.cmp(&a.index))
        })
        .ok_or_else(|| Error::infeasible("no restart satisfied the SINR floors and bands"))?;

    let pattern = HolographicPattern::new(best.psi.iter().copied().collect());
    let min_leak = leakage_margins(&problem.cfg, &pattern, &problem.window)?
        .into_iter()
        .fold(T::INFINITY, T::min);
    let report = SolveReport {
        solution: Solution {
            pattern,
            digital: Some(best.digital.clone()),
            window: problem.window.clone(),
        },
        objective: best.utility,
        objective_trace: best.trace.clone(),
        feasibility: Feasibility {
            min_leakage_slack: min_leak,
            min_constraint_slack: best.min_slack,
        },
        seed,
        restarts_used: restarts.max(1),
    };
    let results = results;
    Ok((report, results))
}

/// Objective for [`hdma_weights`].
#[derive(Debug, Clone, Copy)]
pub enum HdmaObjective<T: Real> {
    /// Sum of radiated power toward all basis directions.
    SumDirectionalPower,
    /// Radar utility with the given cross-correlation weight.
    RadarUtility { alpha0: T },
}

/// Optimizes superposition weights ζ over the per-(direction, feed-row)
/// holographic basis patterns: ψ(ζ) = Σ_s ζ_s·ψ_s. The optimization
/// dimension is S = (directions)·L, independent of N.
///
/// Returns the weights and a report whose pattern equals
/// `superpose_patterns(basis, ζ)`.
pub fn hdma_weights<T: Real>(
    cfg: &RhsConfig<T>,
    directions: &[crate::wavefield::Direction<T>],
    objective: HdmaObjective<T>,
    power: T,
    restarts: usize,
    seed: u64,
    opts: &AoOptions<T>,
) -> Result<(Vec<T>, SolveReport<T>)> {
    cfg.validate()?;
    if directions.is_empty() {
        return Err(Error::argument("need at least one direction"));
    }
    let window = ApertureWindow::full(cfg);
    let f = build_propagation_matrix(cfg)?;
    let n = cfg.element_count();
    let feeds = cfg.rows;

    // Basis: per direction and per feed row, the direction pattern masked to
    // that row.
    let mut basis: Vec<HolographicPattern<T>> = Vec::new();
    for &d in directions {
        let full = crate::rhs::pattern_for_direction(cfg, d)?;
        for l in 0..feeds {
            let mut masked = vec![T::ZERO; n];
            for i in 0..n {
                if cfg.row_of(i) == l {
                    masked[i] = full.amplitudes[i];
                }
            }
            basis.push(HolographicPattern::new(masked));
        }
    }
    let s_dim = basis.len();
    let basis_matrix = DMatrix::from_fn(n, s_dim, |i, s| basis[s].amplitudes[i]);

    // Uniform feed excitation carrying the power budget.
    let digital = DMatrix::from_fn(feeds, feeds, |i, j| {
        if i == j {
            Cplx::new((power / lit(feeds as f64)).sqrt(), T::ZERO)
        } else {
            czero::<T>()
        }
    });

    let alpha0 = match objective {
        HdmaObjective::SumDirectionalPower => T::ZERO,
        HdmaObjective::RadarUtility { alpha0 } => alpha0,
    };
    let scale_to_sum = match objective {
        // Utility averages over directions; the sum objective scales by J.
        HdmaObjective::SumDirectionalPower => lit::<T>(directions.len() as f64),
        HdmaObjective::RadarUtility { .. } => T::ONE,
    };

    let problem = JcasProblem {
        cfg: cfg.clone(),
        window: window.clone(),
        users: Vec::new(),
        radar: RadarUtilityConfig::unconstrained(directions.to_vec(), alpha0),
        radar_streams: feeds,
        power,
        noise: T::ONE,
    };
    let eval = JcasEval::new(&problem, &f);
    let block = Block::Pattern { digital: &digital };
    let uf = eval.utility_fields(&block);

    let feasible_set = PatternFeasibleSet::new(cfg, &window);
    let pattern_of = |zeta: &DVector<T>| -> DVector<T> { &basis_matrix * zeta };
    // Project ζ: non-negative, then a uniform shrink so the raw pattern
    // meets the box and every leakage cap (the raw map is linear in ζ).
    let project = |zeta: &mut DVector<T>| {
        for z in zeta.iter_mut() {
            *z = z.max(T::ZERO);
        }
        let raw = pattern_of(zeta);
        let peak = raw.max();
        let mut shrink = T::ONE;
        if peak > T::ONE {
            shrink = shrink.min(T::ONE / peak);
        }
        let min_slack = feasible_set.min_slack(&raw);
        if min_slack < T::ZERO {
            // Σ(ψ·t)²η ≤ 1 ⇒ t ≤ 1/√(Σψ²η).
            let used = T::ONE - min_slack;
            shrink = shrink.min(T::ONE / used.sqrt());
        }
        if shrink < T::ONE {
            for z in zeta.iter_mut() {
                *z *= shrink;
            }
        }
    };

    let objective_fn = |zeta: &DVector<T>| -> T {
        let psi = pattern_of(zeta);
        uf.utility(&psi).0 * scale_to_sum
    };
    let gradient_fn = |zeta: &DVector<T>| -> DVector<T> {
        let psi = pattern_of(zeta);
        let g = uf.utility_gradient(&psi) * scale_to_sum;
        basis_matrix.transpose() * g
    };

    let run_one = |index: usize| -> (usize, DVector<T>, T) {
        let mut g = rng::child(seed, index as u64);
        let mut zeta = if index == 0 {
            DVector::from_element(s_dim, T::ONE / lit::<T>(s_dim as f64))
        } else {
            DVector::from_fn(s_dim, |_, _| rng::uniform::<T>(&mut g))
        };
        project(&mut zeta);
        let outcome = ascend(
            &Ascent {
                objective: &objective_fn,
                gradient: &gradient_fn,
                project: &project,
                guard: None,
            },
            zeta,
            &opts.ascent,
        );
        (index, outcome.x, outcome.objective)
    };
    let results: Vec<(usize, DVector<T>, T)> =
        (0..restarts.max(1)).into_par_iter().map(run_one).collect();
    let best = results
        .iter()
        .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(b.0.cmp(&a.0)))
        .expect("at least one restart");

    let zeta: Vec<T> = best.1.iter().copied().collect();
    let sp = superpose_patterns(&basis, &zeta)?;
    let min_leak = leakage_margins(cfg, &sp.pattern, &window)?
        .into_iter()
        .fold(T::INFINITY, T::min);
    let report = SolveReport {
        solution: Solution {
            pattern: sp.pattern,
            digital: Some(digital),
            window,
        },
        objective: best.2,
        objective_trace: vec![best.2],
        feasibility: Feasibility {
            min_leakage_slack: min_leak,
            min_constraint_slack: T::INFINITY,
        },
        seed,
        restarts_used: restarts.max(1),
    };
    Ok((zeta, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamopt::pareto::{unconstrained_sensing_max, CaseStudy, CommPath, TargetSet};
    use crate::wavefield::Direction;

    fn base_cfg() -> RhsConfig<f64> {
        let wavelength = 0.0125;
        RhsConfig::linear(50, wavelength / 3.0, wavelength)
    }

    #[test]
    fn single_target_matches_pareto_corner() {
        // 0 users, 1 target, α₀ = 0: the AO solver degenerates to the same
        // single-direction power maximization the case-study solver does.
        let cfg = base_cfg();
        let angle = 0.3;
        let problem = JcasProblem {
            cfg: cfg.clone(),
            window: ApertureWindow::full(&cfg),
            users: Vec::new(),
            radar: RadarUtilityConfig::unconstrained(
                vec![Direction::from_broadside(angle)],
                0.0,
            ),
            radar_streams: 1,
            power: 1.0,
            noise: 1e-2,
        };
        let report = jcas_transmit(&problem, 6, 3, &AoOptions::default()).unwrap();

        let case = CaseStudy {
            cfg,
            targets: TargetSet::One { angle },
            channel: vec![CommPath {
                angle: -0.2,
                gain: Cplx::new(1.0, 0.0),
            }],
            power: 1.0,
            noise: 1e-2,
        };
        let corner = unconstrained_sensing_max(&case, 6, 3).unwrap();
        assert!(
            (report.objective - corner.objective).abs() <= 0.01 * corner.objective,
            "jcas {} vs pareto {}",
            report.objective,
            corner.objective
        );
    }

    #[test]
    fn zero_floor_dominates_positive_floor() {
        let cfg = base_cfg();
        let h = crate::wavefield::synth_channel(
            &[crate::wavefield::PathSpec::far(-0.4, Some(Cplx::new(1.0, 0.0)))],
            cfg.element_count(),
            cfg.element_spacing,
            cfg.wavelength,
            5,
        )
        .unwrap()
        .h;
        let mk = |floor: f64| JcasProblem {
            cfg: cfg.clone(),
            window: ApertureWindow::full(&cfg),
            users: vec![JcasUser {
                channel: h.clone(),
                sinr_floor: floor,
            }],
            radar: RadarUtilityConfig::unconstrained(
                vec![Direction::from_broadside(0.35)],
                0.0,
            ),
            radar_streams: 1,
            power: 1.0,
            noise: 1e-2,
        };
        let free = jcas_transmit(&mk(0.0), 4, 7, &AoOptions::default()).unwrap();
        let constrained = jcas_transmit(&mk(3.0), 4, 7, &AoOptions::default()).unwrap();
        assert!(
            free.objective >= constrained.objective - 1e-9,
            "{} vs {}",
            free.objective,
            constrained.objective
        );
        assert!(constrained.feasibility.min_constraint_slack >= -1e-6);
    }

    #[test]
    fn trace_monotone_and_leakage_feasible() {
        let cfg = base_cfg();
        let problem = JcasProblem {
            cfg: cfg.clone(),
            window: ApertureWindow::full(&cfg),
            users: Vec::new(),
            radar: RadarUtilityConfig::unconstrained(
                vec![
                    Direction::from_broadside(-0.6),
                    Direction::from_broadside(0.2),
                ],
                0.5,
            ),
            radar_streams: 1,
            power: 1.0,
            noise: 1e-2,
        };
        let report = jcas_transmit(&problem, 4, 11, &AoOptions::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{:?}", report.objective_trace);
        }
        assert!(report.feasibility.min_leakage_slack >= -1e-9);
        assert!(report.solution.pattern.in_box());
    }

    #[test]
    fn infeasible_floor_reported() {
        let cfg = base_cfg();
        let h = crate::wavefield::steering(
            cfg.element_count(),
            cfg.element_spacing,
            cfg.wavelength,
            -0.4,
            None,
        );
        let problem = JcasProblem {
            cfg: cfg.clone(),
            window: ApertureWindow::full(&cfg),
            users: vec![JcasUser {
                channel: h,
                sinr_floor: 1e9,
            }],
            radar: RadarUtilityConfig::unconstrained(
                vec![Direction::from_broadside(0.3)],
                0.0,
            ),
            radar_streams: 1,
            power: 1.0,
            noise: 1e-2,
        };
        assert!(matches!(
            jcas_transmit(&problem, 2, 13, &AoOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn hdma_single_direction_recovers_pattern() {
        let cfg = base_cfg();
        let dir = Direction::from_broadside(0.25);
        let (zeta, report) = hdma_weights(
            &cfg,
            &[dir],
            HdmaObjective::SumDirectionalPower,
            1.0,
            4,
            3,
            &AoOptions::default(),
        )
        .unwrap();
        assert_eq!(zeta.len(), 1);
        assert!(zeta[0] > 0.0);
        // The returned pattern is the direction pattern up to scale.
        let base = crate::rhs::pattern_for_direction(&cfg, dir).unwrap();
        let got = &report.solution.pattern;
        let ratio = got.amplitudes[0] / base.amplitudes[0];
        for (a, b) in got.amplitudes.iter().zip(&base.amplitudes) {
            assert!((a - ratio * b).abs() < 1e-9);
        }
    }

    #[test]
    fn hdma_restricted_set_below_elementwise_solve() {
        let cfg = base_cfg();
        let dirs = vec![
            Direction::from_broadside(-0.45),
            Direction::from_broadside(0.3),
        ];
        let (zeta, hdma_report) = hdma_weights(
            &cfg,
            &dirs,
            HdmaObjective::SumDirectionalPower,
            1.0,
            4,
            9,
            &AoOptions::default(),
        )
        .unwrap();
        assert_eq!(zeta.len(), dirs.len()); // one feed → S = directions

        // Element-wise solve of the same objective warm-started from the
        // HDMA pattern can only do better.
        let f = build_propagation_matrix(&cfg).unwrap();
        let mut q = DMatrix::from_element(cfg.element_count(), cfg.element_count(), 0.0);
        for d in &dirs {
            let a = planar_steering(&cfg, *d);
            let c = DVector::from_fn(cfg.element_count(), |i, _| a[i] * f[(i, 0)]);
            crate::beamopt::qcqp::add_correlation_form(&mut q, &c, 1.0);
        }
        let spec = crate::beamopt::qcqp::QcqpSpec::new(
            cfg.clone(),
            ApertureWindow::full(&cfg),
            q,
        );
        let mut opts = crate::beamopt::qcqp::SolveOptions::default();
        opts.warm_starts = vec![DVector::from_row_slice(
            &hdma_report.solution.pattern.amplitudes,
        )];
        let full = crate::beamopt::qcqp::solve_pattern_qcqp(&spec, 8, 9, &opts).unwrap();
        // hdma utility uses B = √P_t·I (1 feed ⇒ scalar √P_t): P_t·Σ|cᵀψ|².
        assert!(
            hdma_report.objective <= full.objective * 1.0 + 1e-9,
            "hdma {} vs full {}",
            hdma_report.objective,
            full.objective
        );
    }
}
