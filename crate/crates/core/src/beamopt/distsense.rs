//! Distributed sensing over multiple transmit/receive RHS subarrays.
//!
//! P transmit surfaces radiate mutually orthogonal waveforms; Q receive
//! surfaces collect the echoes of targets and clutter, separate the
//! transmitters by matched filtering, and the control center maximizes the
//! worst-case average SINR over the targets. The per-pair echo after
//! matched filtering is rank-1, `V^j_{p,q} = κ_j·(Mʳ_q)ᵀa_r·a_tᵀ·Mᵗ_p`, so
//! each fraction admits the quadratic transform with a matrix auxiliary.
//!
//! Time delays enter as unit-modulus phases on the reflection coefficients
//! and drop out of every `‖·‖²`, so they do not affect the SINR. The
//! matched-filter noise power is the expectation `σ²·L_t·‖Mʳ_q‖²_F`.

use crate::beamopt::engine::{ascend, Ascent, PatternFeasibleSet};
use crate::beamopt::fields::{DiagQuad, LinearField};
use crate::beamopt::jcas::AoOptions;
use crate::beamopt::report::{Feasibility, Solution, SolveReport};
use crate::error::Error;
use crate::rhs::{
    build_propagation_matrix, leakage_margins, ApertureWindow, HolographicPattern, RhsConfig,
};
use crate::rng;
use crate::scalar::{cis, czero, lit, Cplx, Real};
use crate::wavefield::steering;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// One scatterer: angles toward every transmit and receive subarray, a
/// reflection coefficient, a propagation delay, and whether it is clutter
/// (clutter contributes interference but is not protected by the max-min).
#[derive(Debug, Clone)]
pub struct Scatter<T: Real> {
    pub tx_angles: Vec<T>,
    pub rx_angles: Vec<T>,
    pub reflection: Cplx<T>,
    pub delay_s: T,
    pub clutter: bool,
}

/// Orthogonal waveform set: `S_p·S_pᴴ = I` and `S_p·S_p'ᴴ = 0` for p ≠ p'.
#[derive(Debug, Clone)]
pub struct Waveforms<T: Real> {
    pub streams: Vec<DMatrix<Cplx<T>>>,
}

impl<T: Real> Waveforms<T> {
    /// Rows of a unitary DFT matrix of length ≥ P·L_t, partitioned into P
    /// blocks of L_t rows each.
    pub fn dft(subarrays: usize, feeds: usize, length: usize) -> Result<Self> {
        let needed = subarrays * feeds;
        if length < needed {
            return Err(Error::argument(format!(
                "waveform length {length} shorter than P·L_t = {needed}"
            )));
        }
        let scale = T::ONE / lit::<T>(length as f64).sqrt();
        let streams = (0..subarrays)
            .map(|p| {
                DMatrix::from_fn(feeds, length, |r, c| {
                    let row = p * feeds + r;
                    cis(-T::two_pi() * lit::<T>((row * c) as f64) / lit(length as f64))
                        .scale(scale)
                })
            })
            .collect();
        Ok(Waveforms { streams })
    }

    /// Checks self-Grams `= I` and pairwise cross-Grams `= 0` (1e−9).
    pub fn validate(&self) -> Result<()> {
        let tol = lit::<T>(1e-9);
        for (p, s) in self.streams.iter().enumerate() {
            let gram = s * s.adjoint();
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let expected = if i == j { T::ONE } else { T::ZERO };
                    if (gram[(i, j)] - Cplx::new(expected, T::ZERO)).norm_sqr().sqrt() > tol {
                        return Err(Error::argument(format!(
                            "waveform {p} self-Gram deviates from identity"
                        )));
                    }
                }
            }
            for (pp, sp) in self.streams.iter().enumerate().skip(p + 1) {
                let cross = s * sp.adjoint();
                let norm = cross.norm();
                if norm > tol {
                    return Err(Error::argument(format!(
                        "waveforms {p} and {pp} are not orthogonal (cross-Gram norm {norm:?})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Problem instance for [`distsense_maxmin`].
#[derive(Debug, Clone)]
pub struct DistSenseProblem<T: Real> {
    pub tx: Vec<RhsConfig<T>>,
    pub rx: Vec<RhsConfig<T>>,
    pub scene: Vec<Scatter<T>>,
    pub waveforms: Waveforms<T>,
    /// Per-element noise power σ².
    pub noise: T,
}

impl<T: Real> DistSenseProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if self.tx.is_empty() || self.rx.is_empty() {
            return Err(Error::argument("need at least one tx and one rx subarray"));
        }
        for c in self.tx.iter().chain(&self.rx) {
            c.validate()?;
        }
        if !self.scene.iter().any(|s| !s.clutter) {
            return Err(Error::argument("need at least one target in the scene"));
        }
        for s in &self.scene {
            if s.tx_angles.len() != self.tx.len() || s.rx_angles.len() != self.rx.len() {
                return Err(Error::argument(
                    "every scatterer needs one angle per subarray",
                ));
            }
        }
        if self.waveforms.streams.len() != self.tx.len() {
            return Err(Error::argument("one waveform block per transmit subarray"));
        }
        for (p, cfg) in self.tx.iter().enumerate() {
            if self.waveforms.streams[p].nrows() != cfg.rows {
                return Err(Error::argument("waveform rows must match feed count"));
            }
        }
        self.waveforms.validate()?;
        if self.noise <= T::ZERO {
            return Err(Error::argument("noise must be positive"));
        }
        Ok(())
    }

    fn delay_phase(&self, s: &Scatter<T>) -> Cplx<T> {
        // Delay → free-space phase at the carrier; unit modulus.
        let c0 = lit::<T>(299_792_458.0);
        let k0 = T::two_pi() / self.tx[0].wavelength;
        cis(-k0 * c0 * s.delay_s)
    }
}

/// Stacked-pattern bookkeeping: all tx patterns in one block and all rx
/// patterns in another, with per-subarray offsets.
struct Stacking {
    offsets: Vec<usize>,
    total: usize,
}

impl Stacking {
    fn new<T: Real>(cfgs: &[RhsConfig<T>]) -> Self {
        let mut offsets = Vec::with_capacity(cfgs.len());
        let mut total = 0;
        for c in cfgs {
            offsets.push(total);
            total += c.element_count();
        }
        Stacking { offsets, total }
    }
}

struct DistEval<'a, T: Real> {
    problem: &'a DistSenseProblem<T>,
    stack_t: Stacking,
    stack_r: Stacking,
    /// `tx_rows[j][p][n]`: steering ⊙ F weight of scatterer j at subarray p.
    tx_rows: Vec<Vec<Vec<Cplx<T>>>>,
    rx_rows: Vec<Vec<Vec<Cplx<T>>>>,
    /// `noise_quads[q]`: σ²·L_t·‖Mʳ_q‖²_F as a DiagQuad over the stacked rx
    /// block.
    noise_quads: Vec<DiagQuad<T>>,
    targets: Vec<usize>,
}

impl<'a, T: Real> DistEval<'a, T> {
    fn new(problem: &'a DistSenseProblem<T>) -> Result<Self> {
        let stack_t = Stacking::new(&problem.tx);
        let stack_r = Stacking::new(&problem.rx);
        let mut tx_rows = Vec::new();
        let mut rx_rows = Vec::new();
        for s in &problem.scene {
            let mut per_tx = Vec::new();
            for (p, cfg) in problem.tx.iter().enumerate() {
                let f = build_propagation_matrix(cfg)?;
                let a = steering(
                    cfg.element_count(),
                    cfg.element_spacing,
                    cfg.wavelength,
                    s.tx_angles[p],
                    None,
                );
                per_tx.push(
                    (0..cfg.element_count())
                        .map(|n| a[n] * f[(n, cfg.row_of(n))])
                        .collect(),
                );
            }
            tx_rows.push(per_tx);
            let mut per_rx = Vec::new();
            for (q, cfg) in problem.rx.iter().enumerate() {
                let f = build_propagation_matrix(cfg)?;
                let a = steering(
                    cfg.element_count(),
                    cfg.element_spacing,
                    cfg.wavelength,
                    s.rx_angles[q],
                    None,
                );
                per_rx.push(
                    (0..cfg.element_count())
                        .map(|n| a[n] * f[(n, cfg.row_of(n))])
                        .collect(),
                );
            }
            rx_rows.push(per_rx);
        }
        let mut noise_quads = Vec::new();
        for (q, cfg) in problem.rx.iter().enumerate() {
            let f = build_propagation_matrix(cfg)?;
            let lt = problem.waveforms.streams[0].nrows();
            let mut weights = DVector::from_element(stack_r.total, T::ZERO);
            for n in 0..cfg.element_count() {
                weights[stack_r.offsets[q] + n] = problem.noise
                    * lit::<T>(lt as f64)
                    * f[(n, cfg.row_of(n))].norm_sqr();
            }
            noise_quads.push(DiagQuad { weights });
        }
        let targets = problem
            .scene
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.clutter)
            .map(|(i, _)| i)
            .collect();
        Ok(DistEval {
            problem,
            stack_t,
            stack_r,
            tx_rows,
            rx_rows,
            noise_quads,
            targets,
        })
    }

    /// Transmit feed response of scatterer j at subarray p, per feed l, as
    /// linear fields over the stacked tx block.
    fn tx_fields(&self, j: usize, p: usize) -> Vec<LinearField<T>> {
        let cfg = &self.problem.tx[p];
        let off = self.stack_t.offsets[p];
        (0..cfg.rows)
            .map(|l| {
                let mut coeffs = vec![czero::<T>(); self.stack_t.total];
                for n in 0..cfg.element_count() {
                    if cfg.row_of(n) == l {
                        coeffs[off + n] = self.tx_rows[j][p][n];
                    }
                }
                LinearField::over_pattern(&coeffs)
            })
            .collect()
    }

    fn rx_fields(&self, j: usize, q: usize) -> Vec<LinearField<T>> {
        let cfg = &self.problem.rx[q];
        let off = self.stack_r.offsets[q];
        (0..cfg.rows)
            .map(|l| {
                let mut coeffs = vec![czero::<T>(); self.stack_r.total];
                for n in 0..cfg.element_count() {
                    if cfg.row_of(n) == l {
                        coeffs[off + n] = self.rx_rows[j][q][n];
                    }
                }
                LinearField::over_pattern(&coeffs)
            })
            .collect()
    }

    /// Feed-domain vectors at the current stacked patterns.
    fn tx_vec(&self, j: usize, p: usize, xt: &DVector<T>) -> Vec<Cplx<T>> {
        let cfg = &self.problem.tx[p];
        let off = self.stack_t.offsets[p];
        let mut v = vec![czero::<T>(); cfg.rows];
        for n in 0..cfg.element_count() {
            v[cfg.row_of(n)] += self.tx_rows[j][p][n].scale(xt[off + n]);
        }
        v
    }

    fn rx_vec(&self, j: usize, q: usize, xr: &DVector<T>) -> Vec<Cplx<T>> {
        let cfg = &self.problem.rx[q];
        let off = self.stack_r.offsets[q];
        let mut v = vec![czero::<T>(); cfg.rows];
        for n in 0..cfg.element_count() {
            v[cfg.row_of(n)] += self.rx_rows[j][q][n].scale(xr[off + n]);
        }
        v
    }

    /// Echo power of scatterer j over pair (p, q): `|κ_j|²·T·R`.
    fn echo_power(&self, j: usize, p: usize, q: usize, xt: &DVector<T>, xr: &DVector<T>) -> T {
        let t: T = self
            .tx_vec(j, p, xt)
            .iter()
            .map(|v| v.norm_sqr())
            .fold(T::ZERO, |a, b| a + b);
        let r: T = self
            .rx_vec(j, q, xr)
            .iter()
            .map(|v| v.norm_sqr())
            .fold(T::ZERO, |a, b| a + b);
        self.problem.scene[j].reflection.norm_sqr() * t * r
    }

    fn pair_noise(&self, q: usize, xr: &DVector<T>) -> T {
        self.noise_quads[q].eval(xr)
    }

    /// SINR of scatterer j_t over pair (p, q).
    fn pair_sinr(&self, jt: usize, p: usize, q: usize, xt: &DVector<T>, xr: &DVector<T>) -> T {
        let mut denom = self.pair_noise(q, xr);
        for j in 0..self.problem.scene.len() {
            if j != jt {
                denom += self.echo_power(j, p, q, xt, xr);
            }
        }
        self.echo_power(jt, p, q, xt, xr) / denom
    }

    /// Average SINR of a target across all pairs.
    fn avg_sinr(&self, jt: usize, xt: &DVector<T>, xr: &DVector<T>) -> T {
        let (np, nq) = (self.problem.tx.len(), self.problem.rx.len());
        let mut acc = T::ZERO;
        for p in 0..np {
            for q in 0..nq {
                acc += self.pair_sinr(jt, p, q, xt, xr);
            }
        }
        acc / lit((np * nq) as f64)
    }

    /// Worst-case average SINR over the targets.
    fn worst_avg_sinr(&self, xt: &DVector<T>, xr: &DVector<T>) -> T {
        self.targets
            .iter()
            .map(|&jt| self.avg_sinr(jt, xt, xr))
            .fold(T::INFINITY, T::min)
    }
}

/// Matrix auxiliary of the quadratic transform for one (target, pair).
type Lambda<T> = DMatrix<Cplx<T>>;

/// Outcome of the distributed max-min: the report (pattern = first tx) plus
/// all subarray patterns and the per-target average SINRs.
#[derive(Debug, Clone)]
pub struct DistSenseOutcome<T: Real> {
    pub report: SolveReport<T>,
    pub tx_patterns: Vec<HolographicPattern<T>>,
    pub rx_patterns: Vec<HolographicPattern<T>>,
    pub target_avg_sinrs: Vec<T>,
}

/// Maximizes the worst-case average target SINR over all subarray patterns.
pub fn distsense_maxmin<T: Real>(
    problem: &DistSenseProblem<T>,
    restarts: usize,
    seed: u64,
    opts: &AoOptions<T>,
) -> Result<DistSenseOutcome<T>> {
    problem.validate()?;
    let eval = DistEval::new(problem)?;
    let (np, nq) = (problem.tx.len(), problem.rx.len());
    let scene_n = problem.scene.len();
    let pair_count = lit::<T>((np * nq) as f64);

    // Stacked projections.
    let sets_t: Vec<PatternFeasibleSet<T>> = problem
        .tx
        .iter()
        .map(|c| PatternFeasibleSet::new(c, &ApertureWindow::full(c)))
        .collect();
    let sets_r: Vec<PatternFeasibleSet<T>> = problem
        .rx
        .iter()
        .map(|c| PatternFeasibleSet::new(c, &ApertureWindow::full(c)))
        .collect();
    let project_t = |v: &mut DVector<T>| {
        for (p, set) in sets_t.iter().enumerate() {
            let off = eval.stack_t.offsets[p];
            let n = problem.tx[p].element_count();
            let mut slice = DVector::from_fn(n, |i, _| v[off + i]);
            set.project(&mut slice);
            for i in 0..n {
                v[off + i] = slice[i];
            }
        }
    };
    let project_r = |v: &mut DVector<T>| {
        for (q, set) in sets_r.iter().enumerate() {
            let off = eval.stack_r.offsets[q];
            let n = problem.rx[q].element_count();
            let mut slice = DVector::from_fn(n, |i, _| v[off + i]);
            set.project(&mut slice);
            for i in 0..n {
                v[off + i] = slice[i];
            }
        }
    };

    let run_one = |index: usize| -> (usize, DVector<T>, DVector<T>, Vec<T>, T) {
        let mut g = rng::child(seed, index as u64);
        // Restart 0 starts from the holograms steered at the first target;
        // the rest are random.
        let (mut xt, mut xr) = if index == 0 {
            let jt = eval.targets[0];
            let mut xt = DVector::from_element(eval.stack_t.total, T::ZERO);
            for (p, cfg) in problem.tx.iter().enumerate() {
                let pat = crate::rhs::pattern_for_direction(
                    cfg,
                    crate::wavefield::Direction::from_broadside(problem.scene[jt].tx_angles[p]),
                )
                .expect("valid cfg");
                for (i, &a) in pat.amplitudes.iter().enumerate() {
                    xt[eval.stack_t.offsets[p] + i] = a;
                }
            }
            let mut xr = DVector::from_element(eval.stack_r.total, T::ZERO);
            for (q, cfg) in problem.rx.iter().enumerate() {
                let pat = crate::rhs::pattern_for_direction(
                    cfg,
                    crate::wavefield::Direction::from_broadside(problem.scene[jt].rx_angles[q]),
                )
                .expect("valid cfg");
                for (i, &a) in pat.amplitudes.iter().enumerate() {
                    xr[eval.stack_r.offsets[q] + i] = a;
                }
            }
            (xt, xr)
        } else {
            (
                DVector::from_fn(eval.stack_t.total, |_, _| rng::uniform::<T>(&mut g)),
                DVector::from_fn(eval.stack_r.total, |_, _| rng::uniform::<T>(&mut g)),
            )
        };
        project_t(&mut xt);
        project_r(&mut xr);

        // λ auxiliaries per (target, p, q).
        let mut lambdas: Vec<Vec<Vec<Lambda<T>>>> = eval
            .targets
            .iter()
            .map(|_| {
                (0..np)
                    .map(|p| {
                        (0..nq)
                            .map(|q| {
                                DMatrix::from_element(
                                    problem.rx[q].rows,
                                    problem.tx[p].rows,
                                    czero::<T>(),
                                )
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let mut trace = Vec::new();
        let rounds = opts.penalty_rounds.max(1) * opts.ao_rounds.max(1);
        let mut prev = -T::INFINITY;
        for _round in 0..rounds {
            // λ update: Λ = V/G per (target, pair).
            for (ti, &jt) in eval.targets.iter().enumerate() {
                for p in 0..np {
                    for q in 0..nq {
                        let kappa = problem.scene[jt].reflection
                            * problem.delay_phase(&problem.scene[jt]);
                        let rxv = eval.rx_vec(jt, q, &xr);
                        let txv = eval.tx_vec(jt, p, &xt);
                        let mut denom = eval.pair_noise(q, &xr);
                        for j in 0..scene_n {
                            if j != jt {
                                denom += eval.echo_power(j, p, q, &xt, &xr);
                            }
                        }
                        let lam = DMatrix::from_fn(rxv.len(), txv.len(), |r, c| {
                            (kappa * rxv[r] * txv[c]).unscale(denom)
                        });
                        lambdas[ti][p][q] = lam;
                    }
                }
            }

            // Surrogate of one target: (1/PQ)·Σ_pq [2Re(⟨Λ,V⟩) − ‖Λ‖²·G].
            // Blocks: all tx patterns, then all rx patterns.
            for tx_block in [true, false] {
                let lam_now = lambdas.clone();
                let surrogate_t = |ti: usize, xt: &DVector<T>, xr: &DVector<T>| -> T {
                    let jt = eval.targets[ti];
                    let mut acc = T::ZERO;
                    for p in 0..np {
                        for q in 0..nq {
                            let lam = &lam_now[ti][p][q];
                            let kappa = problem.scene[jt].reflection
                                * problem.delay_phase(&problem.scene[jt]);
                            let rxv = eval.rx_vec(jt, q, xr);
                            let txv = eval.tx_vec(jt, p, xt);
                            let mut inner = czero::<T>();
                            for r in 0..rxv.len() {
                                for c in 0..txv.len() {
                                    inner += lam[(r, c)].conj() * kappa * rxv[r] * txv[c];
                                }
                            }
                            let mut denom = eval.pair_noise(q, xr);
                            for j in 0..scene_n {
                                if j != jt {
                                    denom += eval.echo_power(j, p, q, xt, xr);
                                }
                            }
                            acc += lit::<T>(2.0) * inner.re - lam.norm_squared() * denom;
                        }
                    }
                    acc / pair_count
                };
                let objective = |v: &DVector<T>| -> T {
                    (0..eval.targets.len())
                        .map(|ti| {
                            if tx_block {
                                surrogate_t(ti, v, &xr)
                            } else {
                                surrogate_t(ti, &xt, v)
                            }
                        })
                        .fold(T::INFINITY, T::min)
                };
                // Numeric-free gradient: assembled from the same field
                // structure as the surrogate.
                let gradient = |v: &DVector<T>| -> DVector<T> {
                    let (mut min, mut arg) = (T::INFINITY, 0usize);
                    for ti in 0..eval.targets.len() {
                        let s = if tx_block {
                            surrogate_t(ti, v, &xr)
                        } else {
                            surrogate_t(ti, &xt, v)
                        };
                        if s < min {
                            min = s;
                            arg = ti;
                        }
                    }
                    let jt = eval.targets[arg];
                    let mut grad = DVector::from_element(v.len(), T::ZERO);
                    for p in 0..np {
                        for q in 0..nq {
                            let lam = &lam_now[arg][p][q];
                            let lam_sq = lam.norm_squared() / pair_count;
                            let kappa = problem.scene[jt].reflection
                                * problem.delay_phase(&problem.scene[jt]);
                            if tx_block {
                                // 2Re(⟨Λ, κ·rx·txᵀ⟩): tx side linear.
                                let rxv = eval.rx_vec(jt, q, &xr);
                                let t_fields = eval.tx_fields(jt, p);
                                for (l, f) in t_fields.iter().enumerate() {
                                    let mut mult = czero::<T>();
                                    for r in 0..rxv.len() {
                                        mult += lam[(r, l)].conj() * kappa * rxv[r];
                                    }
                                    // d 2Re(conj-side)/dx via inner gradient.
                                    f.add_inner_gradient(
                                        mult.conj(),
                                        lit::<T>(2.0) / pair_count,
                                        &mut grad,
                                    );
                                }
                                // −‖Λ‖²·Σ_{j≠jt} |κ_j|²·T_j(x)·R_j (fixed rx).
                                for j in 0..scene_n {
                                    if j == jt {
                                        continue;
                                    }
                                    let r_fix: T = eval
                                        .rx_vec(j, q, &xr)
                                        .iter()
                                        .map(|z| z.norm_sqr())
                                        .fold(T::ZERO, |a, b| a + b);
                                    let w = problem.scene[j].reflection.norm_sqr() * r_fix;
                                    for f in eval.tx_fields(j, p) {
                                        f.add_power_gradient(v, -lam_sq * w, &mut grad);
                                    }
                                }
                            } else {
                                let txv = eval.tx_vec(jt, p, &xt);
                                let r_fields = eval.rx_fields(jt, q);
                                for (l, f) in r_fields.iter().enumerate() {
                                    let mut mult = czero::<T>();
                                    for c in 0..txv.len() {
                                        mult += lam[(l, c)].conj() * kappa * txv[c];
                                    }
                                    f.add_inner_gradient(
                                        mult.conj(),
                                        lit::<T>(2.0) / pair_count,
                                        &mut grad,
                                    );
                                }
                                for j in 0..scene_n {
                                    if j == jt {
                                        continue;
                                    }
                                    let t_fix: T = eval
                                        .tx_vec(j, p, &xt)
                                        .iter()
                                        .map(|z| z.norm_sqr())
                                        .fold(T::ZERO, |a, b| a + b);
                                    let w = problem.scene[j].reflection.norm_sqr() * t_fix;
                                    for f in eval.rx_fields(j, q) {
                                        f.add_power_gradient(v, -lam_sq * w, &mut grad);
                                    }
                                }
                                // Noise term −‖Λ‖²·σ²·L_t·‖Mʳ‖² (rx only).
                                eval.noise_quads[q].add_gradient(v, -lam_sq, &mut grad);
                            }
                        }
                    }
                    grad
                };

                let guard = |v: &DVector<T>| -> T {
                    if tx_block {
                        eval.worst_avg_sinr(v, &xr)
                    } else {
                        eval.worst_avg_sinr(&xt, v)
                    }
                };
                if tx_block {
                    let outcome = ascend(
                        &Ascent {
                            objective: &objective,
                            gradient: &gradient,
                            project: &project_t,
                            guard: Some(&guard),
                        },
                        xt.clone(),
                        &opts.ascent,
                    );
                    xt = outcome.x;
                } else {
                    let outcome = ascend(
                        &Ascent {
                            objective: &objective,
                            gradient: &gradient,
                            project: &project_r,
                            guard: Some(&guard),
                        },
                        xr.clone(),
                        &opts.ascent,
                    );
                    xr = outcome.x;
                }
            }

            let tau = eval.worst_avg_sinr(&xt, &xr);
            trace.push(tau);
            if (tau - prev).abs() <= opts.tol * T::ONE.max(prev.abs()) {
                break;
            }
            prev = tau;
        }
        let tau = eval.worst_avg_sinr(&xt, &xr);
        (index, xt, xr, trace, tau)
    };

    let results: Vec<_> = (0..restarts.max(1)).into_par_iter().map(run_one).collect();
    let best = results
        .iter()
        .max_by(|a, b| a.4.partial_cmp(&b.4).unwrap().then(b.0.cmp(&a.0)))
        .expect("at least one restart");
    let (_, xt, xr, trace, tau) = best;

    let mut tx_patterns = Vec::new();
    let mut min_leak = T::INFINITY;
    for (p, cfg) in problem.tx.iter().enumerate() {
        let off = eval.stack_t.offsets[p];
        let pat = HolographicPattern::new(
            (0..cfg.element_count()).map(|i| xt[off + i]).collect(),
        );
        min_leak = leakage_margins(cfg, &pat, &ApertureWindow::full(cfg))?
            .into_iter()
            .fold(min_leak, T::min);
        tx_patterns.push(pat);
    }
    let mut rx_patterns = Vec::new();
    for (q, cfg) in problem.rx.iter().enumerate() {
        let off = eval.stack_r.offsets[q];
        let pat = HolographicPattern::new(
            (0..cfg.element_count()).map(|i| xr[off + i]).collect(),
        );
        min_leak = leakage_margins(cfg, &pat, &ApertureWindow::full(cfg))?
            .into_iter()
            .fold(min_leak, T::min);
        rx_patterns.push(pat);
    }
    let target_avg_sinrs: Vec<T> = eval
        .targets
        .iter()
        .map(|&jt| eval.avg_sinr(jt, xt, xr))
        .collect();

    let report = SolveReport {
        solution: Solution {
            pattern: tx_patterns[0].clone(),
            digital: None,
            window: ApertureWindow::full(&problem.tx[0]),
        },
        objective: *tau,
        objective_trace: trace.clone(),
        feasibility: Feasibility {
            min_leakage_slack: min_leak,
            min_constraint_slack: T::INFINITY,
        },
        seed,
        restarts_used: restarts.max(1),
    };
    Ok(DistSenseOutcome {
        report,
        tx_patterns,
        rx_patterns,
        target_avg_sinrs,
    })
}

/// Re-evaluates the worst-case average SINR of a fixed solution on a
/// (possibly modified) problem.
pub fn evaluate_worst_sinr<T: Real>(
    problem: &DistSenseProblem<T>,
    tx_patterns: &[HolographicPattern<T>],
    rx_patterns: &[HolographicPattern<T>],
) -> Result<T> {
    problem.validate()?;
    let eval = DistEval::new(problem)?;
    let mut xt = DVector::from_element(eval.stack_t.total, T::ZERO);
    for (p, pat) in tx_patterns.iter().enumerate() {
        for (i, &a) in pat.amplitudes.iter().enumerate() {
            xt[eval.stack_t.offsets[p] + i] = a;
        }
    }
    let mut xr = DVector::from_element(eval.stack_r.total, T::ZERO);
    for (q, pat) in rx_patterns.iter().enumerate() {
        for (i, &a) in pat.amplitudes.iter().enumerate() {
            xr[eval.stack_r.offsets[q] + i] = a;
        }
    }
    Ok(eval.worst_avg_sinr(&xt, &xr))
}
