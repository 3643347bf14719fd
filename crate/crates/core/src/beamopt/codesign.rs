//! Transmit/receive RHS transceiver co-design.
//!
//! A transmit RHS radiates ISAC signals; a receive RHS collects target
//! echoes `Σ_j β_j·a_r(θ_j)·a_tᵀ(θ_j)·Mᵗ·x + noise`. The worst-case target
//! SINR is maximized over the two holographic patterns, the digital
//! beamformer, and per-target receive filters, using the quadratic
//! transform: with auxiliaries λ_j the fractional SINR constraints become
//! `2Re(λ_jᴴA_jᴴ) − |λ_j|²G_j ≥ τ`, exact at λ_j = A_j/G_j.
//!
//! Antenna efficiencies υ_t, υ_r < 1 scale the radiated and collected
//! amplitudes by √υ; external noise passes through the receive aperture
//! (so υ_r scales it too) while internal RF-chain noise does not.

use crate::beamopt::engine::{ascend, Ascent, AscentOptions, PatternFeasibleSet};
use crate::beamopt::fields::{
    pack_cmatrix, project_power, unpack_cmatrix, DiagQuad, LinearField, SinrFields,
};
use crate::beamopt::jcas::{digital_fields, pattern_fields, surface_row, JcasUser};
use crate::beamopt::report::{Feasibility, Solution, SolveReport};
use crate::error::Error;
use crate::metrics::{cholesky_solve, hermitian_cholesky};
use crate::rhs::{
    build_propagation_matrix, leakage_margins, ApertureWindow, HolographicPattern, RhsConfig,
};
use crate::rng;
use crate::scalar::{czero, lit, Cplx, Real};
use crate::wavefield::steering;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// One sensing target seen by the transceiver (broadside-referenced angles).
#[derive(Debug, Clone, Copy)]
pub struct TargetEcho<T: Real> {
    pub tx_angle: T,
    pub rx_angle: T,
    /// Reflection coefficient β.
    pub reflection: Cplx<T>,
}

/// Problem instance for [`codesign_maxmin`].
#[derive(Debug, Clone)]
pub struct CodesignProblem<T: Real> {
    pub tx: RhsConfig<T>,
    pub rx: RhsConfig<T>,
    pub targets: Vec<TargetEcho<T>>,
    /// Downlink users served through the transmit RHS.
    pub users: Vec<JcasUser<T>>,
    /// Transmit antenna efficiency υ_t ∈ (0, 1].
    pub eff_tx: T,
    /// Receive antenna efficiency υ_r ∈ (0, 1].
    pub eff_rx: T,
    /// External (aperture) noise power σ²_ext.
    pub noise_ext: T,
    /// Internal (RF chain) noise power σ²_int.
    pub noise_int: T,
    /// Downlink user noise power σ².
    pub noise_user: T,
    /// Feed power budget ‖B‖² = P_t.
    pub power: T,
    /// Digital beamformer columns.
    pub streams: usize,
}

impl<T: Real> CodesignProblem<T> {
    pub fn validate(&self) -> Result<()> {
        self.tx.validate()?;
        self.rx.validate()?;
        if self.targets.is_empty() {
            return Err(Error::argument("need at least one target"));
        }
        if self.eff_tx <= T::ZERO || self.eff_tx > T::ONE {
            return Err(Error::argument("eff_tx must lie in (0, 1]"));
        }
        if self.eff_rx <= T::ZERO || self.eff_rx > T::ONE {
            return Err(Error::argument("eff_rx must lie in (0, 1]"));
        }
        if self.streams == 0 {
            return Err(Error::argument("need at least one stream"));
        }
        for u in &self.users {
            if u.channel.len() != self.tx.element_count() {
                return Err(Error::argument("user channel length mismatch"));
            }
        }
        Ok(())
    }
}

/// Quadratic-transform identity: `2Re(λᴴAᴴ) − |λ|²·G` evaluated at a given
/// auxiliary; equals `‖A‖²/G` at λ = A/G.
pub fn quadratic_transform_value<T: Real>(a: &[Cplx<T>], g: T, lambda: &[Cplx<T>]) -> T {
    let mut inner = czero::<T>();
    let mut lam_sq = T::ZERO;
    for (ak, lk) in a.iter().zip(lambda) {
        inner += lk.conj() * *ak;
        lam_sq += lk.norm_sqr();
    }
    lit::<T>(2.0) * inner.re - lam_sq * g
}

/// The optimal auxiliary λ* = A/G.
pub fn quadratic_transform_optimum<T: Real>(a: &[Cplx<T>], g: T) -> Vec<Cplx<T>> {
    a.iter().map(|ak| ak.unscale(g)).collect()
}

struct CodesignState<T: Real> {
    psi_t: DVector<T>,
    psi_r: DVector<T>,
    digital: DMatrix<Cplx<T>>,
    filters: Vec<DVector<Cplx<T>>>,
    lambdas: Vec<Vec<Cplx<T>>>,
}

struct CodesignEval<'a, T: Real> {
    problem: &'a CodesignProblem<T>,
    f_t: DMatrix<Cplx<T>>,
    f_r: DMatrix<Cplx<T>>,
    /// Per-target masked tx surface row (steering ⊙ F, scaled √υ_t).
    tx_rows: Vec<Vec<Cplx<T>>>,
    /// Per-target masked rx surface row (steering ⊙ F, scaled √υ_r).
    rx_rows: Vec<Vec<Cplx<T>>>,
    user_rows: Vec<Vec<Cplx<T>>>,
    window_t: ApertureWindow,
    window_r: ApertureWindow,
}

impl<'a, T: Real> CodesignEval<'a, T> {
    fn new(problem: &'a CodesignProblem<T>) -> Result<Self> {
        let f_t = build_propagation_matrix(&problem.tx)?;
        let f_r = build_propagation_matrix(&problem.rx)?;
        let window_t = ApertureWindow::full(&problem.tx);
        let window_r = ApertureWindow::full(&problem.rx);
        let st = problem.eff_tx.sqrt();
        let sr = problem.eff_rx.sqrt();
        let tx_rows = problem
            .targets
            .iter()
            .map(|t| {
                let a = steering(
                    problem.tx.element_count(),
                    problem.tx.element_spacing,
                    problem.tx.wavelength,
                    t.tx_angle,
                    None,
                );
                surface_row(&problem.tx, &window_t, &f_t, &a)
                    .into_iter()
                    .map(|c| c.scale(st))
                    .collect()
            })
            .collect();
        let rx_rows = problem
            .targets
            .iter()
            .map(|t| {
                let a = steering(
                    problem.rx.element_count(),
                    problem.rx.element_spacing,
                    problem.rx.wavelength,
                    t.rx_angle,
                    None,
                );
                surface_row(&problem.rx, &window_r, &f_r, &a)
                    .into_iter()
                    .map(|c| c.scale(sr))
                    .collect()
            })
            .collect();
        let user_rows = problem
            .users
            .iter()
            .map(|u| {
                surface_row(&problem.tx, &window_t, &f_t, &u.channel)
                    .into_iter()
                    .map(|c| c.scale(st))
                    .collect()
            })
            .collect();
        Ok(CodesignEval {
            problem,
            f_t,
            f_r,
            tx_rows,
            rx_rows,
            user_rows,
            window_t,
            window_r,
        })
    }

    /// Feed-domain transmit response `q_j = a_t,jᵀ·Mᵗ ∈ C^{Lt}`.
    fn q_vec(&self, j: usize, psi_t: &DVector<T>) -> Vec<Cplx<T>> {
        let cfg = &self.problem.tx;
        let mut q = vec![czero::<T>(); cfg.rows];
        for n in 0..cfg.element_count() {
            q[cfg.row_of(n)] += self.tx_rows[j][n].scale(psi_t[n]);
        }
        q
    }

    /// Feed-domain receive response `p_j = (Mʳ)ᵀ·a_r,j ∈ C^{Lr}`.
    fn p_vec(&self, j: usize, psi_r: &DVector<T>) -> Vec<Cplx<T>> {
        let cfg = &self.problem.rx;
        let mut p = vec![czero::<T>(); cfg.rows];
        for n in 0..cfg.element_count() {
            p[cfg.row_of(n)] += self.rx_rows[j][n].scale(psi_r[n]);
        }
        p
    }

    /// `q_jᵀ·B` per stream.
    fn qb(&self, q: &[Cplx<T>], b: &DMatrix<Cplx<T>>) -> Vec<Cplx<T>> {
        (0..b.ncols())
            .map(|k| {
                let mut acc = czero::<T>();
                for l in 0..b.nrows() {
                    acc += q[l] * b[(l, k)];
                }
                acc
            })
            .collect()
    }

    /// External-noise weight of `‖conj(Mʳ)·w‖²` as a diagonal quadratic in
    /// ψ_r: weight_n = υ_r·|F_r[n,l(n)]|²·|w_{l(n)}|².
    fn ext_noise_quad(&self, w: &DVector<Cplx<T>>) -> DiagQuad<T> {
        let cfg = &self.problem.rx;
        let weights = DVector::from_fn(cfg.element_count(), |n, _| {
            let l = cfg.row_of(n);
            self.problem.eff_rx * self.f_r[(n, l)].norm_sqr() * w[l].norm_sqr()
        });
        DiagQuad { weights }
    }

    /// Constant part of G_j: internal noise `N_r·σ²_int·‖w_j‖²`.
    fn int_noise(&self, w: &DVector<Cplx<T>>) -> T {
        lit::<T>(self.problem.rx.element_count() as f64)
            * self.problem.noise_int
            * w.iter().map(|v| v.norm_sqr()).fold(T::ZERO, |a, b| a + b)
    }

    /// Numerator row A_j ∈ C^K and denominator G_j at the current state.
    fn target_terms(&self, j: usize, st: &CodesignState<T>) -> (Vec<Cplx<T>>, T) {
        let w = &st.filters[j];
        let p_j = self.p_vec(j, &st.psi_r);
        let rho_j: Cplx<T> = w
            .iter()
            .zip(&p_j)
            .map(|(wl, pl)| wl.conj() * *pl)
            .fold(czero::<T>(), |a, b| a + b);
        let q_j = self.q_vec(j, &st.psi_t);
        let qb_j = self.qb(&q_j, &st.digital);
        let beta = self.problem.targets[j].reflection;
        let a: Vec<Cplx<T>> = qb_j.iter().map(|e| beta * rho_j * *e).collect();

        let mut interference = vec![czero::<T>(); st.digital.ncols()];
        for i in 0..self.problem.targets.len() {
            if i == j {
                continue;
            }
            let p_i = self.p_vec(i, &st.psi_r);
            let rho_i: Cplx<T> = w
                .iter()
                .zip(&p_i)
                .map(|(wl, pl)| wl.conj() * *pl)
                .fold(czero::<T>(), |a, b| a + b);
            let q_i = self.q_vec(i, &st.psi_t);
            let qb_i = self.qb(&q_i, &st.digital);
            let beta_i = self.problem.targets[i].reflection;
            for (k, e) in qb_i.iter().enumerate() {
                interference[k] += beta_i * rho_i * *e;
            }
        }
        let mut g = interference.iter().map(|v| v.norm_sqr()).fold(T::ZERO, |a, b| a + b);
        g += self.problem.noise_ext * self.ext_noise_quad(w).eval(&st.psi_r);
        g += self.int_noise(w);
        (a, g)
    }

    /// Sensing SINR of target j.
    fn nu(&self, j: usize, st: &CodesignState<T>) -> T {
        let (a, g) = self.target_terms(j, st);
        a.iter().map(|v| v.norm_sqr()).fold(T::ZERO, |x, y| x + y) / g
    }

    fn min_nu(&self, st: &CodesignState<T>) -> T {
        (0..self.problem.targets.len())
            .map(|j| self.nu(j, st))
            .fold(T::INFINITY, T::min)
    }

    /// Optimal receive filter for target j: the numerator is rank-1 in w, so
    /// `w* ∝ Q_j⁻¹·p_j` with Q_j the interference-plus-noise quadratic.
    fn best_filter(&self, j: usize, st: &CodesignState<T>) -> DVector<Cplx<T>> {
        let lr = self.problem.rx.rows;
        let mut q_mat = DMatrix::from_element(lr, lr, czero::<T>());
        for i in 0..self.problem.targets.len() {
            if i == j {
                continue;
            }
            let p_i = DVector::from_vec(self.p_vec(i, &st.psi_r));
            let q_i = self.q_vec(i, &st.psi_t);
            let qb_i = self.qb(&q_i, &st.digital);
            let beta_i = self.problem.targets[i].reflection;
            for (_k, e) in qb_i.iter().enumerate() {
                // d_k = β_i·(q_iB)_k·p_i; Q += d_k·d_kᴴ.
                let c = beta_i * *e;
                for r in 0..lr {
                    for s in 0..lr {
                        q_mat[(r, s)] += p_i[r] * c * (p_i[s] * c).conj();
                    }
                }
            }
        }
        // External noise: diag_l(σ²_ext·υ_r·Σ_{n∈row l}|F|²ψ²) and internal
        // N_r·σ²_int·I.
        let cfg = &self.problem.rx;
        for n in 0..cfg.element_count() {
            let l = cfg.row_of(n);
            q_mat[(l, l)] += Cplx::new(
                self.problem.noise_ext
                    * self.problem.eff_rx
                    * self.f_r[(n, l)].norm_sqr()
                    * st.psi_r[n]
                    * st.psi_r[n],
                T::ZERO,
            );
        }
        let ridge = lit::<T>(cfg.element_count() as f64) * self.problem.noise_int
            + lit::<T>(1e-12);
        for l in 0..lr {
            q_mat[(l, l)] += Cplx::new(ridge, T::ZERO);
        }
        let p_j = DVector::from_vec(self.p_vec(j, &st.psi_r));
        let chol = hermitian_cholesky(&q_mat).expect("interference covariance PD");
        let w = cholesky_solve(&chol, &p_j);
        let norm = w.norm();
        if norm > T::ZERO {
            w.map(|v| v.unscale(norm))
        } else {
            DVector::from_element(lr, Cplx::new(T::ONE, T::ZERO))
        }
    }

    /// Linear fields of A_j and the interference row over the chosen block,
    /// plus the (constant or quadratic) extra denominator pieces.
    fn surrogate_parts(
        &self,
        j: usize,
        st: &CodesignState<T>,
        block: CodesignBlock,
    ) -> SurrogateParts<T> {
        let w = &st.filters[j];
        let k_cols = st.digital.ncols();
        let beta_of = |i: usize| self.problem.targets[i].reflection;
        let rho_of = |i: usize| -> Cplx<T> {
            let p_i = self.p_vec(i, &st.psi_r);
            w.iter()
                .zip(&p_i)
                .map(|(wl, pl)| wl.conj() * *pl)
                .fold(czero::<T>(), |a, b| a + b)
        };

        let field_for = |i: usize| -> Vec<LinearField<T>> {
            match block {
                CodesignBlock::PatternTx => {
                    // A_ik(ψt) = β·ρ_i·Σ_n tx_row_i[n]·B[l(n),k]·ψt[n].
                    let scale = beta_of(i) * rho_of(i);
                    let row: Vec<Cplx<T>> =
                        self.tx_rows[i].iter().map(|c| *c * scale).collect();
                    pattern_fields(&self.problem.tx, &row, &st.digital)
                }
                CodesignBlock::PatternRx => {
                    // A_ik(ψr) = β·(q_iB)_k·Σ_n rx_row_i[n]·conj(w_{l(n)})ψr[n].
                    let q_i = self.q_vec(i, &st.psi_t);
                    let qb_i = self.qb(&q_i, &st.digital);
                    let cfg = &self.problem.rx;
                    (0..k_cols)
                        .map(|k| {
                            let scale = beta_of(i) * qb_i[k];
                            let coeffs: Vec<Cplx<T>> = (0..cfg.element_count())
                                .map(|n| {
                                    self.rx_rows[i][n] * w[cfg.row_of(n)].conj() * scale
                                })
                                .collect();
                            LinearField::over_pattern(&coeffs)
                        })
                        .collect()
                }
                CodesignBlock::Digital => {
                    let scale = beta_of(i) * rho_of(i);
                    let q_i = self.q_vec(i, &st.psi_t);
                    let row: Vec<Cplx<T>> = q_i.iter().map(|c| *c * scale).collect();
                    // e_k = Σ_l row_l·B_{l,k}.
                    let feeds = self.problem.tx.rows;
                    (0..k_cols)
                        .map(|k| {
                            let mut coeffs = vec![czero::<T>(); feeds * k_cols];
                            for l in 0..feeds {
                                coeffs[k * feeds + l] = row[l];
                            }
                            LinearField::over_complex(&coeffs)
                        })
                        .collect()
                }
            }
        };

        let signal = field_for(j);
        let mut interference = Vec::new();
        for i in 0..self.problem.targets.len() {
            if i != j {
                interference.push(field_for(i));
            }
        }
        let ext = match block {
            CodesignBlock::PatternRx => Some(self.ext_noise_quad(w)),
            _ => None,
        };
        let constant = match block {
            CodesignBlock::PatternRx => self.int_noise(w),
            _ => {
                self.problem.noise_ext * self.ext_noise_quad(w).eval(&st.psi_r)
                    + self.int_noise(w)
            }
        };
        SurrogateParts {
            signal,
            interference,
            ext,
            ext_weight: self.problem.noise_ext,
            constant,
        }
    }

    /// Downlink user SINR fields over the chosen block (tx side only).
    fn user_fields(&self, st: &CodesignState<T>, block: CodesignBlock) -> Vec<SinrFields<T>> {
        let users = self.problem.users.len();
        let total = st.digital.ncols();
        self.user_rows
            .iter()
            .enumerate()
            .map(|(u, row)| {
                let all: Vec<LinearField<T>> = match block {
                    CodesignBlock::PatternTx => {
                        pattern_fields(&self.problem.tx, row, &st.digital)
                    }
                    CodesignBlock::Digital => {
                        digital_fields(&self.problem.tx, row, &st.psi_t, total)
                    }
                    CodesignBlock::PatternRx => Vec::new(),
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
                    signal: signal.unwrap_or_else(|| LinearField::zeros(0)),
                    other_users,
                    radar,
                    noise: self.problem.noise_user,
                    floor: self.problem.users[u].sinr_floor,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CodesignBlock {
    PatternTx,
    PatternRx,
    Digital,
}

struct SurrogateParts<T: Real> {
    signal: Vec<LinearField<T>>,
    interference: Vec<Vec<LinearField<T>>>,
    ext: Option<DiagQuad<T>>,
    ext_weight: T,
    constant: T,
}

impl<T: Real> SurrogateParts<T> {
    fn g_value(&self, x: &DVector<T>) -> T {
        let mut g = T::ZERO;
        for row in &self.interference {
            for f in row {
                g += f.eval(x).norm_sqr();
            }
        }
        if let Some(q) = &self.ext {
            g += self.ext_weight * q.eval(x);
        }
        g + self.constant
    }

    /// `2Re(λᴴA(x)) − ‖λ‖²·G(x)`.
    fn surrogate(&self, lambda: &[Cplx<T>], x: &DVector<T>) -> T {
        let a: Vec<Cplx<T>> = self.signal.iter().map(|f| f.eval(x)).collect();
        let lam_sq = lambda.iter().map(|l| l.norm_sqr()).fold(T::ZERO, |p, q| p + q);
        let mut inner = czero::<T>();
        for (ak, lk) in a.iter().zip(lambda) {
            inner += lk.conj() * *ak;
        }
        lit::<T>(2.0) * inner.re - lam_sq * self.g_value(x)
    }

    fn surrogate_gradient(&self, lambda: &[Cplx<T>], x: &DVector<T>) -> DVector<T> {
        let dim = x.len();
        let mut grad = DVector::from_element(dim, T::ZERO);
        for (f, lk) in self.signal.iter().zip(lambda) {
            f.add_inner_gradient(*lk, lit(2.0), &mut grad);
        }
        let lam_sq = lambda.iter().map(|l| l.norm_sqr()).fold(T::ZERO, |p, q| p + q);
        for row in &self.interference {
            for f in row {
                f.add_power_gradient(x, -lam_sq, &mut grad);
            }
        }
        if let Some(q) = &self.ext {
            q.add_gradient(x, -lam_sq * self.ext_weight, &mut grad);
        }
        grad
    }
}

/// Outcome of the co-design: the standard report (pattern = ψᵗ) plus the
/// receive pattern and filters.
#[derive(Debug, Clone)]
pub struct CodesignOutcome<T: Real> {
    pub report: SolveReport<T>,
    pub rx_pattern: HolographicPattern<T>,
    pub filters: Vec<DVector<Cplx<T>>>,
    /// Per-target sensing SINRs at the solution.
    pub target_sinrs: Vec<T>,
}

/// Maximizes the minimum target SINR over ψᵗ, ψʳ, B, and the receive
/// filters; the report's trace is the per-round worst-case SINR τ.
pub fn codesign_maxmin<T: Real>(
    problem: &CodesignProblem<T>,
    restarts: usize,
    seed: u64,
    opts: &super::jcas::AoOptions<T>,
) -> Result<CodesignOutcome<T>> {
    problem.validate()?;
    if problem
        .targets
        .iter()
        .all(|t| t.reflection.norm_sqr() == T::ZERO)
    {
        return Err(Error::argument(
            "all reflection coefficients are zero: sensing SINR is identically zero",
        ));
    }
    let eval = CodesignEval::new(problem)?;
    let nj = problem.targets.len();
    let set_t = PatternFeasibleSet::new(&problem.tx, &eval.window_t);
    let set_r = PatternFeasibleSet::new(&problem.rx, &eval.window_r);
    let feeds = problem.tx.rows;
    let streams = problem.streams;

    let run_one = |index: usize| -> (usize, CodesignState<T>, Vec<T>, bool, T, T) {
        let mut g = rng::child(seed, index as u64);
        // Restart 0 starts from the holograms steered at the first target.
        let (mut psi_t, mut psi_r) = if index == 0 {
            let t0 = &problem.targets[0];
            let pt = crate::rhs::pattern_for_direction(
                &problem.tx,
                crate::wavefield::Direction::from_broadside(t0.tx_angle),
            )
            .expect("valid cfg");
            let pr = crate::rhs::pattern_for_direction(
                &problem.rx,
                crate::wavefield::Direction::from_broadside(t0.rx_angle),
            )
            .expect("valid cfg");
            (
                DVector::from_vec(pt.amplitudes),
                DVector::from_vec(pr.amplitudes),
            )
        } else {
            (
                DVector::from_fn(problem.tx.element_count(), |_, _| rng::uniform::<T>(&mut g)),
                DVector::from_fn(problem.rx.element_count(), |_, _| rng::uniform::<T>(&mut g)),
            )
        };
        set_t.project(&mut psi_t);
        set_r.project(&mut psi_r);
        let mut b_packed = pack_cmatrix(&DMatrix::from_fn(feeds, streams, |_, _| {
            rng::complex_gaussian::<T>(&mut g)
        }));
        project_power(&mut b_packed, problem.power);
        let digital = unpack_cmatrix(&b_packed, feeds, streams);
        let mut st = CodesignState {
            psi_t,
            psi_r,
            digital,
            filters: vec![DVector::from_element(problem.rx.rows, Cplx::new(T::ONE, T::ZERO)); nj],
            lambdas: vec![vec![czero::<T>(); streams]; nj],
        };

        let mut trace = Vec::new();
        let mut rho = opts.penalty_initial;
        let stages = opts.penalty_rounds.max(1);
        for stage in 0..stages {
            let last_stage = stage + 1 == stages;
            let mut prev = -T::INFINITY;
            for _round in 0..opts.ao_rounds.max(1) {
                // Filters and auxiliaries first (closed forms).
                for j in 0..nj {
                    st.filters[j] = eval.best_filter(j, &st);
                }
                for j in 0..nj {
                    let (a, gdenom) = eval.target_terms(j, &st);
                    st.lambdas[j] = quadratic_transform_optimum(&a, gdenom);
                }

                // Block ascents on min_j of the surrogate.
                for block in [
                    CodesignBlock::PatternTx,
                    CodesignBlock::PatternRx,
                    CodesignBlock::Digital,
                ] {
                    let parts: Vec<SurrogateParts<T>> = (0..nj)
                        .map(|j| eval.surrogate_parts(j, &st, block))
                        .collect();
                    let lambdas = st.lambdas.clone();
                    let objective = |x: &DVector<T>| {
                        (0..nj)
                            .map(|j| parts[j].surrogate(&lambdas[j], x))
                            .fold(T::INFINITY, T::min)
                    };
                    let gradient = |x: &DVector<T>| {
                        let (mut min, mut arg) = (T::INFINITY, 0usize);
                        for j in 0..nj {
                            let s = parts[j].surrogate(&lambdas[j], x);
                            if s < min {
                                min = s;
                                arg = j;
                            }
                        }
                        parts[arg].surrogate_gradient(&lambdas[arg], x)
                    };
                    // User floors apply on tx-side blocks.
                    let users = if block == CodesignBlock::PatternRx {
                        Vec::new()
                    } else {
                        eval.user_fields(&st, block)
                    };
                    let slacks = |x: &DVector<T>| -> Vec<T> {
                        users.iter().map(|u| u.slack(x)).collect()
                    };
                    let slack_grads = |x: &DVector<T>| -> Vec<DVector<T>> {
                        users.iter().map(|u| u.slack_gradient(x)).collect()
                    };
                    let pen_obj = |x: &DVector<T>| {
                        let mut f = objective(x);
                        for s in slacks(x) {
                            if s < T::ZERO {
                                f -= rho * s * s;
                            }
                        }
                        f
                    };
                    let pen_grad = |x: &DVector<T>| {
                        let mut gr = gradient(x);
                        let sv = slacks(x);
                        if sv.iter().any(|&s| s < T::ZERO) {
                            for (s, sg) in sv.iter().zip(slack_grads(x)) {
                                if *s < T::ZERO {
                                    let w = -lit::<T>(2.0) * rho * *s;
                                    gr += sg.map(|e| e * w);
                                }
                            }
                        }
                        gr
                    };
                    // Guard: the true worst-case SINR over the active block.
                    let guard_state = |x: &DVector<T>| -> T {
                        let mut tmp = CodesignState {
                            psi_t: st.psi_t.clone(),
                            psi_r: st.psi_r.clone(),
                            digital: st.digital.clone(),
                            filters: st.filters.clone(),
                            lambdas: st.lambdas.clone(),
                        };
                        match block {
                            CodesignBlock::PatternTx => tmp.psi_t = x.clone(),
                            CodesignBlock::PatternRx => tmp.psi_r = x.clone(),
                            CodesignBlock::Digital => {
                                tmp.digital = unpack_cmatrix(x, feeds, streams)
                            }
                        }
                        eval.min_nu(&tmp)
                    };
                    let use_guard = last_stage || users.is_empty();
                    let x0 = match block {
                        CodesignBlock::PatternTx => st.psi_t.clone(),
                        CodesignBlock::PatternRx => st.psi_r.clone(),
                        CodesignBlock::Digital => pack_cmatrix(&st.digital),
                    };
                    let project: Box<dyn Fn(&mut DVector<T>)> = match block {
                        CodesignBlock::PatternTx => Box::new(|v: &mut DVector<T>| set_t.project(v)),
                        CodesignBlock::PatternRx => Box::new(|v: &mut DVector<T>| set_r.project(v)),
                        CodesignBlock::Digital => {
                            let budget = problem.power;
                            Box::new(move |v: &mut DVector<T>| project_power(v, budget))
                        }
                    };
                    let outcome = ascend(
                        &Ascent {
                            objective: &pen_obj,
                            gradient: &pen_grad,
                            project: project.as_ref(),
                            guard: if use_guard { Some(&guard_state) } else { None },
                        },
                        x0,
                        &opts.ascent,
                    );
                    match block {
                        CodesignBlock::PatternTx => st.psi_t = outcome.x,
                        CodesignBlock::PatternRx => st.psi_r = outcome.x,
                        CodesignBlock::Digital => {
                            st.digital = unpack_cmatrix(&outcome.x, feeds, streams)
                        }
                    }
                }

                let tau = eval.min_nu(&st);
                if last_stage {
                    trace.push(tau);
                }
                if (tau - prev).abs() <= opts.tol * T::ONE.max(prev.abs()) {
                    prev = tau;
                    break;
                }
                prev = tau;
            }
            rho *= lit(10.0);
        }

        // Final filter/λ refresh and exit feasibility.
        for j in 0..nj {
            st.filters[j] = eval.best_filter(j, &st);
        }
        let tau = eval.min_nu(&st);
        if let Some(last) = trace.last_mut() {
            if tau > *last {
                trace.push(tau);
            }
        }
        let mut min_slack = T::INFINITY;
        if !problem.users.is_empty() {
            let users = eval.user_fields(&st, CodesignBlock::Digital);
            let x = pack_cmatrix(&st.digital);
            for u in &users {
                min_slack = min_slack.min(u.slack(&x));
            }
        }
        let feasible = min_slack >= -opts.tol;
        (index, st, trace, feasible, tau, min_slack)
    };

    let results: Vec<_> = (0..restarts.max(1)).into_par_iter().map(run_one).collect();
    let best = results
        .iter()
        .filter(|r| r.3)
        .max_by(|a, b| a.4.partial_cmp(&b.4).unwrap().then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::infeasible("no restart satisfied the user floors"))?;

    let (_, st, trace, _, tau, min_slack) = best;
    let pattern = HolographicPattern::new(st.psi_t.iter().copied().collect());
    let rx_pattern = HolographicPattern::new(st.psi_r.iter().copied().collect());
    let min_leak_t = leakage_margins(&problem.tx, &pattern, &eval.window_t)?
        .into_iter()
        .fold(T::INFINITY, T::min);
    let min_leak_r = leakage_margins(&problem.rx, &rx_pattern, &eval.window_r)?
        .into_iter()
        .fold(T::INFINITY, T::min);
    let target_sinrs: Vec<T> = (0..nj).map(|j| eval.nu(j, st)).collect();
    let report = SolveReport {
        solution: Solution {
            pattern,
            digital: Some(st.digital.clone()),
            window: eval.window_t.clone(),
        },
        objective: *tau,
        objective_trace: trace.clone(),
        feasibility: Feasibility {
            min_leakage_slack: min_leak_t.min(min_leak_r),
            min_constraint_slack: *min_slack,
        },
        seed,
        restarts_used: restarts.max(1),
    };
    Ok(CodesignOutcome {
        report,
        rx_pattern,
        filters: st.filters.clone(),
        target_sinrs,
    })
}

/// Maximum downlink SNR of a single user through the transmit RHS with the
/// matched digital beamformer: `ζ = P_t·υ_t·‖Mᵀh‖²/σ²` maximized over ψ.
pub fn max_user_snr<T: Real>(
    tx: &RhsConfig<T>,
    channel: &DVector<Cplx<T>>,
    eff_tx: T,
    power: T,
    noise: T,
    restarts: usize,
    seed: u64,
) -> Result<SolveReport<T>> {
    let window = ApertureWindow::full(tx);
    let f = build_propagation_matrix(tx)?;
    let row = surface_row(tx, &window, &f, channel);
    let n = tx.element_count();
    let mut q = DMatrix::from_element(n, n, T::ZERO);
    for l in 0..tx.rows {
        let c = DVector::from_fn(n, |i, _| {
            if tx.row_of(i) == l {
                row[i]
            } else {
                czero::<T>()
            }
        });
        crate::beamopt::qcqp::add_correlation_form(&mut q, &c, power * eff_tx / noise);
    }
    let spec = crate::beamopt::qcqp::QcqpSpec::new(tx.clone(), window, q);
    crate::beamopt::qcqp::solve_pattern_qcqp(
        &spec,
        restarts,
        seed,
        &crate::beamopt::qcqp::SolveOptions::default(),
    )
}
