//! Communication, sensing, and economic performance metrics shared by the
//! optimizers.

use crate::error::Error;
use crate::rhs::{ApertureWindow, Beamformer};
use crate::scalar::{cmod, czero, lit, Cplx, Real};
use crate::wavefield::{direction_power, masked_effective_matrix, Direction};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// SINR decomposition in watts; `sinr = signal / (interference + noise)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SinrBreakdown<T: Real> {
    pub signal: T,
    pub interference: T,
    pub noise: T,
}

impl<T: Real> SinrBreakdown<T> {
    pub fn sinr(&self) -> T {
        self.signal / (self.interference + self.noise)
    }
}

/// Radar utility configuration: target directions, the cross-correlation
/// weight α₀, and the per-direction beampattern band (γ^l_j, γ^u_j) relative
/// to the first direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadarUtilityConfig<T: Real> {
    pub directions: Vec<Direction<T>>,
    pub alpha0: T,
    /// Per-direction gain band for directions j ≥ 2; entry j−1 bounds
    /// `P(θ_j)` to `[γ^l·P(θ_1), γ^u·P(θ_1)]`. Empty means unconstrained.
    pub band: Vec<(T, T)>,
}

impl<T: Real> RadarUtilityConfig<T> {
    pub fn unconstrained(directions: Vec<Direction<T>>, alpha0: T) -> Self {
        RadarUtilityConfig {
            directions,
            alpha0,
            band: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.is_empty() {
            return Err(Error::argument("radar utility needs at least one direction"));
        }
        if self.alpha0 < T::ZERO {
            return Err(Error::argument("alpha0 must be non-negative"));
        }
        if !self.band.is_empty() && self.band.len() != self.directions.len() - 1 {
            return Err(Error::argument(
                "band must list one (lower, upper) pair per direction after the first",
            ));
        }
        for &(lo, hi) in &self.band {
            if lo > hi {
                return Err(Error::argument("band lower bound exceeds upper bound"));
            }
        }
        Ok(())
    }
}

/// Downlink SINR of one user under communication beamformer columns `b_c`
/// and radar beamformer `b_s`:
/// signal `|hᵀ·D·M·b_{c,u}|²`, interference `|hᵀ·D·M·Σ_{u'≠u} b_{c,u'}|²`
/// plus the radar-stream power `‖hᵀ·D·M·B_s‖²`.
pub fn sinr<T: Real>(
    user_channel: &DVector<Cplx<T>>,
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    b_comm: &DMatrix<Cplx<T>>,
    b_radar: &DMatrix<Cplx<T>>,
    user_index: usize,
    noise: T,
) -> Result<SinrBreakdown<T>> {
    if noise <= T::ZERO {
        return Err(Error::argument("noise power must be positive"));
    }
    if user_channel.len() != bf.element_count() {
        return Err(Error::argument("channel length must match element count"));
    }
    if b_comm.nrows() != bf.feed_count() || b_radar.nrows() != bf.feed_count() {
        return Err(Error::argument("beamformer rows must match feed count"));
    }
    if user_index >= b_comm.ncols() {
        return Err(Error::argument("user index out of range"));
    }
    window.validate(&bf.cfg)?;

    // hᵀ·D·M, a 1×L row in the feed domain.
    let mut row = vec![czero::<T>(); bf.feed_count()];
    for i in 0..bf.element_count() {
        let l = bf.cfg.row_of(i);
        row[l] += user_channel[i] * bf.matrix[(i, l)].scale(window.mask(&bf.cfg, i));
    }

    let project = |col: usize, b: &DMatrix<Cplx<T>>| -> Cplx<T> {
        let mut acc = czero::<T>();
        for l in 0..b.nrows() {
            acc += row[l] * b[(l, col)];
        }
        acc
    };

    let signal = project(user_index, b_comm).norm_sqr();
    let mut other = czero::<T>();
    for u in 0..b_comm.ncols() {
        if u != user_index {
            other += project(u, b_comm);
        }
    }
    let mut radar = T::ZERO;
    for k in 0..b_radar.ncols() {
        radar += project(k, b_radar).norm_sqr();
    }
    Ok(SinrBreakdown {
        signal,
        interference: other.norm_sqr() + radar,
        noise,
    })
}

/// MIMO rate `C = log₂ det(I + H·R·Hᴴ/N₀)` in bits/s/Hz.
///
/// `R` must be Hermitian positive semidefinite (tolerance −1e−9 on the
/// minimum eigenvalue).
pub fn mimo_rate<T: Real>(
    h: &DMatrix<Cplx<T>>,
    r: &DMatrix<Cplx<T>>,
    n0: T,
) -> Result<T> {
    if n0 <= T::ZERO {
        return Err(Error::argument("noise spectral density must be positive"));
    }
    if r.nrows() != r.ncols() || r.nrows() != h.ncols() {
        return Err(Error::argument("covariance must be square and match H columns"));
    }
    // Hermitian symmetry check.
    let mut scale = T::ZERO;
    for i in 0..r.nrows() {
        for j in 0..r.ncols() {
            scale = scale.max(cmod(r[(i, j)]));
            if cmod(r[(i, j)] - r[(j, i)].conj()) > lit::<T>(1e-9) * scale.max(T::ONE) {
                return Err(Error::argument("covariance must be Hermitian"));
            }
        }
    }
    // PSD check: R + tol·I must admit a Cholesky factorization.
    let tol = lit::<T>(1e-9) * scale.max(T::ONE);
    let mut shifted = r.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += Cplx::new(tol, T::ZERO);
    }
    if hermitian_cholesky(&shifted).is_none() {
        return Err(Error::argument(
            "covariance must be positive semidefinite (min eigenvalue ≥ -1e-9)",
        ));
    }

    // I + H·R·Hᴴ/N₀ is Hermitian positive definite; Cholesky gives the
    // determinant as Π diag(L)².
    let nr = h.nrows();
    let hrh = h * r * h.adjoint();
    let mut m = DMatrix::from_element(nr, nr, czero::<T>());
    for i in 0..nr {
        for j in 0..nr {
            m[(i, j)] = hrh[(i, j)].unscale(n0);
        }
        m[(i, i)] += Cplx::new(T::ONE, T::ZERO);
    }
    // Symmetrize rounding noise before factorizing.
    let m = (m.clone() + m.adjoint()).map(|v| v.unscale(lit(2.0)));
    let l = hermitian_cholesky(&m)
        .ok_or_else(|| Error::argument("rate matrix not positive definite"))?;
    let mut log2_det = T::ZERO;
    let ln2 = lit::<T>(2.0).ln();
    for i in 0..nr {
        log2_det += lit::<T>(2.0) * l[(i, i)].re.ln() / ln2;
    }
    Ok(log2_det.max(T::ZERO))
}

/// Solves `L·Lᴴ·x = b` given a lower-triangular Cholesky factor.
pub fn cholesky_solve<T: Real>(
    l: &DMatrix<Cplx<T>>,
    b: &DVector<Cplx<T>>,
) -> DVector<Cplx<T>> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            let yk = y[k];
            y[i] -= lik * yk;
        }
        y[i] = y[i].unscale(l[(i, i)].re);
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let lki = l[(k, i)].conj();
            let yk = y[k];
            y[i] -= lki * yk;
        }
        y[i] = y[i].unscale(l[(i, i)].re);
    }
    y
}

/// Lower-triangular Cholesky factor of a Hermitian matrix, or `None` when a
/// pivot is non-positive (matrix not positive definite).
pub fn hermitian_cholesky<T: Real>(m: &DMatrix<Cplx<T>>) -> Option<DMatrix<Cplx<T>>> {
    let n = m.nrows();
    let mut l = DMatrix::from_element(n, n, czero::<T>());
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= T::ZERO || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = Cplx::new(dj, T::ZERO);
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v.unscale(dj);
        }
    }
    Some(l)
}

/// Empirical outage probability: fraction of rate samples below the
/// threshold.
pub fn outage_probability<T: Real>(rate_samples: &[T], threshold: T) -> Result<T> {
    if rate_samples.is_empty() {
        return Err(Error::argument("outage needs at least one sample"));
    }
    let below = rate_samples.iter().filter(|&&r| r < threshold).count();
    Ok(lit::<T>(below as f64) / lit(rate_samples.len() as f64))
}

/// Radar utility `f_u = P_a − α₀·RMSC` together with its two terms.
///
/// `P_a` is the average radiation power toward the target directions and
/// RMSC the root-mean-square cross-correlation
/// `√(2/(J(J−1))·Σ_{j<j'} |P^c(j, j')|²)`; a single direction has RMSC 0.
pub fn radar_utility<T: Real>(
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    digital: &DMatrix<Cplx<T>>,
    cfg: &RadarUtilityConfig<T>,
) -> Result<(T, T, T)> {
    cfg.validate()?;
    window.validate(&bf.cfg)?;
    let effective = masked_effective_matrix(bf, window, digital);
    let j = cfg.directions.len();

    // Field rows v_j = a(θ_j)ᵀ·D·M·B, one per direction.
    let fields: Vec<Vec<Cplx<T>>> = cfg
        .directions
        .iter()
        .map(|&d| {
            let a = crate::wavefield::planar_steering(&bf.cfg, d);
            (0..effective.ncols())
                .map(|c| {
                    let mut acc = czero::<T>();
                    for i in 0..effective.nrows() {
                        acc += a[i] * effective[(i, c)];
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let power = |f: &Vec<Cplx<T>>| f.iter().map(|v| v.norm_sqr()).fold(T::ZERO, |a, b| a + b);
    let p_a = fields.iter().map(power).fold(T::ZERO, |a, b| a + b) / lit(j as f64);

    let rmsc = if j < 2 {
        T::ZERO
    } else {
        let mut acc = T::ZERO;
        for d in 0..j {
            for dp in (d + 1)..j {
                let mut cross = czero::<T>();
                for c in 0..effective.ncols() {
                    cross += fields[d][c] * fields[dp][c].conj();
                }
                acc += cross.norm_sqr();
            }
        }
        (lit::<T>(2.0) * acc / lit((j * (j - 1)) as f64)).sqrt()
    };

    Ok((p_a - cfg.alpha0 * rmsc, p_a, rmsc))
}

/// Radiation power toward a single direction for the masked beamformer.
pub fn directional_power<T: Real>(
    bf: &Beamformer<T>,
    window: &ApertureWindow,
    digital: &DMatrix<Cplx<T>>,
    direction: Direction<T>,
) -> T {
    let effective = masked_effective_matrix(bf, window, digital);
    direction_power(&bf.cfg, &effective, direction)
}

/// Net throughput `η = (1 − t/T)·Σ R_u` after spending `t` of `T` slots on
/// beam training.
pub fn throughput<T: Real>(training_slots: usize, frame_slots: usize, rates: &[T]) -> Result<T> {
    if frame_slots == 0 {
        return Err(Error::argument("frame must have at least one slot"));
    }
    if training_slots > frame_slots {
        return Err(Error::argument("training cannot exceed the frame"));
    }
    let sum = rates.iter().copied().fold(T::ZERO, |a, b| a + b);
    let frac = lit::<T>(training_slots as f64) / lit(frame_slots as f64);
    Ok((T::ONE - frac) * sum)
}

/// Cost-effectiveness `ι = 1 − cost_rhs/cost_pa` of an RHS system against a
/// phased-array system reaching the same utility.
pub fn cost_effectiveness<T: Real>(cost_rhs: T, cost_pa: T) -> T {
    assert!(cost_pa > T::ZERO, "phased-array cost must be positive");
    T::ONE - cost_rhs / cost_pa
}
