//! Field bookkeeping for the alternating-optimization solvers.
//!
//! Every quantity the AO solvers differentiate is built from complex fields
//! that are *linear* in the active block (the other blocks being frozen into
//! the coefficients). Blocks are packed into real vectors: a pattern block
//! uses its amplitudes directly, a complex matrix block interleaves
//! re/im per entry. A [`LinearField`] stores one complex coefficient per
//! packed real parameter, which makes `|e|²` gradients uniform across block
//! types.

use crate::scalar::{czero, lit, Cplx, Real};
use nalgebra::{DMatrix, DVector};

/// Packs a complex matrix column-major into interleaved re/im reals.
pub fn pack_cmatrix<T: Real>(m: &DMatrix<Cplx<T>>) -> DVector<T> {
    let mut v = DVector::from_element(2 * m.len(), T::ZERO);
    for (p, z) in m.iter().enumerate() {
        v[2 * p] = z.re;
        v[2 * p + 1] = z.im;
    }
    v
}

/// Inverse of [`pack_cmatrix`].
pub fn unpack_cmatrix<T: Real>(v: &DVector<T>, rows: usize, cols: usize) -> DMatrix<Cplx<T>> {
    DMatrix::from_fn(rows, cols, |i, j| {
        let p = j * rows + i;
        Cplx::new(v[2 * p], v[2 * p + 1])
    })
}

/// A complex field `e(x) = Σ_p coeff_p·x_p` linear in the packed real block.
#[derive(Debug, Clone)]
pub struct LinearField<T: Real> {
    pub coeffs: Vec<Cplx<T>>,
}

impl<T: Real> LinearField<T> {
    pub fn zeros(dim: usize) -> Self {
        LinearField {
            coeffs: vec![czero::<T>(); dim],
        }
    }

    /// Field over a pattern block: `e = Σ_n c_n·ψ_n`.
    pub fn over_pattern(c: &[Cplx<T>]) -> Self {
        LinearField { coeffs: c.to_vec() }
    }

    /// Field over a packed complex block: `e = Σ_q c_q·b_q` where `b` is the
    /// unpacked complex vector (column-major).
    pub fn over_complex(c: &[Cplx<T>]) -> Self {
        let mut coeffs = vec![czero::<T>(); 2 * c.len()];
        let j = Cplx::new(T::ZERO, T::ONE);
        for (q, cq) in c.iter().enumerate() {
            coeffs[2 * q] = *cq;
            coeffs[2 * q + 1] = *cq * j;
        }
        LinearField { coeffs }
    }

    pub fn eval(&self, x: &DVector<T>) -> Cplx<T> {
        let mut acc = czero::<T>();
        for (p, &c) in self.coeffs.iter().enumerate() {
            acc += c.scale(x[p]);
        }
        acc
    }

    /// Adds `weight·∇|e|²` to the gradient: `2·w·Re(ē·coeff_p)`.
    pub fn add_power_gradient(&self, x: &DVector<T>, weight: T, grad: &mut DVector<T>) {
        let e = self.eval(x).conj();
        let two = lit::<T>(2.0);
        for (p, &c) in self.coeffs.iter().enumerate() {
            grad[p] += two * weight * (e * c).re;
        }
    }

    /// Adds `weight·∇Re(m̄·e)` to the gradient (for quadratic-transform
    /// surrogate terms `2Re(λᴴA)`).
    pub fn add_inner_gradient(&self, multiplier: Cplx<T>, weight: T, grad: &mut DVector<T>) {
        let m = multiplier.conj();
        for (p, &c) in self.coeffs.iter().enumerate() {
            grad[p] += weight * (m * c).re;
        }
    }
}

/// Diagonal quadratic `Σ_p w_p·x_p²` (per-element power drains).
#[derive(Debug, Clone)]
pub struct DiagQuad<T: Real> {
    pub weights: DVector<T>,
}

impl<T: Real> DiagQuad<T> {
    pub fn eval(&self, x: &DVector<T>) -> T {
        let mut acc = T::ZERO;
        for p in 0..x.len() {
            acc += self.weights[p] * x[p] * x[p];
        }
        acc
    }

    pub fn add_gradient(&self, x: &DVector<T>, weight: T, grad: &mut DVector<T>) {
        let two = lit::<T>(2.0);
        for p in 0..x.len() {
            grad[p] += two * weight * self.weights[p] * x[p];
        }
    }
}

/// Radar-utility evaluation over a J×K matrix of fields `e_jk(x)`:
/// `P_j = Σ_k |e_jk|²`, `P_a = mean_j P_j`,
/// `RMSC = √(2/(J(J−1))·Σ_{j<j'} |Σ_k e_jk·ē_j'k|²)`.
#[derive(Debug, Clone)]
pub struct UtilityFields<T: Real> {
    /// `fields[j][k]`: field of direction j through beamformer column k.
    pub fields: Vec<Vec<LinearField<T>>>,
    pub alpha0: T,
}

impl<T: Real> UtilityFields<T> {
    fn field_values(&self, x: &DVector<T>) -> Vec<Vec<Cplx<T>>> {
        self.fields
            .iter()
            .map(|row| row.iter().map(|f| f.eval(x)).collect())
            .collect()
    }

    pub fn directional_powers(&self, x: &DVector<T>) -> Vec<T> {
        self.field_values(x)
            .iter()
            .map(|row| row.iter().map(|e| e.norm_sqr()).fold(T::ZERO, |a, b| a + b))
            .collect()
    }

    /// `(utility, P_a, RMSC)`.
    pub fn utility(&self, x: &DVector<T>) -> (T, T, T) {
        let values = self.field_values(x);
        let j = values.len();
        let mut pa = T::ZERO;
        for row in &values {
            for e in row {
                pa += e.norm_sqr();
            }
        }
        pa /= lit(j as f64);
        let rmsc = if j < 2 {
            T::ZERO
        } else {
            let mut acc = T::ZERO;
            for a in 0..j {
                for b in (a + 1)..j {
                    let mut cross = czero::<T>();
                    for k in 0..values[a].len() {
                        cross += values[a][k] * values[b][k].conj();
                    }
                    acc += cross.norm_sqr();
                }
            }
            (lit::<T>(2.0) * acc / lit((j * (j - 1)) as f64)).sqrt()
        };
        (pa - self.alpha0 * rmsc, pa, rmsc)
    }

    pub fn utility_gradient(&self, x: &DVector<T>) -> DVector<T> {
        let dim = self.fields[0][0].coeffs.len();
        let j = self.fields.len();
        let k = self.fields[0].len();
        let values = self.field_values(x);
        let mut grad = DVector::from_element(dim, T::ZERO);

        // ∇P_a.
        let wj = T::ONE / lit::<T>(j as f64);
        for (jr, row) in self.fields.iter().enumerate() {
            for (kc, f) in row.iter().enumerate() {
                let e = values[jr][kc].conj();
                let two = lit::<T>(2.0);
                for (p, &c) in f.coeffs.iter().enumerate() {
                    grad[p] += two * wj * (e * c).re;
                }
            }
        }

        // −α₀·∇RMSC (skipped at the non-differentiable origin).
        if j >= 2 && self.alpha0 > T::ZERO {
            let mut crosses = Vec::new();
            let mut s = T::ZERO;
            for a in 0..j {
                for b in (a + 1)..j {
                    let mut cross = czero::<T>();
                    for kc in 0..k {
                        cross += values[a][kc] * values[b][kc].conj();
                    }
                    s += cross.norm_sqr();
                    crosses.push((a, b, cross));
                }
            }
            let denom = lit::<T>((j * (j - 1)) as f64);
            let rmsc = (lit::<T>(2.0) * s / denom).sqrt();
            if rmsc > lit(1e-12) {
                // d rmsc/dx = (1/rmsc)·(1/(J(J−1)/2))·Σ Re(X̄·dX/dx) / 2·...
                let outer = self.alpha0 / (rmsc * denom) * lit::<T>(2.0);
                for &(a, b, cross) in &crosses {
                    let xc = cross.conj();
                    for kc in 0..k {
                        let ea = values[a][kc];
                        let eb_conj = values[b][kc].conj();
                        for p in 0..dim {
                            let da = self.fields[a][kc].coeffs[p];
                            let db = self.fields[b][kc].coeffs[p];
                            let dx = da * eb_conj + ea * db.conj();
                            grad[p] -= outer * (xc * dx).re;
                        }
                    }
                }
            }
        }
        grad
    }
}

/// Downlink SINR of one user in field form: signal column, the other users'
/// columns (summed coherently), and the radar columns (summed in power).
#[derive(Debug, Clone)]
pub struct SinrFields<T: Real> {
    pub signal: LinearField<T>,
    pub other_users: Vec<LinearField<T>>,
    pub radar: Vec<LinearField<T>>,
    pub noise: T,
    pub floor: T,
}

impl<T: Real> SinrFields<T> {
    pub fn sinr(&self, x: &DVector<T>) -> T {
        let s = self.signal.eval(x).norm_sqr();
        let mut other = czero::<T>();
        for f in &self.other_users {
            other += f.eval(x);
        }
        let mut radar = T::ZERO;
        for f in &self.radar {
            radar += f.eval(x).norm_sqr();
        }
        s / (other.norm_sqr() + radar + self.noise)
    }

    /// Normalized slack `(γ − floor)/max(1, floor)`.
    pub fn slack(&self, x: &DVector<T>) -> T {
        (self.sinr(x) - self.floor) / T::ONE.max(self.floor.abs())
    }

    pub fn slack_gradient(&self, x: &DVector<T>) -> DVector<T> {
        let dim = self.signal.coeffs.len();
        let scale = T::ONE.max(self.floor.abs());
        let s = self.signal.eval(x).norm_sqr();
        let mut other = czero::<T>();
        for f in &self.other_users {
            other += f.eval(x);
        }
        let mut radar = T::ZERO;
        for f in &self.radar {
            radar += f.eval(x).norm_sqr();
        }
        let d = other.norm_sqr() + radar + self.noise;

        let mut grad_n = DVector::from_element(dim, T::ZERO);
        self.signal.add_power_gradient(x, T::ONE, &mut grad_n);
        let mut grad_d = DVector::from_element(dim, T::ZERO);
        // |Σ other|² gradient: coherent sum field.
        if !self.other_users.is_empty() {
            let two = lit::<T>(2.0);
            let oc = other.conj();
            for f in &self.other_users {
                for (p, &c) in f.coeffs.iter().enumerate() {
                    grad_d[p] += two * (oc * c).re;
                }
            }
        }
        for f in &self.radar {
            f.add_power_gradient(x, T::ONE, &mut grad_d);
        }
        // ∇(s/d) = (∇s·d − s·∇d)/d².
        let d2 = d * d;
        DVector::from_fn(dim, |p, _| (grad_n[p] * d - s * grad_d[p]) / d2 / scale)
    }
}

/// Projects a packed complex block onto the Frobenius power sphere
/// `‖B‖² = budget` (scaling; leaves the zero matrix untouched).
pub fn project_power<T: Real>(v: &mut DVector<T>, budget: T) {
    let norm_sq = v.iter().fold(T::ZERO, |a, &b| a + b * b);
    if norm_sq > T::ZERO {
        let scale = (budget / norm_sq).sqrt();
        for e in v.iter_mut() {
            *e *= scale;
        }
    }
}
