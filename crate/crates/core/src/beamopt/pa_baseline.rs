//! Unit-modulus phased-array reference.
//!
//! A deliberately simple comparison baseline: an N-element λ/2-spaced array
//! whose per-element magnitudes are fixed at `√(P_t/N)` and whose phases
//! conjugate a mixture of the sensing and communication field patterns. The
//! mixture weight κ sweeps a grid, tracing the reference's own tradeoff
//! between sensing power and communication SNR. This is a phase-steering
//! reference, not an optimized phased-array design.

use crate::beamopt::pareto::{CommPath, ParetoPoint, TargetSet};
use crate::scalar::{cis, czero, lit, Cplx, Real};
use crate::wavefield::steering;
use nalgebra::DVector;

/// Reference array description.
#[derive(Debug, Clone)]
pub struct PaReference<T: Real> {
    pub elements: usize,
    pub wavelength: T,
    /// Feed power budget P_t; the beamformer carries ‖w‖² = P_t.
    pub power: T,
    /// Noise power σ².
    pub noise: T,
}

impl<T: Real> PaReference<T> {
    /// λ/2 element spacing.
    pub fn spacing(&self) -> T {
        self.wavelength / lit(2.0)
    }

    fn steer(&self, angle: T) -> DVector<Cplx<T>> {
        steering(self.elements, self.spacing(), self.wavelength, angle, None)
    }

    /// Unit-modulus conjugate-phase beamformer for a desired field. Zero
    /// entries steer with phase 0.
    fn conjugate_phase(&self, desired: &DVector<Cplx<T>>) -> DVector<Cplx<T>> {
        let amp = (self.power / lit(self.elements as f64)).sqrt();
        DVector::from_fn(self.elements, |i, _| {
            let d = desired[i];
            if d.norm_sqr() == T::ZERO {
                Cplx::new(amp, T::ZERO)
            } else {
                let m = d.norm_sqr().sqrt();
                Cplx::new(d.re / m * amp, d.im / m * amp)
            }
        })
    }

    /// Sensing power `Σ_j |a_jᵀw|²` toward the targets.
    pub fn sensing_power(&self, targets: &TargetSet<T>, w: &DVector<Cplx<T>>) -> T {
        let mut p = T::ZERO;
        for angle in targets.angles() {
            let a = self.steer(angle);
            let mut field = czero::<T>();
            for i in 0..self.elements {
                field += a[i] * w[i];
            }
            p += field.norm_sqr();
        }
        p
    }

    /// Communication SNR `|hᵀw|²/σ²` through a multipath channel.
    pub fn comm_snr(&self, channel: &[CommPath<T>], w: &DVector<Cplx<T>>) -> T {
        let mut field = czero::<T>();
        for p in channel {
            let a = self.steer(p.angle);
            for i in 0..self.elements {
                field += a[i] * w[i] * p.gain;
            }
        }
        field.norm_sqr() / self.noise
    }

    /// Peak single-beam power: conjugate-phase steering straight at one
    /// target, evaluated at that target.
    pub fn peak_power(&self, angle: T) -> T {
        let a = self.steer(angle);
        let w = self.conjugate_phase(&a.map(|v| v.conj()));
        self.sensing_power(&TargetSet::One { angle }, &w)
    }

    /// Tradeoff front of the reference: κ-mixtures of the conjugated sensing
    /// and communication fields, reduced to the best sensing power meeting
    /// each threshold. Thresholds with no meeting mixture are omitted.
    pub fn reference_front(
        &self,
        targets: &TargetSet<T>,
        channel: &[CommPath<T>],
        thresholds: &[T],
        kappa_steps: usize,
    ) -> Vec<ParetoPoint<T>> {
        // Unit-norm component fields: conjugated target steering sum and
        // conjugated channel.
        let mut sense_field = DVector::from_element(self.elements, czero::<T>());
        for angle in targets.angles() {
            sense_field += self.steer(angle).map(|v| v.conj());
        }
        let mut comm_field = DVector::from_element(self.elements, czero::<T>());
        for p in channel {
            comm_field += self.steer(p.angle).map(|v| (v * p.gain).conj());
        }
        let normalize = |v: &DVector<Cplx<T>>| {
            let n = v.norm();
            if n > T::ZERO {
                v.map(|x| x.unscale(n))
            } else {
                v.clone()
            }
        };
        let sense_field = normalize(&sense_field);
        let comm_field = normalize(&comm_field);

        // Candidate beams over the mixture grid, plus relative phases
        // between the two components.
        let mut candidates = Vec::new();
        let phase_steps = 8usize;
        for k in 0..=kappa_steps {
            let kappa = lit::<T>(k as f64) / lit(kappa_steps as f64);
            for p in 0..phase_steps {
                let phase = T::two_pi() * lit::<T>(p as f64) / lit(phase_steps as f64);
                let rot = cis(phase);
                let desired = DVector::from_fn(self.elements, |i, _| {
                    sense_field[i].scale(kappa) + (comm_field[i] * rot).scale(T::ONE - kappa)
                });
                let w = self.conjugate_phase(&desired);
                candidates.push((self.comm_snr(channel, &w), self.sensing_power(targets, &w)));
            }
        }

        thresholds
            .iter()
            .filter_map(|&gamma| {
                candidates
                    .iter()
                    .filter(|(snr, _)| *snr >= gamma)
                    .map(|&(_, ps)| ps)
                    .fold(None, |best: Option<T>, ps| {
                        Some(best.map_or(ps, |b| b.max(ps)))
                    })
                    .map(|ps| ParetoPoint {
                        comm_level: gamma,
                        sensing_power: ps,
                    })
            })
            .collect()
    }
}
