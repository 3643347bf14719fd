//! Communication-sensing tradeoff case studies on a single-feed RHS.
//!
//! For each communication SNR threshold Γ_c the sensing power is maximized
//! subject to `γ_c ≥ Γ_c`, the leakage caps, and the amplitude box; sweeping
//! Γ_c traces the Pareto front. Thresholds are solved in descending order
//! with the previous solution as a warm start, so the returned front is
//! non-increasing by feasible-set nesting.

use crate::beamopt::qcqp::{
    correlation_form, solve_pattern_qcqp, QcqpSpec, Sense, SolveOptions,
};
use crate::beamopt::report::SolveReport;
use crate::error::Error;
use crate::rhs::{build_propagation_matrix, ApertureWindow, RhsConfig};
use crate::scalar::{Cplx, Real};
use crate::wavefield::steering;
use crate::Result;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Sensing targets of a case study (broadside-referenced angles, radians).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TargetSet<T: Real> {
    One { angle: T },
    Two { angles: [T; 2] },
}

impl<T: Real> TargetSet<T> {
    pub fn angles(&self) -> Vec<T> {
        match self {
            TargetSet::One { angle } => vec![*angle],
            TargetSet::Two { angles } => angles.to_vec(),
        }
    }
}

/// One path of the downlink channel: complex amplitude gain at an angle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CommPath<T: Real> {
    pub angle: T,
    pub gain: Cplx<T>,
}

/// Case-study instance: a single-row RHS radiating `x` with `|x|² = P_t`.
#[derive(Debug, Clone)]
pub struct CaseStudy<T: Real> {
    pub cfg: RhsConfig<T>,
    pub targets: TargetSet<T>,
    /// Downlink channel paths; one LoS path or a two-path channel.
    pub channel: Vec<CommPath<T>>,
    /// Feed power budget P_t, watts.
    pub power: T,
    /// Noise power σ², watts.
    pub noise: T,
}

impl<T: Real> CaseStudy<T> {
    fn feed_column(&self) -> Result<DVector<Cplx<T>>> {
        if self.cfg.rows != 1 {
            return Err(Error::argument("case studies use a single-feed RHS"));
        }
        let f = build_propagation_matrix(&self.cfg)?;
        Ok(f.column(0).into_owned())
    }

    /// Correlation vector of a steering direction through the surface:
    /// entries `a_n·f_n` so that the radiated field is `cᵀψ·x`.
    fn field_vector(&self, angle: T, f: &DVector<Cplx<T>>) -> DVector<Cplx<T>> {
        let a = steering(
            self.cfg.element_count(),
            self.cfg.element_spacing,
            self.cfg.wavelength,
            angle,
            None,
        );
        DVector::from_fn(a.len(), |i, _| a[i] * f[i])
    }

    /// Quadratic form of the sensing power `P_s = P_t·Σ_j |c_jᵀψ|²`.
    pub fn sensing_form(&self) -> Result<DMatrix<T>> {
        let f = self.feed_column()?;
        let n = self.cfg.element_count();
        let mut q = DMatrix::from_element(n, n, T::ZERO);
        for angle in self.targets.angles() {
            let c = self.field_vector(angle, &f);
            let add = correlation_form(&c);
            q += add * self.power;
        }
        Ok(q)
    }

    /// Quadratic form of the communication SNR
    /// `γ_c = |Σ_k g_k·a_kᵀ·m|²·P_t/σ²`.
    pub fn comm_form(&self) -> Result<DMatrix<T>> {
        if self.channel.is_empty() {
            return Err(Error::argument("channel needs at least one path"));
        }
        let f = self.feed_column()?;
        let n = self.cfg.element_count();
        let mut h = DVector::from_element(n, crate::scalar::czero::<T>());
        for p in &self.channel {
            let c = self.field_vector(p.angle, &f);
            h += c.map(|v| v * p.gain);
        }
        Ok(correlation_form(&h) * (self.power / self.noise))
    }

    pub fn sensing_power(&self, pattern: &[T]) -> Result<T> {
        let q = self.sensing_form()?;
        let psi = DVector::from_row_slice(pattern);
        Ok(crate::beamopt::qcqp::quad_value(&q, &psi))
    }

    pub fn comm_snr(&self, pattern: &[T]) -> Result<T> {
        let q = self.comm_form()?;
        let psi = DVector::from_row_slice(pattern);
        Ok(crate::beamopt::qcqp::quad_value(&q, &psi))
    }
}

/// One point of a tradeoff front.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParetoPoint<T: Real> {
    /// Communication SNR threshold Γ_c (linear).
    pub comm_level: T,
    /// Achieved sensing power P_s, watts.
    pub sensing_power: T,
}

/// Front sweep outcome: feasible points plus the thresholds found
/// infeasible (beyond the achievable SNR).
#[derive(Debug, Clone)]
pub struct ParetoOutcome<T: Real> {
    pub points: Vec<ParetoPoint<T>>,
    pub infeasible: Vec<T>,
    /// Report of the lowest-threshold solve (the unconstrained-most point).
    pub last_report: Option<SolveReport<T>>,
}

/// Sweeps the thresholds (given ascending) and returns the front.
pub fn pareto_front<T: Real>(
    case: &CaseStudy<T>,
    thresholds: &[T],
    restarts: usize,
    seed: u64,
) -> Result<ParetoOutcome<T>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::argument("thresholds must be sorted ascending"));
    }
    let sensing = case.sensing_form()?;
    let comm = case.comm_form()?;
    let window = ApertureWindow::full(&case.cfg);

    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    let mut warm: Option<DVector<T>> = None;
    let mut last_report = None;
    for (k, &gamma) in thresholds.iter().enumerate().rev() {
        let spec = QcqpSpec::new(case.cfg.clone(), window.clone(), sensing.clone())
            .with_constraint(comm.clone(), Sense::Ge, gamma);
        let mut opts = SolveOptions::default();
        if let Some(w) = &warm {
            opts.warm_starts = vec![w.clone()];
        }
        match solve_pattern_qcqp(&spec, restarts, crate::rng::child_seed(seed, k as u64), &opts) {
            Ok(report) => {
                let psi = DVector::from_row_slice(&report.solution.pattern.amplitudes);
                points.push(ParetoPoint {
                    comm_level: gamma,
                    sensing_power: report.objective,
                });
                warm = Some(psi);
                last_report = Some(report);
            }
            Err(Error::Infeasible(_)) => infeasible.push(gamma),
            Err(e) => return Err(e),
        }
    }
    points.reverse();
    infeasible.reverse();
    Ok(ParetoOutcome {
        points,
        infeasible,
        last_report,
    })
}

/// Unconstrained sensing maximum of a case study (the Γ_c = 0 corner).
pub fn unconstrained_sensing_max<T: Real>(
    case: &CaseStudy<T>,
    restarts: usize,
    seed: u64,
) -> Result<SolveReport<T>> {
    let spec = QcqpSpec::new(
        case.cfg.clone(),
        ApertureWindow::full(&case.cfg),
        case.sensing_form()?,
    );
    solve_pattern_qcqp(&spec, restarts, crate::rng::child_seed(seed, u64::MAX), &SolveOptions::default())
}

/// Maximum achievable communication SNR of a case study.
pub fn max_achievable_snr<T: Real>(
    case: &CaseStudy<T>,
    restarts: usize,
    seed: u64,
) -> Result<T> {
    let spec = QcqpSpec::new(
        case.cfg.clone(),
        ApertureWindow::full(&case.cfg),
        case.comm_form()?,
    );
    let report = solve_pattern_qcqp(
        &spec,
        restarts,
        crate::rng::child_seed(seed, u64::MAX - 1),
        &SolveOptions::default(),
    )?;
    Ok(report.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::lit;

    pub(crate) fn table2_case(targets: TargetSet<f64>, channel: Vec<CommPath<f64>>) -> CaseStudy<f64> {
        let wavelength = 0.0125;
        CaseStudy {
            cfg: RhsConfig::linear(50, wavelength / 3.0, wavelength),
            targets,
            channel,
            power: 1.0,
            noise: 1e-2,
        }
    }

    #[test]
    fn inactive_threshold_matches_unconstrained_max() {
        let case = table2_case(
            TargetSet::One { angle: 0.4 },
            vec![CommPath {
                angle: -0.3,
                gain: Cplx::new(1.0, 0.0),
            }],
        );
        let front = pareto_front(&case, &[0.0], 6, 1).unwrap();
        let unconstrained = unconstrained_sensing_max(&case, 6, 1).unwrap();
        let p0 = front.points[0].sensing_power;
        assert!(
            (p0 - unconstrained.objective).abs() <= 0.01 * unconstrained.objective,
            "{p0} vs {}",
            unconstrained.objective
        );
    }

    #[test]
    fn threshold_above_max_is_flagged() {
        let case = table2_case(
            TargetSet::One { angle: 0.3 },
            vec![CommPath {
                angle: -0.2,
                gain: Cplx::new(1.0, 0.0),
            }],
        );
        let gmax = max_achievable_snr(&case, 6, 3).unwrap();
        let front = pareto_front(&case, &[lit::<f64>(0.5) * gmax, 1.5 * gmax], 6, 3).unwrap();
        assert_eq!(front.points.len(), 1);
        assert_eq!(front.infeasible.len(), 1);
        assert!((front.infeasible[0] - 1.5 * gmax).abs() < 1e-12);
    }

    #[test]
    fn front_non_increasing() {
        let case = table2_case(
            TargetSet::Two {
                angles: [-0.5, 0.35],
            },
            vec![
                CommPath {
                    angle: -0.1,
                    gain: Cplx::new(0.9, 0.1),
                },
                CommPath {
                    angle: 0.6,
                    gain: Cplx::new(0.3, -0.4),
                },
            ],
        );
        let gmax = max_achievable_snr(&case, 6, 7).unwrap();
        let thresholds: Vec<f64> = (0..6).map(|k| gmax * 0.15 * k as f64).collect();
        let front = pareto_front(&case, &thresholds, 6, 7).unwrap();
        assert_eq!(front.points.len(), 6);
        for w in front.points.windows(2) {
            assert!(
                w[1].sensing_power <= w[0].sensing_power + 1e-9,
                "{} then {}",
                w[0].sensing_power,
                w[1].sensing_power
            );
        }
    }

    #[test]
    fn shared_beam_degenerates_to_single_point() {
        // θ_c = θ_s: the same pattern maximizes both objectives, so the
        // front stays at the unconstrained max for every feasible threshold.
        let case = table2_case(
            TargetSet::One { angle: 0.25 },
            vec![CommPath {
                angle: 0.25,
                gain: Cplx::new(1.0, 0.0),
            }],
        );
        let gmax = max_achievable_snr(&case, 8, 11).unwrap();
        let unconstrained = unconstrained_sensing_max(&case, 8, 11).unwrap();
        let front =
            pareto_front(&case, &[0.0, 0.5 * gmax, 0.98 * gmax], 8, 11).unwrap();
        assert_eq!(front.points.len(), 3);
        for p in &front.points {
            assert!(
                (p.sensing_power - unconstrained.objective).abs()
                    <= 0.02 * unconstrained.objective,
                "front at Γ={} gives {} vs max {}",
                p.comm_level,
                p.sensing_power,
                unconstrained.objective
            );
        }
    }
}
