//! Beamformer optimization: the projected-ascent engine, pattern QCQPs with
//! a brute-force oracle, tradeoff fronts, and the alternating-optimization
//! solvers for transmit, transceiver, and distributed designs.

pub mod codesign;
pub mod distsense;
pub mod engine;
pub mod fields;
pub mod jcas;
pub mod pa_baseline;
pub mod pareto;
pub mod qcqp;
pub mod report;

pub use codesign::{codesign_maxmin, CodesignProblem, TargetEcho};
pub use distsense::{distsense_maxmin, DistSenseProblem, Scatter, Waveforms};
pub use jcas::{hdma_weights, jcas_transmit, JcasProblem, JcasUser};
pub use pareto::{pareto_front, CaseStudy, ParetoPoint, TargetSet};
pub use qcqp::{brute_force_oracle, solve_pattern_qcqp, BruteForce, QcqpSpec};
pub use report::SolveReport;
