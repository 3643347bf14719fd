//! Cross-checks distsense vs codesign on the shared single-pair objective.

use holobeam_core::beamopt::codesign::{codesign_maxmin, CodesignProblem, TargetEcho};
use holobeam_core::beamopt::distsense::{
    distsense_maxmin, evaluate_worst_sinr, DistSenseProblem, Scatter, Waveforms,
};
use holobeam_core::beamopt::jcas::AoOptions;
use holobeam_core::rhs::{HolographicPattern, RhsConfig};
use holobeam_core::Cplx;

const WAVELENGTH: f64 = 0.0125;

fn main() {
    let cfg = RhsConfig::<f64>::linear(16, WAVELENGTH / 3.0, WAVELENGTH);
    let single = DistSenseProblem {
        tx: vec![cfg.clone()],
        rx: vec![cfg.clone()],
        scene: vec![Scatter {
            tx_angles: vec![0.35],
            rx_angles: vec![0.35],
            reflection: Cplx::new(1.0, 0.0),
            delay_s: 1e-6,
            clutter: false,
        }],
        waveforms: Waveforms::dft(1, 1, 4).unwrap(),
        noise: 1e-3,
    };
    let cd_problem = CodesignProblem {
        tx: cfg.clone(),
        rx: cfg.clone(),
        targets: vec![TargetEcho {
            tx_angle: 0.35,
            rx_angle: 0.35,
            reflection: Cplx::new(1.0, 0.0),
        }],
        users: Vec::new(),
        eff_tx: 1.0,
        eff_rx: 1.0,
        noise_ext: 1e-3,
        noise_int: 0.0,
        noise_user: 1e-2,
        power: 1.0,
        streams: 1,
    };
    for (iters, rounds, restarts) in [(150, 4, 6), (300, 8, 8), (500, 12, 8)] {
        let mut opts = AoOptions::default();
        opts.ascent.max_iters = iters;
        opts.ao_rounds = rounds;
        let ds = distsense_maxmin(&single, restarts, 8, &opts).unwrap();
        let cd = codesign_maxmin(&cd_problem, restarts, 8, &opts).unwrap();
        // Evaluate the codesign patterns in the distsense objective.
        let cd_in_ds = evaluate_worst_sinr(
            &single,
            &[cd.report.solution.pattern.clone()],
            &[HolographicPattern::new(cd.rx_pattern.amplitudes.clone())],
        )
        .unwrap();
        println!(
            "iters={iters} rounds={rounds}: ds={:.4} cd={:.4} cd_in_ds={:.4} gap={:.3}",
            ds.report.objective,
            cd.report.objective,
            cd_in_ds,
            (ds.report.objective - cd.report.objective).abs() / cd.report.objective
        );
    }
}
