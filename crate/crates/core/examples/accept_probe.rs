//! Probes the oracle-equivalence and PD-OMP acceptance instances.

use holobeam_core::beamopt::qcqp::*;
use holobeam_core::chanest::*;
use holobeam_core::rhs::*;
use holobeam_core::rng;
use holobeam_core::wavefield::{steering, synth_channel, PathSpec};
use holobeam_core::Cplx;
use nalgebra::DVector;

const WAVELENGTH: f64 = 0.0125;

fn main() {
    // C1 instances.
    let mut g = rng::root(101);
    for instance in 0..50u64 {
        let angle = (rng::uniform::<f64>(&mut g) - 0.5) * 2.0 * 60f64.to_radians();
        let attenuation = 1.0 + 9.0 * rng::uniform::<f64>(&mut g);
        let mut cfg = RhsConfig::linear(4, WAVELENGTH / 3.0, WAVELENGTH);
        cfg.attenuation = attenuation;
        let window = ApertureWindow::full(&cfg);
        let f = build_propagation_matrix(&cfg).unwrap();
        let a = steering(4, cfg.element_spacing, WAVELENGTH, angle, None);
        let c = DVector::from_fn(4, |i, _| a[i] * f[(i, 0)]);
        let spec = QcqpSpec::new(cfg.clone(), window.clone(), correlation_form(&c));
        let solved = solve_pattern_qcqp(&spec, 16, 1000 + instance, &SolveOptions::default()).unwrap();
        let quantized = quantize_pattern(&solved.solution.pattern, 5).unwrap();
        let feas = pattern_feasible(&cfg, &quantized, &window);
        let qv = spec.objective_value(&DVector::from_vec(quantized.amplitudes.clone()));
        let oracle = match brute_force_oracle(&spec, 5, 8).unwrap() {
            BruteForce::Optimal { value, pattern, .. } => (value, pattern),
            _ => unreachable!(),
        };
        let ratio = qv / oracle.0;
        if ratio < 0.98 {
            println!(
                "inst {instance}: angle={angle:.3} att={attenuation:.2} cont={:.5} quant={qv:.5} feas={feas} oracle={:.5} ratio={ratio:.3}",
                solved.objective, oracle.0
            );
            println!("  cont ψ = {:?}", solved.solution.pattern.amplitudes);
            println!("  quant ψ = {:?}", quantized.amplitudes);
            println!("  oracle ψ = {:?}", oracle.1.amplitudes);
        }
    }

    // C6 single trial inspection.
    let n = 200;
    let q = 20;
    let spacing = WAVELENGTH / 2.0;
    let dict_joint = build_dictionary(n, spacing, WAVELENGTH, Domain::Joint, 100, Some(4)).unwrap();
    let dict_ang = build_dictionary(n, spacing, WAVELENGTH, Domain::Angular, 100, None).unwrap();
    for trial in 0..5u64 {
        let mut g = rng::root(6000 + trial);
        let far_angle = (rng::uniform::<f64>(&mut g) - 0.5) * 1.2;
        let near_angle = if far_angle > 0.0 {
            far_angle - 0.4 - 0.3 * rng::uniform::<f64>(&mut g)
        } else {
            far_angle + 0.4 + 0.3 * rng::uniform::<f64>(&mut g)
        };
        let range = 6.0 + 14.0 * rng::uniform::<f64>(&mut g);
        let channel = synth_channel(
            &[PathSpec::far(far_angle, None), PathSpec::near(near_angle, range, None)],
            n, spacing, WAVELENGTH, 6100 + trial,
        ).unwrap();
        let gains: Vec<Cplx<f64>> = channel.paths.iter().map(|p| p.gain.unwrap()).collect();
        let pilots = simulate_pilots(&channel, &RhsConfig::linear(n, spacing, WAVELENGTH), q, 10.0, 6200 + trial).unwrap();
        let eo = omp(&pilots, &dict_ang, 2).unwrap();
        let ep = pd_omp(&pilots, &dict_joint, &PdOmpOptions::default()).unwrap();
        println!(
            "trial {trial}: far(phi={:.3},|g|={:.2}) near(phi={:.3},r={:.1},|g|={:.2},mu={:.4}) omp={:.3} pd={:.3} pd_iters={} support={:?}",
            far_angle.sin(), gains[0].norm(), near_angle.sin(), range, gains[1].norm(),
            (1.0 - near_angle.sin().powi(2)) / range,
            nmse(&eo.channel_estimate, &channel.h).unwrap(),
            nmse(&ep.channel_estimate, &channel.h).unwrap(),
            ep.iterations,
            ep.support.iter().map(|s| (s.label.phi, s.label.mu)).collect::<Vec<_>>(),
        );
    }
    println!("dict mu steps at phi=0-ish: {:?}",
        dict_joint.grid.iter().filter(|l| l.mu.is_some() && l.phi.abs() < 0.02).map(|l| l.mu.unwrap()).collect::<Vec<f64>>());
}
