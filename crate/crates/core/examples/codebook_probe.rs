//! Prints codebook layer diagnostics and μ-ring coherence curves.

use holobeam_core::beamtrain::{design_angle_codebook, CellInterval, CodebookDesign};
use holobeam_core::chanest::{mu_step_at, polar_atom};
use holobeam_core::rhs::RhsConfig;

fn main() {
    let wavelength = 0.0125f64;

    // μ-ring coherence at several φ.
    let n = 64;
    let d = wavelength / 2.0;
    for phi in [0.0f64, 0.5, -0.5, 0.9375, -0.9375] {
        let step = mu_step_at(n, d, wavelength, 0.5, phi);
        let r1 = (1.0 - phi * phi) / step;
        print!("phi={phi:+.4}: step={step:.4} r1={r1:.3}m pairs:");
        for j in 1..=4 {
            let b1 = polar_atom(n, d, wavelength, phi, step * j as f64);
            let b2 = polar_atom(n, d, wavelength, phi, step * (j + 1) as f64);
            print!(" {:.3}", b1.dotc(&b2).norm());
        }
        println!();
    }

    // Codebook contrast.
    let cfg = RhsConfig::<f64>::new(4, 24, wavelength / 3.0, wavelength);
    let mu_step = holobeam_core::chanest::max_mu_step(24, cfg.element_spacing, wavelength, 0.5);
    let cb = design_angle_codebook(
        &cfg,
        &CodebookDesign {
            layers: 3,
            samples: (24, 3),
            span: CellInterval { lo: -0.8, hi: 0.8 },
            mu_max: 2.0 * mu_step,
            gain_target: None,
            power: 1.0,
        },
        7,
    )
    .unwrap();
    for (li, layer) in cb.layers.iter().enumerate() {
        println!(
            "layer {li}: contrast=({:.3}, {:.3}) min_margin={:.5}",
            layer.contrast[0], layer.contrast[1], layer.min_margin
        );
    }
}
