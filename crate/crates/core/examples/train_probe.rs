//! Replays one noiseless multi-user training case with diagnostics.

use holobeam_core::beamtrain::*;
use holobeam_core::rhs::RhsConfig;
use holobeam_core::rng;

fn main() {
    let wavelength = 0.0125f64;
    let cfg = RhsConfig::<f64>::new(4, 128, wavelength / 3.0, wavelength);
    let local = window_config(&cfg, 96).unwrap();
    let mu_step = holobeam_core::chanest::max_mu_step(96, cfg.element_spacing, wavelength, 0.5);
    println!("mu_step = {mu_step}");
    let codebook = design_angle_codebook(
        &local,
        &CodebookDesign {
            layers: 3,
            samples: (24, 3),
            span: CellInterval { lo: -0.5, hi: 0.5 },
            mu_max: 2.0 * mu_step,
            gain_target: None,
            power: 1.0,
        },
        7,
    )
    .unwrap();
    let setup = TrainingSetup {
        cfg: cfg.clone(),
        aperture_cols: 96,
        codebook,
        range_bins: 3,
        power: 1.0,
        snr_db: f64::INFINITY,
        windows: false,
    };

    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(100);
    let count: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(4);
    let users = sample_on_grid_users(&setup, count, seed);
    for (p, _) in &users {
        println!("user: phi={:+.4} mu={:.3}", p.phi, p.mu);
    }
    // Decompose distance responses: response of user u to each component
    // pattern (φ̂_v, μ_j), scaled 1/U.
    {
        use holobeam_core::rhs::{build_propagation_matrix, pattern_for_point};
        let local2 = window_config(&setup.cfg, setup.aperture_cols).unwrap();
        let f = build_propagation_matrix(&local2).unwrap();
        let phis: Vec<f64> = users.iter().map(|(p, _)| p.phi).collect();
        for (u, (point, h)) in users.iter().enumerate() {
            println!("-- user {u} at phi={:+.4} mu={:.3}", point.phi, point.mu);
            for j in 0..setup.range_bins {
                let mu = bin_center_mu(j, setup.range_bins, setup.codebook.mu_max);
                let mut parts = Vec::new();
                for &pv in &phis {
                    let pat = pattern_for_point(&local2, pv, mu).unwrap();
                    // window slice offset 0
                    let slice: Vec<_> = (0..local2.element_count())
                        .map(|i| {
                            let iy = i % setup.cfg.rows;
                            let iz = i / setup.cfg.rows;
                            h[setup.cfg.index_of(iy, iz)]
                        })
                        .collect();
                    let x = (setup.power / setup.cfg.rows as f64).sqrt();
                    let mut acc = num_complex::Complex::new(0.0, 0.0);
                    for i in 0..local2.element_count() {
                        let l = local2.row_of(i);
                        acc += slice[i] * f[(i, l)].scale(pat.amplitudes[i] * x / users.len() as f64);
                    }
                    parts.push(acc);
                }
                let total: num_complex::Complex<f64> = parts.iter().sum();
                let mags: Vec<String> = parts.iter().map(|c| format!("{:.4}", c.norm())).collect();
                println!("  bin {j}: |total|²={:.5} parts {:?}", total.norm_sqr(), mags);
            }
        }
    }
    let trace = run_training(&setup, &users, 0).unwrap();
    for s in &trace.slots {
        let p: Vec<String> = s.powers.iter().map(|v| format!("{v:.5}")).collect();
        println!("slot {:<10} {:?}", s.codeword, p);
    }
    for (u, o) in trace.outcomes.iter().enumerate() {
        println!("user {u}: phi_hat={:+.4} mu_bin={} correct={}", o.phi_hat, o.mu_bin, o.correct);
    }
}

// Decomposes one user's distance responses into per-user codeword
// components. Invoked via the DECOMPOSE env var.
#[allow(dead_code)]
fn decompose() {}
